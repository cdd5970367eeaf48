#include "slim/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "slim/errors.hpp"

namespace slim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

void UtteranceRecord::validate(const std::string& where) const {
    if (tokens.empty()) throw ValidationError(where + ": field \"tokens\" is empty");
    if (tags.size() != tokens.size())
        throw ValidationError(where + ": field \"tags\" has " + std::to_string(tags.size()) +
                              " entries for " + std::to_string(tokens.size()) + " tokens");
    if (intents.empty()) throw ValidationError(where + ": field \"intents\" is empty");
    std::vector<SlotSpan> spans;
    try {
        spans = tags_to_spans(tags);
    } catch (const FormatError& e) {
        throw ValidationError(where + ": field \"tags\": " + e.what());
    }
    if (slot_intents.size() != spans.size())
        throw ValidationError(where + ": field \"slot_intents\" has " +
                              std::to_string(slot_intents.size()) + " entries for " +
                              std::to_string(spans.size()) + " slot spans");
    std::set<std::string> intent_set(intents.begin(), intents.end());
    for (std::size_t m = 0; m < slot_intents.size(); ++m)
        if (!intent_set.count(slot_intents[m]))
            throw ValidationError(where + ": field \"slot_intents\"[" + std::to_string(m) +
                                  "] = \"" + slot_intents[m] +
                                  "\" is not an utterance-level intent");
}

std::vector<SlotSpan> UtteranceRecord::spans_with_intents() const {
    std::vector<SlotSpan> spans = tags_to_spans(tags);
    for (std::size_t m = 0; m < spans.size() && m < slot_intents.size(); ++m)
        spans[m].intent = slot_intents[m];
    return spans;
}

namespace {

std::vector<std::string> string_array(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key))
        throw ValidationError(where + ": missing field \"" + key + "\"");
    const json& arr = obj.at(key);
    if (!arr.is_array())
        throw ValidationError(where + ": field \"" + key + "\" must be an array");
    std::vector<std::string> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_string())
            throw ValidationError(where + ": field \"" + key + "\" must contain strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

} // namespace

std::vector<UtteranceRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset file " + path);
    std::vector<UtteranceRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::string where = path + ": line " + std::to_string(lineno);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(where + ": malformed JSON: " + e.what());
        }
        UtteranceRecord rec;
        rec.tokens = string_array(obj, "tokens", where);
        rec.tags = string_array(obj, "tags", where);
        rec.intents = string_array(obj, "intents", where);
        rec.slot_intents = string_array(obj, "slot_intents", where);
        rec.validate(where);
        records.push_back(std::move(rec));
    }
    return records;
}

void save_records(const std::string& path, const std::vector<UtteranceRecord>& records) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write dataset file " + path);
    for (const auto& rec : records) {
        json obj = {{"tokens", rec.tokens},
                    {"tags", rec.tags},
                    {"intents", rec.intents},
                    {"slot_intents", rec.slot_intents}};
        out << obj.dump() << "\n";
    }
}

// ---------------------------------------------------------------------------
// Label inventories
// ---------------------------------------------------------------------------

int LabelMap::add(const std::string& label) {
    auto it = index_.find(label);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(labels_.size());
    labels_.push_back(label);
    index_.emplace(label, id);
    return id;
}

int LabelMap::id(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) throw ValidationError("unknown label \"" + label + "\"");
    return it->second;
}

bool LabelMap::contains(const std::string& label) const { return index_.count(label) > 0; }

const std::string& LabelMap::label(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= labels_.size())
        throw IndexError("label id " + std::to_string(id) + " outside inventory of " +
                         std::to_string(labels_.size()));
    return labels_[static_cast<std::size_t>(id)];
}

void LabelMap::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FormatError("LabelMap: cannot write " + path);
    for (const auto& l : labels_) out << l << "\n";
}

LabelMap LabelMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("LabelMap: cannot read " + path);
    LabelMap map;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        if (line.empty()) throw FormatError("LabelMap: empty label at line " +
                                            std::to_string(lineno) + " of " + path);
        if (map.contains(line))
            throw FormatError("LabelMap: duplicate label \"" + line + "\" in " + path);
        map.add(line);
        ++lineno;
    }
    if (map.size() == 0) throw FormatError("LabelMap: " + path + " is empty");
    return map;
}

LabelMap LabelMap::intents_of(const std::vector<UtteranceRecord>& records) {
    std::set<std::string> seen;
    for (const auto& r : records) seen.insert(r.intents.begin(), r.intents.end());
    LabelMap map;
    for (const auto& l : seen) map.add(l);
    return map;
}

LabelMap LabelMap::tags_of(const std::vector<UtteranceRecord>& records) {
    std::set<std::string> seen;
    for (const auto& r : records) seen.insert(r.tags.begin(), r.tags.end());
    seen.erase("O");
    LabelMap map;
    map.add("O");
    for (const auto& l : seen) map.add(l);
    return map;
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

namespace {

bool is_placeholder(const std::string& token) {
    return token.size() > 2 && token.front() == '<' && token.back() == '>';
}

std::string placeholder_type(const std::string& token) {
    return token.substr(1, token.size() - 2);
}

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

} // namespace

void GeneratorConfig::validate() const {
    if (intents.empty()) throw ConfigError("generator: no intents configured");
    if (mix.empty() || mix.size() > intents.size())
        throw ConfigError("generator: mix distribution allows k up to " +
                          std::to_string(mix.size()) + " but only " +
                          std::to_string(intents.size()) + " intents exist");
    double total = 0.0;
    for (double p : mix) {
        if (p < 0.0) throw ConfigError("generator: negative mix probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("generator: mix distribution sums to " + std::to_string(total));
    if (connectors.empty()) throw ConfigError("generator: no connector phrases");
    for (const auto& it : intents) {
        if (it.intent.empty()) throw ConfigError("generator: intent with empty name");
        if (it.patterns.empty())
            throw ConfigError("generator: intent \"" + it.intent + "\" has no templates");
        for (const auto& pattern : it.patterns) {
            if (pattern.empty())
                throw ConfigError("generator: empty template under \"" + it.intent + "\"");
            for (const auto& tok : pattern) {
                if (!is_placeholder(tok)) continue;
                auto lex = lexicons.find(placeholder_type(tok));
                if (lex == lexicons.end() || lex->second.empty())
                    throw ConfigError("generator: placeholder " + tok + " in \"" + it.intent +
                                      "\" has no lexicon values");
            }
        }
    }
}

GeneratorConfig GeneratorConfig::demo() {
    GeneratorConfig cfg;
    cfg.intents = {
        {"PlayMusic",
         {{"play", "<artist>"},
          {"play", "the", "album", "<album>"},
          {"listen", "to", "<artist>", "on", "speaker"},
          {"put", "on", "<album>", "by", "<artist>"}}},
        {"GetWeather",
         {{"what", "is", "the", "weather", "in", "<city>"},
          {"weather", "forecast", "for", "<city>", "<date>"},
          {"will", "it", "rain", "in", "<city>", "<date>"}}},
        {"BookRestaurant",
         {{"book", "a", "table", "at", "<restaurant>"},
          {"reserve", "<restaurant>", "for", "<date>"},
          {"find", "a", "table", "at", "<restaurant>", "around", "<time>"}}},
        {"SetAlarm",
         {{"set", "an", "alarm", "for", "<time>"},
          {"wake", "me", "up", "at", "<time>", "<date>"},
          {"alarm", "at", "<time>"}}},
    };
    cfg.lexicons = {
        {"artist",
         {"westbam", "michael jackson", "the beatles", "queen", "madonna", "daft punk", "adele",
          "prince"}},
        {"album",
         {"allergic", "thriller", "abbey road", "discovery", "rumours", "parade", "true blue",
          "hello"}},
        {"city",
         {"new york", "london", "paris", "south carolina", "tokyo", "berlin", "madrid",
          "seattle"}},
        {"date", {"today", "tomorrow", "monday", "friday", "next week", "tonight", "sunday"}},
        {"restaurant",
         {"luigis", "the golden dragon", "chez marie", "burger barn", "sushi house", "el toro"}},
        {"time", {"noon", "midnight", "seven am", "eight pm", "five thirty", "nine oclock"}},
    };
    return cfg;
}

GeneratorConfig GeneratorConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("generator: cannot read config " + path);
    json obj;
    try {
        obj = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("generator: malformed config " + path + ": " + e.what());
    }
    GeneratorConfig cfg;
    try {
        for (const auto& [name, patterns] : obj.at("intents").items()) {
            IntentTemplates it;
            it.intent = name;
            for (const auto& p : patterns) it.patterns.push_back(split_words(p.get<std::string>()));
            cfg.intents.push_back(std::move(it));
        }
        for (const auto& [type, values] : obj.at("lexicons").items())
            cfg.lexicons[type] = values.get<std::vector<std::string>>();
        if (obj.contains("mix")) cfg.mix = obj.at("mix").get<std::vector<double>>();
        if (obj.contains("connectors")) {
            cfg.connectors.clear();
            for (const auto& c : obj.at("connectors"))
                cfg.connectors.push_back(split_words(c.get<std::string>()));
        }
    } catch (const json::exception& e) {
        throw ConfigError("generator: bad config " + path + ": " + e.what());
    }
    return cfg;
}

std::vector<UtteranceRecord> generate(const GeneratorConfig& config, std::size_t count,
                                      std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    std::vector<UtteranceRecord> records;
    records.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        std::size_t k = rng.categorical(config.mix) + 1;
        std::vector<std::size_t> order(config.intents.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        order.resize(k);

        UtteranceRecord rec;
        for (std::size_t s = 0; s < k; ++s) {
            const IntentTemplates& it = config.intents[order[s]];
            rec.intents.push_back(it.intent);
            if (s > 0) {
                const auto& conn = config.connectors[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<int>(config.connectors.size()) - 1))];
                for (const auto& w : conn) {
                    rec.tokens.push_back(w);
                    rec.tags.push_back("O");
                }
            }
            const auto& pattern = it.patterns[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(it.patterns.size()) - 1))];
            for (const auto& tok : pattern) {
                if (!is_placeholder(tok)) {
                    rec.tokens.push_back(tok);
                    rec.tags.push_back("O");
                    continue;
                }
                std::string type = placeholder_type(tok);
                const auto& values = config.lexicons.at(type);
                const std::string& value = values[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<int>(values.size()) - 1))];
                std::vector<std::string> words = split_words(value);
                for (std::size_t w = 0; w < words.size(); ++w) {
                    rec.tokens.push_back(words[w]);
                    rec.tags.push_back((w == 0 ? "B-" : "I-") + type);
                }
                rec.slot_intents.push_back(it.intent);
            }
        }
        rec.validate("generated record " + std::to_string(r));
        records.push_back(std::move(rec));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

std::vector<Batch> make_batches(const std::vector<UtteranceRecord>& records,
                                std::size_t batch_size, const Vocabulary& vocab,
                                const LabelMap& intent_map, const LabelMap& tag_map,
                                std::size_t max_slots, std::size_t max_seq_len, Rng* rng) {
    if (batch_size == 0) throw ContractError("make_batches: batch_size must be positive");
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (rng) rng->shuffle(order);

    std::vector<Batch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        std::size_t count = std::min(batch_size, order.size() - start);
        Batch batch;
        batch.items.resize(count);

        std::size_t cap = 0; // token capacity of this batch
        for (std::size_t b = 0; b < count; ++b) {
            const UtteranceRecord& rec = records[order[start + b]];
            BatchItem& item = batch.items[b];
            item.record_index = order[start + b];

            Numericalized num = numericalize(rec.tokens, vocab, max_seq_len);
            item.ids = num.ids;
            item.attention_mask = num.attention_mask;
            item.n_real = num.kept;
            item.truncated = num.truncated;
            cap = std::max(cap, num.kept);

            std::vector<std::string> tags(rec.tags.begin(),
                                          rec.tags.begin() + static_cast<long>(num.kept));
            std::vector<SlotSpan> spans = tags_to_spans(tags);

            item.tag_ids.resize(num.kept);
            item.tag_mask.assign(num.kept, 1.0);
            for (std::size_t t = 0; t < num.kept; ++t) item.tag_ids[t] = tag_map.id(tags[t]);

            item.intent_multi_hot.assign(intent_map.size(), 0.0);
            for (const auto& intent : rec.intents)
                item.intent_multi_hot[static_cast<std::size_t>(intent_map.id(intent))] = 1.0;

            SlotMaskSet masks = build_slot_masks(spans, num.kept, max_slots);
            item.slot_masks = std::move(masks.masks);
            item.slot_count = masks.count;
            item.slot_overflow = masks.overflow;
            item.slot_intent_ids.assign(max_slots, -1);
            item.slot_real_flags.assign(max_slots, 0.0);
            for (std::size_t m = 0; m < masks.count; ++m) {
                item.slot_intent_ids[m] = intent_map.id(rec.slot_intents[m]);
                item.slot_real_flags[m] = 1.0;
            }
        }

        // pad everything to the batch capacity
        for (auto& item : batch.items) {
            item.ids.resize(cap + 2, Vocabulary::kPad);
            item.attention_mask.resize(cap + 2, 0.0);
            item.tag_ids.resize(cap, 0);
            item.tag_mask.resize(cap, 0.0);
            for (auto& mask : item.slot_masks) mask.resize(cap, 0.0);
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

std::vector<UtteranceRecord> unbatch(const Batch& batch, const Vocabulary& vocab,
                                     const LabelMap& intent_map, const LabelMap& tag_map) {
    std::vector<UtteranceRecord> records;
    records.reserve(batch.items.size());
    for (const auto& item : batch.items) {
        UtteranceRecord rec;
        for (std::size_t t = 0; t < item.n_real; ++t) {
            rec.tokens.push_back(vocab.token(item.ids[t + 1]));
            rec.tags.push_back(tag_map.label(item.tag_ids[t]));
        }
        for (std::size_t c = 0; c < item.intent_multi_hot.size(); ++c)
            if (item.intent_multi_hot[c] > 0.5)
                rec.intents.push_back(intent_map.label(static_cast<int>(c)));
        for (std::size_t m = 0; m < item.slot_count; ++m)
            rec.slot_intents.push_back(intent_map.label(item.slot_intent_ids[m]));
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace slim
