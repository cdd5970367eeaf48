#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <set>

#include "slim/data.hpp"
#include "slim/errors.hpp"

using namespace slim;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/slim_data_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
    void write(const std::string& text) const {
        std::ofstream out(path);
        out << text;
    }
};

UtteranceRecord listen_record() {
    UtteranceRecord rec;
    rec.tokens = {"listen", "to", "westbam", "album", "allergic", "on", "google", "music"};
    rec.tags = {"O", "O", "B-artist", "O", "B-album", "O", "B-service", "I-service"};
    rec.intents = {"PlayMusic"};
    rec.slot_intents = {"PlayMusic", "PlayMusic", "PlayMusic"};
    return rec;
}

UtteranceRecord weather_play_record() {
    UtteranceRecord rec;
    rec.tokens = {"how",  "is", "the",    "weather", "in",      "south",
                  "carolina", "and", "play", "the", "record", "by", "michael", "jackson"};
    rec.tags = {"O", "O", "O", "O", "O", "B-city", "I-city",
                "O", "O", "O", "B-album", "O", "B-artist", "I-artist"};
    rec.intents = {"GetWeather", "PlayMusic"};
    rec.slot_intents = {"GetWeather", "PlayMusic", "PlayMusic"};
    return rec;
}

} // namespace

TEST_CASE("single-intent record with three spans validates") {
    UtteranceRecord rec = listen_record();
    CHECK_NOTHROW(rec.validate());
    auto spans = rec.spans_with_intents();
    REQUIRE(spans.size() == 3);
    CHECK(spans[0] == SlotSpan{2, 3, "artist", "PlayMusic"});
    CHECK(spans[1] == SlotSpan{4, 5, "album", "PlayMusic"});
    CHECK(spans[2] == SlotSpan{6, 8, "service", "PlayMusic"});
}

TEST_CASE("two-intent record maps each span to its own intent") {
    UtteranceRecord rec = weather_play_record();
    CHECK_NOTHROW(rec.validate());
    auto spans = rec.spans_with_intents();
    REQUIRE(spans.size() == 3);
    CHECK(spans[0].intent == "GetWeather");
    CHECK(spans[0].slot_type == "city");
    CHECK(spans[1].intent == "PlayMusic");
    CHECK(spans[2].intent == "PlayMusic");
}

TEST_CASE("record validation rejects each invariant break") {
    UtteranceRecord rec = listen_record();

    SUBCASE("empty intents") {
        rec.intents.clear();
        CHECK_THROWS_AS(rec.validate(), ValidationError);
    }
    SUBCASE("tag list shorter than tokens") {
        rec.tags.pop_back();
        CHECK_THROWS_AS(rec.validate(), ValidationError);
    }
    SUBCASE("slot intent outside utterance intents") {
        rec.slot_intents[1] = "GetWeather";
        CHECK_THROWS_AS(rec.validate(), ValidationError);
    }
    SUBCASE("slot_intents length differs from span count") {
        rec.slot_intents.pop_back();
        CHECK_THROWS_AS(rec.validate(), ValidationError);
    }
    SUBCASE("empty tokens") {
        rec.tokens.clear();
        rec.tags.clear();
        CHECK_THROWS_AS(rec.validate(), ValidationError);
    }
}

TEST_CASE("loader reports line number and offending field") {
    TempFile f("bad.jsonl");
    std::string good =
        R"({"tokens":["hi"],"tags":["O"],"intents":["Greet"],"slot_intents":[]})";

    SUBCASE("malformed JSON") {
        f.write(good + "\nnot json\n");
        try {
            load_records(f.path);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            CHECK(msg.find("line 2") != std::string::npos);
            CHECK(msg.find("JSON") != std::string::npos);
        }
    }
    SUBCASE("length mismatch names the field") {
        f.write(good + "\n" +
                R"({"tokens":["a","b"],"tags":["O"],"intents":["Greet"],"slot_intents":[]})" +
                "\n");
        try {
            load_records(f.path);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            CHECK(msg.find("line 2") != std::string::npos);
            CHECK(msg.find("tags") != std::string::npos);
        }
    }
    SUBCASE("empty intents names the field") {
        f.write(R"({"tokens":["a"],"tags":["O"],"intents":[],"slot_intents":[]})" "\n");
        try {
            load_records(f.path);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            CHECK(msg.find("line 1") != std::string::npos);
            CHECK(msg.find("intents") != std::string::npos);
        }
    }
    SUBCASE("foreign slot intent names the field") {
        f.write(R"({"tokens":["a"],"tags":["B-x"],"intents":["A"],"slot_intents":["B"]})" "\n");
        try {
            load_records(f.path);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            CHECK(msg.find("line 1") != std::string::npos);
            CHECK(msg.find("slot_intents") != std::string::npos);
        }
    }
    SUBCASE("slot_intents length mismatch") {
        f.write(R"({"tokens":["a"],"tags":["B-x"],"intents":["A"],"slot_intents":[]})" "\n");
        CHECK_THROWS_AS(load_records(f.path), ValidationError);
    }
    SUBCASE("missing key") {
        f.write(R"({"tokens":["a"],"tags":["O"],"intents":["A"]})" "\n");
        try {
            load_records(f.path);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("slot_intents") != std::string::npos);
        }
    }
}

TEST_CASE("save then load round-trips records") {
    std::vector<UtteranceRecord> records = {listen_record(), weather_play_record()};
    TempFile f("roundtrip.jsonl");
    save_records(f.path, records);
    auto loaded = load_records(f.path);
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].tokens == records[i].tokens);
        CHECK(loaded[i].tags == records[i].tags);
        CHECK(loaded[i].intents == records[i].intents);
        CHECK(loaded[i].slot_intents == records[i].slot_intents);
    }
}

TEST_CASE("label maps") {
    std::vector<UtteranceRecord> records = {listen_record(), weather_play_record()};

    SUBCASE("intent inventory is sorted and unique") {
        LabelMap intents = LabelMap::intents_of(records);
        REQUIRE(intents.size() == 2);
        CHECK(intents.label(0) == "GetWeather");
        CHECK(intents.label(1) == "PlayMusic");
        CHECK(intents.id("PlayMusic") == 1);
    }
    SUBCASE("tag inventory pins O to id 0") {
        LabelMap tags = LabelMap::tags_of(records);
        CHECK(tags.label(0) == "O");
        CHECK(tags.contains("B-artist"));
        CHECK(tags.contains("I-service"));
        CHECK(tags.contains("B-city"));
    }
    SUBCASE("unknown label raises") {
        LabelMap intents = LabelMap::intents_of(records);
        CHECK_THROWS_AS(intents.id("BookRestaurant"), ValidationError);
        CHECK_THROWS_AS(intents.label(7), IndexError);
    }
    SUBCASE("save and load preserve ids") {
        LabelMap intents = LabelMap::intents_of(records);
        TempFile f("labels.txt");
        intents.save(f.path);
        LabelMap back = LabelMap::load(f.path);
        REQUIRE(back.size() == intents.size());
        for (std::size_t i = 0; i < intents.size(); ++i)
            CHECK(back.label(static_cast<int>(i)) == intents.label(static_cast<int>(i)));
    }
    SUBCASE("load rejects duplicates and empty files") {
        TempFile f("dup.txt");
        f.write("A\nB\nA\n");
        CHECK_THROWS_AS(LabelMap::load(f.path), FormatError);
        f.write("");
        CHECK_THROWS_AS(LabelMap::load(f.path), FormatError);
    }
}

TEST_CASE("generator config validation") {
    GeneratorConfig cfg = GeneratorConfig::demo();
    CHECK_NOTHROW(cfg.validate());

    SUBCASE("mix longer than intent inventory") {
        cfg.mix = {0.2, 0.2, 0.2, 0.2, 0.2};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("mix must sum to one") {
        cfg.mix = {0.5, 0.6};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("placeholder without lexicon") {
        cfg.lexicons.erase("artist");
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("generation is deterministic under the seed") {
    GeneratorConfig cfg = GeneratorConfig::demo();
    auto a = generate(cfg, 100, 42);
    auto b = generate(cfg, 100, 42);
    REQUIRE(a.size() == 100);
    REQUIRE(b.size() == 100);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].tokens == b[i].tokens);
        CHECK(a[i].tags == b[i].tags);
        CHECK(a[i].intents == b[i].intents);
        CHECK(a[i].slot_intents == b[i].slot_intents);
    }
    auto c = generate(cfg, 100, 43);
    bool any_diff = false;
    for (std::size_t i = 0; i < c.size() && !any_diff; ++i)
        any_diff = c[i].tokens != a[i].tokens;
    CHECK(any_diff);
}

TEST_CASE("k=1 records carry a single intent shared by all spans") {
    GeneratorConfig cfg = GeneratorConfig::demo();
    cfg.mix = {1.0};
    auto records = generate(cfg, 50, 7);
    for (const auto& rec : records) {
        REQUIRE(rec.intents.size() == 1);
        for (const auto& si : rec.slot_intents) CHECK(si == rec.intents[0]);
    }
}

TEST_CASE("k=2 span intents partition across exactly the two sampled intents") {
    GeneratorConfig cfg = GeneratorConfig::demo();
    cfg.mix = {0.0, 1.0};
    auto records = generate(cfg, 50, 11);
    for (const auto& rec : records) {
        REQUIRE(rec.intents.size() == 2);
        std::set<std::string> sampled(rec.intents.begin(), rec.intents.end());
        std::set<std::string> used(rec.slot_intents.begin(), rec.slot_intents.end());
        CHECK(used == sampled);
    }
}

TEST_CASE("generated tags round-trip to the emitted spans") {
    GeneratorConfig cfg = GeneratorConfig::demo();
    auto records = generate(cfg, 200, 3);
    for (const auto& rec : records) {
        auto spans = tags_to_spans(rec.tags);
        REQUIRE(spans.size() == rec.slot_intents.size());
        CHECK(spans_to_tags(spans, rec.tokens.size()) == rec.tags);
    }
}

namespace {

struct BatchFixture {
    std::vector<UtteranceRecord> records;
    Vocabulary vocab;
    LabelMap intents;
    LabelMap tags;
    BatchFixture(std::size_t count, std::uint64_t seed) {
        records = generate(GeneratorConfig::demo(), count, seed);
        std::vector<std::vector<std::string>> token_lists;
        for (const auto& r : records) token_lists.push_back(r.tokens);
        vocab = Vocabulary::build(token_lists);
        intents = LabelMap::intents_of(records);
        tags = LabelMap::tags_of(records);
    }
};

} // namespace

TEST_CASE("70 records at batch size 32 split 32/32/6") {
    BatchFixture fx(70, 5);
    auto batches = make_batches(fx.records, 32, fx.vocab, fx.intents, fx.tags, 6, 50, nullptr);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].items.size() == 32);
    CHECK(batches[1].items.size() == 32);
    CHECK(batches[2].items.size() == 6);
}

TEST_CASE("padding positions carry zero attention and tag masks") {
    BatchFixture fx(40, 9);
    auto batches = make_batches(fx.records, 16, fx.vocab, fx.intents, fx.tags, 6, 50, nullptr);
    for (const auto& batch : batches) {
        std::size_t width = batch.items[0].ids.size();
        for (const auto& item : batch.items) {
            REQUIRE(item.ids.size() == width);
            REQUIRE(item.attention_mask.size() == width);
            REQUIRE(item.tag_ids.size() == width - 2);
            REQUIRE(item.tag_mask.size() == width - 2);
            CHECK(item.ids[0] == Vocabulary::kCls);
            CHECK(item.ids[item.n_real + 1] == Vocabulary::kSep);
            for (std::size_t p = 0; p < width; ++p) {
                bool real = p < item.n_real + 2;
                CHECK(item.attention_mask[p] == (real ? 1.0 : 0.0));
                if (!real) CHECK(item.ids[p] == Vocabulary::kPad);
            }
            for (std::size_t t = 0; t < width - 2; ++t) {
                CHECK(item.tag_mask[t] == (t < item.n_real ? 1.0 : 0.0));
                if (t >= item.n_real) CHECK(item.tag_ids[t] == 0);
            }
            REQUIRE(item.slot_masks.size() == 6);
            REQUIRE(item.slot_intent_ids.size() == 6);
            for (std::size_t m = 0; m < 6; ++m) {
                REQUIRE(item.slot_masks[m].size() == width - 2);
                bool real_slot = m < item.slot_count;
                CHECK(item.slot_real_flags[m] == (real_slot ? 1.0 : 0.0));
                if (!real_slot) {
                    CHECK(item.slot_intent_ids[m] == -1);
                    for (real v : item.slot_masks[m]) CHECK(v == 0.0);
                }
            }
        }
    }
}

TEST_CASE("batch then un-batch preserves every record") {
    BatchFixture fx(37, 13);
    auto batches = make_batches(fx.records, 8, fx.vocab, fx.intents, fx.tags, 6, 50, nullptr);
    std::size_t seen = 0;
    for (const auto& batch : batches) {
        auto back = unbatch(batch, fx.vocab, fx.intents, fx.tags);
        REQUIRE(back.size() == batch.items.size());
        for (std::size_t b = 0; b < back.size(); ++b) {
            const auto& orig = fx.records[batch.items[b].record_index];
            CHECK(back[b].tokens == orig.tokens);
            CHECK(back[b].tags == orig.tags);
            std::set<std::string> want(orig.intents.begin(), orig.intents.end());
            std::set<std::string> got(back[b].intents.begin(), back[b].intents.end());
            CHECK(got == want);
            CHECK(back[b].slot_intents == orig.slot_intents);
            ++seen;
        }
    }
    CHECK(seen == fx.records.size());
}

TEST_CASE("shuffled batching is a permutation and differs from identity") {
    BatchFixture fx(64, 17);
    Rng rng(99);
    auto batches = make_batches(fx.records, 16, fx.vocab, fx.intents, fx.tags, 6, 50, &rng);
    std::set<std::size_t> indices;
    bool moved = false;
    std::size_t pos = 0;
    for (const auto& batch : batches)
        for (const auto& item : batch.items) {
            indices.insert(item.record_index);
            if (item.record_index != pos) moved = true;
            ++pos;
        }
    CHECK(indices.size() == fx.records.size());
    CHECK(moved);
}

TEST_CASE("unknown labels during batching raise") {
    BatchFixture fx(10, 21);
    LabelMap empty;
    empty.add("SomethingElse");
    CHECK_THROWS_AS(make_batches(fx.records, 4, fx.vocab, empty, fx.tags, 6, 50, nullptr),
                    ValidationError);
}

TEST_CASE("over-long records are truncated with tags in lockstep") {
    UtteranceRecord rec;
    for (int i = 0; i < 30; ++i) {
        rec.tokens.push_back("w" + std::to_string(i));
        rec.tags.push_back("O");
    }
    rec.tokens.push_back("paris");
    rec.tags.push_back("B-city");
    rec.intents = {"GetWeather"};
    rec.slot_intents = {"GetWeather"};

    std::vector<std::vector<std::string>> token_lists = {rec.tokens};
    Vocabulary vocab = Vocabulary::build(token_lists);
    LabelMap intents;
    intents.add("GetWeather");
    LabelMap tags;
    tags.add("O");
    tags.add("B-city");

    SUBCASE("span survives when it fits") {
        auto batches = make_batches({rec}, 1, vocab, intents, tags, 6, 50, nullptr);
        const auto& item = batches[0].items[0];
        CHECK_FALSE(item.truncated);
        CHECK(item.slot_count == 1);
    }
    SUBCASE("span dropped when cut off") {
        auto batches = make_batches({rec}, 1, vocab, intents, tags, 6, 20, nullptr);
        const auto& item = batches[0].items[0];
        CHECK(item.truncated);
        CHECK(item.n_real == 18);
        CHECK(item.slot_count == 0);
    }
}

TEST_CASE("generator config loads from JSON") {
    TempFile f("gen.json");
    f.write(R"({
        "intents": {
            "Greet": ["hello there <name>", "hi <name>"],
            "Bye": ["goodbye <name>"]
        },
        "lexicons": {"name": ["sam", "mary jane"]},
        "mix": [0.5, 0.5],
        "connectors": ["and", "and then"]
    })");
    GeneratorConfig cfg = GeneratorConfig::from_json_file(f.path);
    CHECK_NOTHROW(cfg.validate());
    REQUIRE(cfg.intents.size() == 2);
    CHECK(cfg.mix.size() == 2);
    CHECK(cfg.connectors.size() == 2);
    auto records = generate(cfg, 20, 1);
    for (const auto& rec : records) {
        CHECK(rec.intents.size() <= 2);
        CHECK(!rec.slot_intents.empty());
    }
}

TEST_CASE("multi-word lexicon values become B/I runs") {
    GeneratorConfig cfg;
    cfg.intents = {{"PlayMusic", {{"play", "<artist>"}}}};
    cfg.lexicons = {{"artist", {"michael jackson"}}};
    cfg.mix = {1.0};
    auto records = generate(cfg, 1, 0);
    REQUIRE(records.size() == 1);
    CHECK(records[0].tokens == std::vector<std::string>{"play", "michael", "jackson"});
    CHECK(records[0].tags == std::vector<std::string>{"O", "B-artist", "I-artist"});
    CHECK(records[0].slot_intents == std::vector<std::string>{"PlayMusic"});
}
