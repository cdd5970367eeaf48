#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "slim/encoder.hpp"
#include "slim/spans.hpp"

namespace slim {

struct UtteranceRecord {
    std::vector<std::string> tokens;
    std::vector<std::string> tags;
    std::vector<std::string> intents;
    std::vector<std::string> slot_intents; // parallel to tags_to_spans(tags)

    /// Enforces the schema invariants, including assumptions (a) and (b).
    /// `where` prefixes error messages (e.g. "line 12").
    void validate(const std::string& where = "record") const;

    /// Spans with slot-level intents filled in.
    std::vector<SlotSpan> spans_with_intents() const;
};

/// JSON Lines I/O. Every record is validated; errors carry the line number.
std::vector<UtteranceRecord> load_records(const std::string& path);
void save_records(const std::string& path, const std::vector<UtteranceRecord>& records);

/// Ordered label inventory; line number = id in the text serialization.
class LabelMap {
public:
    int add(const std::string& label);
    int id(const std::string& label) const; // unknown -> ValidationError
    bool contains(const std::string& label) const;
    const std::string& label(int id) const;
    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }

    void save(const std::string& path) const;
    static LabelMap load(const std::string& path);

    /// Sorted unique intents of a dataset.
    static LabelMap intents_of(const std::vector<UtteranceRecord>& records);
    /// Sorted unique tags of a dataset ("O" always present, id 0).
    static LabelMap tags_of(const std::vector<UtteranceRecord>& records);

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Synthetic multi-intent generation
// ---------------------------------------------------------------------------

struct IntentTemplates {
    std::string intent;
    // Each template is a token pattern; "<type>" placeholders pull from the
    // matching lexicon and become one slot span.
    std::vector<std::vector<std::string>> patterns;
};

struct GeneratorConfig {
    std::vector<IntentTemplates> intents;
    std::map<std::string, std::vector<std::string>> lexicons; // slot type -> values
    std::vector<double> mix = {0.3, 0.5, 0.2};                // P(k = 1..3)
    std::vector<std::vector<std::string>> connectors = {{"and"}, {"and", "also"},
                                                        {"and", "then"}};

    void validate() const;

    /// Built-in 4-intent, 6-slot-type configuration.
    static GeneratorConfig demo();
    static GeneratorConfig from_json_file(const std::string& path);
};

/// Deterministic under (config, seed, count).
std::vector<UtteranceRecord> generate(const GeneratorConfig& config, std::size_t count,
                                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

struct BatchItem {
    std::vector<int> ids;               // [CLS] tokens [SEP] [PAD]...
    std::vector<real> attention_mask;   // parallel to ids
    std::size_t n_real = 0;             // real word tokens
    std::vector<int> tag_ids;           // token capacity, 0 beyond n_real
    std::vector<real> tag_mask;         // 1 on real token positions
    std::vector<real> intent_multi_hot; // [|I|]
    std::vector<std::vector<real>> slot_masks; // max_slots x token capacity
    std::size_t slot_count = 0;
    std::size_t slot_overflow = 0;
    std::vector<int> slot_intent_ids;  // max_slots, -1 at padding slots
    std::vector<real> slot_real_flags; // max_slots, 1 for real slots
    std::size_t record_index = 0;
    bool truncated = false;
};

struct Batch {
    std::vector<BatchItem> items;
};

/// Group records into batches of batch_size (last one may be short), padding
/// each batch to its longest sequence. Order is shuffled when a non-null rng
/// is supplied.
std::vector<Batch> make_batches(const std::vector<UtteranceRecord>& records,
                                std::size_t batch_size, const Vocabulary& vocab,
                                const LabelMap& intent_map, const LabelMap& tag_map,
                                std::size_t max_slots, std::size_t max_seq_len, Rng* rng);

/// Rebuild records from a batch. Inverse of make_batches when no token was
/// OOV and nothing was truncated.
std::vector<UtteranceRecord> unbatch(const Batch& batch, const Vocabulary& vocab,
                                     const LabelMap& intent_map, const LabelMap& tag_map);

} // namespace slim
