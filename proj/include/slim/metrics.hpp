#pragma once

#include <string>
#include <vector>

#include "slim/spans.hpp"

namespace slim {

using TagSeq = std::vector<std::string>;
using IntentSet = std::vector<std::string>;

struct EvalReport {
    double slot_precision = 0.0;
    double slot_recall = 0.0;
    double slot_f1 = 0.0;
    double intent_acc = 0.0;
    double sefr_acc = 0.0;
    std::size_t true_positives = 0;
    std::size_t predicted_spans = 0;
    std::size_t gold_spans = 0;
    std::size_t utterances = 0;
};

/// Micro-averaged span F1. A predicted span is a true positive iff its start,
/// end and slot type all match a gold span of the same utterance.
EvalReport slot_f1(const std::vector<TagSeq>& pred, const std::vector<TagSeq>& gold);

/// Fraction of utterances whose predicted intent set equals the gold set
/// exactly (order and duplicates ignored).
double intent_accuracy(const std::vector<IntentSet>& pred, const std::vector<IntentSet>& gold);

/// Fraction of utterances with an exact intent-set match AND matching slots,
/// where slots are compared as spans after lenient IOB repair.
double semantic_frame_accuracy(const std::vector<IntentSet>& pred_intents,
                               const std::vector<IntentSet>& gold_intents,
                               const std::vector<TagSeq>& pred_tags,
                               const std::vector<TagSeq>& gold_tags);

/// All three metrics plus counts in one pass. An empty dataset yields zeros
/// and a warning on stderr.
EvalReport evaluate_all(const std::vector<IntentSet>& pred_intents,
                        const std::vector<IntentSet>& gold_intents,
                        const std::vector<TagSeq>& pred_tags, const std::vector<TagSeq>& gold_tags);

} // namespace slim
