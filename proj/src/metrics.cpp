#include "slim/metrics.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include "slim/errors.hpp"

namespace slim {

namespace {

using SpanKey = std::tuple<std::size_t, std::size_t, std::string>;

std::set<SpanKey> span_set(const TagSeq& tags) {
    std::set<SpanKey> keys;
    for (const auto& s : tags_to_spans(tags)) keys.insert({s.start, s.end, s.slot_type});
    return keys;
}

std::set<std::string> intent_set(const IntentSet& intents) {
    return {intents.begin(), intents.end()};
}

void check_aligned(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw ContractError(std::string("metrics: ") + what + " count mismatch, " +
                            std::to_string(a) + " vs " + std::to_string(b));
}

} // namespace

EvalReport slot_f1(const std::vector<TagSeq>& pred, const std::vector<TagSeq>& gold) {
    check_aligned(pred.size(), gold.size(), "utterance");
    EvalReport r;
    r.utterances = pred.size();
    for (std::size_t u = 0; u < pred.size(); ++u) {
        if (pred[u].size() != gold[u].size())
            throw ContractError("metrics: tag length mismatch at utterance " + std::to_string(u) +
                                ", " + std::to_string(pred[u].size()) + " vs " +
                                std::to_string(gold[u].size()));
        auto p = span_set(pred[u]);
        auto g = span_set(gold[u]);
        r.predicted_spans += p.size();
        r.gold_spans += g.size();
        for (const auto& key : p) r.true_positives += g.count(key);
    }
    r.slot_precision =
        r.predicted_spans ? static_cast<double>(r.true_positives) / r.predicted_spans : 0.0;
    r.slot_recall = r.gold_spans ? static_cast<double>(r.true_positives) / r.gold_spans : 0.0;
    double pr = r.slot_precision + r.slot_recall;
    r.slot_f1 = pr > 0.0 ? 2.0 * r.slot_precision * r.slot_recall / pr : 0.0;
    return r;
}

double intent_accuracy(const std::vector<IntentSet>& pred, const std::vector<IntentSet>& gold) {
    check_aligned(pred.size(), gold.size(), "utterance");
    if (pred.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t u = 0; u < pred.size(); ++u)
        if (intent_set(pred[u]) == intent_set(gold[u])) ++hit;
    return static_cast<double>(hit) / pred.size();
}

double semantic_frame_accuracy(const std::vector<IntentSet>& pred_intents,
                               const std::vector<IntentSet>& gold_intents,
                               const std::vector<TagSeq>& pred_tags,
                               const std::vector<TagSeq>& gold_tags) {
    check_aligned(pred_intents.size(), gold_intents.size(), "utterance");
    check_aligned(pred_tags.size(), gold_tags.size(), "utterance");
    check_aligned(pred_intents.size(), pred_tags.size(), "intent/tag");
    if (pred_intents.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t u = 0; u < pred_intents.size(); ++u) {
        if (intent_set(pred_intents[u]) != intent_set(gold_intents[u])) continue;
        if (span_set(pred_tags[u]) != span_set(gold_tags[u])) continue;
        ++hit;
    }
    return static_cast<double>(hit) / pred_intents.size();
}

EvalReport evaluate_all(const std::vector<IntentSet>& pred_intents,
                        const std::vector<IntentSet>& gold_intents,
                        const std::vector<TagSeq>& pred_tags,
                        const std::vector<TagSeq>& gold_tags) {
    if (pred_intents.empty()) {
        std::cerr << "warning: metrics over an empty dataset, reporting zeros\n";
        return EvalReport{};
    }
    EvalReport r = slot_f1(pred_tags, gold_tags);
    r.intent_acc = intent_accuracy(pred_intents, gold_intents);
    r.sefr_acc = semantic_frame_accuracy(pred_intents, gold_intents, pred_tags, gold_tags);
    return r;
}

} // namespace slim
