#include "slim/objective.hpp"

#include "slim/errors.hpp"

namespace slim {

void LossWeights::validate() const {
    if (w_id < 0.0 || w_sf < 0.0 || w_si < 0.0)
        throw ConfigError("loss weights must be non-negative");
    if (w_id == 0.0 && w_sf == 0.0 && w_si == 0.0)
        throw ConfigError("at least one loss weight must be positive");
}

Variant parse_variant(const std::string& name) {
    if (name == "full") return Variant::full;
    if (name == "no-slot-intent") return Variant::no_slot_intent;
    if (name == "no-constraint") return Variant::no_constraint;
    throw ConfigError("unknown variant \"" + name +
                      "\" (expected full, no-slot-intent, or no-constraint)");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_slot_intent: return "no-slot-intent";
        case Variant::no_constraint: return "no-constraint";
    }
    throw ConfigError("invalid variant value");
}

SiLossForm parse_si_form(const std::string& name) {
    if (name == "direct") return SiLossForm::direct;
    if (name == "renormalized") return SiLossForm::renormalized;
    throw ConfigError("unknown slot-intent loss form \"" + name +
                      "\" (expected direct or renormalized)");
}

std::string si_form_name(SiLossForm f) {
    return f == SiLossForm::direct ? "direct" : "renormalized";
}

namespace {

Tensor item_si_loss(Tape& tape, const UtterancePredictions& pred, const BatchItem& item,
                    bool constrained, SiLossForm si_form) {
    if (item.slot_count == 0) return Tensor::scalar(0.0);
    if (pred.slots.size() != item.slot_count)
        throw DimensionError("objective: " + std::to_string(pred.slots.size()) +
                             " slot predictions for " + std::to_string(item.slot_count) +
                             " gold slots");
    std::size_t n_intents = item.intent_multi_hot.size();
    std::vector<Tensor> rows;
    std::vector<int> gold;
    rows.reserve(item.slot_count);
    gold.reserve(item.slot_count);
    for (std::size_t m = 0; m < item.slot_count; ++m) {
        int g = item.slot_intent_ids[m];
        if (g < 0 || static_cast<std::size_t>(g) >= n_intents)
            throw ValidationError("objective: gold slot intent id " + std::to_string(g) +
                                  " outside the intent inventory");
        if (item.intent_multi_hot[static_cast<std::size_t>(g)] != 1.0)
            throw ValidationError(
                "objective: gold slot intent is not one of the utterance's gold intents");
        const Tensor& probs = constrained ? pred.slots[m].y_p : pred.slots[m].y_l;
        if (probs.size() != n_intents)
            throw DimensionError("objective: slot prediction has " +
                                 std::to_string(probs.size()) + " entries for " +
                                 std::to_string(n_intents) + " intents");
        rows.push_back(reshape(tape, probs, {1, n_intents}));
        gold.push_back(g);
    }
    Tensor stacked = concat_rows(tape, rows);
    if (si_form == SiLossForm::renormalized) stacked = normalize_rows(tape, stacked);
    return ce_loss(tape, stacked, gold, std::vector<real>(item.slot_count, 1.0));
}

} // namespace

LossBreakdown ablation_loss(Tape& tape, Variant variant,
                            const std::vector<UtterancePredictions>& preds, const Batch& batch,
                            const LossWeights& weights, SiLossForm si_form) {
    weights.validate();
    if (batch.items.empty()) throw ContractError("objective: empty batch");
    if (preds.size() != batch.items.size())
        throw DimensionError("objective: " + std::to_string(preds.size()) +
                             " prediction sets for " + std::to_string(batch.items.size()) +
                             " batch items");

    std::vector<Tensor> id_terms, sf_terms, si_terms;
    for (std::size_t b = 0; b < batch.items.size(); ++b) {
        const BatchItem& item = batch.items[b];
        const UtterancePredictions& pred = preds[b];

        if (pred.y_i.size() != item.intent_multi_hot.size())
            throw DimensionError("objective: intent prediction has " +
                                 std::to_string(pred.y_i.size()) + " entries for " +
                                 std::to_string(item.intent_multi_hot.size()) + " intents");
        id_terms.push_back(bce_loss(tape, pred.y_i, item.intent_multi_hot));

        if (!pred.y_s.is_matrix() || pred.y_s.rows() != item.n_real)
            throw DimensionError("objective: slot tag predictions must have one row per real "
                                 "token");
        std::vector<int> gold_tags(item.tag_ids.begin(),
                                   item.tag_ids.begin() + static_cast<long>(item.n_real));
        sf_terms.push_back(
            ce_loss(tape, pred.y_s, gold_tags, std::vector<real>(item.n_real, 1.0)));

        if (variant == Variant::no_slot_intent)
            si_terms.push_back(Tensor::scalar(0.0));
        else
            si_terms.push_back(
                item_si_loss(tape, pred, item, variant == Variant::full, si_form));
    }

    LossBreakdown out;
    out.id_loss = mean_scalars(tape, id_terms);
    out.sf_loss = mean_scalars(tape, sf_terms);
    out.si_loss = mean_scalars(tape, si_terms);
    out.total = weighted_sum_scalars(tape, {out.id_loss, out.sf_loss, out.si_loss},
                                     {weights.w_id, weights.w_sf, weights.w_si});
    return out;
}

LossBreakdown joint_loss(Tape& tape, const std::vector<UtterancePredictions>& preds,
                         const Batch& batch, const LossWeights& weights, SiLossForm si_form) {
    return ablation_loss(tape, Variant::full, preds, batch, weights, si_form);
}

} // namespace slim
