#pragma once

#include <string>
#include <vector>

#include "slim/data.hpp"
#include "slim/heads.hpp"
#include "slim/tensor.hpp"

namespace slim {

struct LossWeights {
    real w_id = 1.0;
    real w_sf = 2.0;
    real w_si = 1.0;
    void validate() const;
};

enum class Variant { full, no_slot_intent, no_constraint };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

/// How the slot-intent cross entropy treats the constrained distribution y_p,
/// whose entries need not sum to 1: take -log(y_p[gold]+eps) directly, or
/// renormalize the row first.
enum class SiLossForm { direct, renormalized };

SiLossForm parse_si_form(const std::string& name);
std::string si_form_name(SiLossForm f);

/// Head outputs for one utterance, all living on the same tape.
struct UtterancePredictions {
    Tensor y_i;                              // [|I|]
    Tensor y_s;                              // [n_real x |T|]
    std::vector<SlotIntentPrediction> slots; // one per real gold slot, span order
};

struct LossBreakdown {
    Tensor id_loss;
    Tensor sf_loss;
    Tensor si_loss;
    Tensor total;
};

/// Weighted joint objective over a batch. Per-utterance components use mean
/// reductions (over intents, real tokens, real slots); the batch reduction is
/// a mean over utterances. Utterances without slots contribute 0 to si_loss.
LossBreakdown joint_loss(Tape& tape, const std::vector<UtterancePredictions>& preds,
                         const Batch& batch, const LossWeights& weights,
                         SiLossForm si_form = SiLossForm::direct);

/// joint_loss with a variant switch: no_slot_intent omits the si term,
/// no_constraint scores y_l instead of y_p.
LossBreakdown ablation_loss(Tape& tape, Variant variant,
                            const std::vector<UtterancePredictions>& preds, const Batch& batch,
                            const LossWeights& weights,
                            SiLossForm si_form = SiLossForm::direct);

} // namespace slim
