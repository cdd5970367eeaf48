#pragma once

#include <vector>

#include "slim/tensor.hpp"

namespace slim {

/// The three classifier heads: utterance intents, token slot tags, and
/// slot-level intents over the concatenated [h_cls | r_m].
struct HeadParams {
    Tensor wi, bi; // [|I| x d], [|I|]
    Tensor ws, bs; // [|T| x d], [|T|]
    Tensor wl, bl; // [|I| x 2d], [|I|]

    static HeadParams init(std::size_t n_intents, std::size_t n_tags, std::size_t hidden_dim,
                           Rng& rng);
    std::vector<Tensor> parameters() const;

    std::size_t n_intents() const { return wi.rows(); }
    std::size_t n_tags() const { return ws.rows(); }
};

struct SlotIntentPrediction {
    Tensor y_l; // [|I|] softmax distribution
    Tensor y_p; // [|I|] constrained: y_i (*) y_l, not normalized
};

/// y^i = sigmoid(W^i h_cls + b^i). h_cls enters as a [1 x d] row; dropout is
/// applied to it before the affine map (training only).
Tensor predict_intents(Tape& tape, const Tensor& h_cls, const HeadParams& params,
                       real dropout_rate, Rng& rng, bool training);

/// y^s_k = softmax(W^s h_k + b^s) for the n real token rows of h
/// (row 0 = [CLS] and rows n+1.. = [SEP]/padding are excluded).
Tensor predict_slots(Tape& tape, const Tensor& h, std::size_t n_real, const HeadParams& params,
                     real dropout_rate, Rng& rng, bool training);

/// r_m = mean of the hidden rows selected by the token-level slot mask
/// (token index i maps to hidden row i+1). An all-zero mask yields the zero
/// vector. The mask may only select real tokens.
Tensor slot_representation(Tape& tape, const Tensor& h, const std::vector<real>& token_mask,
                           std::size_t n_real);

/// y^l_m = softmax(W^l [h_cls | r_m] + b^l); y^p_m = y^i (*) y^l_m. The
/// product stays on the tape so gradients reach both operands.
SlotIntentPrediction predict_slot_intent(Tape& tape, const Tensor& h_cls, const Tensor& r_m,
                                         const Tensor& y_i, const HeadParams& params,
                                         real dropout_rate, Rng& rng, bool training);

/// Labels with probability > threshold; if none qualify, the argmax label.
/// Ties break to the lowest index. Never empty.
std::vector<int> decode_intents(const std::vector<real>& y_i, real threshold);

/// Per slot, the argmax of y^p restricted to the decoded utterance intents;
/// ties break to the lowest index.
std::vector<int> decode_slot_intents(const std::vector<std::vector<real>>& y_p_per_slot,
                                     const std::vector<int>& intent_set);

} // namespace slim
