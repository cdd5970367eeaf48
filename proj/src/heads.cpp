#include "slim/heads.hpp"

#include <algorithm>

#include "slim/errors.hpp"

namespace slim {

namespace {

Tensor init_weight(Rng& rng, std::size_t rows, std::size_t cols) {
    std::vector<real> v(rows * cols);
    for (auto& x : v) x = rng.normal(0.0, 0.02);
    return Tensor::from_values({rows, cols}, std::move(v), true);
}

Tensor affine(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_row_broadcast(tape, matmul_nt(tape, x, w), b);
}

} // namespace

HeadParams HeadParams::init(std::size_t n_intents, std::size_t n_tags, std::size_t hidden_dim,
                            Rng& rng) {
    if (n_intents == 0 || n_tags == 0 || hidden_dim == 0)
        throw ConfigError("HeadParams: inventories and hidden size must be positive");
    HeadParams p;
    p.wi = init_weight(rng, n_intents, hidden_dim);
    p.bi = Tensor::zeros({n_intents}, true);
    p.ws = init_weight(rng, n_tags, hidden_dim);
    p.bs = Tensor::zeros({n_tags}, true);
    p.wl = init_weight(rng, n_intents, 2 * hidden_dim);
    p.bl = Tensor::zeros({n_intents}, true);
    return p;
}

std::vector<Tensor> HeadParams::parameters() const { return {wi, bi, ws, bs, wl, bl}; }

Tensor predict_intents(Tape& tape, const Tensor& h_cls, const HeadParams& params,
                       real dropout_rate, Rng& rng, bool training) {
    if (h_cls.ndim() != 2 || h_cls.rows() != 1 || h_cls.cols() != params.wi.cols())
        throw DimensionError("predict_intents: h_cls must be [1 x d] with d = " +
                             std::to_string(params.wi.cols()));
    Tensor x = dropout(tape, h_cls, dropout_rate, rng, training);
    Tensor logits = affine(tape, x, params.wi, params.bi);
    return reshape(tape, sigmoid(tape, logits), {params.n_intents()});
}

Tensor predict_slots(Tape& tape, const Tensor& h, std::size_t n_real, const HeadParams& params,
                     real dropout_rate, Rng& rng, bool training) {
    if (n_real == 0 || n_real + 2 > h.rows())
        throw DimensionError("predict_slots: " + std::to_string(n_real) +
                             " real tokens do not fit " + std::to_string(h.rows()) + " rows");
    Tensor tokens = slice_rows(tape, h, 1, n_real);
    Tensor x = dropout(tape, tokens, dropout_rate, rng, training);
    return softmax_rows(tape, affine(tape, x, params.ws, params.bs));
}

Tensor slot_representation(Tape& tape, const Tensor& h, const std::vector<real>& token_mask,
                           std::size_t n_real) {
    if (token_mask.size() + 2 != h.rows())
        throw DimensionError("slot_representation: mask of " + std::to_string(token_mask.size()) +
                             " tokens vs " + std::to_string(h.rows()) + " hidden rows");
    std::vector<real> full(h.rows(), 0.0);
    for (std::size_t i = 0; i < token_mask.size(); ++i) {
        if (token_mask[i] <= 0.5) continue;
        if (i >= n_real)
            throw ContractError("slot_representation: mask selects padding position " +
                                std::to_string(i));
        full[i + 1] = 1.0;
    }
    return masked_mean(tape, h, full);
}

SlotIntentPrediction predict_slot_intent(Tape& tape, const Tensor& h_cls, const Tensor& r_m,
                                         const Tensor& y_i, const HeadParams& params,
                                         real dropout_rate, Rng& rng, bool training) {
    std::size_t d = params.wi.cols();
    if (h_cls.ndim() != 2 || h_cls.rows() != 1 || h_cls.cols() != d || r_m.ndim() != 1 ||
        r_m.size() != d)
        throw DimensionError("predict_slot_intent: need h_cls [1 x d] and r_m [d]");
    if (y_i.size() != params.n_intents())
        throw DimensionError("predict_slot_intent: y_i length mismatch");

    Tensor cls_vec = reshape(tape, h_cls, {d});
    Tensor joint = reshape(tape, concat(tape, cls_vec, r_m), {std::size_t{1}, 2 * d});
    Tensor x = dropout(tape, joint, dropout_rate, rng, training);
    Tensor y_l = reshape(tape, softmax_rows(tape, affine(tape, x, params.wl, params.bl)),
                         {params.n_intents()});
    Tensor y_p = hadamard(tape, y_i, y_l);
    return {y_l, y_p};
}

std::vector<int> decode_intents(const std::vector<real>& y_i, real threshold) {
    if (y_i.empty()) throw ContractError("decode_intents: empty prediction");
    if (threshold <= 0.0 || threshold >= 1.0)
        throw ContractError("decode_intents: threshold must be in (0, 1)");
    std::vector<int> out;
    for (std::size_t c = 0; c < y_i.size(); ++c)
        if (y_i[c] > threshold) out.push_back(static_cast<int>(c));
    if (out.empty()) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < y_i.size(); ++c)
            if (y_i[c] > y_i[best]) best = c; // strict: ties keep the lowest index
        out.push_back(static_cast<int>(best));
    }
    return out;
}

std::vector<int> decode_slot_intents(const std::vector<std::vector<real>>& y_p_per_slot,
                                     const std::vector<int>& intent_set) {
    if (intent_set.empty()) throw ContractError("decode_slot_intents: empty intent set");
    std::vector<int> candidates = intent_set;
    std::sort(candidates.begin(), candidates.end()); // strict > then keeps the lowest index on ties
    std::vector<int> out;
    out.reserve(y_p_per_slot.size());
    for (const auto& y_p : y_p_per_slot) {
        int best = -1;
        for (int c : candidates) {
            if (c < 0 || static_cast<std::size_t>(c) >= y_p.size())
                throw IndexError("decode_slot_intents: intent id " + std::to_string(c) +
                                 " outside prediction of " + std::to_string(y_p.size()));
            if (best < 0 || y_p[static_cast<std::size_t>(c)] > y_p[static_cast<std::size_t>(best)])
                best = c;
        }
        out.push_back(best);
    }
    return out;
}

} // namespace slim
