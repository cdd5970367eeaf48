#include "slim/model.hpp"

#include <sstream>

#include "slim/checkpoint.hpp"
#include "slim/errors.hpp"

namespace slim {

SlimModel SlimModel::init(const EncoderConfig& cfg, Vocabulary vocab, LabelMap intents,
                          LabelMap tags, Rng& rng) {
    EncoderConfig full_cfg = cfg;
    full_cfg.vocab_size = vocab.size();
    full_cfg.validate();
    if (intents.size() == 0) throw ConfigError("model: empty intent inventory");
    if (tags.size() == 0) throw ConfigError("model: empty tag inventory");

    SlimModel model;
    model.cfg = full_cfg;
    model.vocab = std::move(vocab);
    model.intents = std::move(intents);
    model.tags = std::move(tags);
    model.enc = EncoderParams::init(full_cfg, rng);
    model.heads =
        HeadParams::init(model.intents.size(), model.tags.size(), full_cfg.hidden_dim, rng);
    return model;
}

std::vector<Tensor> SlimModel::parameters() const {
    std::vector<Tensor> params = enc.parameters();
    std::vector<Tensor> head_params = heads.parameters();
    params.insert(params.end(), head_params.begin(), head_params.end());
    return params;
}

SlimModel quantized_copy(const SlimModel& model) {
    std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
    save_checkpoint(buffer, model);
    return load_checkpoint(buffer);
}

namespace {

UtterancePredictions forward_item(Tape& tape, const SlimModel& model, const BatchItem& item,
                                  Variant variant, real classifier_dropout, Rng& rng,
                                  bool training) {
    EncodedUtterance encoded =
        encode(tape, model.cfg, model.enc, item.ids, item.attention_mask, rng, training);
    Tensor h_cls = slice_rows(tape, encoded.hidden, 0, 1);

    UtterancePredictions pred;
    pred.y_i =
        predict_intents(tape, h_cls, model.heads, classifier_dropout, rng, training);
    pred.y_s = predict_slots(tape, encoded.hidden, item.n_real, model.heads, classifier_dropout,
                             rng, training);
    if (variant != Variant::no_slot_intent) {
        for (std::size_t m = 0; m < item.slot_count; ++m) {
            Tensor r_m = slot_representation(tape, encoded.hidden, item.slot_masks[m],
                                             item.n_real);
            pred.slots.push_back(predict_slot_intent(tape, h_cls, r_m, pred.y_i, model.heads,
                                                     classifier_dropout, rng, training));
        }
    }
    return pred;
}

std::size_t row_argmax(const Tensor& m, std::size_t row) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols(); ++c)
        if (m.at(row, c) > m.at(row, best)) best = c;
    return best;
}

} // namespace

LossBreakdown forward_loss(Tape& tape, const SlimModel& model, const Batch& batch,
                           const LossWeights& weights, Variant variant, SiLossForm si_form,
                           real classifier_dropout, Rng& rng, bool training) {
    std::vector<UtterancePredictions> preds;
    preds.reserve(batch.items.size());
    for (const BatchItem& item : batch.items)
        preds.push_back(
            forward_item(tape, model, item, variant, classifier_dropout, rng, training));
    return ablation_loss(tape, variant, preds, batch, weights, si_form);
}

Prediction predict(const SlimModel& model, const std::vector<std::string>& tokens,
                   real threshold, std::size_t max_slots, Variant variant) {
    if (tokens.empty()) throw ValidationError("predict: empty token list");
    if (max_slots == 0) throw ContractError("predict: max_slots must be positive");

    Numericalized num = numericalize(tokens, model.vocab, model.cfg.max_seq_len);
    Tape tape(false);
    Rng rng(0); // inference never draws from it
    EncodedUtterance encoded =
        encode(tape, model.cfg, model.enc, num.ids, num.attention_mask, rng, false);
    Tensor h_cls = slice_rows(tape, encoded.hidden, 0, 1);

    Tensor y_i = predict_intents(tape, h_cls, model.heads, 0.0, rng, false);
    std::vector<int> intent_ids = decode_intents(y_i.values(), threshold);

    Prediction out;
    for (int id : intent_ids) out.intents.push_back(model.intents.label(id));

    Tensor y_s = predict_slots(tape, encoded.hidden, num.kept, model.heads, 0.0, rng, false);
    for (std::size_t k = 0; k < num.kept; ++k)
        out.tags.push_back(model.tags.label(static_cast<int>(row_argmax(y_s, k))));
    out.tags.resize(tokens.size(), "O"); // truncated tail carries no predictions

    std::vector<SlotSpan> spans = tags_to_spans(std::vector<std::string>(
        out.tags.begin(), out.tags.begin() + static_cast<long>(num.kept)));
    SlotMaskSet masks = build_slot_masks(spans, num.kept, max_slots);

    std::vector<std::vector<real>> slot_probs;
    for (std::size_t m = 0; m < masks.count; ++m) {
        Tensor r_m = slot_representation(tape, encoded.hidden, masks.masks[m], num.kept);
        SlotIntentPrediction sp =
            predict_slot_intent(tape, h_cls, r_m, y_i, model.heads, 0.0, rng, false);
        slot_probs.push_back(variant == Variant::no_constraint ? sp.y_l.values()
                                                               : sp.y_p.values());
    }
    std::vector<int> slot_intents = decode_slot_intents(slot_probs, intent_ids);

    // overall argmax: always a member of the decoded set
    std::size_t utt_argmax = 0;
    for (std::size_t c = 1; c < y_i.size(); ++c)
        if (y_i.at(c) > y_i.at(utt_argmax)) utt_argmax = c;

    for (std::size_t m = 0; m < spans.size(); ++m) {
        spans[m].intent = m < masks.count
                              ? model.intents.label(slot_intents[m])
                              : model.intents.label(static_cast<int>(utt_argmax));
    }
    out.slots = std::move(spans);
    return out;
}

EvalReport evaluate(const SlimModel& model, const std::vector<UtteranceRecord>& records,
                    real threshold, std::size_t max_slots, Variant variant) {
    std::vector<IntentSet> pred_intents(records.size()), gold_intents(records.size());
    std::vector<TagSeq> pred_tags(records.size()), gold_tags(records.size());

#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(records.size()); ++i) {
        auto idx = static_cast<std::size_t>(i);
        Prediction p = predict(model, records[idx].tokens, threshold, max_slots, variant);
        pred_intents[idx] = std::move(p.intents);
        pred_tags[idx] = std::move(p.tags);
        gold_intents[idx] = records[idx].intents;
        gold_tags[idx] = records[idx].tags;
    }
    return evaluate_all(pred_intents, gold_intents, pred_tags, gold_tags);
}

} // namespace slim
