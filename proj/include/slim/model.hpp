#pragma once

#include <string>
#include <vector>

#include "slim/data.hpp"
#include "slim/encoder.hpp"
#include "slim/heads.hpp"
#include "slim/metrics.hpp"
#include "slim/objective.hpp"

namespace slim {

struct SlimModel {
    EncoderConfig cfg;
    Vocabulary vocab;
    LabelMap intents;
    LabelMap tags;
    EncoderParams enc;
    HeadParams heads;

    static SlimModel init(const EncoderConfig& cfg, Vocabulary vocab, LabelMap intents,
                          LabelMap tags, Rng& rng);
    std::vector<Tensor> parameters() const;
};

/// Deep copy with every parameter rounded through a 32-bit float: the
/// in-memory twin of what a saved checkpoint will reload.
SlimModel quantized_copy(const SlimModel& model);

/// Forward pass plus joint objective for one batch. Gold slot masks drive the
/// slot-intent term (the training protocol); classifier_dropout applies to
/// head inputs, the encoder uses its own configured rate.
LossBreakdown forward_loss(Tape& tape, const SlimModel& model, const Batch& batch,
                           const LossWeights& weights, Variant variant, SiLossForm si_form,
                           real classifier_dropout, Rng& rng, bool training);

struct Prediction {
    std::vector<std::string> intents; // decoded set, ascending label id
    std::vector<std::string> tags;    // parallel to the input tokens
    std::vector<SlotSpan> slots;      // from predicted tags, intents filled
};

/// Full inference: predicted intents, predicted tags, predicted spans,
/// predicted slot intents. Spans past max_slots get the utterance's argmax
/// intent. Tokens beyond the encoder window are tagged O.
Prediction predict(const SlimModel& model, const std::vector<std::string>& tokens,
                   real threshold, std::size_t max_slots, Variant variant = Variant::full);

/// Full-inference metrics over a record list.
EvalReport evaluate(const SlimModel& model, const std::vector<UtteranceRecord>& records,
                    real threshold, std::size_t max_slots, Variant variant = Variant::full);

} // namespace slim
