#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "slim/model.hpp"
#include "slim/objective.hpp"

namespace slim {

struct RunConfig {
    std::string train_path;
    std::string valid_path;
    std::string test_path; // optional
    std::string out_dir;

    EncoderConfig encoder; // vocab_size filled from the training data
    LossWeights weights;
    real learning_rate = 1e-3;
    real dropout = 0.2; // classifier dropout
    std::size_t batch_size = 32;
    std::size_t max_epochs = 20;
    std::size_t patience = 3;
    real threshold = 0.5;
    std::size_t max_slots = 6;
    real clip_norm = 1.0;
    Variant variant = Variant::full;
    SiLossForm si_form = SiLossForm::direct;
    std::uint64_t seed = 1;

    void validate() const;
    static RunConfig from_json_file(const std::string& path);
    std::string to_json() const;
};

struct EpochStats {
    std::size_t epoch = 0; // 1-based
    real train_total = 0.0;
    real train_id = 0.0;
    real train_sf = 0.0;
    real train_si = 0.0;
    EvalReport valid;
    bool is_best = false;
};

struct TrainResult {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    real best_sefr = 0.0;
    std::vector<EpochStats> curve;
    SlimModel best; // f32-quantized, identical to its checkpoint on disk
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Adam training with per-epoch validation (full inference) and early
/// stopping on validation SeFr. Validation runs on an f32-quantized twin of
/// the parameters so the carried best score matches a checkpoint reload
/// exactly. Non-finite losses raise NumericalError with epoch/batch context.
TrainResult train_model(const RunConfig& cfg, const std::vector<UtteranceRecord>& train,
                        const std::vector<UtteranceRecord>& valid,
                        const EpochCallback& on_epoch = nullptr);

} // namespace slim
