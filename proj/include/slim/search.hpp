#pragma once

#include <string>
#include <vector>

#include "slim/train.hpp"

namespace slim {

struct SearchSpace {
    std::vector<real> dropout_choices = {0.0, 0.1, 0.2, 0.3};
    real lr_lo = 1e-4;
    real lr_hi = 5e-3; // sampled log-uniform
    real weight_lo = 0.5;
    real weight_hi = 2.0; // each loss weight, uniform
    std::size_t trials = 30;

    void validate() const;
};

struct TrialResult {
    std::size_t index = 0;
    real dropout = 0.0;
    real learning_rate = 0.0;
    real w_id = 0.0;
    real w_sf = 0.0;
    real w_si = 0.0;
    std::uint64_t seed = 0;
    real best_sefr = -1.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    bool failed = false;
    std::string error;
};

/// Draw the trial's hyperparameters from the master seed; pure and
/// index-stable, so schedules can be reproduced without running anything.
TrialResult sample_trial(const SearchSpace& space, std::uint64_t master_seed,
                         std::size_t index);

/// Randomized search: trials trained independently (parallel when OpenMP is
/// on), ranked by validation SeFr. A crashing trial is recorded as failed and
/// the search continues.
std::vector<TrialResult> run_search(const SearchSpace& space, const RunConfig& base,
                                    const std::vector<UtteranceRecord>& train,
                                    const std::vector<UtteranceRecord>& valid,
                                    std::uint64_t master_seed);

/// Trials sorted by descending SeFr, failures last; ties keep the lower index.
std::vector<TrialResult> rank_trials(std::vector<TrialResult> trials);

RunConfig apply_trial(const RunConfig& base, const TrialResult& trial);

} // namespace slim
