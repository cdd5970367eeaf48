#include "slim/search.hpp"

#include <algorithm>

#include "slim/errors.hpp"

namespace slim {

void SearchSpace::validate() const {
    if (trials == 0) throw ConfigError("search: trial count must be at least 1");
    if (dropout_choices.empty()) throw ConfigError("search: no dropout choices");
    for (real d : dropout_choices)
        if (d < 0.0 || d >= 1.0) throw ConfigError("search: dropout choice outside [0, 1)");
    if (!(lr_lo > 0.0) || !(lr_hi > lr_lo))
        throw ConfigError("search: learning-rate range must satisfy 0 < lo < hi");
    if (!(weight_lo >= 0.0) || !(weight_hi > weight_lo))
        throw ConfigError("search: weight range must satisfy 0 <= lo < hi");
}

TrialResult sample_trial(const SearchSpace& space, std::uint64_t master_seed,
                         std::size_t index) {
    Rng rng(fork_seed(master_seed, index));
    TrialResult t;
    t.index = index;
    t.dropout = space.dropout_choices[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(space.dropout_choices.size()) - 1))];
    t.learning_rate = rng.log_uniform(space.lr_lo, space.lr_hi);
    t.w_id = rng.uniform(space.weight_lo, space.weight_hi);
    t.w_sf = rng.uniform(space.weight_lo, space.weight_hi);
    t.w_si = rng.uniform(space.weight_lo, space.weight_hi);
    t.seed = rng.next_u64();
    return t;
}

RunConfig apply_trial(const RunConfig& base, const TrialResult& trial) {
    RunConfig cfg = base;
    cfg.dropout = trial.dropout;
    cfg.learning_rate = trial.learning_rate;
    cfg.weights = LossWeights{trial.w_id, trial.w_sf, trial.w_si};
    cfg.seed = trial.seed;
    return cfg;
}

std::vector<TrialResult> run_search(const SearchSpace& space, const RunConfig& base,
                                    const std::vector<UtteranceRecord>& train,
                                    const std::vector<UtteranceRecord>& valid,
                                    std::uint64_t master_seed) {
    space.validate();
    std::vector<TrialResult> trials(space.trials);

#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(space.trials); ++i) {
        auto idx = static_cast<std::size_t>(i);
        TrialResult t = sample_trial(space, master_seed, idx);
        try {
            TrainResult r = train_model(apply_trial(base, t), train, valid);
            t.best_sefr = r.best_sefr;
            t.best_epoch = r.best_epoch;
            t.epochs_run = r.epochs_run;
        } catch (const std::exception& e) {
            t.failed = true;
            t.error = e.what();
        }
        trials[idx] = std::move(t);
    }
    return trials;
}

std::vector<TrialResult> rank_trials(std::vector<TrialResult> trials) {
    std::stable_sort(trials.begin(), trials.end(),
                     [](const TrialResult& a, const TrialResult& b) {
                         if (a.failed != b.failed) return !a.failed;
                         return a.best_sefr > b.best_sefr;
                     });
    return trials;
}

} // namespace slim
