#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "slim/errors.hpp"
#include "slim/search.hpp"
#include "slim/train.hpp"

using namespace slim;

namespace {

RunConfig tiny_run() {
    RunConfig cfg;
    cfg.train_path = "(in-memory)";
    cfg.valid_path = "(in-memory)";
    cfg.encoder.num_layers = 1;
    cfg.encoder.hidden_dim = 16;
    cfg.encoder.num_heads = 2;
    cfg.encoder.ffn_dim = 32;
    cfg.encoder.max_seq_len = 30;
    cfg.encoder.dropout_rate = 0.0;
    cfg.dropout = 0.0;
    cfg.learning_rate = 2e-3;
    cfg.batch_size = 8;
    cfg.max_epochs = 3;
    cfg.patience = 3;
    cfg.seed = 5;
    return cfg;
}

struct Split {
    std::vector<UtteranceRecord> train, valid;
    Split() {
        train = generate(GeneratorConfig::demo(), 32, 101);
        valid = generate(GeneratorConfig::demo(), 16, 102);
    }
};

} // namespace

TEST_CASE("run config validation") {
    RunConfig cfg = tiny_run();
    CHECK_NOTHROW(cfg.validate());
    SUBCASE("patience above max epochs") {
        cfg.patience = 5;
        cfg.max_epochs = 4;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("non-positive rate") {
        cfg.learning_rate = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("threshold outside (0,1)") {
        cfg.threshold = 1.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("missing paths") {
        cfg.train_path.clear();
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("run config JSON round trip") {
    RunConfig cfg = tiny_run();
    cfg.variant = Variant::no_constraint;
    cfg.weights = {0.8, 1.7, 1.2};
    std::string path = "/tmp/slim_runconfig.json";
    {
        std::ofstream out(path);
        out << cfg.to_json();
    }
    RunConfig back = RunConfig::from_json_file(path);
    std::remove(path.c_str());
    CHECK(back.encoder.hidden_dim == cfg.encoder.hidden_dim);
    CHECK(back.learning_rate == cfg.learning_rate);
    CHECK(back.weights.w_sf == cfg.weights.w_sf);
    CHECK(back.variant == Variant::no_constraint);
    CHECK(back.seed == cfg.seed);
    CHECK(back.batch_size == cfg.batch_size);
}

TEST_CASE("from_json_file rejects bad input") {
    std::string path = "/tmp/slim_badconfig.json";
    {
        std::ofstream out(path);
        out << "{ not json";
    }
    CHECK_THROWS_AS(RunConfig::from_json_file(path), ConfigError);
    {
        std::ofstream out(path);
        out << R"({"variant": "bogus"})";
    }
    CHECK_THROWS_AS(RunConfig::from_json_file(path), ConfigError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(RunConfig::from_json_file("/tmp/absent.json"), ConfigError);
}

TEST_CASE("training produces a consistent curve and best snapshot") {
    Split split;
    RunConfig cfg = tiny_run();
    std::size_t callbacks = 0;
    TrainResult r = train_model(cfg, split.train, split.valid,
                                [&](const EpochStats&) { ++callbacks; });

    CHECK(r.epochs_run >= 1);
    CHECK(r.epochs_run <= cfg.max_epochs);
    CHECK(callbacks == r.epochs_run);
    REQUIRE(r.curve.size() == r.epochs_run);
    for (std::size_t i = 0; i < r.curve.size(); ++i) CHECK(r.curve[i].epoch == i + 1);

    real best = -1.0;
    for (const auto& row : r.curve) best = std::max(best, row.valid.sefr_acc);
    CHECK(r.best_sefr == best);
    CHECK(r.curve[r.best_epoch - 1].is_best);

    // stopped either by budget or by patience arithmetic
    CHECK((r.epochs_run == cfg.max_epochs || r.epochs_run - r.best_epoch >= cfg.patience));

    // stored best score is exactly what the snapshot re-evaluates to
    EvalReport again = evaluate(r.best, split.valid, cfg.threshold, cfg.max_slots, cfg.variant);
    CHECK(again.sefr_acc == r.best_sefr);
}

TEST_CASE("training is bitwise reproducible") {
    Split split;
    RunConfig cfg = tiny_run();
    TrainResult a = train_model(cfg, split.train, split.valid);
    TrainResult b = train_model(cfg, split.train, split.valid);
    REQUIRE(a.curve.size() == b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
        CHECK(a.curve[i].train_total == b.curve[i].train_total);
        CHECK(a.curve[i].train_id == b.curve[i].train_id);
        CHECK(a.curve[i].train_sf == b.curve[i].train_sf);
        CHECK(a.curve[i].train_si == b.curve[i].train_si);
        CHECK(a.curve[i].valid.sefr_acc == b.curve[i].valid.sefr_acc);
        CHECK(a.curve[i].valid.slot_f1 == b.curve[i].valid.slot_f1);
    }
    auto pa = a.best.parameters();
    auto pb = b.best.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].values() == pb[i].values());

    RunConfig other = cfg;
    other.seed = 6;
    TrainResult c = train_model(other, split.train, split.valid);
    bool differs = false;
    for (std::size_t i = 0; i < std::min(a.curve.size(), c.curve.size()) && !differs; ++i)
        differs = a.curve[i].train_total != c.curve[i].train_total;
    CHECK(differs);
}

TEST_CASE("ablation variants train end to end") {
    Split split;
    RunConfig cfg = tiny_run();
    cfg.max_epochs = 1;
    cfg.patience = 1;
    for (Variant v : {Variant::no_slot_intent, Variant::no_constraint}) {
        cfg.variant = v;
        TrainResult r = train_model(cfg, split.train, split.valid);
        CHECK(r.epochs_run == 1);
        if (v == Variant::no_slot_intent) CHECK(r.curve[0].train_si == 0.0);
    }
}

TEST_CASE("search sampling is index-stable and within ranges") {
    SearchSpace space;
    CHECK_NOTHROW(space.validate());
    for (std::size_t i = 0; i < 30; ++i) {
        TrialResult t = sample_trial(space, 77, i);
        TrialResult u = sample_trial(space, 77, i);
        CHECK(t.dropout == u.dropout);
        CHECK(t.learning_rate == u.learning_rate);
        CHECK(t.w_sf == u.w_sf);
        CHECK(t.seed == u.seed);
        bool known_dropout = false;
        for (real d : space.dropout_choices) known_dropout |= (d == t.dropout);
        CHECK(known_dropout);
        CHECK(t.learning_rate >= space.lr_lo);
        CHECK(t.learning_rate <= space.lr_hi);
        for (real w : {t.w_id, t.w_sf, t.w_si}) {
            CHECK(w >= space.weight_lo);
            CHECK(w <= space.weight_hi);
        }
    }
    TrialResult other = sample_trial(space, 78, 0);
    CHECK(other.learning_rate != sample_trial(space, 77, 0).learning_rate);
}

TEST_CASE("search space validation") {
    SearchSpace space;
    SUBCASE("zero trials") {
        space.trials = 0;
        CHECK_THROWS_AS(space.validate(), ConfigError);
    }
    SUBCASE("degenerate lr range") {
        space.lr_hi = space.lr_lo;
        CHECK_THROWS_AS(space.validate(), ConfigError);
    }
    SUBCASE("bad dropout choice") {
        space.dropout_choices = {1.0};
        CHECK_THROWS_AS(space.validate(), ConfigError);
    }
}

TEST_CASE("a small search runs, ranks, and tolerates nothing failing") {
    Split split;
    RunConfig base = tiny_run();
    base.max_epochs = 1;
    base.patience = 1;
    SearchSpace space;
    space.trials = 3;
    auto trials = run_search(space, base, split.train, split.valid, 123);
    REQUIRE(trials.size() == 3);
    for (const auto& t : trials) {
        CHECK_FALSE(t.failed);
        CHECK(t.epochs_run == 1);
        CHECK(t.best_sefr >= 0.0);
    }
    auto ranked = rank_trials(trials);
    for (std::size_t i = 1; i < ranked.size(); ++i)
        CHECK(ranked[i - 1].best_sefr >= ranked[i].best_sefr);

    auto again = run_search(space, base, split.train, split.valid, 123);
    for (std::size_t i = 0; i < trials.size(); ++i) {
        CHECK(trials[i].best_sefr == again[i].best_sefr);
        CHECK(trials[i].learning_rate == again[i].learning_rate);
    }
}

TEST_CASE("failed trials are recorded and ranked last") {
    std::vector<TrialResult> trials(3);
    trials[0].index = 0;
    trials[0].best_sefr = 0.4;
    trials[1].index = 1;
    trials[1].failed = true;
    trials[1].error = "boom";
    trials[2].index = 2;
    trials[2].best_sefr = 0.9;
    auto ranked = rank_trials(trials);
    CHECK(ranked[0].index == 2);
    CHECK(ranked[1].index == 0);
    CHECK(ranked[2].failed);
}
