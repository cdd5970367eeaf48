#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "slim/checkpoint.hpp"
#include "slim/errors.hpp"
#include "slim/model.hpp"
#include "slim/search.hpp"
#include "slim/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json report_to_json(const EvalReport& r) {
    return json{{"slot_precision", r.slot_precision},
                {"slot_recall", r.slot_recall},
                {"slot_f1", r.slot_f1},
                {"intent_acc", r.intent_acc},
                {"sefr_acc", r.sefr_acc},
                {"true_positives", r.true_positives},
                {"predicted_spans", r.predicted_spans},
                {"gold_spans", r.gold_spans},
                {"utterances", r.utterances}};
}

int cmd_generate(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed, std::size_t n_train, std::size_t n_valid,
                 std::size_t n_test) {
    GeneratorConfig cfg =
        config_path.empty() ? GeneratorConfig::demo() : GeneratorConfig::from_json_file(config_path);
    cfg.validate();
    fs::create_directories(out_dir);

    struct Shard {
        const char* name;
        std::size_t count;
        std::uint64_t stream;
    };
    json summary;
    for (const Shard& shard : {Shard{"train", n_train, 0}, Shard{"valid", n_valid, 1},
                               Shard{"test", n_test, 2}}) {
        if (shard.count == 0)
            std::cerr << "warning: writing empty " << shard.name << " shard\n";
        auto records = generate(cfg, shard.count, fork_seed(seed, shard.stream));
        std::string path = out_dir + "/" + shard.name + ".jsonl";
        save_records(path, records);

        std::map<std::size_t, std::size_t> histogram;
        for (const auto& r : records) ++histogram[r.intents.size()];
        json hist;
        for (const auto& [k, n] : histogram) hist[std::to_string(k)] = n;
        summary[shard.name] = {{"path", path}, {"records", records.size()},
                               {"intent_count_histogram", hist}};
    }
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

void write_curves(const std::string& path, const std::vector<EpochStats>& curve) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    out << "epoch,train_total,train_id,train_sf,train_si,valid_slot_f1,valid_intent_acc,"
           "valid_sefr,is_best\n";
    for (const auto& row : curve) {
        out << row.epoch << ',' << fmt(row.train_total) << ',' << fmt(row.train_id) << ','
            << fmt(row.train_sf) << ',' << fmt(row.train_si) << ',' << fmt(row.valid.slot_f1)
            << ',' << fmt(row.valid.intent_acc) << ',' << fmt(row.valid.sefr_acc) << ','
            << (row.is_best ? 1 : 0) << '\n';
    }
}

int cmd_train(RunConfig cfg) {
    cfg.validate();
    if (cfg.out_dir.empty()) throw ConfigError("train: --out (or \"out\" in config) is required");
    fs::create_directories(cfg.out_dir);

    auto train_records = load_records(cfg.train_path);
    auto valid_records = load_records(cfg.valid_path);

    TrainResult result = train_model(cfg, train_records, valid_records, [](const EpochStats& s) {
        std::cout << "epoch " << s.epoch << "  train_total " << s.train_total << "  valid_sefr "
                  << s.valid.sefr_acc << (s.is_best ? "  *" : "") << "\n";
    });

    write_curves(cfg.out_dir + "/curves.csv", result.curve);
    save_checkpoint(cfg.out_dir + "/model.bin", result.best);

    json report = {{"config", json::parse(cfg.to_json())},
                   {"epochs_run", result.epochs_run},
                   {"best_epoch", result.best_epoch},
                   {"best_valid_sefr", result.best_sefr},
                   {"valid", report_to_json(result.curve[result.best_epoch - 1].valid)}};
    if (!cfg.test_path.empty()) {
        auto test_records = load_records(cfg.test_path);
        report["test"] =
            report_to_json(evaluate(result.best, test_records, cfg.threshold, cfg.max_slots,
                                    cfg.variant));
    }
    std::ofstream rep(cfg.out_dir + "/report.json");
    rep << report.dump(2) << "\n";
    std::cout << report.dump(2) << "\n";
    return kExitOk;
}

void check_inventories(const SlimModel& model, const std::vector<UtteranceRecord>& records) {
    std::set<std::string> bad_intents, bad_tags;
    for (const auto& r : records) {
        for (const auto& i : r.intents)
            if (!model.intents.contains(i)) bad_intents.insert(i);
        for (const auto& t : r.tags)
            if (t != "O" && !model.tags.contains(t)) bad_tags.insert(t);
    }
    if (!bad_intents.empty() || !bad_tags.empty()) {
        std::string msg = "label inventory mismatch:";
        for (const auto& i : bad_intents) msg += " intent \"" + i + "\"";
        for (const auto& t : bad_tags) msg += " tag \"" + t + "\"";
        throw ConfigError(msg + " unknown to the checkpoint");
    }
}

int cmd_eval(const std::string& model_path, const std::string& data_path, real threshold,
             std::size_t max_slots, Variant variant) {
    SlimModel model = load_checkpoint(model_path);
    auto records = load_records(data_path);
    check_inventories(model, records);
    EvalReport report = evaluate(model, records, threshold, max_slots, variant);
    std::cout << report_to_json(report).dump(2) << "\n";
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::vector<std::string>& tokens,
                real threshold, std::size_t max_slots, Variant variant) {
    if (tokens.empty()) throw ValidationError("predict: no tokens given");
    SlimModel model = load_checkpoint(model_path);
    Prediction p = predict(model, tokens, threshold, max_slots, variant);

    json slots = json::array();
    for (const auto& s : p.slots)
        slots.push_back({{"start", s.start},
                         {"end", s.end},
                         {"type", s.slot_type},
                         {"intent", s.intent}});
    json out = {{"tokens", tokens}, {"intents", p.intents}, {"tags", p.tags}, {"slots", slots}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_search(RunConfig base, const std::string& out_dir, std::size_t trials,
               std::uint64_t master_seed) {
    base.validate();
    SearchSpace space;
    space.trials = trials;
    space.validate();
    fs::create_directories(out_dir);

    auto train_records = load_records(base.train_path);
    auto valid_records = load_records(base.valid_path);

    auto results = run_search(space, base, train_records, valid_records, master_seed);
    auto ranked = rank_trials(results);

    std::ofstream csv(out_dir + "/trials.csv");
    csv << "rank,trial,dropout,learning_rate,w_id,w_sf,w_si,seed,best_sefr,best_epoch,"
           "epochs_run,status,error\n";
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const TrialResult& t = ranked[r];
        std::string error = t.error;
        for (auto& c : error)
            if (c == ',' || c == '\n') c = ';';
        csv << r + 1 << ',' << t.index << ',' << fmt(t.dropout) << ',' << fmt(t.learning_rate)
            << ',' << fmt(t.w_id) << ',' << fmt(t.w_sf) << ',' << fmt(t.w_si) << ',' << t.seed
            << ',' << fmt(t.best_sefr) << ',' << t.best_epoch << ',' << t.epochs_run << ','
            << (t.failed ? "failed" : "ok") << ',' << error << '\n';
    }

    std::size_t failures = 0;
    for (const auto& t : ranked) failures += t.failed ? 1 : 0;
    if (failures == ranked.size()) {
        std::cerr << "error: all " << failures << " trials failed\n";
        return kExitRuntime;
    }
    std::ofstream best(out_dir + "/best_config.json");
    best << apply_trial(base, ranked.front()).to_json() << "\n";
    std::cout << "best trial " << ranked.front().index << "  valid_sefr "
              << ranked.front().best_sefr << "  (" << failures << " failed)\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SLIM: multi-intent detection and slot filling with slot-to-intent mapping"};
    app.require_subcommand(1);

    std::string config_path, out_dir, model_path, data_path;
    std::uint64_t seed = 1;
    std::size_t n_train = 2000, n_valid = 200, n_test = 200, trials = 30;
    real threshold = 0.5;
    std::size_t max_slots = 6;
    std::string variant_str = "full";
    std::vector<std::string> tokens;

    auto* gen = app.add_subcommand("generate", "Write synthetic train/valid/test datasets");
    gen->add_option("--config", config_path, "Generator config JSON (default: built-in demo)");
    gen->add_option("--out", out_dir, "Output directory")->required();
    gen->add_option("--seed", seed, "Master seed");
    gen->add_option("--train", n_train, "Training record count");
    gen->add_option("--valid", n_valid, "Validation record count");
    gen->add_option("--test", n_test, "Test record count");

    auto* train = app.add_subcommand("train", "Train a model with early stopping");
    train->add_option("--config", config_path, "Run config JSON")->required();
    train->add_option("--seed", seed, "Override config seed");
    train->add_option("--out", out_dir, "Override output directory");
    train->add_option("--variant", variant_str, "full | no-slot-intent | no-constraint");
    train->add_option("--threshold", threshold, "Intent decoding threshold");
    train->add_option("--max-slots", max_slots, "Slot mask budget");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    eval->add_option("--model", model_path, "Checkpoint path")->required();
    eval->add_option("--data", data_path, "Dataset JSONL")->required();
    eval->add_option("--threshold", threshold, "Intent decoding threshold");
    eval->add_option("--max-slots", max_slots, "Slot mask budget");
    eval->add_option("--variant", variant_str, "Decoding variant");

    auto* pred = app.add_subcommand("predict", "Predict intents/tags/slot intents for tokens");
    pred->add_option("--model", model_path, "Checkpoint path")->required();
    pred->add_option("--threshold", threshold, "Intent decoding threshold");
    pred->add_option("--max-slots", max_slots, "Slot mask budget");
    pred->add_option("--variant", variant_str, "Decoding variant");
    pred->add_option("tokens", tokens, "Input tokens");

    auto* search = app.add_subcommand("search", "Randomized hyperparameter search");
    search->add_option("--config", config_path, "Base run config JSON")->required();
    search->add_option("--trials", trials, "Trial count");
    search->add_option("--seed", seed, "Master seed");
    search->add_option("--out", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed())
            return cmd_generate(config_path, out_dir, seed, n_train, n_valid, n_test);
        if (train->parsed()) {
            RunConfig cfg = RunConfig::from_json_file(config_path);
            if (train->count("--seed")) cfg.seed = seed;
            if (train->count("--out")) cfg.out_dir = out_dir;
            if (train->count("--variant")) cfg.variant = parse_variant(variant_str);
            if (train->count("--threshold")) cfg.threshold = threshold;
            if (train->count("--max-slots")) cfg.max_slots = max_slots;
            return cmd_train(cfg);
        }
        if (eval->parsed())
            return cmd_eval(model_path, data_path, threshold, max_slots,
                            parse_variant(variant_str));
        if (pred->parsed())
            return cmd_predict(model_path, tokens, threshold, max_slots,
                               parse_variant(variant_str));
        if (search->parsed()) {
            RunConfig base = RunConfig::from_json_file(config_path);
            if (search->count("--out")) base.out_dir = out_dir;
            if (base.out_dir.empty())
                throw ConfigError("search: --out (or \"out\" in config) is required");
            return cmd_search(base, base.out_dir, trials, seed);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
