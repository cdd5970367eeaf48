#include "slim/train.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "slim/errors.hpp"
#include "slim/optim.hpp"

namespace slim {

using nlohmann::json;

void RunConfig::validate() const {
    EncoderConfig e = encoder;
    if (e.vocab_size == 0) e.vocab_size = 4; // filled from the training data later
    e.validate();
    weights.validate();
    if (train_path.empty()) throw ConfigError("run config: train path is required");
    if (valid_path.empty()) throw ConfigError("run config: valid path is required");
    if (learning_rate <= 0.0) throw ConfigError("run config: learning rate must be positive");
    if (dropout < 0.0 || dropout >= 1.0)
        throw ConfigError("run config: dropout must lie in [0, 1)");
    if (batch_size == 0) throw ConfigError("run config: batch size must be positive");
    if (max_epochs == 0) throw ConfigError("run config: max epochs must be positive");
    if (patience == 0 || patience > max_epochs)
        throw ConfigError("run config: patience must lie in [1, max_epochs]");
    if (threshold <= 0.0 || threshold >= 1.0)
        throw ConfigError("run config: threshold must lie in (0, 1)");
    if (max_slots == 0) throw ConfigError("run config: max_slots must be positive");
    if (clip_norm <= 0.0) throw ConfigError("run config: clip norm must be positive");
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("run config: cannot read " + path);
    json obj;
    try {
        obj = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("run config: malformed JSON in " + path + ": " + e.what());
    }
    RunConfig cfg;
    try {
        cfg.train_path = obj.value("train", cfg.train_path);
        cfg.valid_path = obj.value("valid", cfg.valid_path);
        cfg.test_path = obj.value("test", cfg.test_path);
        cfg.out_dir = obj.value("out", cfg.out_dir);
        if (obj.contains("encoder")) {
            const json& e = obj.at("encoder");
            cfg.encoder.num_layers = e.value("num_layers", cfg.encoder.num_layers);
            cfg.encoder.hidden_dim = e.value("hidden_dim", cfg.encoder.hidden_dim);
            cfg.encoder.num_heads = e.value("num_heads", cfg.encoder.num_heads);
            cfg.encoder.ffn_dim = e.value("ffn_dim", cfg.encoder.ffn_dim);
            cfg.encoder.max_seq_len = e.value("max_seq_len", cfg.encoder.max_seq_len);
            cfg.encoder.dropout_rate = e.value("dropout", cfg.encoder.dropout_rate);
        }
        if (obj.contains("weights")) {
            const json& w = obj.at("weights");
            cfg.weights.w_id = w.value("id", cfg.weights.w_id);
            cfg.weights.w_sf = w.value("sf", cfg.weights.w_sf);
            cfg.weights.w_si = w.value("si", cfg.weights.w_si);
        }
        cfg.learning_rate = obj.value("learning_rate", cfg.learning_rate);
        cfg.dropout = obj.value("dropout", cfg.dropout);
        cfg.batch_size = obj.value("batch_size", cfg.batch_size);
        cfg.max_epochs = obj.value("max_epochs", cfg.max_epochs);
        cfg.patience = obj.value("patience", cfg.patience);
        cfg.threshold = obj.value("threshold", cfg.threshold);
        cfg.max_slots = obj.value("max_slots", cfg.max_slots);
        cfg.clip_norm = obj.value("clip_norm", cfg.clip_norm);
        if (obj.contains("variant")) cfg.variant = parse_variant(obj.at("variant"));
        if (obj.contains("si_form")) cfg.si_form = parse_si_form(obj.at("si_form"));
        cfg.seed = obj.value("seed", cfg.seed);
    } catch (const json::exception& e) {
        throw ConfigError("run config: bad field in " + path + ": " + e.what());
    }
    return cfg;
}

std::string RunConfig::to_json() const {
    json obj = {
        {"train", train_path},
        {"valid", valid_path},
        {"test", test_path},
        {"out", out_dir},
        {"encoder",
         {{"num_layers", encoder.num_layers},
          {"hidden_dim", encoder.hidden_dim},
          {"num_heads", encoder.num_heads},
          {"ffn_dim", encoder.ffn_dim},
          {"max_seq_len", encoder.max_seq_len},
          {"dropout", encoder.dropout_rate}}},
        {"weights", {{"id", weights.w_id}, {"sf", weights.w_sf}, {"si", weights.w_si}}},
        {"learning_rate", learning_rate},
        {"dropout", dropout},
        {"batch_size", batch_size},
        {"max_epochs", max_epochs},
        {"patience", patience},
        {"threshold", threshold},
        {"max_slots", max_slots},
        {"clip_norm", clip_norm},
        {"variant", variant_name(variant)},
        {"si_form", si_form_name(si_form)},
        {"seed", seed},
    };
    return obj.dump(2);
}

TrainResult train_model(const RunConfig& cfg, const std::vector<UtteranceRecord>& train,
                        const std::vector<UtteranceRecord>& valid, const EpochCallback& on_epoch) {
    cfg.validate();
    if (train.empty()) throw ValidationError("train: empty training set");

    std::vector<std::vector<std::string>> token_lists;
    for (const auto& r : train) token_lists.push_back(r.tokens);
    Vocabulary vocab = Vocabulary::build(token_lists);

    std::vector<UtteranceRecord> labeled = train;
    labeled.insert(labeled.end(), valid.begin(), valid.end());
    LabelMap intents = LabelMap::intents_of(labeled);
    LabelMap tags = LabelMap::tags_of(labeled);

    Rng init_rng(fork_seed(cfg.seed, 0));
    Rng dropout_rng(fork_seed(cfg.seed, 1));
    Rng shuffle_rng(fork_seed(cfg.seed, 2));

    SlimModel model = SlimModel::init(cfg.encoder, std::move(vocab), std::move(intents),
                                      std::move(tags), init_rng);
    std::vector<Tensor> params = model.parameters();
    AdamOptimizer adam(params, cfg.learning_rate);

    TrainResult result;
    result.best = quantized_copy(model);
    result.best_sefr = -1.0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<Batch> batches =
            make_batches(train, cfg.batch_size, model.vocab, model.intents, model.tags,
                         cfg.max_slots, cfg.encoder.max_seq_len, &shuffle_rng);

        if (epoch == 1) {
            std::size_t dropped = 0;
            for (const auto& batch : batches)
                for (const auto& item : batch.items) dropped += item.slot_overflow;
            if (dropped > 0)
                std::cerr << "warning: " << dropped << " slot(s) beyond max_slots="
                          << cfg.max_slots << " dropped from the slot-intent loss\n";
        }

        real sum_total = 0.0, sum_id = 0.0, sum_sf = 0.0, sum_si = 0.0;
        std::size_t seen = 0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            Tape tape;
            LossBreakdown bd = forward_loss(tape, model, batches[b], cfg.weights, cfg.variant,
                                            cfg.si_form, cfg.dropout, dropout_rng, true);
            real total = bd.total.item();
            if (!std::isfinite(total))
                throw NumericalError("train: non-finite loss at epoch " +
                                     std::to_string(epoch) + ", batch " + std::to_string(b + 1));
            tape.backward(bd.total);
            clip_global_norm(params, cfg.clip_norm);
            adam.step();

            std::size_t n = batches[b].items.size();
            sum_total += total * static_cast<real>(n);
            sum_id += bd.id_loss.item() * static_cast<real>(n);
            sum_sf += bd.sf_loss.item() * static_cast<real>(n);
            sum_si += bd.si_loss.item() * static_cast<real>(n);
            seen += n;
        }

        SlimModel snapshot = quantized_copy(model);
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_total = sum_total / static_cast<real>(seen);
        stats.train_id = sum_id / static_cast<real>(seen);
        stats.train_sf = sum_sf / static_cast<real>(seen);
        stats.train_si = sum_si / static_cast<real>(seen);
        stats.valid = evaluate(snapshot, valid, cfg.threshold, cfg.max_slots, cfg.variant);

        if (stats.valid.sefr_acc > result.best_sefr) {
            result.best_sefr = stats.valid.sefr_acc;
            result.best_epoch = epoch;
            result.best = std::move(snapshot);
            stats.is_best = true;
        }
        result.curve.push_back(stats);
        result.epochs_run = epoch;
        if (on_epoch) on_epoch(stats);

        if (epoch - result.best_epoch >= cfg.patience) break;
    }
    return result;
}

} // namespace slim
