// Serial vs OpenMP GEMM throughput, plus end-to-end model step timing.
#include <chrono>
#include <cstdio>
#include <vector>

#include "slim/kernels.hpp"
#include "slim/model.hpp"
#include "slim/rng.hpp"

using namespace slim;
using namespace slim::kernels;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void bench_gemm(std::size_t n, int reps) {
    Rng rng(1);
    std::vector<double> a(n * n), b(n * n), c(n * n, 0.0);
    for (auto& v : a) v = rng.normal(0.0, 1.0);
    for (auto& v : b) v = rng.normal(0.0, 1.0);

    auto run = [&](bool parallel) {
        set_parallel(parallel);
        // warm-up
        gemm(Transpose::no, Transpose::no, n, n, n, 1.0, a.data(), n, b.data(), n, 0.0,
             c.data(), n);
        auto t0 = Clock::now();
        for (int r = 0; r < reps; ++r)
            gemm(Transpose::no, Transpose::no, n, n, n, 1.0, a.data(), n, b.data(), n, 0.0,
                 c.data(), n);
        double dt = seconds_since(t0) / reps;
        return 2.0 * static_cast<double>(n) * n * n / dt * 1e-9;
    };

    double serial = run(false);
    double parallel = run(true);
    set_parallel(true);
    std::printf("gemm %4zu x %-4zu   serial %7.2f Gflop/s   parallel %7.2f Gflop/s   "
                "speedup %.2fx\n",
                n, n, serial, parallel, parallel / serial);
}

void bench_model() {
    auto records = generate(GeneratorConfig::demo(), 64, 7);
    std::vector<std::vector<std::string>> token_lists;
    for (const auto& r : records) token_lists.push_back(r.tokens);

    EncoderConfig cfg; // library defaults: 2 layers, d=64
    Rng rng(3);
    SlimModel model = SlimModel::init(cfg, Vocabulary::build(token_lists),
                                      LabelMap::intents_of(records), LabelMap::tags_of(records),
                                      rng);
    auto batches = make_batches(records, 32, model.vocab, model.intents, model.tags, 6,
                                cfg.max_seq_len, nullptr);

    Rng drop(5);
    auto t0 = Clock::now();
    int steps = 0;
    for (int rep = 0; rep < 3; ++rep) {
        for (const auto& batch : batches) {
            Tape tape;
            LossBreakdown bd = forward_loss(tape, model, batch, LossWeights{}, Variant::full,
                                            SiLossForm::direct, 0.2, drop, true);
            tape.backward(bd.total);
            for (Tensor& p : model.parameters()) p.zero_grad();
            ++steps;
        }
    }
    double dt = seconds_since(t0);
    std::printf("model fwd+bwd     %.1f ms / batch of 32  (%d batches, d=%zu, %zu layers)\n",
                dt / steps * 1e3, steps, cfg.hidden_dim, cfg.num_layers);

    auto t1 = Clock::now();
    EvalReport rep = evaluate(model, records, 0.5, 6);
    std::printf("inference         %.2f ms / utterance (%zu utterances)\n",
                seconds_since(t1) / static_cast<double>(rep.utterances) * 1e3, rep.utterances);
}

} // namespace

int main() {
    std::printf("threads: %d\n", max_threads());
    for (std::size_t n : {64, 128, 256, 512}) bench_gemm(n, n <= 128 ? 50 : 10);
    bench_model();
    return 0;
}
