#include "motioncloud/eigenspace.hpp"
#include "motioncloud/flow.hpp"
#include "motioncloud/geometry.hpp"
#include "motioncloud/synth.hpp"
#include "motioncloud/templates.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace motioncloud;

namespace {

void BM_DenseFlow(benchmark::State& state) {
    SynthSpec spec;
    spec.frames = 2;
    spec.size = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0))};
    const FrameSequence seq = render_clip(ActionKind::run, 0, spec);
    for (auto _ : state) benchmark::DoNotOptimize(dense_flow(seq.frames[0], seq.frames[1]));
}
BENCHMARK(BM_DenseFlow)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_TrainKpca(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    TrainingSet t;
    t.samples = Eigen::MatrixXd::NullaryExpr(state.range(0), 1024, [&] { return u(rng); });
    for (Eigen::Index i = 0; i < t.samples.rows(); ++i) {
        t.labels.push_back("c" + std::to_string(i % 4));
        t.clip_ids.push_back(std::to_string(i));
    }
    for (auto _ : state) benchmark::DoNotOptimize(train_kpca(t, kDefaultDimensions, {}));
}
BENCHMARK(BM_TrainKpca)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_CloudSignature(benchmark::State& state) {
    Trajectory traj;
    const auto n = state.range(0);
    traj.points.resize(n, kDefaultDimensions);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = 12.0 * static_cast<double>(i) / static_cast<double>(n);
        for (Eigen::Index k = 0; k < kDefaultDimensions; ++k) traj.points(i, k) = std::sin(u * (k + 1) + k);
        traj.frame_index.push_back(static_cast<int>(i));
    }
    for (auto _ : state) benchmark::DoNotOptimize(cloud_signature(traj));
}
BENCHMARK(BM_CloudSignature)->Arg(64)->Arg(250);

}  // namespace

BENCHMARK_MAIN();
