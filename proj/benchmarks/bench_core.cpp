// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "nfpb/beamformer.hpp"
#include "nfpb/echo.hpp"
#include "nfpb/fisher.hpp"
#include "nfpb/ml_estimator.hpp"
#include "nfpb/signature.hpp"

#include <benchmark/benchmark.h>

namespace
{
    using namespace nfpb;

    struct Scene
    {
        ArrayConfig cfg = ArrayConfig::half_wavelength(256, 30e9);
        CpiClock clock{0.01, 64};
        TargetState truth{1.2, 18.0, 2.0, -1.5};
        Eigen::VectorXcd weights;
        Eigen::VectorXcd probe;
        EchoFrame frame;

        Scene()
        {
            weights = focus_weights(cfg, truth.location());
            RandomStream rng(7);
            probe = make_probe(clock.snapshots, rng);
            const auto states = constant_velocity_states(truth, clock);
            frame = synthesize_frame(cfg, clock, states, weights, probe,
                                     LinkBudget::from_dbm(30.0, -50.0, PathLossMode::RadarEquation), &rng);
        }
    };

    const Scene &scene()
    {
        static const Scene s;
        return s;
    }

    void BM_Signature(benchmark::State &state)
    {
        const Scene &s = scene();
        for (auto _ : state)
            benchmark::DoNotOptimize(signature(s.cfg, s.clock, s.truth, s.weights, s.probe));
    }
    BENCHMARK(BM_Signature)->Unit(benchmark::kMicrosecond);

    void BM_CorrelatorEvaluate(benchmark::State &state)
    {
        const Scene &s = scene();
        const SignatureCorrelator corr(s.cfg, s.clock, s.frame);
        TargetState eta = s.truth;
        for (auto _ : state)
        {
            eta.r += 1e-9;
            benchmark::DoNotOptimize(corr.evaluate(eta));
        }
    }
    BENCHMARK(BM_CorrelatorEvaluate)->Unit(benchmark::kMicrosecond);

    void BM_CrbReport(benchmark::State &state)
    {
        const Scene &s = scene();
        FisherInputs in;
        in.array = s.cfg;
        in.clock = s.clock;
        in.eta = s.truth;
        in.weights = s.weights;
        in.probe = s.probe;
        in.noise_power = 1e-8;
        for (auto _ : state)
            benchmark::DoNotOptimize(crb_report(in));
    }
    BENCHMARK(BM_CrbReport)->Unit(benchmark::kMillisecond);

    void BM_GridThenRefine(benchmark::State &state)
    {
        const Scene &s = scene();
        const Eigen::Matrix4d prior = Eigen::Vector4d(1e-5, 0.04, 0.04, 0.25).asDiagonal();
        const SearchWindow w = window_around(s.cfg, s.clock, s.truth, Eigen::Vector4d::Zero(), prior);
        EstimatorOptions opts;
        opts.compute_covariance = false;
        for (auto _ : state)
            benchmark::DoNotOptimize(grid_then_refine(s.cfg, s.clock, s.frame, w, opts));
        state.counters["grid"] = static_cast<double>(w.grid_size());
    }
    BENCHMARK(BM_GridThenRefine)->Unit(benchmark::kMillisecond);

    void BM_DopplerRamps(benchmark::State &state)
    {
        const Scene &s = scene();
        for (auto _ : state)
            benchmark::DoNotOptimize(doppler_ramps(s.cfg, s.clock, s.truth));
    }
    BENCHMARK(BM_DopplerRamps)->Unit(benchmark::kMicrosecond);
} // namespace

BENCHMARK_MAIN();
