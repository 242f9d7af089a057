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

#include "nfpb/ml_estimator.hpp"
#include "nfpb/beamformer.hpp"
#include "nfpb/signature.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace nfpb
{
    namespace
    {
        const ArrayConfig kArray = ArrayConfig::half_wavelength(256, 30e9);
        const CpiClock kClock{0.01, 64};

        Eigen::VectorXcd probe_for(const CpiClock &clock, std::uint64_t seed = 3)
        {
            RandomStream rng = RandomStream::derive(seed, "probe");
            return make_probe(clock.snapshots, rng);
        }

        EchoFrame clean_frame(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &truth,
                              std::complex<double> beta = {0.6, -0.2})
        {
            EchoFrame f;
            f.probe = probe_for(clock);
            f.transmit_weights = focus_weights(cfg, truth.location());
            const auto states = constant_velocity_states(truth, clock);
            f.samples = noiseless_echo(cfg, clock, states, f.transmit_weights, f.probe, beta, 1.0);
            return f;
        }

        double correlation(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b)
        {
            return std::abs(a.dot(b)) / (a.norm() * b.norm());
        }
    } // namespace

    TEST(Signature, CollinearWithMatchedFrame)
    {
        const TargetState truth{1.3, 20.0, 3.0, 2.0};
        const EchoFrame f = clean_frame(kArray, kClock, truth);
        const auto u = signature(kArray, kClock, truth, f.transmit_weights, f.probe);
        EXPECT_GE(correlation(u, f.stacked()), 1.0 - 1e-6);
    }

    TEST(Signature, StaticColumnsRepeat)
    {
        const TargetState s{1.0, 9.0, 0.0, 0.0};
        const auto p = probe_for(kClock);
        const auto u = signature(kArray, kClock, s, focus_weights(kArray, s.location()), p);
        const auto first = u.head(256) / p[0];
        for (int m = 1; m < 64; ++m)
            EXPECT_LT((u.segment(m * 256, 256) / p[m] - first).norm(), 1e-12 * first.norm());
    }

    TEST(Signature, NormMatchesTransmitGain)
    {
        const TargetState s{1.2, 15.0, -2.0, 4.0};
        const auto w = focus_weights(kArray, {1.21, 15.5});
        const auto u = signature(kArray, kClock, s, w, probe_for(kClock));
        double expected = 0.0;
        for (const auto &st : constant_velocity_states(s, kClock))
        {
            const auto a = nearfield_steering(kArray, st.location());
            expected += std::norm((a.array() * w.array()).sum()) * 256.0;
        }
        EXPECT_NEAR(u.squaredNorm() / expected, 1.0, 1e-12);
    }

    TEST(Signature, ReferenceRangeOnlyRotates)
    {
        const TargetState s{1.2, 15.0, -2.0, 4.0};
        const auto w = focus_weights(kArray, s.location());
        const auto p = probe_for(kClock);
        const auto u0 = signature(kArray, kClock, s, w, p);
        const auto u1 = signature(kArray, kClock, s, w, p, 15.0);
        const std::complex<double> rot = std::polar(1.0, 2.0 * kArray.wavenumber() * 15.0);
        EXPECT_LT((u1 - rot * u0).norm(), 1e-9 * u0.norm());
    }

    TEST(Objective, CorrelatorMatchesExactSignature)
    {
        const TargetState truth{1.3, 20.0, 3.0, 2.0};
        const EchoFrame f = clean_frame(kArray, kClock, truth);
        const SignatureCorrelator corr(kArray, kClock, f);
        for (const TargetState &eta : {truth, TargetState{1.301, 19.0, 2.0, 5.0}, TargetState{1.25, 4.0, -8.0, 9.0},
                                       TargetState{0.4, 60.0, 1.0, -7.0}})
        {
            const auto u = signature(kArray, kClock, eta, f.transmit_weights, f.probe);
            const std::complex<double> c = u.dot(f.stacked());
            const double exact = std::norm(c) / u.squaredNorm();
            const auto ev = corr.evaluate(eta);
            ASSERT_TRUE(ev.valid);
            EXPECT_NEAR(ev.energy / u.squaredNorm(), 1.0, 1e-6);
            EXPECT_NEAR(ev.objective, exact, 1e-7 * f.stacked().squaredNorm());
        }
    }

    TEST(Objective, EqualsFrameEnergyAtTruth)
    {
        const TargetState truth{1.3, 20.0, 3.0, 2.0};
        const EchoFrame f = clean_frame(kArray, kClock, truth);
        EXPECT_NEAR(concentrated_objective(kArray, kClock, f, truth) / f.stacked().squaredNorm(), 1.0, 1e-6);
    }

    TEST(Objective, OrthogonalFrameGivesZero)
    {
        const TargetState eta{1.3, 20.0, 3.0, 2.0};
        EchoFrame f = clean_frame(kArray, kClock, {1.2, 14.0, 0.0, 0.0});
        const auto u = signature(kArray, kClock, eta, f.transmit_weights, f.probe);
        Eigen::VectorXcd y = f.stacked();
        y -= (u.dot(y) / u.squaredNorm()) * u;
        f.samples = Eigen::Map<Eigen::MatrixXcd>(y.data(), 256, 64);
        EXPECT_NEAR(concentrated_objective(kArray, kClock, f, eta), 0.0, 1e-9 * y.squaredNorm());
    }

    TEST(Objective, ScalesWithFrameAndIgnoresGlobalPhase)
    {
        const TargetState truth{1.3, 20.0, 3.0, 2.0};
        EchoFrame f = clean_frame(kArray, kClock, truth);
        RandomStream rng(4);
        f = add_noise(f, 1e-3, rng);
        const TargetState eta{1.302, 20.5, 2.5, 1.0};
        const double base = concentrated_objective(kArray, kClock, f, eta);
        EchoFrame g = f;
        g.samples *= std::polar(1.0, 2.1);
        EXPECT_NEAR(concentrated_objective(kArray, kClock, g, eta), base, 1e-10 * base);
        g.samples *= 3.0;
        EXPECT_NEAR(concentrated_objective(kArray, kClock, g, eta), 9.0 * base, 1e-9 * base);
    }

    TEST(Objective, InvalidStateIsRejected)
    {
        const EchoFrame f = clean_frame(kArray, kClock, {1.3, 20.0, 3.0, 2.0});
        EXPECT_LT(concentrated_objective(kArray, kClock, f, {1.3, -1.0, 0.0, 0.0}), 0.0);
        EchoFrame nulled = f;
        nulled.transmit_weights.setZero();
        EXPECT_LT(concentrated_objective(kArray, kClock, nulled, {1.3, 20.0, 3.0, 2.0}), 0.0);
    }

    TEST(Identifiability, TransverseVelocitySignVisibleOnlyInTheNearField)
    {
        const auto p = probe_for(kClock);
        auto corr_at = [&](double r) {
            const auto w = focus_weights(kArray, {kPi / 2, r});
            const auto u1 = signature(kArray, kClock, {kPi / 2, r, 3.0, 2.0}, w, p);
            const auto u2 = signature(kArray, kClock, {kPi / 2, r, 3.0, -2.0}, w, p);
            return correlation(u1, u2);
        };
        EXPECT_LT(corr_at(20.0), 0.99);
        EXPECT_GT(corr_at(10.0 * rayleigh_distance(kArray)), 0.999);
    }

    TEST(GridThenRefine, NoiselessFrameRecoversTruth)
    {
        const TargetState truth{1.3, 20.0, 3.0, 2.0};
        const EchoFrame f = clean_frame(kArray, kClock, truth);
        SearchWindow w;
        w.center = {truth.theta + 0.0011, truth.r - 0.23, truth.v_r + 0.3, truth.v_theta - 0.7};
        w.half_widths = {0.0035, 0.5, 1.0, 2.0};
        w.counts = {9, 9, 9, 7};
        const EstimateReport rep = grid_then_refine(kArray, kClock, f, w);
        EXPECT_TRUE(rep.converged);
        EXPECT_FALSE(rep.clamped);
        EXPECT_LT(std::abs(rep.estimate.theta - truth.theta), 1e-5);
        EXPECT_LT(std::abs(rep.estimate.r - truth.r), 1e-3);
        EXPECT_LT(std::abs(rep.estimate.v_r - truth.v_r), 1e-3);
        EXPECT_LT(std::abs(rep.estimate.v_theta - truth.v_theta), 5e-2);
        EXPECT_NEAR(std::abs(rep.beta_hat - std::complex<double>(0.6, -0.2)), 0.0, 1e-3);
        EXPECT_LE(rep.iterations, 1000);
    }

    TEST(GridThenRefine, DegenerateWindowReturnsCentre)
    {
        const TargetState truth{1.3, 20.0, 3.0, 2.0};
        const EchoFrame f = clean_frame(kArray, kClock, truth);
        SearchWindow w;
        w.center = truth;
        const EstimateReport rep = grid_then_refine(kArray, kClock, f, w);
        EXPECT_EQ(rep.estimate.theta, truth.theta);
        EXPECT_EQ(rep.estimate.r, truth.r);
        EXPECT_EQ(rep.estimate.v_r, truth.v_r);
        EXPECT_EQ(rep.estimate.v_theta, truth.v_theta);
        EXPECT_EQ(rep.evaluations, 1u);
        EXPECT_TRUE(rep.converged);
    }

    TEST(GridThenRefine, PureNoiseIsFlaggedLowConfidence)
    {
        const ArrayConfig cfg = ArrayConfig::half_wavelength(64, 30e9);
        const CpiClock clock{0.01, 32};
        int flagged = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed)
        {
            EchoFrame f;
            f.probe = probe_for(clock, seed);
            f.transmit_weights = focus_weights(cfg, {1.4, 5.0});
            f.samples = Eigen::MatrixXcd::Zero(64, 32);
            RandomStream rng = RandomStream::derive(seed, "noise");
            f = add_noise(f, 1e-6, rng);
            SearchWindow w;
            w.center = {1.4, 5.0, 0.0, 0.0};
            w.half_widths = {0.02, 1.0, 2.0, 2.0};
            w.counts = {7, 7, 7, 7};
            const EstimateReport rep = grid_then_refine(cfg, clock, f, w);
            EXPECT_TRUE(std::isfinite(rep.objective));
            EXPECT_GE(rep.objective, 0.0);
            flagged += rep.low_confidence;
        }
        EXPECT_GE(flagged, 9);
    }

    TEST(GridThenRefine, StrongEchoIsNotFlagged)
    {
        const TargetState truth{1.3, 20.0, 3.0, 2.0};
        EchoFrame f = clean_frame(kArray, kClock, truth, 1e-3);
        RandomStream rng(9);
        f = add_noise(f, 1e-4, rng);
        SearchWindow w;
        w.center = truth;
        w.half_widths = {0.0035, 0.5, 1.0, 2.0};
        const EstimateReport rep = grid_then_refine(kArray, kClock, f, w);
        EXPECT_FALSE(rep.low_confidence);
        EXPECT_TRUE(rep.covariance.allFinite());
        EXPECT_GT(rep.rcrb.minCoeff(), 0.0);
    }

    TEST(GridThenRefine, RejectsWindowsWithoutValidPoints)
    {
        const EchoFrame f = clean_frame(kArray, kClock, {1.3, 20.0, 3.0, 2.0});
        SearchWindow w;
        w.center = {1.3, 20.0, 0.0, 0.0};
        w.counts = {4, 9, 7, 7};
        EXPECT_THROW(grid_then_refine(kArray, kClock, f, w), std::invalid_argument);
        EchoFrame nulled = f;
        nulled.transmit_weights.setZero();
        w.counts = {9, 9, 7, 7};
        EXPECT_THROW(grid_then_refine(kArray, kClock, nulled, w), std::domain_error);
    }

    TEST(GridThenRefine, MedianErrorFallsWithNoise)
    {
        const ArrayConfig cfg = ArrayConfig::half_wavelength(64, 30e9);
        const CpiClock clock{0.01, 32};
        const TargetState truth{1.2, 3.0, 2.0, 1.0};
        const EchoFrame clean = clean_frame(cfg, clock, truth, 1.0);
        const double signal = clean.stacked().squaredNorm() / clean.stacked().size();
        double previous = 1e9;
        for (double snr_db : {-10.0, 0.0, 10.0, 20.0})
        {
            std::vector<double> errors;
            for (std::uint64_t trial = 0; trial < 50; ++trial)
            {
                RandomStream rng = RandomStream::derive(11, "noise", trial);
                const EchoFrame f = add_noise(clean, signal * std::pow(10.0, -snr_db / 10.0), rng);
                SearchWindow w;
                w.center = truth;
                w.half_widths = {0.02, 0.3, 1.0, 4.0};
                w.counts = {5, 5, 5, 5};
                EstimatorOptions opts;
                opts.compute_covariance = false;
                const EstimateReport rep = grid_then_refine(cfg, clock, f, w, opts);
                errors.push_back(std::abs(rep.estimate.theta - truth.theta));
            }
            std::nth_element(errors.begin(), errors.begin() + 25, errors.end());
            EXPECT_LE(errors[25], previous) << snr_db;
            previous = errors[25];
        }
    }

    TEST(Window, PolicyUsesFloorsBoundsAndDensity)
    {
        const TargetState c{kPi / 2, 20.0, 1.0, 1.0};
        const Eigen::Vector4d tiny = Eigen::Vector4d::Constant(1e-9);
        const SearchWindow w = window_around(kArray, kClock, c, tiny, Eigen::Matrix4d::Zero());
        const WindowPolicy p;
        for (int i = 0; i < 4; ++i)
            EXPECT_DOUBLE_EQ(w.half_widths[i], p.floor[i]);
        EXPECT_NO_THROW(w.validate());
        const Eigen::Vector4d cells = resolution_cells(kArray, kClock, c);
        for (int i = 0; i < 4; ++i)
        {
            EXPECT_EQ(w.counts[i] % 2, 1);
            EXPECT_GE(w.counts[i], p.counts[i]);
            EXPECT_LE(2.0 * w.half_widths[i] / (w.counts[i] - 1), p.max_spacing * cells[i] + 1e-15);
        }
        Eigen::Matrix4d prior = Eigen::Matrix4d::Zero();
        prior(1, 1) = 4.0;
        const SearchWindow wide = window_around(kArray, kClock, c, tiny, prior);
        EXPECT_DOUBLE_EQ(wide.half_widths[1], 6.0);
    }

    TEST(InitialAccess, GlobalSearchFindsTarget)
    {
        const ArrayConfig cfg = ArrayConfig::half_wavelength(64, 30e9);
        const CpiClock clock{0.01, 32};
        const TargetState truth{1.1, 4.0, 2.3, -1.6};
        EchoFrame f;
        f.probe = probe_for(clock);
        f.transmit_weights = Eigen::VectorXcd::Zero(64);
        f.transmit_weights[32] = 1.0; // single-element illumination
        f.samples = noiseless_echo(cfg, clock, constant_velocity_states(truth, clock), f.transmit_weights, f.probe,
                                   1.0, 1.0);
        RandomStream rng(2);
        f = add_noise(f, 1e-3, rng);
        const EstimateReport rep = initial_access_search(cfg, clock, f);
        EXPECT_NEAR(rep.estimate.theta, truth.theta, 2e-3);
        EXPECT_NEAR(rep.estimate.r, truth.r, 0.1);
        EXPECT_NEAR(rep.estimate.v_r, truth.v_r, 0.1);
        EXPECT_NEAR(rep.estimate.v_theta, truth.v_theta, 1.0);
    }

} // namespace nfpb
