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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace nfpb
{
    namespace
    {
        const ArrayConfig kCase = ArrayConfig::half_wavelength(256, 30e9);
        const CpiClock kClock{0.01, 64};
        const LinkBudget kBudget = LinkBudget::from_dbm(30.0, -50.0);
    } // namespace

    TEST(Beamformer, FocusWeightsAreMatched)
    {
        const PolarLocation loc{1.3, 20.0};
        const auto w = focus_weights(kCase, loc);
        const auto a = nearfield_steering(kCase, loc);
        EXPECT_NEAR(w.norm(), 1.0, 1e-12);
        const std::complex<double> g = (a.array() * w.array()).sum();
        EXPECT_NEAR(g.real(), 16.0, 1e-10);
        EXPECT_NEAR(g.imag(), 0.0, 1e-10);
        EXPECT_NEAR(10.0 * std::log10(std::norm(g)), 24.08, 0.005);
    }

    TEST(Beamformer, FocusHasFiniteDepth)
    {
        const PolarLocation loc{kPi / 2, 20.0};
        const auto w = focus_weights(kCase, loc);
        const auto a = nearfield_steering(kCase, {kPi / 2, 40.0});
        EXPECT_LT(std::norm((a.array() * w.array()).sum()), 0.5 * 256);
    }

    TEST(Beamformer, RampsVanishWithoutMotionAndAtTheFirstSnapshot)
    {
        const auto still = doppler_ramps(kCase, kClock, {1.0, 15.0, 0.0, 0.0});
        EXPECT_EQ(still.cwiseAbs().maxCoeff(), 0.0);
        const auto moving = doppler_ramps(kCase, kClock, {1.0, 15.0, 2.0, -3.0});
        EXPECT_EQ(moving.col(0).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_GT(moving.col(63).cwiseAbs().maxCoeff(), 0.0);
    }

    TEST(Beamformer, RampsBecomeUniformInTheFarField)
    {
        const ArrayConfig cfg = ArrayConfig::half_wavelength(64, 30e9);
        const TargetState far{kPi / 2, 100.0 * rayleigh_distance(cfg), 3.0, 2.0};
        const auto ramps = doppler_ramps(cfg, kClock, far);
        const double ts = kClock.snapshot_period();
        for (int m = 0; m < kClock.snapshots; ++m)
        {
            const double uniform = 2.0 * cfg.wavenumber() * far.v_r * m * ts;
            EXPECT_LT((ramps.col(m).array() - uniform).abs().maxCoeff(), 1e-3);
        }
    }

    TEST(Beamformer, RangeRatesMatchDistanceDerivative)
    {
        const TargetState s{1.1, 6.0, 1.5, -2.0};
        const auto rates = element_range_rates(kCase, s);
        const double h = 1e-6;
        for (int i : {0, 100, 255})
        {
            const TargetState a = propagate_constant_velocity(s, h);
            const TargetState b = propagate_constant_velocity(s, -h);
            const double n = kCase.element_index(i);
            const double fd = (element_target_distance(kCase, a.location(), n) -
                               element_target_distance(kCase, b.location(), n)) / (2 * h);
            EXPECT_NEAR(rates[i], fd, 1e-6);
        }
    }

    TEST(Beamformer, TruthPlanOnStaticTargetIsLossless)
    {
        const TargetState s{1.4, 18.0, 0.0, 0.0};
        const std::vector<TargetState> states(kClock.snapshots, s);
        const auto m = comm_metrics(kCase, states, plan_beam(kCase, kClock, s), kBudget);
        for (int i = 0; i < kClock.snapshots; ++i)
            EXPECT_NEAR(m.gain[i], 256.0, 1e-9);
        EXPECT_NEAR(m.gain_loss_db, 0.0, 1e-9);
        EXPECT_NEAR(m.rate_mean, std::log2(1.0 + 1e8 * 256.0), 1e-9);
    }

    TEST(Beamformer, DopplerCompensationFlattensTheCpi)
    {
        Trajectory t{CircularArc{{0.0, 0.0}, 18.0, -1.0, 1.2, 0.15}, 2.0};
        const auto states = cpi_states(t, kClock, 10);
        const TargetState start = states.front();
        const auto on = comm_metrics(kCase, states, plan_beam(kCase, kClock, start, true), kBudget);
        const auto off = comm_metrics(kCase, states, plan_beam(kCase, kClock, start, false), kBudget);
        EXPECT_LT(on.ripple_db, 0.1);
        EXPECT_LT(on.ripple_db, off.ripple_db);
    }

    TEST(Beamformer, MetricInvariants)
    {
        const TargetState truth{1.2, 12.0, -2.0, 3.0};
        const auto states = constant_velocity_states(truth, kClock);
        const TargetState guess{1.2005, 12.3, -1.5, 2.0};
        const auto plan = plan_beam(kCase, kClock, guess);
        const auto m = comm_metrics(kCase, states, plan, kBudget);
        EXPECT_LE(m.gain.maxCoeff(), 256.0 + 1e-9);
        EXPECT_GE(m.gain_loss_db, -1e-9);
        LinkBudget louder = kBudget;
        louder.tx_power_w *= 2.0;
        const auto m2 = comm_metrics(kCase, states, plan, louder);
        EXPECT_GT(m2.rate_mean, m.rate_mean);
    }

} // namespace nfpb
