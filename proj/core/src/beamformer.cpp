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

#include <cmath>
#include <stdexcept>

namespace nfpb
{
    Eigen::VectorXcd BeamPlan::weights_at(int m) const
    {
        Eigen::VectorXcd w = base_weights;
        if (phase_ramps.size() == 0)
            return w;
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w[i] *= std::polar(1.0, phase_ramps(i, m));
        return w;
    }

    Eigen::VectorXcd focus_weights(const ArrayConfig &cfg, const PolarLocation &loc)
    {
        return nearfield_steering(cfg, loc).conjugate() / std::sqrt(static_cast<double>(cfg.num_elements));
    }

    Eigen::VectorXd element_range_rates(const ArrayConfig &cfg, const TargetState &state)
    {
        const CartesianState c = to_cartesian(state);
        Eigen::VectorXd rates(cfg.num_elements);
        for (int i = 0; i < cfg.num_elements; ++i)
        {
            const Eigen::Vector2d d = c.position - Eigen::Vector2d(cfg.element_x(i), 0.0);
            rates[i] = d.dot(c.velocity) / d.norm();
        }
        return rates;
    }

    Eigen::MatrixXd doppler_ramps(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &predicted)
    {
        cfg.validate();
        clock.validate();
        predicted.validate();
        const Eigen::VectorXd rates = element_range_rates(cfg, predicted);
        const double centre_rate = predicted.v_r;
        const double k = cfg.wavenumber();
        const double ts = clock.snapshot_period();
        Eigen::MatrixXd ramps(cfg.num_elements, clock.snapshots);
        for (int m = 0; m < clock.snapshots; ++m)
            for (int i = 0; i < cfg.num_elements; ++i)
                ramps(i, m) = k * (rates[i] + centre_rate) * (m * ts);
        return ramps;
    }

    BeamPlan plan_beam(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &predicted,
                       bool compensate_doppler)
    {
        BeamPlan plan;
        plan.predicted_state = predicted;
        plan.base_weights = focus_weights(cfg, predicted.location());
        plan.phase_ramps = compensate_doppler ? doppler_ramps(cfg, clock, predicted)
                                              : Eigen::MatrixXd::Zero(cfg.num_elements, clock.snapshots);
        return plan;
    }

    CommMetrics comm_metrics(const ArrayConfig &cfg, std::span<const TargetState> true_states,
                             const BeamPlan &plan, const LinkBudget &budget)
    {
        const auto M = static_cast<Eigen::Index>(true_states.size());
        if (M == 0)
            throw std::invalid_argument("comm_metrics: no snapshot states");
        if (plan.phase_ramps.size() != 0 && plan.phase_ramps.cols() < M)
            throw std::invalid_argument("comm_metrics: plan has fewer ramp columns than snapshots");

        const double snr_scale = budget.tx_power_w / budget.noise_power_w; // |beta_ch| = 1
        CommMetrics out;
        out.gain.resize(M);
        out.rate.resize(M);
        out.genie_gain.resize(M);
        out.genie_rate.resize(M);
        for (Eigen::Index m = 0; m < M; ++m)
        {
            const Eigen::VectorXcd a = nearfield_steering(cfg, true_states[m].location());
            const Eigen::VectorXcd w = plan.weights_at(static_cast<int>(m));
            const Eigen::VectorXcd genie = focus_weights(cfg, true_states[m].location());
            out.gain[m] = std::norm((a.array() * w.array()).sum());
            out.genie_gain[m] = std::norm((a.array() * genie.array()).sum());
            out.rate[m] = std::log2(1.0 + snr_scale * out.gain[m]);
            out.genie_rate[m] = std::log2(1.0 + snr_scale * out.genie_gain[m]);
        }
        out.gain_mean = out.gain.mean();
        out.genie_gain_mean = out.genie_gain.mean();
        out.rate_mean = out.rate.mean();
        out.genie_rate_mean = out.genie_rate.mean();
        out.gain_loss_db = 10.0 * std::log10(out.genie_gain_mean / out.gain_mean);
        out.ripple_db = 10.0 * std::log10(out.gain.maxCoeff() / out.gain.minCoeff());
        return out;
    }

} // namespace nfpb
