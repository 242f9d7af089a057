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

#ifndef NFPB_BEAMFORMER_HPP
#define NFPB_BEAMFORMER_HPP

#include "nfpb/array_geometry.hpp"
#include "nfpb/echo.hpp"
#include "nfpb/kinematics.hpp"

#include <Eigen/Dense>

#include <span>

namespace nfpb
{
    /// Next-CPI transmit plan: a focused beam plus per-antenna phase ramps
    /// that cancel the predicted Doppler at the user.
    struct BeamPlan
    {
        Eigen::VectorXcd base_weights; // unit norm
        Eigen::MatrixXd phase_ramps;   // N x M, radians
        TargetState predicted_state;

        /// Weights applied during snapshot m.
        Eigen::VectorXcd weights_at(int m) const;
    };

    /// Conjugate-matched near-field beam, conj(a(theta, r)) / sqrt(N).
    Eigen::VectorXcd focus_weights(const ArrayConfig &cfg, const PolarLocation &loc);

    /// Range rate from the target to every element, using the Cartesian
    /// velocity implied by the state.
    Eigen::VectorXd element_range_rates(const ArrayConfig &cfg, const TargetState &state);

    /// ramp(n, m) = k (rdot_n + rdot_0) m T_s, rdot_0 being the range rate to
    /// the array centre.
    Eigen::MatrixXd doppler_ramps(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &predicted);

    BeamPlan plan_beam(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &predicted,
                       bool compensate_doppler = true);

    struct CommMetrics
    {
        Eigen::VectorXd gain;       // |a_true(m)^T w(m)|^2 per snapshot
        Eigen::VectorXd rate;       // bit/s/Hz per snapshot
        Eigen::VectorXd genie_gain; // same with weights rebuilt from the truth
        Eigen::VectorXd genie_rate;
        double gain_mean = 0.0;
        double genie_gain_mean = 0.0;
        double rate_mean = 0.0;
        double genie_rate_mean = 0.0;
        double gain_loss_db = 0.0; // 10 log10(genie mean / achieved mean)
        double ripple_db = 0.0;    // 10 log10(max gain / min gain) within the CPI
    };

    /// Downlink metrics for one CPI. The channel is the one-way near-field
    /// steering vector with unit gain.
    CommMetrics comm_metrics(const ArrayConfig &cfg, std::span<const TargetState> true_states,
                             const BeamPlan &plan, const LinkBudget &budget);

} // namespace nfpb

#endif
