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

#ifndef NFPB_ML_ESTIMATOR_HPP
#define NFPB_ML_ESTIMATOR_HPP

#include "nfpb/array_geometry.hpp"
#include "nfpb/echo.hpp"
#include "nfpb/kinematics.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>

namespace nfpb
{
    /// Box around a centre state, sampled on a regular grid.
    struct SearchWindow
    {
        TargetState center;
        Eigen::Vector4d half_widths = Eigen::Vector4d::Zero(); // rad, m, m/s, m/s
        std::array<int, 4> counts{9, 9, 7, 7};

        /// Half-widths must be >= 0 and counts odd and >= 3. A zero half-width
        /// pins that parameter to the centre.
        void validate() const; // throws std::invalid_argument
        std::size_t grid_size() const;
        TargetState point(const std::array<int, 4> &idx) const;
    };

    struct EstimatorOptions
    {
        int max_iterations = 500;
        double tolerance = 1e-8; // relative spread of the simplex objective values
        int restarts = 2;        // simplex restarts from the converged point
        double tx_power_w = 1.0; // divides the fitted amplitude into beta
        bool compute_covariance = true;
        double low_confidence_margin = 6.0; // threshold is sigma^2 (ln G + margin)
    };

    struct EstimateReport
    {
        TargetState estimate;
        std::complex<double> beta_hat{0.0, 0.0};
        double objective = 0.0;
        Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero(); // CRB at the estimate
        Eigen::Vector4d rcrb = Eigen::Vector4d::Zero();
        bool converged = false;
        int iterations = 0;
        bool low_confidence = false;
        bool clamped = false;
        std::size_t evaluations = 0;
    };

    /// Full grid search of the concentrated likelihood, then simplex refinement
    /// inside the window. Throws std::domain_error if no grid point is valid.
    EstimateReport grid_then_refine(const ArrayConfig &cfg, const CpiClock &clock, const EchoFrame &frame,
                                    const SearchWindow &window, const EstimatorOptions &opts = {});

    /// How the tracker sizes its search window.
    struct WindowPolicy
    {
        Eigen::Vector4d floor{0.2 * kPi / 180.0, 0.5, 1.0, 1.0};
        double sigmas = 3.0;                   // multiples of the predicted RCRB and prior std
        std::array<int, 4> counts{5, 5, 5, 5}; // minimum, raised to meet max_spacing
        double max_spacing = 0.5;              // grid spacing as a fraction of the parameter resolution
        int max_count = 41;
    };

    /// Nominal resolution cells at a state: angle lambda / (N d sin theta),
    /// depth 4 lambda r^2 / (D^2 sin^2 theta), radial velocity lambda / (2 T),
    /// transverse velocity lambda r / (D sin theta T).
    Eigen::Vector4d resolution_cells(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &at);

    SearchWindow window_around(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &center,
                               const Eigen::Vector4d &rcrb, const Eigen::Matrix4d &prior_covariance,
                               const WindowPolicy &policy = {});

    /// Coarse global search for initial access.
    struct GlobalSearch
    {
        double theta_step = 1.0 * kPi / 180.0; // refined to half a resolution cell when finer
        int range_points = 64;                 // uniform in 1/r
        double r_min = 1.0;
        double r_max_over_rayleigh = 1.5;
        double v_max = 10.0;
        double v_step = 1.0;
    };

    /// Stage 1 maximises the noncoherent spatial match sum_m |a(theta, r)^H y_m|^2
    /// over the angle-distance grid, stage 2 scans the velocity grid at the
    /// best location with the full signature, stage 3 refines in a window of
    /// one grid step.
    EstimateReport initial_access_search(const ArrayConfig &cfg, const CpiClock &clock, const EchoFrame &frame,
                                         const GlobalSearch &search = {}, const EstimatorOptions &opts = {},
                                         const WindowPolicy &policy = {});

} // namespace nfpb

#endif
