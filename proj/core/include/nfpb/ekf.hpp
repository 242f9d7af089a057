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

#ifndef NFPB_EKF_HPP
#define NFPB_EKF_HPP

#include "nfpb/array_geometry.hpp"
#include "nfpb/echo.hpp"
#include "nfpb/kinematics.hpp"
#include "nfpb/ml_estimator.hpp"

#include <Eigen/Dense>

#include <complex>

namespace nfpb
{
    enum class MeasurementNoise
    {
        CrbPlugIn, // CRB at the predicted state with the fitted amplitude
        Fixed,
    };

    struct NoiseModel
    {
        double q_a = 5.0; // unmodelled acceleration, m/s^2
        MeasurementNoise r_mode = MeasurementNoise::CrbPlugIn;
        Eigen::Matrix4d fixed_r = Eigen::Matrix4d::Identity();
        AngleUpdate angle_update = AngleUpdate::Dimensional;
    };

    /// White-acceleration process noise over dt in polar coordinates; the
    /// transverse block is mapped to the angle through 1 / r.
    Eigen::Matrix4d process_noise(const TargetState &state, double dt, double q_a);

    /// Jacobian of kinematic_step with respect to (theta, r, v_r, v_theta).
    Eigen::Matrix4d kinematic_jacobian(const TargetState &state, double dt, AngleUpdate mode = AngleUpdate::Dimensional);

    enum class TrackStatus
    {
        Tracking,
        Coasting,
        Lost,
    };

    struct TrackState
    {
        Eigen::Vector4d mean = Eigen::Vector4d::Zero();
        Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
        Eigen::Vector4d predicted_mean = Eigen::Vector4d::Zero();
        Eigen::Matrix4d predicted_covariance = Eigen::Matrix4d::Identity();
        int cpi_index = 0;
        int consecutive_coasts = 0;
        TrackStatus status = TrackStatus::Tracking;
        bool prediction_invalid = false;
        std::complex<double> last_beta{0.0, 0.0};
        Eigen::Vector4d last_rcrb = Eigen::Vector4d::Zero();

        /// Track whose current prior (and posterior) is the given belief.
        static TrackState initialize(const TargetState &mean, const Eigen::Matrix4d &covariance);
        TargetState posterior_state() const { return TargetState::from_vector(mean); }
        TargetState predicted_state() const { return TargetState::from_vector(predicted_mean); }
    };

    /// Symmetrise and floor the eigenvalues at 1e-12.
    Eigen::Matrix4d condition_covariance(const Eigen::Matrix4d &p);

    /// Propagates the posterior one interval and stores the result in the
    /// predicted fields. An invalid propagated mean keeps the previous mean,
    /// still inflates the covariance, and flags the track.
    TrackState predict(const TrackState &track, double dt, const NoiseModel &noise);
    TrackState predict(const TrackState &track, double dt, const Eigen::Matrix4d &q,
                       AngleUpdate mode = AngleUpdate::Dimensional);

    struct UpdateResult
    {
        TrackState track;
        bool gated_out = false;
        double mahalanobis2 = 0.0;
    };

    inline constexpr double kChiSquare4Gate = 18.4668; // 99.9% point, 4 degrees of freedom

    /// Linear update of the predicted belief with a direct state measurement.
    /// Low-confidence estimates and measurements outside the gate are
    /// discarded (coast). Throws std::invalid_argument if R is not PSD.
    UpdateResult update(const TrackState &track, const EstimateReport &z, const Eigen::Matrix4d &r,
                        double gate = kChiSquare4Gate, int max_coasts = 5);

    struct TrackerConfig
    {
        ArrayConfig array;
        CpiClock clock;
        NoiseModel noise;
        WindowPolicy window;
        EstimatorOptions estimator;
        double gate = kChiSquare4Gate;
        int max_coasts = 5;
    };

    struct CpiResult
    {
        TrackState track;
        EstimateReport report;
        Eigen::Matrix4d measurement_noise = Eigen::Matrix4d::Zero();
        bool gated_out = false;
    };

    /// Measurement noise for a frame: the CRB at the predicted state with the
    /// fitted amplitude, or the fixed matrix.
    Eigen::Matrix4d measurement_noise(const TrackerConfig &config, const TrackState &track, const EchoFrame &frame,
                                      std::complex<double> beta);

    /// One CPI: search a window around the prediction held by the track,
    /// gate, update, then predict the next CPI.
    CpiResult track_cpi(const TrackState &track, const EchoFrame &frame, const TrackerConfig &config);

} // namespace nfpb

#endif
