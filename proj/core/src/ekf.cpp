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

#include "nfpb/ekf.hpp"

#include "nfpb/fisher.hpp"

#include <cmath>
#include <stdexcept>

namespace nfpb
{
    namespace
    {
        constexpr double kEigenFloor = 1e-12;
        constexpr double kUninformative = 1e12;

        Eigen::Vector4d residual(const Eigen::Vector4d &z, const Eigen::Vector4d &prior)
        {
            Eigen::Vector4d nu = z - prior;
            nu[0] = wrap_angle(nu[0]);
            return nu;
        }

        bool is_psd(const Eigen::Matrix4d &m)
        {
            if (!m.allFinite())
                return false;
            const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
            const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
            if (asym > 1e-8 * scale)
                return false;
            const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(0.5 * (m + m.transpose()));
            return es.eigenvalues().minCoeff() >= -1e-10 * std::max(scale, 1.0);
        }
    } // namespace

    Eigen::Matrix4d process_noise(const TargetState &state, double dt, double q_a)
    {
        if (!(dt > 0.0) || !(q_a >= 0.0) || !(state.r > 0.0))
            throw std::invalid_argument("process_noise: need dt > 0, q_a >= 0, r > 0");
        const double q = q_a * q_a;
        const double dt2 = dt * dt, dt3 = dt2 * dt, dt4 = dt3 * dt;
        const double r = state.r;
        Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
        Q(1, 1) = q * dt4 / 4.0;
        Q(1, 2) = Q(2, 1) = q * dt3 / 2.0;
        Q(2, 2) = q * dt2;
        Q(0, 0) = q * dt4 / (4.0 * r * r);
        Q(0, 3) = Q(3, 0) = q * dt3 / (2.0 * r);
        Q(3, 3) = q * dt2;
        return Q;
    }

    Eigen::Matrix4d kinematic_jacobian(const TargetState &state, double dt, AngleUpdate mode)
    {
        Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
        if (mode == AngleUpdate::Dimensional)
        {
            F(0, 1) = -state.v_theta * dt / (state.r * state.r);
            F(0, 3) = dt / state.r;
        }
        else
        {
            F(0, 3) = dt;
        }
        F(1, 2) = dt;
        return F;
    }

    TrackState TrackState::initialize(const TargetState &mean, const Eigen::Matrix4d &covariance)
    {
        mean.validate();
        TrackState t;
        t.mean = mean.to_vector();
        t.covariance = condition_covariance(covariance);
        t.predicted_mean = t.mean;
        t.predicted_covariance = t.covariance;
        return t;
    }

    Eigen::Matrix4d condition_covariance(const Eigen::Matrix4d &p)
    {
        const Eigen::Matrix4d sym = 0.5 * (p + p.transpose());
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(sym);
        if (es.eigenvalues().minCoeff() >= kEigenFloor)
            return sym;
        const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(kEigenFloor);
        const Eigen::Matrix4d out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        return 0.5 * (out + out.transpose());
    }

    TrackState predict(const TrackState &track, double dt, const Eigen::Matrix4d &q, AngleUpdate mode)
    {
        TrackState out = track;
        const TargetState s = track.posterior_state();
        const Eigen::Matrix4d F = kinematic_jacobian(s, dt, mode);
        out.predicted_covariance = condition_covariance(F * track.covariance * F.transpose() + q);
        try
        {
            out.predicted_mean = kinematic_step(s, dt, mode).to_vector();
            out.prediction_invalid = false;
        }
        catch (const std::domain_error &)
        {
            out.predicted_mean = track.mean;
            out.prediction_invalid = true;
            if (out.status != TrackStatus::Lost)
                out.status = TrackStatus::Coasting;
        }
        return out;
    }

    TrackState predict(const TrackState &track, double dt, const NoiseModel &noise)
    {
        return predict(track, dt, process_noise(track.posterior_state(), dt, noise.q_a), noise.angle_update);
    }

    UpdateResult update(const TrackState &track, const EstimateReport &z, const Eigen::Matrix4d &r, double gate,
                        int max_coasts)
    {
        if (!is_psd(r))
            throw std::invalid_argument("update: measurement noise is not symmetric PSD");
        UpdateResult res;
        res.track = track;
        TrackState &t = res.track;
        if (t.status == TrackStatus::Lost)
        {
            res.gated_out = true;
            return res;
        }

        const Eigen::Matrix4d &P = track.predicted_covariance;
        const Eigen::Matrix4d R = 0.5 * (r + r.transpose());
        const Eigen::Matrix4d S = P + R;
        const Eigen::LDLT<Eigen::Matrix4d> ldlt(S);
        const Eigen::Vector4d nu = residual(z.estimate.to_vector(), track.predicted_mean);
        res.mahalanobis2 = nu.dot(ldlt.solve(nu));

        const bool usable = !z.low_confidence && z.estimate.is_valid() && std::isfinite(res.mahalanobis2);
        if (!usable || res.mahalanobis2 > gate)
        {
            res.gated_out = true;
            t.mean = track.predicted_mean;
            t.covariance = track.predicted_covariance;
            ++t.consecutive_coasts;
            t.status = t.consecutive_coasts > max_coasts ? TrackStatus::Lost : TrackStatus::Coasting;
            return res;
        }

        // K = P S^-1, both symmetric.
        const Eigen::Matrix4d K = ldlt.solve(P).transpose();
        const Eigen::Matrix4d I_K = Eigen::Matrix4d::Identity() - K;
        t.mean = track.predicted_mean + K * nu;
        t.mean[0] = track.predicted_mean[0] + wrap_angle(t.mean[0] - track.predicted_mean[0]);
        t.covariance = condition_covariance(I_K * P * I_K.transpose() + K * R * K.transpose());
        t.consecutive_coasts = 0;
        t.status = TrackStatus::Tracking;
        t.last_beta = z.beta_hat;
        return res;
    }

    Eigen::Matrix4d measurement_noise(const TrackerConfig &config, const TrackState &track, const EchoFrame &frame,
                                      std::complex<double> beta)
    {
        if (config.noise.r_mode == MeasurementNoise::Fixed)
            return config.noise.fixed_r;
        if (!(frame.noise_power > 0.0))
            return Eigen::Matrix4d::Zero();
        if (std::abs(beta) == 0.0 || !track.predicted_state().is_valid())
            return kUninformative * Eigen::Matrix4d::Identity();

        FisherInputs in;
        in.array = config.array;
        in.clock = config.clock;
        in.eta = track.predicted_state();
        in.beta = beta;
        in.weights = frame.transmit_weights;
        in.probe = frame.probe;
        in.noise_power = frame.noise_power;
        in.tx_power = config.estimator.tx_power_w;
        Eigen::Matrix4d R = crb_report(in).crb;
        for (int i = 0; i < 4; ++i)
            if (!std::isfinite(R(i, i)))
            {
                R.row(i).setZero();
                R.col(i).setZero();
                R(i, i) = kUninformative;
            }
        return R;
    }

    CpiResult track_cpi(const TrackState &track, const EchoFrame &frame, const TrackerConfig &config)
    {
        CpiResult out;
        if (track.status == TrackStatus::Lost)
            throw std::logic_error("track_cpi: track is lost");

        const TargetState prior = track.predicted_state();
        const SearchWindow window = window_around(config.array, config.clock, prior, track.last_rcrb,
                                                  track.predicted_covariance, config.window);
        EstimatorOptions opts = config.estimator;
        opts.compute_covariance = false;
        out.report = grid_then_refine(config.array, config.clock, frame, window, opts);

        out.measurement_noise = measurement_noise(config, track, frame, out.report.beta_hat);
        UpdateResult up = update(track, out.report, out.measurement_noise, config.gate, config.max_coasts);
        out.gated_out = up.gated_out;
        if (!up.gated_out)
            for (int i = 0; i < 4; ++i)
                up.track.last_rcrb[i] = out.measurement_noise(i, i) < kUninformative
                                            ? std::sqrt(std::max(out.measurement_noise(i, i), 0.0))
                                            : 0.0;
        out.report.covariance = out.measurement_noise;
        out.report.rcrb = out.measurement_noise.diagonal().cwiseMax(0.0).cwiseSqrt();

        up.track.cpi_index = track.cpi_index + 1;
        out.track = up.track.status == TrackStatus::Lost ? up.track
                                                         : predict(up.track, config.clock.cpi_duration, config.noise);
        return out;
    }

} // namespace nfpb
