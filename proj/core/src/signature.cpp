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

#include "nfpb/signature.hpp"

#include <cmath>
#include <stdexcept>

namespace nfpb
{
    namespace
    {
        struct Motion
        {
            double px, py, vx, vy;
        };

        Motion motion_of(const TargetState &eta)
        {
            const double c = std::cos(eta.theta), s = std::sin(eta.theta);
            return {eta.r * c, eta.r * s, eta.v_r * c - eta.v_theta * s, eta.v_r * s + eta.v_theta * c};
        }

        // exp(-j x); small arguments skip the libm call.
        inline void phasor(double x, double &re, double &im)
        {
            if (std::abs(x) < 1e-3)
            {
                const double x2 = x * x;
                re = 1.0 - 0.5 * x2 + x2 * x2 / 24.0;
                im = -(x - x2 * x / 6.0 + x2 * x2 * x / 120.0);
                return;
            }
            re = std::cos(x);
            im = -std::sin(x);
        }
    } // namespace

    Eigen::VectorXcd signature(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &eta,
                               const Eigen::VectorXcd &weights, const Eigen::VectorXcd &probe,
                               double reference_range)
    {
        cfg.validate();
        clock.validate();
        eta.validate();
        const int N = cfg.num_elements;
        const int M = clock.snapshots;
        if (weights.size() != N || probe.size() != M)
            throw std::invalid_argument("signature: weight or probe length mismatch");

        const double k = cfg.wavenumber();
        const double ts = clock.snapshot_period();
        const double rho = reference_range;
        const Motion mo = motion_of(eta);
        const double speed2 = mo.vx * mo.vx + mo.vy * mo.vy;
        const double r_minus_rho_times_sum = (eta.r - rho) * (eta.r + rho);

        Eigen::VectorXcd u(static_cast<Eigen::Index>(N) * M);
        Eigen::VectorXcd a(N);
        for (int m = 0; m < M; ++m)
        {
            const double t = m * ts;
            const double px = mo.px + mo.vx * t;
            const double py = mo.py + mo.vy * t;
            // |p|^2 - rho^2, expanded so that no large terms cancel.
            const double base = r_minus_rho_times_sum + 2.0 * eta.r * eta.v_r * t + speed2 * t * t;
            for (int i = 0; i < N; ++i)
            {
                const double x = cfg.element_x(i);
                const double rn = std::hypot(px - x, py);
                const double excess = (base - 2.0 * x * px + x * x) / (rn + rho);
                a[i] = std::polar(1.0, -k * excess);
            }
            const std::complex<double> g = (a.array() * weights.array()).sum();
            u.segment(static_cast<Eigen::Index>(m) * N, N) = (probe[m] * g) * a;
        }
        return u;
    }

    SignatureCorrelator::SignatureCorrelator(const ArrayConfig &cfg, const CpiClock &clock, const EchoFrame &frame)
        : cfg_(cfg), clock_(clock), n_(cfg.num_elements), m_(clock.snapshots), k_(cfg.wavenumber())
    {
        cfg.validate();
        clock.validate();
        if (frame.num_elements() != n_ || frame.num_snapshots() != m_)
            throw std::invalid_argument("SignatureCorrelator: frame dimensions do not match array and clock");
        if (frame.transmit_weights.size() != n_ || frame.probe.size() != m_)
            throw std::invalid_argument("SignatureCorrelator: frame weights or probe have the wrong length");

        xs_.resize(n_);
        w_re_.resize(n_);
        w_im_.resize(n_);
        for (int i = 0; i < n_; ++i)
        {
            xs_[i] = cfg.element_x(i);
            w_re_[i] = frame.transmit_weights[i].real();
            w_im_[i] = frame.transmit_weights[i].imag();
        }
        y_re_.resize(static_cast<std::size_t>(n_) * m_);
        y_im_.resize(y_re_.size());
        for (int m = 0; m < m_; ++m)
            for (int i = 0; i < n_; ++i)
            {
                y_re_[static_cast<std::size_t>(m) * n_ + i] = frame.samples(i, m).real();
                y_im_[static_cast<std::size_t>(m) * n_ + i] = frame.samples(i, m).imag();
            }
        probe_.assign(frame.probe.data(), frame.probe.data() + m_);
    }

    SignatureCorrelator::Evaluation SignatureCorrelator::evaluate(const TargetState &eta) const
    {
        Evaluation ev;
        if (!eta.is_valid())
            return ev;

        const double ts = clock_.snapshot_period();
        const double u0 = -0.5 * (m_ - 1); // first snapshot relative to the midpoint
        const Motion mo = motion_of(eta);
        const double tc = -u0 * ts;
        const double pcx = mo.px + mo.vx * tc;
        const double pcy = mo.py + mo.vy * tc;
        const double speed2 = mo.vx * mo.vx + mo.vy * mo.vy;

        // Phasor P, and its first three forward-difference rotators D1..D3.
        std::vector<double> buf(8 * static_cast<std::size_t>(n_));
        double *pr = buf.data(), *pi = pr + n_;
        double *d1r = pi + n_, *d1i = d1r + n_;
        double *d2r = d1i + n_, *d2i = d2r + n_;
        double *d3r = d2i + n_, *d3i = d3r + n_;

        for (int i = 0; i < n_; ++i)
        {
            const double dx = pcx - xs_[i];
            const double A = dx * dx + pcy * pcy;
            const double B = dx * mo.vx + pcy * mo.vy;
            const double rr = std::sqrt(A);
            const double r1 = B / rr;
            const double r2 = (speed2 - r1 * r1) / rr;
            const double r3 = -3.0 * r1 * r2 / rr;
            const double a1 = k_ * r1 * ts;
            const double a2 = 0.5 * k_ * r2 * ts * ts;
            const double a3 = k_ * r3 * ts * ts * ts / 6.0;

            const double phi0 = k_ * rr + u0 * (a1 + u0 * (a2 + u0 * a3));
            const double del1 = a1 + a2 * (2.0 * u0 + 1.0) + a3 * (3.0 * u0 * u0 + 3.0 * u0 + 1.0);
            const double del2 = 2.0 * a2 + a3 * (6.0 * u0 + 6.0);
            const double del3 = 6.0 * a3;
            phasor(phi0, pr[i], pi[i]);
            phasor(del1, d1r[i], d1i[i]);
            phasor(del2, d2r[i], d2i[i]);
            phasor(del3, d3r[i], d3i[i]);
        }

        const double *wr = w_re_.data(), *wi = w_im_.data();
        std::complex<double> corr = 0.0;
        double energy = 0.0;
        for (int m = 0; m < m_; ++m)
        {
            const double *yr = y_re_.data() + static_cast<std::size_t>(m) * n_;
            const double *yi = y_im_.data() + static_cast<std::size_t>(m) * n_;
            double g_re = 0.0, g_im = 0.0, z_re = 0.0, z_im = 0.0;
#pragma omp simd reduction(+ : g_re, g_im, z_re, z_im)
            for (int i = 0; i < n_; ++i)
            {
                // g += w P, z += conj(P) y
                g_re += wr[i] * pr[i] - wi[i] * pi[i];
                g_im += wr[i] * pi[i] + wi[i] * pr[i];
                z_re += pr[i] * yr[i] + pi[i] * yi[i];
                z_im += pr[i] * yi[i] - pi[i] * yr[i];
            }
#pragma omp simd
            for (int i = 0; i < n_; ++i)
            {
                const double p_re = pr[i] * d1r[i] - pi[i] * d1i[i];
                const double p_im = pr[i] * d1i[i] + pi[i] * d1r[i];
                pr[i] = p_re;
                pi[i] = p_im;
                const double q_re = d1r[i] * d2r[i] - d1i[i] * d2i[i];
                const double q_im = d1r[i] * d2i[i] + d1i[i] * d2r[i];
                d1r[i] = q_re;
                d1i[i] = q_im;
                const double s_re = d2r[i] * d3r[i] - d2i[i] * d3i[i];
                const double s_im = d2r[i] * d3i[i] + d2i[i] * d3r[i];
                d2r[i] = s_re;
                d2i[i] = s_im;
            }
            const std::complex<double> sg = probe_[m] * std::complex<double>(g_re, g_im);
            corr += std::conj(sg) * std::complex<double>(z_re, z_im);
            energy += std::norm(sg);
        }
        energy *= n_;

        ev.correlation = corr;
        ev.energy = energy;
        ev.valid = energy > 0.0 && std::isfinite(energy);
        ev.objective = ev.valid ? std::norm(corr) / energy : 0.0;
        return ev;
    }

    double concentrated_objective(const ArrayConfig &cfg, const CpiClock &clock, const EchoFrame &frame,
                                  const TargetState &eta)
    {
        const SignatureCorrelator corr(cfg, clock, frame);
        const auto ev = corr.evaluate(eta);
        return ev.valid ? ev.objective : -1.0;
    }

} // namespace nfpb
