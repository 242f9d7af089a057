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

#include "nfpb/fisher.hpp"
#include "nfpb/signature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace nfpb
{
    namespace
    {
        constexpr double kInf = std::numeric_limits<double>::infinity();

        // Nelder-Mead over the free window coordinates u, scaled to [-1, 1].
        //
        // The simplex itself moves in sheared coordinates z = S u in which the
        // angle and distance are referred to the CPI midpoint. At the CPI start
        // theta trades against v_theta (and r against v_r) along a narrow
        // ridge; at the midpoint the pairs decouple.
        class SimplexRefiner
        {
        public:
            SimplexRefiner(const SignatureCorrelator &corr, const SearchWindow &win, const EstimatorOptions &opts,
                           double midpoint_time)
                : corr_(corr), win_(win), opts_(opts)
            {
                for (int i = 0; i < 4; ++i)
                    if (win.half_widths[i] > 0.0)
                        free_.push_back(i);
                const Eigen::Vector4d &h = win.half_widths;
                Eigen::Matrix4d shear = Eigen::Matrix4d::Identity();
                if (h[0] > 0.0 && h[3] > 0.0)
                    shear(0, 3) = h[3] * midpoint_time / (win.center.r * h[0]);
                if (h[1] > 0.0 && h[2] > 0.0)
                    shear(1, 2) = h[2] * midpoint_time / h[1];
                const int d = dims();
                S_.resize(d, d);
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b)
                        S_(a, b) = shear(free_[a], free_[b]);
                S_inv_ = S_.inverse();
            }

            int dims() const { return static_cast<int>(free_.size()); }

            Eigen::VectorXd to_z(const Eigen::VectorXd &u) const { return S_ * u; }
            Eigen::VectorXd to_u(const Eigen::VectorXd &z) const { return S_inv_ * z; }

            TargetState state_of_u(const Eigen::VectorXd &u) const
            {
                Eigen::Vector4d v = win_.center.to_vector();
                for (int j = 0; j < dims(); ++j)
                    v[free_[j]] += std::clamp(u[j], -1.0, 1.0) * win_.half_widths[free_[j]];
                return TargetState::from_vector(v);
            }

            // Points outside the window are evaluated on its boundary and
            // penalised in proportion to the overshoot.
            double cost(const Eigen::VectorXd &z)
            {
                ++evaluations;
                const Eigen::VectorXd u = to_u(z);
                const auto ev = corr_.evaluate(state_of_u(u));
                if (!ev.valid)
                    return kInf;
                const double excess = (u.array().abs() - 1.0).max(0.0).sum();
                return -ev.objective * (1.0 - excess);
            }

            Eigen::VectorXd normalized(const TargetState &s) const
            {
                Eigen::VectorXd u(dims());
                const Eigen::Vector4d v = s.to_vector() - win_.center.to_vector();
                for (int j = 0; j < dims(); ++j)
                    u[j] = v[free_[j]] / win_.half_widths[free_[j]];
                return u;
            }

            // One simplex run; returns true when the tolerance was met.
            bool run(Eigen::VectorXd &best, double &best_cost, const Eigen::VectorXd &step, int budget, int &used)
            {
                const int d = dims();
                std::vector<Eigen::VectorXd> x(d + 1, best);
                std::vector<double> f(d + 1, best_cost);
                for (int j = 0; j < d; ++j)
                {
                    x[j + 1][j] += step[j];
                    f[j + 1] = cost(x[j + 1]);
                }
                std::vector<int> order(d + 1);
                used = 0;
                bool met = false;
                while (true)
                {
                    for (int i = 0; i <= d; ++i)
                        order[i] = i;
                    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
                    const double fb = f[order.front()], fw = f[order.back()];
                    double diameter = 0.0;
                    for (int i = 1; i <= d; ++i)
                        diameter = std::max(diameter, (x[order[i]] - x[order[0]]).lpNorm<Eigen::Infinity>());
                    const bool spread_ok = std::isfinite(fw) && std::abs(fw - fb) <= opts_.tolerance * std::abs(fb);
                    if (spread_ok && diameter < 1e-7)
                    {
                        met = true;
                        break;
                    }
                    if (used >= budget)
                    {
                        met = spread_ok;
                        break;
                    }
                    ++used;

                    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
                    for (int i = 0; i < d; ++i)
                        centroid += x[order[i]];
                    centroid /= d;
                    const int w = order.back();
                    const Eigen::VectorXd xr = centroid + (centroid - x[w]);
                    const double fr = cost(xr);
                    if (fr < fb)
                    {
                        const Eigen::VectorXd xe = centroid + 2.0 * (centroid - x[w]);
                        const double fe = cost(xe);
                        if (fe < fr)
                            x[w] = xe, f[w] = fe;
                        else
                            x[w] = xr, f[w] = fr;
                        continue;
                    }
                    if (fr < f[order[d - 1]])
                    {
                        x[w] = xr, f[w] = fr;
                        continue;
                    }
                    const bool outside = fr < f[w];
                    const Eigen::VectorXd xc =
                        outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                : Eigen::VectorXd(centroid + 0.5 * (x[w] - centroid));
                    const double fc = cost(xc);
                    if (fc < std::min(fr, f[w]))
                    {
                        x[w] = xc, f[w] = fc;
                        continue;
                    }
                    const Eigen::VectorXd x0 = x[order.front()];
                    for (int i = 1; i <= d; ++i)
                    {
                        x[order[i]] = x0 + 0.5 * (x[order[i]] - x0);
                        f[order[i]] = cost(x[order[i]]);
                    }
                }
                const int b = *std::min_element(order.begin(), order.end(), [&](int a, int c) { return f[a] < f[c]; });
                if (f[b] < best_cost)
                {
                    best = x[b];
                    best_cost = f[b];
                }
                return met;
            }

            std::size_t evaluations = 0;

        private:
            const SignatureCorrelator &corr_;
            const SearchWindow &win_;
            const EstimatorOptions &opts_;
            std::vector<int> free_;
            Eigen::MatrixXd S_, S_inv_;
        };

        int odd_at_least(int n) { return n % 2 == 0 ? n + 1 : n; }

        std::array<int, 4> dense_counts(const Eigen::Vector4d &half_widths, const Eigen::Vector4d &cells,
                                        const WindowPolicy &policy)
        {
            std::array<int, 4> counts = policy.counts;
            for (int i = 0; i < 4; ++i)
            {
                const double spacing = policy.max_spacing * cells[i];
                int need = policy.counts[i];
                if (spacing > 0.0 && std::isfinite(spacing))
                    need = static_cast<int>(std::ceil(2.0 * half_widths[i] / spacing)) + 1;
                counts[i] = odd_at_least(std::clamp(std::max(need, policy.counts[i]), 3, odd_at_least(policy.max_count)));
            }
            return counts;
        }

        void attach_covariance(const ArrayConfig &cfg, const CpiClock &clock, const EchoFrame &frame,
                               const EstimatorOptions &opts, EstimateReport &rep)
        {
            if (!opts.compute_covariance || !(frame.noise_power > 0.0) || std::abs(rep.beta_hat) == 0.0)
                return;
            FisherInputs in;
            in.array = cfg;
            in.clock = clock;
            in.eta = rep.estimate;
            in.beta = rep.beta_hat;
            in.weights = frame.transmit_weights;
            in.probe = frame.probe;
            in.noise_power = frame.noise_power;
            in.tx_power = opts.tx_power_w;
            const CrbReport crb = crb_report(in);
            rep.covariance = crb.crb;
            rep.rcrb = crb.rcrb;
        }

        void finish_report(const ArrayConfig &cfg, const CpiClock &clock, const EchoFrame &frame,
                           const EstimatorOptions &opts, const SignatureCorrelator::Evaluation &ev,
                           std::size_t grid_size, EstimateReport &rep)
        {
            rep.objective = ev.objective;
            rep.beta_hat = ev.beta() / std::sqrt(opts.tx_power_w);
            const double threshold =
                frame.noise_power * (std::log(static_cast<double>(std::max<std::size_t>(grid_size, 1))) +
                                     opts.low_confidence_margin);
            rep.low_confidence = !(rep.objective > threshold);
            attach_covariance(cfg, clock, frame, opts, rep);
        }
    } // namespace

    void SearchWindow::validate() const
    {
        center.validate();
        for (int i = 0; i < 4; ++i)
        {
            if (!(half_widths[i] >= 0.0) || !std::isfinite(half_widths[i]))
                throw std::invalid_argument("SearchWindow: half-widths must be finite and non-negative");
            if (counts[i] < 3 || counts[i] % 2 == 0)
                throw std::invalid_argument("SearchWindow: grid counts must be odd and at least 3");
        }
    }

    std::size_t SearchWindow::grid_size() const
    {
        std::size_t n = 1;
        for (int i = 0; i < 4; ++i)
            n *= half_widths[i] > 0.0 ? static_cast<std::size_t>(counts[i]) : 1u;
        return n;
    }

    TargetState SearchWindow::point(const std::array<int, 4> &idx) const
    {
        Eigen::Vector4d v = center.to_vector();
        for (int i = 0; i < 4; ++i)
            if (half_widths[i] > 0.0)
                v[i] += half_widths[i] * (2.0 * idx[i] / (counts[i] - 1) - 1.0);
        return TargetState::from_vector(v);
    }

    EstimateReport grid_then_refine(const ArrayConfig &cfg, const CpiClock &clock, const EchoFrame &frame,
                                    const SearchWindow &window, const EstimatorOptions &opts)
    {
        window.validate();
        if (opts.max_iterations < 0 || !(opts.tolerance > 0.0) || !(opts.tx_power_w > 0.0))
            throw std::invalid_argument("grid_then_refine: invalid estimator options");
        const SignatureCorrelator corr(cfg, clock, frame);

        std::array<int, 4> n{};
        for (int i = 0; i < 4; ++i)
            n[i] = window.half_widths[i] > 0.0 ? window.counts[i] : 1;

        // Row-major over (theta, r, v_r, v_theta); strict '>' keeps the
        // smallest linear index on ties.
        EstimateReport rep;
        SignatureCorrelator::Evaluation best;
        bool found = false;
        std::array<int, 4> idx{};
        for (idx[0] = 0; idx[0] < n[0]; ++idx[0])
            for (idx[1] = 0; idx[1] < n[1]; ++idx[1])
                for (idx[2] = 0; idx[2] < n[2]; ++idx[2])
                    for (idx[3] = 0; idx[3] < n[3]; ++idx[3])
                    {
                        const TargetState s = window.point(idx);
                        const auto ev = corr.evaluate(s);
                        ++rep.evaluations;
                        if (ev.valid && (!found || ev.objective > best.objective))
                        {
                            best = ev;
                            rep.estimate = s;
                            found = true;
                        }
                    }
        if (!found)
            throw std::domain_error("grid_then_refine: no valid point in the search window");

        SimplexRefiner nm(corr, window, opts, 0.5 * clock.cpi_duration);
        if (nm.dims() == 0 || opts.max_iterations == 0)
        {
            rep.converged = nm.dims() == 0;
            finish_report(cfg, clock, frame, opts, best, window.grid_size(), rep);
            return rep;
        }

        Eigen::VectorXd z = nm.to_z(nm.normalized(rep.estimate));
        double fz = -best.objective;
        Eigen::VectorXd step(nm.dims());
        {
            int j = 0;
            for (int i = 0; i < 4; ++i)
                if (window.half_widths[i] > 0.0)
                    step[j++] = 1.0 / (window.counts[i] - 1); // half a grid spacing
        }
        int budget = opts.max_iterations;
        bool met = false;
        for (int pass = 0; pass <= opts.restarts && budget > 0; ++pass)
        {
            int used = 0;
            const double before = fz;
            met = nm.run(z, fz, step, budget, used);
            budget -= used;
            rep.iterations += used;
            if (!met || std::abs(before - fz) <= opts.tolerance * std::abs(fz))
                break;
        }
        rep.evaluations += nm.evaluations;

        const Eigen::VectorXd u = nm.to_u(z);
        rep.estimate = nm.state_of_u(u);
        rep.clamped = (u.array().abs() >= 1.0 - 1e-12).any();
        rep.converged = met && !rep.clamped;
        const auto ev = corr.evaluate(rep.estimate);
        finish_report(cfg, clock, frame, opts, ev.valid ? ev : best, window.grid_size(), rep);
        return rep;
    }

    Eigen::Vector4d resolution_cells(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &at)
    {
        const double lam = cfg.wavelength();
        const double D = cfg.aperture();
        const double s = std::max(std::abs(std::sin(at.theta)), 1e-3);
        const double T = clock.cpi_duration;
        return {lam / (cfg.num_elements * cfg.spacing() * s), 4.0 * lam * at.r * at.r / (D * D * s * s),
                lam / (2.0 * T), lam * at.r / (D * s * T)};
    }

    SearchWindow window_around(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &center,
                               const Eigen::Vector4d &rcrb, const Eigen::Matrix4d &prior_covariance,
                               const WindowPolicy &policy)
    {
        SearchWindow w;
        w.center = center;
        for (int i = 0; i < 4; ++i)
        {
            const double prior_std = std::sqrt(std::max(prior_covariance(i, i), 0.0));
            double hw = policy.floor[i];
            if (std::isfinite(rcrb[i]))
                hw = std::max(hw, policy.sigmas * rcrb[i]);
            if (std::isfinite(prior_std))
                hw = std::max(hw, policy.sigmas * prior_std);
            w.half_widths[i] = hw;
        }
        // Keep the angle window inside the front half-plane.
        w.half_widths[0] = std::min(w.half_widths[0], 0.999 * std::min(center.theta, kPi - center.theta));
        w.half_widths[1] = std::min(w.half_widths[1], 0.999 * center.r);
        w.counts = dense_counts(w.half_widths, resolution_cells(cfg, clock, center), policy);
        return w;
    }

    EstimateReport initial_access_search(const ArrayConfig &cfg, const CpiClock &clock, const EchoFrame &frame,
                                         const GlobalSearch &search, const EstimatorOptions &opts,
                                         const WindowPolicy &policy)
    {
        cfg.validate();
        clock.validate();
        if (search.range_points < 2 || !(search.theta_step > 0.0) || !(search.v_step > 0.0) ||
            !(search.v_max >= 0.0) || !(search.r_min > 0.0))
            throw std::invalid_argument("initial_access_search: invalid search grid");
        const double r_max = search.r_max_over_rayleigh * rayleigh_distance(cfg);
        if (!(r_max > search.r_min))
            throw std::invalid_argument("initial_access_search: empty distance range");

        const double broadside_cell = 1.0 / (cfg.num_elements * cfg.spacing() / cfg.wavelength());
        const double dtheta = std::min(search.theta_step, 0.5 * broadside_cell);
        const int n_theta = static_cast<int>(std::floor(kPi / dtheta)) - 1;
        std::vector<double> thetas(n_theta);
        for (int i = 0; i < n_theta; ++i)
            thetas[i] = (i + 1) * dtheta;
        std::vector<double> ranges(search.range_points);
        const double inv_lo = 1.0 / r_max, inv_hi = 1.0 / search.r_min;
        for (int j = 0; j < search.range_points; ++j)
            ranges[j] = 1.0 / (inv_hi + (inv_lo - inv_hi) * j / (search.range_points - 1));

        // Stage 1: noncoherent angle-distance match.
        struct Cell
        {
            double score;
            int it, ir;
        };
        std::vector<Cell> cells;
        cells.reserve(static_cast<std::size_t>(n_theta) * ranges.size());
        Eigen::MatrixXcd A(cfg.num_elements, ranges.size());
        for (int it = 0; it < n_theta; ++it)
        {
            for (std::size_t ir = 0; ir < ranges.size(); ++ir)
                A.col(ir) = nearfield_steering(cfg, {thetas[it], ranges[ir]});
            const Eigen::MatrixXcd Z = A.adjoint() * frame.samples;
            const Eigen::VectorXd score = Z.rowwise().squaredNorm();
            for (std::size_t ir = 0; ir < ranges.size(); ++ir)
                cells.push_back({score[ir], it, static_cast<int>(ir)});
        }
        const std::size_t keep = std::min<std::size_t>(3, cells.size());
        std::partial_sort(cells.begin(), cells.begin() + keep, cells.end(), [](const Cell &a, const Cell &b) {
            return a.score > b.score || (a.score == b.score && (a.it < b.it || (a.it == b.it && a.ir < b.ir)));
        });

        // Stage 2: velocity scan over the neighbourhood of the strongest
        // cells. The neighbours matter because a coarse angle is otherwise
        // absorbed by a spurious transverse velocity.
        const SignatureCorrelator corr(cfg, clock, frame);
        const int nv = static_cast<int>(std::floor(search.v_max / search.v_step + 1e-9));
        TargetState best_state;
        double best_obj = -1.0;
        std::size_t evaluations = 0;
        int best_ir = 0;
        for (std::size_t c = 0; c < keep; ++c)
            for (int dt = -1; dt <= 1; ++dt)
                for (int dr = -1; dr <= 1; ++dr)
                {
                    const int it = cells[c].it + dt, ir = cells[c].ir + dr;
                    if (it < 0 || it >= n_theta || ir < 0 || ir >= static_cast<int>(ranges.size()))
                        continue;
                    for (int a = -nv; a <= nv; ++a)
                        for (int b = -nv; b <= nv; ++b)
                        {
                            const TargetState s{thetas[it], ranges[ir], a * search.v_step, b * search.v_step};
                            const auto ev = corr.evaluate(s);
                            ++evaluations;
                            if (ev.valid && ev.objective > best_obj)
                            {
                                best_obj = ev.objective;
                                best_state = s;
                                best_ir = ir;
                            }
                        }
                }
        if (best_obj < 0.0)
            throw std::domain_error("initial_access_search: no valid candidate");

        // Stage 3: one grid step or half a resolution cell around the winner,
        // whichever is wider, and the whole transverse-velocity span, which
        // is the least resolved parameter.
        SearchWindow w;
        w.center = best_state;
        w.center.v_theta = 0.0;
        const double r_lo = ranges[std::max(best_ir - 1, 0)];
        const double r_hi = ranges[std::min<std::size_t>(best_ir + 1, ranges.size() - 1)];
        const Eigen::Vector4d res = resolution_cells(cfg, clock, best_state);
        const Eigen::Vector4d steps{dtheta, std::max(best_state.r - r_lo, r_hi - best_state.r), search.v_step,
                                    search.v_step};
        w.half_widths = steps.cwiseMax(0.5 * res);
        w.half_widths[3] = std::max(search.v_max, search.v_step);
        w.half_widths[0] = std::min(w.half_widths[0], 0.999 * std::min(best_state.theta, kPi - best_state.theta));
        w.half_widths[1] = std::min(w.half_widths[1], 0.999 * best_state.r);
        w.counts = dense_counts(w.half_widths, resolution_cells(cfg, clock, best_state), policy);
        EstimateReport rep = grid_then_refine(cfg, clock, frame, w, opts);
        rep.evaluations += evaluations + cells.size();
        return rep;
    }

} // namespace nfpb
