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

#include "nfpb/harness.hpp"

#include "nfpb/signature.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#ifndef NFPB_VERSION
#define NFPB_VERSION "unknown"
#endif

namespace nfpb
{
    const char *const kTrackCsvHeader =
        "cpi_index,true_theta_rad,true_r_m,true_vr_mps,true_vtheta_mps,"
        "est_theta_rad,est_r_m,est_vr_mps,est_vtheta_mps,"
        "pred_theta_rad,pred_r_m,pred_vr_mps,pred_vtheta_mps,"
        "post_theta_rad,post_r_m,post_vr_mps,post_vtheta_mps,"
        "rcrb_theta_rad,rcrb_r_m,rcrb_vr_mps,rcrb_vtheta_mps,"
        "gain_mean,rate_mean_bps_hz,genie_rate_mean,gain_loss_db,gated_out";
    const char *const kCrbSweepCsvHeader =
        "r_m,rcrb_theta_rad,rcrb_r_m,rcrb_vr_mps,rcrb_vtheta_mps,condition_number,singular_flag";
    const char *const kMcRmseCsvHeader = "snr_db,param,rmse,rcrb,ratio,trials";
    const char *const kEstimateCsvHeader =
        "true_theta_rad,true_r_m,true_vr_mps,true_vtheta_mps,"
        "est_theta_rad,est_r_m,est_vr_mps,est_vtheta_mps,"
        "rcrb_theta_rad,rcrb_r_m,rcrb_vr_mps,rcrb_vtheta_mps,"
        "beta_re,beta_im,objective,converged,low_confidence,clamped,iterations,evaluations";

    const char *version() { return NFPB_VERSION; }

    namespace
    {
        constexpr const char *kParamNames[4] = {"theta", "r", "v_r", "v_theta"};

        double elapsed_since(std::chrono::steady_clock::time_point t0)
        {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }

        double median(std::vector<double> v)
        {
            if (v.empty())
                return 0.0;
            const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
            std::nth_element(v.begin(), mid, v.end());
            if (v.size() % 2 == 1)
                return *mid;
            const double hi = *mid;
            return 0.5 * (hi + *std::max_element(v.begin(), mid));
        }

        Eigen::Vector4d state_error(const TargetState &est, const TargetState &truth)
        {
            Eigen::Vector4d e = est.to_vector() - truth.to_vector();
            e[0] = wrap_angle(e[0]);
            return e;
        }

        /// Prior handed over by initial access: the truth perturbed by init_sigma,
        /// reported with four times that variance.
        TargetState perturbed_truth(const ScenarioConfig &config, const TargetState &truth, RandomStream &rng)
        {
            TargetState s = truth;
            s.theta += config.init_sigma[0] * rng.gaussian();
            s.r += config.init_sigma[1] * rng.gaussian();
            s.v_r += config.init_sigma[2] * rng.gaussian();
            s.v_theta += config.init_sigma[3] * rng.gaussian();
            s.theta = std::clamp(s.theta, 1e-3, kPi - 1e-3);
            s.r = std::max(s.r, 0.1);
            return s;
        }

        Eigen::VectorXcd single_element_weights(const ArrayConfig &cfg)
        {
            Eigen::VectorXcd w = Eigen::VectorXcd::Zero(cfg.num_elements);
            w[cfg.num_elements / 2] = 1.0;
            return w;
        }

        void put(std::ostream &os, double v) { os << format_number(v); }

        void put_state(std::ostream &os, const TargetState &s)
        {
            const Eigen::Vector4d v = s.to_vector();
            for (int i = 0; i < 4; ++i)
            {
                os << ',';
                put(os, v[i]);
            }
        }

        void put_vec(std::ostream &os, const Eigen::Vector4d &v)
        {
            for (int i = 0; i < 4; ++i)
            {
                os << ',';
                put(os, v[i]);
            }
        }

        std::string hex64(std::uint64_t h)
        {
            char buf[17];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
            return buf;
        }

        void summarise(RunResult &res)
        {
            const auto n = static_cast<int>(res.records.size());
            std::vector<double> pos, loss;
            for (const RunRecord &rec : res.records)
            {
                pos.push_back((to_cartesian(rec.posterior).position - to_cartesian(rec.truth).position).norm());
                loss.push_back(rec.gain_loss_db);
            }
            res.median_position_error_m = median(pos);
            res.median_gain_loss_db = median(loss);

            double sum = 0.0;
            int count = 0;
            for (int i = n / 3; i < 2 * n / 3; ++i)
            {
                const RunRecord &rec = res.records[static_cast<std::size_t>(i)];
                const Eigen::Vector4d e = state_error(rec.posterior, rec.truth);
                const Eigen::LDLT<Eigen::Matrix4d> ldlt(rec.posterior_covariance);
                if (ldlt.info() != Eigen::Success)
                    continue;
                sum += e.dot(ldlt.solve(e));
                ++count;
            }
            res.nees_count = count;
            res.nees_mean = count ? sum / count : 0.0;
        }
    } // namespace

    RunResult run_nfpb(const ScenarioConfig &config, const RunOptions &options)
    {
        const auto t0 = std::chrono::steady_clock::now();
        RunResult res;
        const ArrayConfig &cfg = config.array;
        const CpiClock &clock = config.clock;
        const LinkBudget budget = config.budget();
        const TrackerConfig tracker = config.tracker();

        std::optional<Trajectory> traj;
        if (!options.truth_override)
            traj = config.trajectory();
        const auto truth_states = [&](int c) {
            if (options.truth_override)
                return constant_velocity_states(
                    propagate_constant_velocity(*options.truth_override, c * clock.cpi_duration), clock);
            return cpi_states(*traj, clock, c, config.intra_cpi_motion);
        };

        try
        {
            if (config.num_cpis == 0)
                return res;

            // Initial access.
            const std::vector<TargetState> first = truth_states(0);
            RandomStream access_rng = RandomStream::derive(config.seed, "initial-access");
            Eigen::Matrix4d prior_cov = (4.0 * config.init_sigma.cwiseAbs2()).asDiagonal();
            TargetState prior;
            if (config.search == SearchMode::Window)
                prior = perturbed_truth(config, first.front(), access_rng);
            else
            {
                const Eigen::VectorXcd probe = make_probe(clock.snapshots, access_rng);
                EchoFrame pilot = synthesize_frame(cfg, clock, first, single_element_weights(cfg), probe, budget,
                                                   options.noiseless ? nullptr : &access_rng);
                if (options.noiseless)
                    pilot.noise_power = 0.0;
                const EstimateReport ia =
                    initial_access_search(cfg, clock, pilot, GlobalSearch{}, tracker.estimator, config.window);
                prior = ia.estimate;
                prior_cov += Eigen::Matrix4d(ia.rcrb.cwiseAbs2().asDiagonal());
            }
            TrackState track = TrackState::initialize(prior, prior_cov);

            for (int c = 0; c < config.num_cpis; ++c)
            {
                const std::vector<TargetState> states = truth_states(c);
                const TargetState predicted = track.predicted_state();
                const BeamPlan plan = plan_beam(cfg, clock, predicted, config.doppler_compensation);

                RandomStream probe_rng = RandomStream::derive(config.seed, "probe", static_cast<std::uint64_t>(c));
                RandomStream noise_rng = RandomStream::derive(config.seed, "noise", static_cast<std::uint64_t>(c));
                const Eigen::VectorXcd probe = make_probe(clock.snapshots, probe_rng);
                EchoFrame frame = synthesize_frame(cfg, clock, states, plan.base_weights, probe, budget,
                                                   options.noiseless ? nullptr : &noise_rng);
                if (options.noiseless)
                    frame.noise_power = 0.0;

                const CpiResult step = track_cpi(track, frame, tracker);
                const CommMetrics metrics = comm_metrics(cfg, states, plan, budget);

                RunRecord rec;
                rec.cpi_index = c;
                rec.truth = states.front();
                rec.estimate = step.report.estimate;
                rec.predicted = predicted;
                rec.posterior = step.track.posterior_state();
                rec.posterior_covariance = step.track.covariance;
                rec.measurement_noise = step.measurement_noise;
                rec.rcrb = step.report.rcrb;
                rec.gain_mean = metrics.gain_mean;
                rec.rate_mean_bps_hz = metrics.rate_mean;
                rec.genie_rate_mean = metrics.genie_rate_mean;
                rec.gain_loss_db = metrics.gain_loss_db;
                rec.ripple_db = metrics.ripple_db;
                rec.gated_out = step.gated_out;
                res.records.push_back(rec);

                track = step.track;
                if (track.status == TrackStatus::Lost)
                {
                    res.lost = true;
                    res.failure = "track lost at CPI " + std::to_string(c);
                    break;
                }
            }
        }
        catch (const std::exception &e)
        {
            res.failure = std::string("runtime failure after ") + std::to_string(res.records.size()) +
                          " CPIs: " + e.what();
        }
        summarise(res);
        res.wall_time_s = elapsed_since(t0);
        return res;
    }

    std::vector<SweepRow> run_crb_sweep(const ScenarioConfig &config)
    {
        const LinkBudget budget = config.budget();
        const double d_r = rayleigh_distance(config.array);
        const std::vector<double> ranges = log_spaced(config.sweep_r_min_over_rayleigh * d_r,
                                                      config.sweep_r_max_over_rayleigh * d_r, config.sweep_points);
        if (budget.path_loss == PathLossMode::UnitReflection)
            return rcrb_sweep(config.array, config.clock, config.target, {1.0, 0.0}, budget.noise_power_w,
                              budget.tx_power_w, ranges);
        std::vector<SweepRow> rows;
        for (double r : ranges)
        {
            const std::complex<double> beta =
                reflection_coefficient({config.target.theta, r}, budget, config.array.wavelength());
            const double one[1] = {r};
            const auto row = rcrb_sweep(config.array, config.clock, config.target, beta, budget.noise_power_w,
                                        budget.tx_power_w, one);
            rows.push_back(row.front());
        }
        return rows;
    }

    double post_beamforming_snr(const ScenarioConfig &config, const TargetState &state)
    {
        const LinkBudget budget = config.budget();
        const Eigen::VectorXcd w = focus_weights(config.array, state.location());
        const Eigen::VectorXcd u =
            signature(config.array, config.clock, state, w, Eigen::VectorXcd::Ones(config.clock.snapshots));
        const double beta2 = std::norm(reflection_coefficient(state.location(), budget, config.array.wavelength()));
        return budget.tx_power_w * beta2 * u.squaredNorm() / budget.noise_power_w;
    }

    std::vector<McRow> run_mc_rmse(const ScenarioConfig &config)
    {
        std::vector<McRow> rows;
        if (config.mc_trials == 0)
            return rows;
        const ArrayConfig &cfg = config.array;
        const CpiClock &clock = config.clock;
        const TargetState &target = config.target;
        target.validate();
        const std::vector<TargetState> states = constant_velocity_states(target, clock);
        const Eigen::VectorXcd w = focus_weights(cfg, target.location());

        std::vector<double> noise_powers;
        std::vector<double> snr_db;
        const LinkBudget base = config.budget();
        const double snr0 = post_beamforming_snr(config, target);
        if (config.mc_snr_db.empty())
        {
            noise_powers.push_back(base.noise_power_w);
            snr_db.push_back(10.0 * std::log10(snr0));
        }
        for (double s : config.mc_snr_db)
        {
            noise_powers.push_back(base.noise_power_w * snr0 / std::pow(10.0, s / 10.0));
            snr_db.push_back(s);
        }

        EstimatorOptions opts = config.tracker().estimator;
        opts.compute_covariance = false;

        for (std::size_t k = 0; k < noise_powers.size(); ++k)
        {
            LinkBudget budget = base;
            budget.noise_power_w = noise_powers[k];

            FisherInputs in;
            in.array = cfg;
            in.clock = clock;
            in.eta = target;
            in.beta = reflection_coefficient(target.location(), budget, cfg.wavelength());
            in.weights = w;
            in.noise_power = budget.noise_power_w;
            in.tx_power = budget.tx_power_w;
            const Eigen::Vector4d rcrb = crb_report(in).rcrb;

            Eigen::Vector4d sq = Eigen::Vector4d::Zero();
            for (int t = 0; t < config.mc_trials; ++t)
            {
                const auto idx = static_cast<std::uint64_t>(t);
                RandomStream probe_rng = RandomStream::derive(config.seed, "probe", idx);
                RandomStream noise_rng = RandomStream::derive(config.seed, "noise", idx);
                RandomStream window_rng = RandomStream::derive(config.seed, "window", idx);
                const Eigen::VectorXcd probe = make_probe(clock.snapshots, probe_rng);
                const EchoFrame frame = synthesize_frame(cfg, clock, states, w, probe, budget, &noise_rng);

                SearchWindow win;
                Eigen::Vector4d c = target.to_vector();
                for (int i = 0; i < 4; ++i)
                    c[i] += config.mc_window_offset_sigmas * rcrb[i] * (2.0 * window_rng.uniform() - 1.0);
                c[0] = std::clamp(c[0], 1e-3, kPi - 1e-3);
                c[1] = std::max(c[1], 0.5 * target.r);
                win.center = TargetState::from_vector(c);
                win.half_widths = config.mc_window_sigmas * rcrb;
                win.half_widths[0] = std::min(win.half_widths[0], 0.999 * std::min(c[0], kPi - c[0]));
                win.half_widths[1] = std::min(win.half_widths[1], 0.999 * c[1]);
                win.counts = config.window.counts;
                const EstimateReport rep = grid_then_refine(cfg, clock, frame, win, opts);
                sq += state_error(rep.estimate, target).cwiseAbs2();
            }
            for (int i = 0; i < 4; ++i)
            {
                McRow row;
                row.snr_db = snr_db[k];
                row.param = kParamNames[i];
                row.rmse = std::sqrt(sq[i] / config.mc_trials);
                row.rcrb = rcrb[i];
                row.ratio = row.rmse / row.rcrb;
                row.trials = config.mc_trials;
                rows.push_back(row);
            }
        }
        return rows;
    }

    SingleEstimate run_estimate_once(const ScenarioConfig &config)
    {
        const ArrayConfig &cfg = config.array;
        const CpiClock &clock = config.clock;
        const LinkBudget budget = config.budget();
        SingleEstimate out;
        out.truth = config.target;
        out.truth.validate();
        const std::vector<TargetState> states = constant_velocity_states(out.truth, clock);

        RandomStream access_rng = RandomStream::derive(config.seed, "initial-access");
        RandomStream probe_rng = RandomStream::derive(config.seed, "probe");
        RandomStream noise_rng = RandomStream::derive(config.seed, "noise");
        const Eigen::VectorXcd probe = make_probe(clock.snapshots, probe_rng);
        EstimatorOptions opts = config.tracker().estimator;

        if (config.search == SearchMode::Global)
        {
            const EchoFrame frame =
                synthesize_frame(cfg, clock, states, single_element_weights(cfg), probe, budget, &noise_rng);
            out.report = initial_access_search(cfg, clock, frame, GlobalSearch{}, opts, config.window);
            return out;
        }
        const TargetState prior = perturbed_truth(config, out.truth, access_rng);
        const Eigen::Matrix4d prior_cov = (4.0 * config.init_sigma.cwiseAbs2()).asDiagonal();
        const SearchWindow win = window_around(cfg, clock, prior, Eigen::Vector4d::Zero(), prior_cov, config.window);
        const EchoFrame frame =
            synthesize_frame(cfg, clock, states, focus_weights(cfg, prior.location()), probe, budget, &noise_rng);
        out.report = grid_then_refine(cfg, clock, frame, win, opts);
        return out;
    }

    void write_track_csv(std::ostream &os, const std::vector<RunRecord> &records)
    {
        os << kTrackCsvHeader << '\n';
        for (const RunRecord &r : records)
        {
            os << r.cpi_index;
            put_state(os, r.truth);
            put_state(os, r.estimate);
            put_state(os, r.predicted);
            put_state(os, r.posterior);
            put_vec(os, r.rcrb);
            for (double v : {r.gain_mean, r.rate_mean_bps_hz, r.genie_rate_mean, r.gain_loss_db})
            {
                os << ',';
                put(os, v);
            }
            os << ',' << (r.gated_out ? 1 : 0) << '\n';
        }
    }

    void write_crb_sweep_csv(std::ostream &os, const std::vector<SweepRow> &rows)
    {
        os << kCrbSweepCsvHeader << '\n';
        for (const SweepRow &r : rows)
        {
            put(os, r.r);
            put_vec(os, r.rcrb);
            os << ',';
            put(os, r.condition_number);
            os << ',' << (r.singular ? 1 : 0) << '\n';
        }
    }

    void write_mc_rmse_csv(std::ostream &os, const std::vector<McRow> &rows)
    {
        os << kMcRmseCsvHeader << '\n';
        for (const McRow &r : rows)
        {
            put(os, r.snr_db);
            os << ',' << r.param << ',';
            put(os, r.rmse);
            os << ',';
            put(os, r.rcrb);
            os << ',';
            put(os, r.ratio);
            os << ',' << r.trials << '\n';
        }
    }

    void write_estimate_csv(std::ostream &os, const SingleEstimate &est)
    {
        const EstimateReport &r = est.report;
        os << kEstimateCsvHeader << '\n';
        put(os, est.truth.theta);
        for (double v : {est.truth.r, est.truth.v_r, est.truth.v_theta})
        {
            os << ',';
            put(os, v);
        }
        put_state(os, r.estimate);
        put_vec(os, r.rcrb);
        for (double v : {r.beta_hat.real(), r.beta_hat.imag(), r.objective})
        {
            os << ',';
            put(os, v);
        }
        os << ',' << (r.converged ? 1 : 0) << ',' << (r.low_confidence ? 1 : 0) << ',' << (r.clamped ? 1 : 0)
           << ',' << r.iterations << ',' << r.evaluations << '\n';
    }

    std::string summary_json(const ScenarioConfig &config, const std::string &subcommand, double wall_time_s,
                             const RunResult *track)
    {
        nlohmann::ordered_json j;
        j["subcommand"] = subcommand;
        j["seed"] = config.seed;
        j["config_hash"] = hex64(config.hash());
        nlohmann::ordered_json echo = nlohmann::ordered_json::object();
        for (const auto &[k, v] : parse_key_values(config.canonical_text()))
            echo[k] = v;
        j["config"] = echo;
        j["versions"] = {{"nfpb", version()},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                       "." + std::to_string(EIGEN_MINOR_VERSION)},
                         {"compiler", __VERSION__}};
        j["wall_time_s"] = wall_time_s;
        if (track)
        {
            j["cpis"] = track->records.size();
            j["lost"] = track->lost;
            j["failure"] = track->failure;
            j["nees_mean_middle_third"] = track->nees_mean;
            j["median_position_error_m"] = track->median_position_error_m;
            j["median_gain_loss_db"] = track->median_gain_loss_db;
        }
        return j.dump(2) + "\n";
    }

} // namespace nfpb
