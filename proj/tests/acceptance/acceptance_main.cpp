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

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Optional arguments select criteria by number.

#include "cli.hpp"
#include "farfield_fim.hpp"

#include "nfpb/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace nfpb;
namespace fs = std::filesystem;

namespace
{
    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    std::string num(double v, int digits = 4)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        return buf;
    }

    double seconds_since(std::chrono::steady_clock::time_point t0)
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    /// Preset text with some keys replaced.
    std::string with_overrides(const std::string &preset, const std::map<std::string, std::string> &over)
    {
        std::string out;
        for (const auto &[k, v] : parse_key_values(preset_text(preset)))
            if (!over.count(k))
                out += k + " = " + v + "\n";
        for (const auto &[k, v] : over)
            out += k + " = " + v + "\n";
        return out;
    }

    Outcome rcrb_trends()
    {
        const auto t0 = std::chrono::steady_clock::now();
        const ScenarioConfig cfg = load_scenario("crb_vs_range");
        const auto rows = run_crb_sweep(cfg);
        const double secs = seconds_since(t0);
        // +1 increasing, -1 decreasing: theta, r, v_r, v_theta.
        const int expected[4] = {-1, +1, -1, +1};
        std::string bad;
        for (int p = 0; p < 4; ++p)
            for (std::size_t i = 1; i < rows.size(); ++i)
            {
                const double d = rows[i].rcrb[p] - rows[i - 1].rcrb[p];
                if (!(expected[p] * d > 0.0))
                    bad += " param " + std::to_string(p) + " breaks at point " + std::to_string(i) + ";";
            }
        const bool ok = rows.size() == 12 && bad.empty() && secs < 120.0;
        return {ok, std::to_string(rows.size()) + " ranges, rcrb_theta " + num(rows.front().rcrb[0]) + " -> " +
                        num(rows.back().rcrb[0]) + ", rcrb_r " + num(rows.front().rcrb[1]) + " -> " +
                        num(rows.back().rcrb[1]) + ", " + num(secs, 3) + " s" + bad};
    }

    Outcome velocity_degeneration()
    {
        const ScenarioConfig cfg = load_scenario("crb_vs_range");
        const LinkBudget b = cfg.budget();
        const double dr = rayleigh_distance(cfg.array);
        const std::vector<double> ranges{0.05 * dr, 10.0 * dr};
        const auto rows = rcrb_sweep(cfg.array, cfg.clock, cfg.target, {1.0, 0.0}, b.noise_power_w, b.tx_power_w,
                                     ranges);
        const double vt = rows[1].rcrb[3] / rows[0].rcrb[3];
        const double vr = rows[1].rcrb[2] / rows[0].rcrb[2];
        const bool ok = vt > 100.0 && vr <= 1.0 && 1.0 / vr < 10.0;
        return {ok, "rcrb(v_theta) far/near " + num(vt) + ", rcrb(v_r) far/near " + num(vr)};
    }

    Outcome estimator_efficiency()
    {
        const auto t0 = std::chrono::steady_clock::now();
        const ScenarioConfig cfg = load_scenario("mc_rmse");
        const double snr_db = 10.0 * std::log10(post_beamforming_snr(cfg, cfg.target));
        const auto rows = run_mc_rmse(cfg);
        const double secs = seconds_since(t0);
        bool ok = snr_db >= 20.0 && rows.size() == 4 && cfg.mc_trials >= 100 && secs < 600.0;
        std::string d = "SNR " + num(snr_db, 3) + " dB, " + std::to_string(cfg.mc_trials) + " trials, ratios";
        for (const McRow &r : rows)
        {
            ok = ok && r.ratio >= 0.9 && r.ratio <= 3.0;
            d += " " + r.param + "=" + num(r.ratio, 3);
        }
        return {ok, d + ", " + num(secs, 3) + " s"};
    }

    struct TrackingSummary
    {
        bool ok = true;
        std::string detail;
    };

    TrackingSummary tracking_over_seeds(const std::string &preset, int seeds)
    {
        static std::map<std::pair<std::string, int>, TrackingSummary> cache;
        const auto key = std::make_pair(preset, seeds);
        if (const auto it = cache.find(key); it != cache.end())
            return it->second;
        const auto t0 = std::chrono::steady_clock::now();
        ScenarioConfig cfg = load_scenario(preset);
        TrackingSummary s;
        double nees_sum = 0.0, worst_pos = 0.0, worst_loss = 0.0;
        int nees_n = 0, lost = 0;
        for (int k = 0; k < seeds; ++k)
        {
            cfg.seed = static_cast<std::uint64_t>(k + 1);
            const RunResult r = run_nfpb(cfg);
            if (!r.ok() || static_cast<int>(r.records.size()) != cfg.num_cpis)
            {
                ++lost;
                s.detail += " seed " + std::to_string(k + 1) + ": " + r.failure + ";";
            }
            worst_pos = std::max(worst_pos, r.median_position_error_m);
            worst_loss = std::max(worst_loss, r.median_gain_loss_db);
            nees_sum += r.nees_mean * r.nees_count;
            nees_n += r.nees_count;
        }
        const double nees = nees_n ? nees_sum / nees_n : 0.0;
        const double secs = seconds_since(t0);
        s.ok = lost == 0 && worst_pos < 0.5 && worst_loss < 0.5 && nees >= 3.0 && nees <= 5.2 && secs < 1200.0;
        s.detail = preset + ": " + std::to_string(seeds) + " seeds, lost " + std::to_string(lost) +
                   ", worst median position error " + num(worst_pos, 3) + " m, worst median gain loss " +
                   num(worst_loss, 3) + " dB, NEES " + num(nees, 3) + ", " + num(secs, 3) + " s" + s.detail;
        cache[key] = s;
        return s;
    }

    Outcome case_study_tracking()
    {
        const TrackingSummary s = tracking_over_seeds("case_study", 10);
        return {s.ok, s.detail};
    }

    Outcome prior_free()
    {
        // The three presets may differ only in their trajectory block.
        const std::vector<std::string> presets{"case_study", "case_study_line", "case_study_spiral"};
        std::map<std::string, std::string> reference;
        bool same = true;
        std::set<std::string> kinds;
        for (const auto &p : presets)
        {
            const ScenarioConfig cfg = load_scenario(p);
            kinds.insert(cfg.trajectory_spec.kind);
            std::map<std::string, std::string> rest;
            for (const auto &[k, v] : parse_key_values(cfg.canonical_text()))
                if (k.rfind("trajectory.", 0) != 0)
                    rest[k] = v;
            if (reference.empty())
                reference = rest;
            else
                same = same && rest == reference;
        }
        bool ok = same && kinds.size() == 3;
        std::string d = same ? "non-trajectory keys identical" : "non-trajectory keys differ";
        for (const auto &p : presets)
        {
            const TrackingSummary s = tracking_over_seeds(p, 10);
            ok = ok && s.ok;
            d += "; " + s.detail;
        }
        return {ok, d};
    }

    Outcome farfield_limit()
    {
        const ArrayConfig cfg = ArrayConfig::half_wavelength(64, 30e9);
        const double r = 100.0 * rayleigh_distance(cfg);
        double gap = 0.0;
        for (double theta : {0.4, 1.1, kPi / 2, 2.3})
        {
            const auto near = nearfield_steering(cfg, {theta, r});
            const auto far = farfield_steering(cfg, theta);
            for (int i = 0; i < cfg.num_elements; ++i)
                gap = std::max(gap, std::abs(std::arg(near[i] * std::conj(far[i]))));
        }
        const CpiClock clock{0.01, 64};
        const TargetState state{kPi / 2, r, 3.0, 2.0};
        const Eigen::MatrixXd ramps = doppler_ramps(cfg, clock, state);
        double ramp_dev = 0.0;
        for (int m = 0; m < clock.snapshots; ++m)
        {
            const double uniform = 2.0 * cfg.wavenumber() * state.v_r * m * clock.snapshot_period();
            ramp_dev = std::max(ramp_dev, (ramps.col(m).array() - uniform).abs().maxCoeff());
        }
        return {gap < 1e-2 && ramp_dev < 1e-3,
                "steering phase gap " + num(gap) + " rad, ramp deviation from uniform " + num(ramp_dev) + " rad"};
    }

    Outcome fim_oracle()
    {
        FisherInputs in;
        in.array = ArrayConfig::half_wavelength(16, 28e9);
        in.clock = CpiClock{0.01, 64};
        in.eta = {1.1, 100.0 * rayleigh_distance(in.array), 0.0, 0.0};
        in.weights = focus_weights(in.array, in.eta.location());
        in.beta = std::polar(0.8, 0.4);
        in.tx_power = 2.0;
        in.noise_power = 1e-3;
        const Matrix6d f = fisher_information(in);
        const double oracle = oracle::farfield_theta_fim_closed(16, in.array.wavelength(), in.array.spacing(), 1.1,
                                                                64, std::norm(in.beta), in.tx_power, in.noise_power);
        const double rel = std::abs(f(0, 0) / oracle - 1.0);

        // Step halving and doubling at a near-field point.
        FisherInputs nf;
        nf.array = ArrayConfig::half_wavelength(16, 28e9);
        nf.clock = in.clock;
        nf.eta = {1.1, 2.0, 3.0, 2.0};
        nf.weights = focus_weights(nf.array, nf.eta.location());
        nf.noise_power = 1e-3;
        double worst = 0.0;
        for (const FisherInputs *base : {&in, &nf})
        {
            const Matrix6d g = fisher_information(*base);
            for (double scale : {0.5, 2.0})
            {
                FisherInputs alt = *base;
                alt.steps *= scale;
                const Matrix6d h = fisher_information(alt);
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 6; ++j)
                        worst = std::max(worst, std::abs(h(i, j) - g(i, j)) / std::sqrt(g(i, i) * g(j, j)));
            }
        }
        return {rel < 1e-3 && worst < 1e-3,
                "theta-theta relative error " + num(rel) + ", step perturbation " + num(worst)};
    }

    Outcome doppler_ablation()
    {
        const ScenarioConfig cfg = load_scenario("case_study");
        const Trajectory traj = cfg.trajectory();
        double worst_on = 0.0;
        bool smaller = true;
        std::string d;
        for (int c : {0, 100, 199})
        {
            const auto states = cpi_states(traj, cfg.clock, c, cfg.intra_cpi_motion);
            const BeamPlan on = plan_beam(cfg.array, cfg.clock, states.front(), true);
            const BeamPlan off = plan_beam(cfg.array, cfg.clock, states.front(), false);
            const double r_on = comm_metrics(cfg.array, states, on, cfg.budget()).ripple_db;
            const double r_off = comm_metrics(cfg.array, states, off, cfg.budget()).ripple_db;
            smaller = smaller && r_on < r_off;
            worst_on = std::max(worst_on, r_on);
            d += " CPI " + std::to_string(c) + ": on " + num(r_on) + " dB, off " + num(r_off) + " dB;";
        }
        return {smaller && worst_on < 0.1, "ripple" + d};
    }

    std::string slurp(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    Outcome determinism()
    {
        const fs::path root = fs::temp_directory_path() / ("nfpb_acceptance_" + std::to_string(::getpid()));
        fs::create_directories(root);
        struct Case
        {
            std::string sub, config_text, csv;
        };
        const std::vector<Case> cases{
            {"crb-sweep", preset_text("crb_vs_range"), "crb_sweep.csv"},
            {"track", with_overrides("case_study", {{"run.num_cpis", "20"}}), "track.csv"},
            {"estimate-once", preset_text("mc_rmse"), "estimate.csv"},
            {"mc-rmse", with_overrides("mc_rmse", {{"mc.trials", "10"}}), "mc_rmse.csv"},
        };
        bool ok = true;
        std::string d;
        std::ostringstream sink;
        for (const Case &c : cases)
        {
            const fs::path cfg_path = root / (c.sub + ".cfg");
            std::ofstream(cfg_path) << c.config_text;
            std::string bytes[2];
            for (int run = 0; run < 2; ++run)
            {
                const fs::path out = root / (c.sub + "_" + std::to_string(run));
                const std::string cfg_s = cfg_path.string(), out_s = out.string();
                const char *argv[] = {"nfpb", c.sub.c_str(), "--config", cfg_s.c_str(), "--out", out_s.c_str(),
                                      "--seed", "7"};
                const int rc = run_cli(8, argv, sink, sink);
                bytes[run] = slurp(out / c.csv);
                ok = ok && rc == 0;
            }
            const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
            ok = ok && same;
            d += " " + c.sub + (same ? " identical" : " DIFFERS") + " (" + std::to_string(bytes[0].size()) + " B);";
        }
        fs::remove_all(root);
        return {ok, "two runs per subcommand, seed 7:" + d};
    }
} // namespace

int main(int argc, char **argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"RCRB trends against distance", rcrb_trends},
        {"transverse velocity degenerates in the far field", velocity_degeneration},
        {"estimator RMSE near the RCRB", estimator_efficiency},
        {"case-study tracking", case_study_tracking},
        {"tracking without trajectory knowledge", prior_free},
        {"far-field limit", farfield_limit},
        {"Fisher information against closed form", fim_oracle},
        {"Doppler compensation ablation", doppler_ablation},
        {"byte-identical reruns", determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i)
        selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        const int id = static_cast<int>(i + 1);
        if (!selected.empty() && !selected.count(id))
            continue;
        Outcome o;
        try
        {
            o = criteria[i].second();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
                  << "): " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
