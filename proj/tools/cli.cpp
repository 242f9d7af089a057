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

#include "cli.hpp"

#include "nfpb/harness.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace nfpb
{
    namespace
    {
        namespace fs = std::filesystem;

        void write_file(const fs::path &path, const std::function<void(std::ostream &)> &body)
        {
            std::ofstream os(path, std::ios::binary | std::ios::trunc);
            if (!os)
                throw std::runtime_error("cannot open " + path.string() + " for writing");
            body(os);
            if (!os)
                throw std::runtime_error("write to " + path.string() + " failed");
        }

        double seconds_since(std::chrono::steady_clock::time_point t0)
        {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    } // namespace

    int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
    {
        CLI::App app{"Near-field sensing-enabled predictive beamforming simulator", "nfpb"};
        app.require_subcommand(1);
        app.fallthrough();

        std::string config_name;
        std::string out_dir = ".";
        std::uint64_t seed = 0;
        app.add_option("--config", config_name, "Config file, or the name of a built-in preset ("
                                                    + [] {
                                                          std::string s;
                                                          for (const auto &n : preset_names())
                                                              s += (s.empty() ? "" : ", ") + n;
                                                          return s;
                                                      }() + ")")
            ->required();
        app.add_option("--out", out_dir, "Output directory")->capture_default_str();
        CLI::Option *seed_opt = app.add_option("--seed", seed, "Master seed, overrides run.seed");

        app.add_subcommand("crb-sweep", "RCRB against distance (crb_sweep.csv)");
        app.add_subcommand("track", "Closed-loop tracking run (track.csv)");
        app.add_subcommand("estimate-once", "Single-CPI estimate at target.* (estimate.csv)");
        app.add_subcommand("mc-rmse", "Monte Carlo RMSE against the RCRB (mc_rmse.csv)");

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::ParseError &e)
        {
            const int code = app.exit(e, out, err);
            return code == 0 ? kExitOk : kExitConfigError;
        }

        const std::string sub = app.get_subcommands().front()->get_name();
        ScenarioConfig config;
        try
        {
            config = load_scenario(config_name);
            if (seed_opt->count() > 0)
                config.seed = seed;
        }
        catch (const ConfigError &e)
        {
            err << "config error: " << e.what() << '\n';
            return kExitConfigError;
        }
        catch (const std::exception &e)
        {
            err << "config error: " << e.what() << '\n';
            return kExitConfigError;
        }

        try
        {
            const auto t0 = std::chrono::steady_clock::now();
            const fs::path dir(out_dir);
            fs::create_directories(dir);
            const RunResult *track_result = nullptr;
            RunResult run;

            if (sub == "track")
            {
                run = run_nfpb(config);
                track_result = &run;
                if (config.write_csv)
                    write_file(dir / "track.csv", [&](std::ostream &os) { write_track_csv(os, run.records); });
                out << "track: " << run.records.size() << " CPIs, median position error "
                    << format_number(run.median_position_error_m) << " m, median gain loss "
                    << format_number(run.median_gain_loss_db) << " dB, NEES "
                    << format_number(run.nees_mean) << '\n';
            }
            else if (sub == "crb-sweep")
            {
                const auto rows = run_crb_sweep(config);
                if (config.write_csv)
                    write_file(dir / "crb_sweep.csv", [&](std::ostream &os) { write_crb_sweep_csv(os, rows); });
                out << "crb-sweep: " << rows.size() << " ranges\n";
            }
            else if (sub == "estimate-once")
            {
                const SingleEstimate est = run_estimate_once(config);
                if (config.write_csv)
                    write_file(dir / "estimate.csv", [&](std::ostream &os) { write_estimate_csv(os, est); });
                out << "estimate-once: objective " << format_number(est.report.objective)
                    << (est.report.low_confidence ? " (low confidence)" : "") << '\n';
            }
            else
            {
                const auto rows = run_mc_rmse(config);
                if (config.write_csv)
                    write_file(dir / "mc_rmse.csv", [&](std::ostream &os) { write_mc_rmse_csv(os, rows); });
                out << "mc-rmse: " << rows.size() << " rows\n";
            }

            if (config.write_json)
                write_file(dir / "summary.json", [&](std::ostream &os) {
                    os << summary_json(config, sub, seconds_since(t0), track_result);
                });
            if (track_result && !track_result->ok())
            {
                err << "error: " << track_result->failure << '\n';
                return kExitRuntimeFailure;
            }
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << '\n';
            return kExitRuntimeFailure;
        }
        return kExitOk;
    }

} // namespace nfpb
