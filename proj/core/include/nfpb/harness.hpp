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

#ifndef NFPB_HARNESS_HPP
#define NFPB_HARNESS_HPP

#include "nfpb/beamformer.hpp"
#include "nfpb/config.hpp"
#include "nfpb/fisher.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nfpb
{
    /// One CPI of a tracking run. States are at the start of the CPI.
    struct RunRecord
    {
        int cpi_index = 0;
        TargetState truth;
        TargetState estimate;
        TargetState predicted; // prior the beam was built from
        TargetState posterior;
        Eigen::Vector4d rcrb = Eigen::Vector4d::Zero();
        double gain_mean = 0.0;
        double rate_mean_bps_hz = 0.0;
        double genie_rate_mean = 0.0;
        double gain_loss_db = 0.0;
        bool gated_out = false;

        // Not written to CSV.
        Eigen::Matrix4d posterior_covariance = Eigen::Matrix4d::Zero();
        Eigen::Matrix4d measurement_noise = Eigen::Matrix4d::Zero();
        double ripple_db = 0.0;
    };

    struct RunResult
    {
        std::vector<RunRecord> records;
        bool lost = false;
        std::string failure; // non-empty when the run stopped early

        double nees_mean = 0.0; // posterior NEES over the middle third of the CPIs
        int nees_count = 0;
        double median_position_error_m = 0.0;
        double median_gain_loss_db = 0.0;
        double wall_time_s = 0.0;

        bool ok() const { return failure.empty(); }
    };

    /// Options that are not part of the scenario itself.
    struct RunOptions
    {
        bool noiseless = false; // no receiver noise; the tracker is told sigma^2 = 0
        std::optional<TargetState> truth_override; // static target in place of the trajectory
    };

    /// Initial access, then for every CPI: beam from the prediction, echo along
    /// the true trajectory, estimate, update, predict, record. A lost track or
    /// a runtime error stops the loop with the records so far.
    RunResult run_nfpb(const ScenarioConfig &config, const RunOptions &options = {});

    std::vector<SweepRow> run_crb_sweep(const ScenarioConfig &config);

    struct McRow
    {
        double snr_db = 0.0;
        std::string param;
        double rmse = 0.0;
        double rcrb = 0.0;
        double ratio = 0.0;
        int trials = 0;
    };

    /// Estimator RMSE at config.target against the RCRB. The beam is focused
    /// on the target and every trial searches a window of mc_window_sigmas
    /// RCRBs whose centre is offset at random by up to mc_window_offset_sigmas.
    std::vector<McRow> run_mc_rmse(const ScenarioConfig &config);

    /// Post-beamforming SNR P |beta|^2 ||u||^2 / sigma^2 of a focused beam at the state.
    double post_beamforming_snr(const ScenarioConfig &config, const TargetState &state);

    struct SingleEstimate
    {
        TargetState truth;
        EstimateReport report;
    };

    /// One CPI at config.target: window search around a perturbed truth, or a
    /// global search with a single-element probe beam.
    SingleEstimate run_estimate_once(const ScenarioConfig &config);

    // CSV writers; numbers in shortest round-trip form.
    void write_track_csv(std::ostream &os, const std::vector<RunRecord> &records);
    void write_crb_sweep_csv(std::ostream &os, const std::vector<SweepRow> &rows);
    void write_mc_rmse_csv(std::ostream &os, const std::vector<McRow> &rows);
    void write_estimate_csv(std::ostream &os, const SingleEstimate &est);

    extern const char *const kTrackCsvHeader;
    extern const char *const kCrbSweepCsvHeader;
    extern const char *const kMcRmseCsvHeader;
    extern const char *const kEstimateCsvHeader;

    /// summary.json for one subcommand run.
    std::string summary_json(const ScenarioConfig &config, const std::string &subcommand, double wall_time_s,
                             const RunResult *track = nullptr);

    const char *version();

} // namespace nfpb

#endif
