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

#ifndef NFPB_CONFIG_HPP
#define NFPB_CONFIG_HPP

#include "nfpb/echo.hpp"
#include "nfpb/ekf.hpp"
#include "nfpb/kinematics.hpp"
#include "nfpb/ml_estimator.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nfpb
{
    /// Configuration problem tied to one key (or to a line, for syntax errors).
    class ConfigError : public std::runtime_error
    {
    public:
        ConfigError(std::string key, const std::string &message)
            : std::runtime_error(key + ": " + message), key_(std::move(key))
        {
        }
        const std::string &key() const { return key_; }

    private:
        std::string key_;
    };

    /// Flat 'dotted.key = value' text, '#' starts a comment. Keys keep file
    /// order; a repeated key is an error.
    std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string &text);

    enum class SearchMode
    {
        Window, // around a perturbed-truth prior, as after initial access
        Global,
    };

    /// Trajectory block of a scenario. Only the fields of the selected kind
    /// are used; the trajectory lasts num_cpis CPIs.
    struct TrajectorySpec
    {
        std::string kind = "line"; // line, arc, spiral, waypoints
        Eigen::Vector2d center{0.0, 0.0};
        double radius = 18.0;
        double radius_rate = 0.0;
        double growth = 0.0;
        double start_angle = kPi / 2.0;
        double angular_rate = 0.0;
        Eigen::Vector2d start{0.0, 20.0};
        Eigen::Vector2d velocity{0.0, 0.0};
        std::vector<Eigen::Vector2d> waypoints;
        double speed = 0.0;

        Trajectory build(double duration) const;
    };

    struct ScenarioConfig
    {
        ArrayConfig array;
        CpiClock clock;
        double tx_power_dbm = 30.0;
        double noise_power_dbm = -50.0;
        PathLossMode path_loss = PathLossMode::UnitReflection;

        TrajectorySpec trajectory_spec;
        TargetState target{kPi / 2, 20.0, 3.0, 2.0}; // fixed state for sweeps and Monte Carlo

        WindowPolicy window;
        EstimatorOptions estimator;
        SearchMode search = SearchMode::Window;

        NoiseModel noise;
        Eigen::Vector4d init_sigma{0.05 * kPi / 180.0, 0.1, 0.2, 0.5}; // initial-access accuracy
        double gate = kChiSquare4Gate;
        int max_coasts = 5;
        bool doppler_compensation = true;
        IntraCpiMotion intra_cpi_motion = IntraCpiMotion::Continuous;

        int num_cpis = 200;
        std::uint64_t seed = 1;
        bool write_csv = true;
        bool write_json = true;

        double sweep_r_min_over_rayleigh = 0.02;
        double sweep_r_max_over_rayleigh = 3.0;
        int sweep_points = 12;

        int mc_trials = 100;
        std::vector<double> mc_snr_db; // empty: use the budget noise power
        double mc_window_sigmas = 5.0;
        double mc_window_offset_sigmas = 1.0;

        LinkBudget budget() const { return LinkBudget::from_dbm(tx_power_dbm, noise_power_dbm, path_loss); }
        TrackerConfig tracker() const;
        Trajectory trajectory() const { return trajectory_spec.build(num_cpis * clock.cpi_duration); }
        void validate() const; // throws ConfigError naming the key

        /// Every key in schema order, values in shortest round-trip form.
        std::string canonical_text() const;
        std::uint64_t hash() const; // FNV-1a of canonical_text()
    };

    /// Strict parse: unknown keys, malformed values and missing required keys
    /// (array.N, array.carrier_frequency_hz) throw ConfigError.
    ScenarioConfig parse_scenario(const std::string &text);

    /// Names of the configurations compiled into the library.
    std::vector<std::string> preset_names();
    /// Text of a preset, or throws ConfigError("config", ...).
    std::string preset_text(const std::string &name);

    /// Reads 'name_or_path' from disk if such a file exists, else falls back
    /// to the preset of that name.
    ScenarioConfig load_scenario(const std::string &name_or_path);

    /// Shortest decimal that reads back to the same double.
    std::string format_number(double v);

} // namespace nfpb

#endif
