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

#include "nfpb/config.hpp"

#include "nfpb_presets.inc"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace nfpb
{
    namespace
    {
        std::string trim(const std::string &s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        }

        double to_double(const std::string &key, const std::string &v)
        {
            double out = 0.0;
            const char *first = v.data();
            const char *last = v.data() + v.size();
            if (!v.empty() && v[0] == '+')
                ++first;
            const auto res = std::from_chars(first, last, out);
            if (res.ec != std::errc() || res.ptr != last || !std::isfinite(out))
                throw ConfigError(key, "expected a finite number, got '" + v + "'");
            return out;
        }

        long long to_integer(const std::string &key, const std::string &v)
        {
            long long out = 0;
            const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
            if (res.ec != std::errc() || res.ptr != v.data() + v.size())
                throw ConfigError(key, "expected an integer, got '" + v + "'");
            return out;
        }

        int to_int(const std::string &key, const std::string &v)
        {
            const long long x = to_integer(key, v);
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
                throw ConfigError(key, "integer out of range");
            return static_cast<int>(x);
        }

        std::uint64_t to_u64(const std::string &key, const std::string &v)
        {
            std::uint64_t out = 0;
            const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
            if (res.ec != std::errc() || res.ptr != v.data() + v.size())
                throw ConfigError(key, "expected an unsigned 64-bit integer, got '" + v + "'");
            return out;
        }

        bool to_bool(const std::string &key, const std::string &v)
        {
            if (v == "true" || v == "on" || v == "1")
                return true;
            if (v == "false" || v == "off" || v == "0")
                return false;
            throw ConfigError(key, "expected true or false, got '" + v + "'");
        }

        std::vector<double> to_list(const std::string &key, const std::string &v)
        {
            std::vector<double> out;
            if (trim(v).empty())
                return out;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ','))
                out.push_back(to_double(key, trim(item)));
            return out;
        }

        std::string join(const std::vector<double> &v, const char *sep = ",")
        {
            std::string out;
            for (std::size_t i = 0; i < v.size(); ++i)
                out += (i ? sep : "") + format_number(v[i]);
            return out;
        }

        std::vector<Eigen::Vector2d> to_points(const std::string &key, const std::string &v)
        {
            std::vector<Eigen::Vector2d> out;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ';'))
            {
                if (trim(item).empty())
                    continue;
                const auto xy = to_list(key, item);
                if (xy.size() != 2)
                    throw ConfigError(key, "waypoints are 'x,y' pairs separated by ';'");
                out.emplace_back(xy[0], xy[1]);
            }
            return out;
        }

        double deg_to_rad(double deg) { return deg / 180.0 * kPi; }
        double rad_to_deg(double rad) { return rad / kPi * 180.0; }

        struct Field
        {
            const char *key;
            std::function<void(ScenarioConfig &, const std::string &, const std::string &)> set;
            std::function<std::string(const ScenarioConfig &)> get;
        };

#define NFPB_NUM(KEY, EXPR)                                                                                            \
    Field                                                                                                              \
    {                                                                                                                  \
        KEY, [](ScenarioConfig &c, const std::string &k, const std::string &v) { EXPR = to_double(k, v); },            \
            [](const ScenarioConfig &c) { return format_number(EXPR); }                                               \
    }
#define NFPB_INT(KEY, EXPR)                                                                                            \
    Field                                                                                                              \
    {                                                                                                                  \
        KEY, [](ScenarioConfig &c, const std::string &k, const std::string &v) { EXPR = to_int(k, v); },               \
            [](const ScenarioConfig &c) { return std::to_string(EXPR); }                                              \
    }
#define NFPB_DEG(KEY, EXPR)                                                                                            \
    Field                                                                                                              \
    {                                                                                                                  \
        KEY, [](ScenarioConfig &c, const std::string &k, const std::string &v) { EXPR = deg_to_rad(to_double(k, v)); }, \
            [](const ScenarioConfig &c) { return format_number(rad_to_deg(EXPR)); }                                   \
    }
#define NFPB_BOOL(KEY, EXPR)                                                                                           \
    Field                                                                                                              \
    {                                                                                                                  \
        KEY, [](ScenarioConfig &c, const std::string &k, const std::string &v) { EXPR = to_bool(k, v); },              \
            [](const ScenarioConfig &c) { return std::string((EXPR) ? "true" : "false"); }                            \
    }

        const std::vector<Field> &schema()
        {
            static const std::vector<Field> fields{
                NFPB_INT("array.N", c.array.num_elements),
                NFPB_NUM("array.carrier_frequency_hz", c.array.carrier_frequency_hz),
                Field{"array.spacing_over_halflambda",
                      [](ScenarioConfig &c, const std::string &k, const std::string &v) {
                          const double ratio = to_double(k, v);
                          if (!(ratio > 0.0))
                              throw ConfigError(k, "must be positive");
                          c.array.element_spacing_m = -ratio; // resolved once the carrier is known
                      },
                      [](const ScenarioConfig &c) {
                          return format_number(c.array.spacing() / (0.5 * c.array.wavelength()));
                      }},
                NFPB_NUM("clock.cpi_s", c.clock.cpi_duration),
                NFPB_INT("clock.snapshots", c.clock.snapshots),
                NFPB_NUM("budget.tx_power_dbm", c.tx_power_dbm),
                NFPB_NUM("budget.noise_power_dbm", c.noise_power_dbm),
                Field{"budget.path_loss",
                      [](ScenarioConfig &c, const std::string &k, const std::string &v) {
                          if (v == "unit")
                              c.path_loss = PathLossMode::UnitReflection;
                          else if (v == "radar")
                              c.path_loss = PathLossMode::RadarEquation;
                          else
                              throw ConfigError(k, "expected 'unit' or 'radar', got '" + v + "'");
                      },
                      [](const ScenarioConfig &c) {
                          return std::string(c.path_loss == PathLossMode::UnitReflection ? "unit" : "radar");
                      }},
                Field{"trajectory.kind",
                      [](ScenarioConfig &c, const std::string &k, const std::string &v) {
                          if (v != "line" && v != "arc" && v != "spiral" && v != "waypoints")
                              throw ConfigError(k, "expected line, arc, spiral or waypoints, got '" + v + "'");
                          c.trajectory_spec.kind = v;
                      },
                      [](const ScenarioConfig &c) { return c.trajectory_spec.kind; }},
                NFPB_NUM("trajectory.center_x", c.trajectory_spec.center.x()),
                NFPB_NUM("trajectory.center_y", c.trajectory_spec.center.y()),
                NFPB_NUM("trajectory.radius", c.trajectory_spec.radius),
                NFPB_NUM("trajectory.radius_rate", c.trajectory_spec.radius_rate),
                NFPB_NUM("trajectory.growth", c.trajectory_spec.growth),
                NFPB_DEG("trajectory.start_angle_deg", c.trajectory_spec.start_angle),
                NFPB_DEG("trajectory.angular_rate_deg_s", c.trajectory_spec.angular_rate),
                NFPB_NUM("trajectory.start_x", c.trajectory_spec.start.x()),
                NFPB_NUM("trajectory.start_y", c.trajectory_spec.start.y()),
                NFPB_NUM("trajectory.velocity_x", c.trajectory_spec.velocity.x()),
                NFPB_NUM("trajectory.velocity_y", c.trajectory_spec.velocity.y()),
                Field{"trajectory.waypoints",
                      [](ScenarioConfig &c, const std::string &k, const std::string &v) {
                          c.trajectory_spec.waypoints = to_points(k, v);
                      },
                      [](const ScenarioConfig &c) {
                          std::string out;
                          for (std::size_t i = 0; i < c.trajectory_spec.waypoints.size(); ++i)
                              out += (i ? ";" : "") + format_number(c.trajectory_spec.waypoints[i].x()) + "," +
                                     format_number(c.trajectory_spec.waypoints[i].y());
                          return out;
                      }},
                NFPB_NUM("trajectory.speed", c.trajectory_spec.speed),
                NFPB_DEG("target.theta_deg", c.target.theta),
                NFPB_NUM("target.r_m", c.target.r),
                NFPB_NUM("target.v_r", c.target.v_r),
                NFPB_NUM("target.v_theta", c.target.v_theta),
                NFPB_INT("estimator.grid_theta", c.window.counts[0]),
                NFPB_INT("estimator.grid_r", c.window.counts[1]),
                NFPB_INT("estimator.grid_vr", c.window.counts[2]),
                NFPB_INT("estimator.grid_vtheta", c.window.counts[3]),
                NFPB_DEG("estimator.floor_theta_deg", c.window.floor[0]),
                NFPB_NUM("estimator.floor_r", c.window.floor[1]),
                NFPB_NUM("estimator.floor_vr", c.window.floor[2]),
                NFPB_NUM("estimator.floor_vtheta", c.window.floor[3]),
                NFPB_NUM("estimator.window_sigmas", c.window.sigmas),
                NFPB_NUM("estimator.max_spacing", c.window.max_spacing),
                NFPB_INT("estimator.max_count", c.window.max_count),
                NFPB_INT("estimator.max_iterations", c.estimator.max_iterations),
                NFPB_NUM("estimator.tolerance", c.estimator.tolerance),
                NFPB_INT("estimator.restarts", c.estimator.restarts),
                NFPB_NUM("estimator.low_confidence_margin", c.estimator.low_confidence_margin),
                Field{"estimator.search",
                      [](ScenarioConfig &c, const std::string &k, const std::string &v) {
                          if (v == "window")
                              c.search = SearchMode::Window;
                          else if (v == "global")
                              c.search = SearchMode::Global;
                          else
                              throw ConfigError(k, "expected 'window' or 'global', got '" + v + "'");
                      },
                      [](const ScenarioConfig &c) {
                          return std::string(c.search == SearchMode::Window ? "window" : "global");
                      }},
                NFPB_NUM("tracker.q_a", c.noise.q_a),
                Field{"tracker.r_mode",
                      [](ScenarioConfig &c, const std::string &k, const std::string &v) {
                          if (v == "crb")
                              c.noise.r_mode = MeasurementNoise::CrbPlugIn;
                          else if (v == "fixed")
                              c.noise.r_mode = MeasurementNoise::Fixed;
                          else
                              throw ConfigError(k, "expected 'crb' or 'fixed', got '" + v + "'");
                      },
                      [](const ScenarioConfig &c) {
                          return std::string(c.noise.r_mode == MeasurementNoise::CrbPlugIn ? "crb" : "fixed");
                      }},
                Field{"tracker.fixed_r_sigma",
                      [](ScenarioConfig &c, const std::string &k, const std::string &v) {
                          const auto s = to_list(k, v);
                          if (s.size() != 4 || std::any_of(s.begin(), s.end(), [](double x) { return x < 0.0; }))
                              throw ConfigError(k, "expected four non-negative standard deviations");
                          c.noise.fixed_r = Eigen::Vector4d(s[0], s[1], s[2], s[3]).cwiseAbs2().asDiagonal();
                      },
                      [](const ScenarioConfig &c) {
                          const Eigen::Vector4d d = c.noise.fixed_r.diagonal().cwiseSqrt();
                          return join({d[0], d[1], d[2], d[3]});
                      }},
                NFPB_DEG("tracker.init_sigma_theta_deg", c.init_sigma[0]),
                NFPB_NUM("tracker.init_sigma_r", c.init_sigma[1]),
                NFPB_NUM("tracker.init_sigma_vr", c.init_sigma[2]),
                NFPB_NUM("tracker.init_sigma_vtheta", c.init_sigma[3]),
                NFPB_NUM("tracker.gate", c.gate),
                NFPB_INT("tracker.max_coasts", c.max_coasts),
                NFPB_BOOL("tracker.doppler_compensation", c.doppler_compensation),
                Field{"kinematics.angle_update",
                      [](ScenarioConfig &c, const std::string &k, const std::string &v) {
                          if (v == "dimensional")
                              c.noise.angle_update = AngleUpdate::Dimensional;
                          else if (v == "angular-rate")
                              c.noise.angle_update = AngleUpdate::AngularRate;
                          else
                              throw ConfigError(k, "expected 'dimensional' or 'angular-rate', got '" + v + "'");
                      },
                      [](const ScenarioConfig &c) {
                          return std::string(c.noise.angle_update == AngleUpdate::Dimensional ? "dimensional"
                                                                                                : "angular-rate");
                      }},
                Field{"intra_cpi_motion",
                      [](ScenarioConfig &c, const std::string &k, const std::string &v) {
                          if (v == "continuous")
                              c.intra_cpi_motion = IntraCpiMotion::Continuous;
                          else if (v == "frozen")
                              c.intra_cpi_motion = IntraCpiMotion::Frozen;
                          else
                              throw ConfigError(k, "expected 'continuous' or 'frozen', got '" + v + "'");
                      },
                      [](const ScenarioConfig &c) {
                          return std::string(c.intra_cpi_motion == IntraCpiMotion::Continuous ? "continuous"
                                                                                               : "frozen");
                      }},
                NFPB_INT("run.num_cpis", c.num_cpis),
                Field{"run.seed", [](ScenarioConfig &c, const std::string &k,
                                     const std::string &v) { c.seed = to_u64(k, v); },
                      [](const ScenarioConfig &c) { return std::to_string(c.seed); }},
                Field{"run.outputs",
                      [](ScenarioConfig &c, const std::string &k, const std::string &v) {
                          c.write_csv = c.write_json = false;
                          std::stringstream ss(v);
                          std::string item;
                          while (std::getline(ss, item, ','))
                          {
                              item = trim(item);
                              if (item == "csv")
                                  c.write_csv = true;
                              else if (item == "json")
                                  c.write_json = true;
                              else
                                  throw ConfigError(k, "outputs are a list of 'csv' and 'json'");
                          }
                      },
                      [](const ScenarioConfig &c) {
                          std::string out = c.write_csv ? "csv" : "";
                          if (c.write_json)
                              out += out.empty() ? "json" : ",json";
                          return out;
                      }},
                NFPB_NUM("sweep.r_min_over_rayleigh", c.sweep_r_min_over_rayleigh),
                NFPB_NUM("sweep.r_max_over_rayleigh", c.sweep_r_max_over_rayleigh),
                NFPB_INT("sweep.points", c.sweep_points),
                NFPB_INT("mc.trials", c.mc_trials),
                Field{"mc.snr_db", [](ScenarioConfig &c, const std::string &k,
                                      const std::string &v) { c.mc_snr_db = to_list(k, v); },
                      [](const ScenarioConfig &c) { return join(c.mc_snr_db); }},
                NFPB_NUM("mc.window_sigmas", c.mc_window_sigmas),
                NFPB_NUM("mc.window_offset_sigmas", c.mc_window_offset_sigmas),
            };
            return fields;
        }

#undef NFPB_NUM
#undef NFPB_INT
#undef NFPB_DEG
#undef NFPB_BOOL

        void require(bool ok, const char *key, const std::string &message)
        {
            if (!ok)
                throw ConfigError(key, message);
        }
    } // namespace

    std::string format_number(double v)
    {
        if (std::isnan(v))
            return "nan";
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        std::array<char, 64> buf{};
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        return std::string(buf.data(), res.ptr);
    }

    std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string &text)
    {
        std::vector<std::pair<std::string, std::string>> out;
        std::set<std::string> seen;
        std::stringstream ss(text);
        std::string line;
        int lineno = 0;
        while (std::getline(ss, line))
        {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.resize(hash);
            line = trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError("line " + std::to_string(lineno), "empty key");
            if (!seen.insert(key).second)
                throw ConfigError(key, "key given more than once");
            out.emplace_back(std::move(key), std::move(value));
        }
        return out;
    }

    Trajectory TrajectorySpec::build(double duration) const
    {
        if (kind == "line")
            return {StraightLine{start, velocity}, duration};
        if (kind == "arc")
            return {CircularArc{center, radius, radius_rate, start_angle, angular_rate}, duration};
        if (kind == "spiral")
            return {Spiral{center, radius, growth, start_angle, angular_rate}, duration};
        if (kind == "waypoints")
            return {WaypointSequence{waypoints, speed}, duration};
        throw ConfigError("trajectory.kind", "unknown trajectory kind '" + kind + "'");
    }

    TrackerConfig ScenarioConfig::tracker() const
    {
        TrackerConfig t;
        t.array = array;
        t.clock = clock;
        t.noise = noise;
        t.window = window;
        t.estimator = estimator;
        t.estimator.tx_power_w = dbm_to_watts(tx_power_dbm);
        t.gate = gate;
        t.max_coasts = max_coasts;
        return t;
    }

    void ScenarioConfig::validate() const
    {
        require(array.num_elements >= 2, "array.N", "must be at least 2");
        require(array.carrier_frequency_hz > 0.0, "array.carrier_frequency_hz", "must be positive");
        require(array.spacing() > 0.0, "array.spacing_over_halflambda", "must be positive");
        require(clock.cpi_duration > 0.0, "clock.cpi_s", "must be positive");
        require(clock.snapshots >= 2, "clock.snapshots", "must be at least 2");
        require(noise_power_dbm < 1000.0, "budget.noise_power_dbm", "out of range");
        require(tx_power_dbm < 1000.0, "budget.tx_power_dbm", "out of range");
        const char *grid_keys[4] = {"estimator.grid_theta", "estimator.grid_r", "estimator.grid_vr",
                                    "estimator.grid_vtheta"};
        for (int i = 0; i < 4; ++i)
            require(window.counts[i] >= 3 && window.counts[i] % 2 == 1, grid_keys[i], "must be odd and at least 3");
        require((window.floor.array() >= 0.0).all(), "estimator.floor_theta_deg", "floors must be non-negative");
        require(window.sigmas > 0.0, "estimator.window_sigmas", "must be positive");
        require(window.max_spacing > 0.0, "estimator.max_spacing", "must be positive");
        require(window.max_count >= 3, "estimator.max_count", "must be at least 3");
        require(estimator.max_iterations >= 0, "estimator.max_iterations", "must be non-negative");
        require(estimator.tolerance > 0.0, "estimator.tolerance", "must be positive");
        require(estimator.restarts >= 0, "estimator.restarts", "must be non-negative");
        require(noise.q_a >= 0.0, "tracker.q_a", "must be non-negative");
        require((init_sigma.array() >= 0.0).all(), "tracker.init_sigma_r", "must be non-negative");
        require(gate > 0.0, "tracker.gate", "must be positive");
        require(max_coasts >= 0, "tracker.max_coasts", "must be non-negative");
        require(num_cpis >= 0, "run.num_cpis", "must be non-negative");
        require(target.r > 0.0, "target.r_m", "must be positive");
        require(target.theta > 0.0 && target.theta < kPi, "target.theta_deg", "must lie in (0, 180)");
        require(sweep_points >= 1, "sweep.points", "must be at least 1");
        require(sweep_r_min_over_rayleigh > 0.0 && sweep_r_max_over_rayleigh >= sweep_r_min_over_rayleigh,
                "sweep.r_min_over_rayleigh", "need 0 < min <= max");
        require(mc_trials >= 0, "mc.trials", "must be non-negative");
        require(mc_window_sigmas > 0.0, "mc.window_sigmas", "must be positive");
        require(mc_window_offset_sigmas >= 0.0, "mc.window_offset_sigmas", "must be non-negative");
        if (trajectory_spec.kind == "waypoints")
            require(!trajectory_spec.waypoints.empty(), "trajectory.waypoints", "at least one point is required");
        try
        {
            if (num_cpis > 0)
                (void)trajectory().initial_state();
        }
        catch (const std::exception &e)
        {
            throw ConfigError("trajectory.kind", e.what());
        }
    }

    std::string ScenarioConfig::canonical_text() const
    {
        std::string out;
        for (const Field &f : schema())
            out += std::string(f.key) + " = " + f.get(*this) + "\n";
        return out;
    }

    std::uint64_t ScenarioConfig::hash() const
    {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char ch : canonical_text())
        {
            h ^= ch;
            h *= 1099511628211ull;
        }
        return h;
    }

    ScenarioConfig parse_scenario(const std::string &text)
    {
        ScenarioConfig c;
        std::set<std::string> given;
        for (const auto &[key, value] : parse_key_values(text))
        {
            const auto &fields = schema();
            const auto it = std::find_if(fields.begin(), fields.end(), [&](const Field &f) { return key == f.key; });
            if (it == fields.end())
                throw ConfigError(key, "unknown key");
            it->set(c, key, value);
            given.insert(key);
        }
        for (const char *key : {"array.N", "array.carrier_frequency_hz"})
            if (!given.count(key))
                throw ConfigError(key, "required key is missing");
        require(c.array.carrier_frequency_hz > 0.0, "array.carrier_frequency_hz", "must be positive");
        if (c.array.element_spacing_m < 0.0)
            c.array.element_spacing_m = -c.array.element_spacing_m * 0.5 * c.array.wavelength();
        c.validate();
        return c;
    }

    std::vector<std::string> preset_names()
    {
        std::vector<std::string> out;
        for (const auto &p : kPresets)
            out.emplace_back(p.name);
        return out;
    }

    std::string preset_text(const std::string &name)
    {
        for (const auto &p : kPresets)
            if (name == p.name)
                return p.text;
        throw ConfigError("config", "no file or preset named '" + name + "'");
    }

    ScenarioConfig load_scenario(const std::string &name_or_path)
    {
        std::ifstream in(name_or_path);
        if (in)
        {
            std::stringstream ss;
            ss << in.rdbuf();
            return parse_scenario(ss.str());
        }
        return parse_scenario(preset_text(name_or_path));
    }

} // namespace nfpb
