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

#include "nfpb/kinematics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nfpb
{
    bool TargetState::is_valid() const
    {
        return r > 0.0 && std::isfinite(r) && theta > 0.0 && theta < kPi && std::isfinite(v_r) &&
               std::isfinite(v_theta);
    }

    void TargetState::validate() const
    {
        location().validate();
        if (!std::isfinite(v_r) || !std::isfinite(v_theta))
            throw std::domain_error("TargetState: velocity must be finite");
    }

    Eigen::Vector2d velocity_to_cartesian(const TargetState &s)
    {
        const double c = std::cos(s.theta), sn = std::sin(s.theta);
        return {s.v_r * c - s.v_theta * sn, s.v_r * sn + s.v_theta * c};
    }

    CartesianState to_cartesian(const TargetState &s)
    {
        return {s.location().cartesian(), velocity_to_cartesian(s)};
    }

    TargetState to_polar(const CartesianState &s)
    {
        const double r = s.position.norm();
        if (!(r > 0.0))
            throw std::domain_error("to_polar: position at the array centre");
        const double theta = std::atan2(s.position.y(), s.position.x());
        const Eigen::Vector2d radial = s.position / r;
        const Eigen::Vector2d transverse(-radial.y(), radial.x());
        return {theta, r, s.velocity.dot(radial), s.velocity.dot(transverse)};
    }

    TargetState kinematic_step(const TargetState &s, double dt, AngleUpdate mode)
    {
        TargetState next = s;
        next.r = s.r + s.v_r * dt;
        next.theta = mode == AngleUpdate::Dimensional ? s.theta + s.v_theta / s.r * dt : s.theta + s.v_theta * dt;
        if (!(next.r > 0.0))
            throw std::domain_error("kinematic_step: predicted distance " + std::to_string(next.r) + " <= 0");
        if (!(next.theta > 0.0 && next.theta < kPi))
            throw std::domain_error("kinematic_step: predicted angle " + std::to_string(next.theta) +
                                    " left (0, pi)");
        return next;
    }

    TargetState propagate_constant_velocity(const TargetState &s, double t)
    {
        CartesianState c = to_cartesian(s);
        c.position += c.velocity * t;
        return to_polar(c);
    }

    void CpiClock::validate() const
    {
        if (!(cpi_duration > 0.0) || !std::isfinite(cpi_duration))
            throw std::invalid_argument("CpiClock: cpi_duration must be positive");
        if (snapshots < 2)
            throw std::invalid_argument("CpiClock: snapshots must be >= 2");
    }

    namespace
    {
        struct CartesianAt
        {
            double t;

            CartesianState operator()(const StraightLine &s) const { return {s.start + s.velocity * t, s.velocity}; }

            CartesianState operator()(const CircularArc &a) const
            {
                const double phase = a.start_angle + a.angular_rate * t;
                const double radius = a.radius + a.radius_rate * t;
                const Eigen::Vector2d u(std::cos(phase), std::sin(phase));
                const Eigen::Vector2d u_perp(-u.y(), u.x());
                return {a.center + radius * u, a.radius_rate * u + radius * a.angular_rate * u_perp};
            }

            CartesianState operator()(const Spiral &s) const
            {
                const double swept = s.angular_rate * t;
                const double phase = s.start_angle + swept;
                const double radius = s.radius * std::exp(s.growth * swept);
                const Eigen::Vector2d u(std::cos(phase), std::sin(phase));
                const Eigen::Vector2d u_perp(-u.y(), u.x());
                return {s.center + radius * u, radius * s.angular_rate * (s.growth * u + u_perp)};
            }

            CartesianState operator()(const WaypointSequence &w) const
            {
                if (w.points.empty())
                    throw std::invalid_argument("WaypointSequence: no waypoints");
                if (w.points.size() == 1 || w.speed <= 0.0)
                    return {w.points.front(), Eigen::Vector2d::Zero()};
                double remaining = w.speed * t;
                for (std::size_t i = 0; i + 1 < w.points.size(); ++i)
                {
                    const Eigen::Vector2d leg = w.points[i + 1] - w.points[i];
                    const double len = leg.norm();
                    if (len == 0.0)
                        continue;
                    if (remaining < len)
                        return {w.points[i] + leg * (remaining / len), leg * (w.speed / len)};
                    remaining -= len;
                }
                return {w.points.back(), Eigen::Vector2d::Zero()};
            }
        };

        struct KindName
        {
            std::string operator()(const StraightLine &) const { return "line"; }
            std::string operator()(const CircularArc &) const { return "arc"; }
            std::string operator()(const Spiral &) const { return "spiral"; }
            std::string operator()(const WaypointSequence &) const { return "waypoints"; }
        };
    } // namespace

    std::string Trajectory::kind() const { return std::visit(KindName{}, shape); }

    CartesianState Trajectory::cartesian_at(double t) const { return std::visit(CartesianAt{t}, shape); }

    TargetState Trajectory::state_at(double t) const
    {
        const TargetState s = to_polar(cartesian_at(t));
        if (!s.is_valid())
            throw std::domain_error("trajectory '" + kind() + "' leaves the front half-plane at t = " +
                                    std::to_string(t) + " s");
        return s;
    }

    std::vector<TargetState> sample_trajectory(const Trajectory &traj, const CpiClock &clock)
    {
        clock.validate();
        if (!(traj.duration >= 0.0))
            throw std::invalid_argument("Trajectory: duration must be non-negative");
        const double ts = clock.snapshot_period();
        // Small guard so that duration = K * cpi yields exactly K * M samples.
        const auto count = static_cast<long>(std::floor(traj.duration / ts + 1e-9));
        std::vector<TargetState> out;
        out.reserve(static_cast<std::size_t>(count));
        for (long m = 0; m < count; ++m)
            out.push_back(traj.state_at(static_cast<double>(m) * ts));
        return out;
    }

    std::vector<TargetState> constant_velocity_states(const TargetState &start, const CpiClock &clock)
    {
        std::vector<TargetState> out;
        out.reserve(clock.snapshots);
        const double ts = clock.snapshot_period();
        for (int m = 0; m < clock.snapshots; ++m)
            out.push_back(m == 0 ? start : propagate_constant_velocity(start, m * ts));
        return out;
    }

    std::vector<TargetState> cpi_states(const Trajectory &traj, const CpiClock &clock, int cpi_index,
                                        IntraCpiMotion motion)
    {
        clock.validate();
        const double t0 = cpi_index * clock.cpi_duration;
        if (motion == IntraCpiMotion::Frozen)
            return constant_velocity_states(traj.state_at(t0), clock);
        std::vector<TargetState> out;
        out.reserve(clock.snapshots);
        const double ts = clock.snapshot_period();
        for (int m = 0; m < clock.snapshots; ++m)
            out.push_back(traj.state_at(t0 + m * ts));
        return out;
    }

    double wrap_angle(double a)
    {
        double w = std::remainder(a, 2.0 * kPi); // [-pi, pi]
        if (w <= -kPi)
            w += 2.0 * kPi;
        return w;
    }

} // namespace nfpb
