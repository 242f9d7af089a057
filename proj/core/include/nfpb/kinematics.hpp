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

#ifndef NFPB_KINEMATICS_HPP
#define NFPB_KINEMATICS_HPP

#include "nfpb/array_geometry.hpp"

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace nfpb
{
    /// Polar-domain mobility status: angle, distance, radial velocity
    /// (positive receding) and transverse velocity (positive towards
    /// increasing angle). Velocities are in m/s.
    struct TargetState
    {
        double theta = kPi / 2.0;
        double r = 1.0;
        double v_r = 0.0;
        double v_theta = 0.0;

        PolarLocation location() const { return {theta, r}; }
        Eigen::Vector4d to_vector() const { return {theta, r, v_r, v_theta}; }
        static TargetState from_vector(const Eigen::Vector4d &v) { return {v[0], v[1], v[2], v[3]}; }

        bool is_valid() const;
        void validate() const; // throws std::domain_error
    };

    struct CartesianState
    {
        Eigen::Vector2d position = Eigen::Vector2d::Zero();
        Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
    };

    CartesianState to_cartesian(const TargetState &state);
    TargetState to_polar(const CartesianState &state); // throws std::domain_error at the origin

    /// v = v_r (cos, sin) + v_theta (-sin, cos).
    Eigen::Vector2d velocity_to_cartesian(const TargetState &state);

    /// How the angle advances in the polar kinematic model.
    enum class AngleUpdate
    {
        Dimensional, // theta' = theta + (v_theta / r) dT
        AngularRate, // theta' = theta + v_theta dT, v_theta read as rad/s
    };

    /// One-interval prediction with constant polar velocities.
    /// Throws std::domain_error if the result leaves the front half-plane.
    TargetState kinematic_step(const TargetState &state, double dt, AngleUpdate mode = AngleUpdate::Dimensional);

    /// Exact constant-Cartesian-velocity propagation by t seconds.
    TargetState propagate_constant_velocity(const TargetState &state, double t);

    /// Coherent processing interval timing.
    struct CpiClock
    {
        double cpi_duration = 1e-2; // s
        int snapshots = 64;         // M

        double snapshot_period() const { return cpi_duration / snapshots; }
        void validate() const; // throws std::invalid_argument
    };

    // Trajectory shapes, all in array-centred Cartesian coordinates (m, s, rad).
    struct StraightLine
    {
        Eigen::Vector2d start{0.0, 20.0};
        Eigen::Vector2d velocity{0.0, 0.0};
    };

    /// Arc about 'center'. The radius may drift linearly in time, which gives
    /// the variable-radius arcs used by the case study.
    struct CircularArc
    {
        Eigen::Vector2d center{0.0, 0.0};
        double radius = 15.0;
        double radius_rate = 0.0;
        double start_angle = kPi / 2.0;
        double angular_rate = 0.0;
    };

    /// Logarithmic spiral, radius = radius * exp(growth * (phase - start_angle)).
    struct Spiral
    {
        Eigen::Vector2d center{0.0, 0.0};
        double radius = 15.0;
        double growth = 0.0;
        double start_angle = kPi / 2.0;
        double angular_rate = 0.0;
    };

    /// Piecewise-linear path at constant speed; parks on the last waypoint.
    struct WaypointSequence
    {
        std::vector<Eigen::Vector2d> points;
        double speed = 0.0;
    };

    struct Trajectory
    {
        std::variant<StraightLine, CircularArc, Spiral, WaypointSequence> shape;
        double duration = 0.0; // s

        std::string kind() const;
        CartesianState cartesian_at(double t) const;
        TargetState state_at(double t) const; // throws std::domain_error outside the valid region
        TargetState initial_state() const { return state_at(0.0); }
    };

    /// Ground-truth state at every snapshot instant m T_s over the duration.
    std::vector<TargetState> sample_trajectory(const Trajectory &traj, const CpiClock &clock);

    enum class IntraCpiMotion
    {
        Continuous, // exact trajectory at every snapshot
        Frozen,     // mobility status of the CPI start, constant Cartesian velocity
    };

    /// The M snapshot states of CPI 'cpi_index'.
    std::vector<TargetState> cpi_states(const Trajectory &traj, const CpiClock &clock, int cpi_index,
                                        IntraCpiMotion motion = IntraCpiMotion::Continuous);

    /// Per-snapshot states of a target held at constant Cartesian velocity.
    std::vector<TargetState> constant_velocity_states(const TargetState &start, const CpiClock &clock);

    /// Angle residual mapped to (-pi, pi].
    double wrap_angle(double a);

} // namespace nfpb

#endif
