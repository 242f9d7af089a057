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

#ifndef NFPB_ECHO_HPP
#define NFPB_ECHO_HPP

#include "nfpb/array_geometry.hpp"
#include "nfpb/kinematics.hpp"
#include "nfpb/random.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>

namespace nfpb
{
    double dbm_to_watts(double dbm);
    double watts_to_dbm(double watts);

    enum class PathLossMode
    {
        UnitReflection,
        RadarEquation,
    };

    struct LinkBudget
    {
        double tx_power_w = 1.0;
        double noise_power_w = 1e-8;
        PathLossMode path_loss = PathLossMode::UnitReflection;

        static LinkBudget from_dbm(double tx_dbm, double noise_dbm, PathLossMode mode = PathLossMode::UnitReflection);
        void validate() const;
    };

    /// One CPI of received echoes, N elements by M snapshots, with the probe
    /// and transmit beam that produced it. Noise power is per complex sample.
    struct EchoFrame
    {
        Eigen::MatrixXcd samples;
        Eigen::VectorXcd probe;
        Eigen::VectorXcd transmit_weights;
        double noise_power = 0.0;
        std::complex<double> reflection{1.0, 0.0};

        int num_elements() const { return static_cast<int>(samples.rows()); }
        int num_snapshots() const { return static_cast<int>(samples.cols()); }
        Eigen::Map<const Eigen::VectorXcd> stacked() const { return {samples.data(), samples.size()}; }
    };

    /// Unit-modulus pseudo-random probe sequence of length M.
    Eigen::VectorXcd make_probe(int snapshots, RandomStream &rng);

    /// Monostatic round-trip echo from exact per-snapshot geometry:
    /// y_n(m) = beta sqrt(P) s(m) exp(-j k r_n(m)) sum_k w_k exp(-j k r_k(m)).
    /// Doppler is not modelled explicitly; it comes from the moving geometry.
    Eigen::MatrixXcd noiseless_echo(const ArrayConfig &cfg, const CpiClock &clock,
                                    std::span<const TargetState> states, const Eigen::VectorXcd &weights,
                                    const Eigen::VectorXcd &probe, std::complex<double> beta, double tx_power_w);

    /// Adds CN(0, noise_power) to every sample and records the noise power.
    EchoFrame add_noise(EchoFrame frame, double noise_power, RandomStream &rng);

    /// Unit reflection, or radar-equation amplitude lambda / ((4 pi)^{3/2} r^2)
    /// for a unit cross-section target.
    std::complex<double> reflection_coefficient(const PolarLocation &loc, const LinkBudget &budget,
                                                double wavelength);

    /// Noiseless echo plus noise in one call. A null rng leaves the frame clean.
    EchoFrame synthesize_frame(const ArrayConfig &cfg, const CpiClock &clock, std::span<const TargetState> states,
                               const Eigen::VectorXcd &weights, const Eigen::VectorXcd &probe,
                               const LinkBudget &budget, RandomStream *noise_rng);

} // namespace nfpb

#endif
