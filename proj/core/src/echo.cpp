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

#include "nfpb/echo.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nfpb
{
    double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
    double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

    LinkBudget LinkBudget::from_dbm(double tx_dbm, double noise_dbm, PathLossMode mode)
    {
        LinkBudget b{dbm_to_watts(tx_dbm), dbm_to_watts(noise_dbm), mode};
        b.validate();
        return b;
    }

    void LinkBudget::validate() const
    {
        if (!(tx_power_w > 0.0) || !(noise_power_w > 0.0))
            throw std::invalid_argument("LinkBudget: powers must be positive");
    }

    Eigen::VectorXcd make_probe(int snapshots, RandomStream &rng)
    {
        Eigen::VectorXcd s(snapshots);
        for (int m = 0; m < snapshots; ++m)
            s[m] = rng.unit_phasor();
        return s;
    }

    Eigen::MatrixXcd noiseless_echo(const ArrayConfig &cfg, const CpiClock &clock,
                                    std::span<const TargetState> states, const Eigen::VectorXcd &weights,
                                    const Eigen::VectorXcd &probe, std::complex<double> beta, double tx_power_w)
    {
        cfg.validate();
        clock.validate();
        const int N = cfg.num_elements;
        const int M = clock.snapshots;
        if (static_cast<int>(states.size()) != M)
            throw std::invalid_argument("noiseless_echo: expected " + std::to_string(M) + " snapshot states, got " +
                                        std::to_string(states.size()));
        if (weights.size() != N)
            throw std::invalid_argument("noiseless_echo: weight vector length does not match the array");
        if (probe.size() != M)
            throw std::invalid_argument("noiseless_echo: probe length does not match the snapshot count");

        const double k = cfg.wavenumber();
        const std::complex<double> amp = beta * std::sqrt(tx_power_w);
        Eigen::MatrixXcd y(N, M);
        Eigen::VectorXcd a(N);
        for (int m = 0; m < M; ++m)
        {
            const TargetState &st = states[m];
            st.validate();
            for (int i = 0; i < N; ++i)
                a[i] = std::polar(1.0, -k * element_target_distance(cfg, st.location(), cfg.element_index(i)));
            const std::complex<double> g = (a.array() * weights.array()).sum();
            y.col(m) = (amp * probe[m] * g) * a;
        }
        return y;
    }

    EchoFrame add_noise(EchoFrame frame, double noise_power, RandomStream &rng)
    {
        if (noise_power < 0.0)
            throw std::invalid_argument("add_noise: negative noise power");
        frame.noise_power = noise_power;
        if (noise_power == 0.0)
            return frame;
        // Column-major fill keeps the draw order independent of Eigen internals.
        for (Eigen::Index m = 0; m < frame.samples.cols(); ++m)
            for (Eigen::Index n = 0; n < frame.samples.rows(); ++n)
                frame.samples(n, m) += rng.complex_gaussian(noise_power);
        return frame;
    }

    std::complex<double> reflection_coefficient(const PolarLocation &loc, const LinkBudget &budget,
                                                double wavelength)
    {
        if (budget.path_loss == PathLossMode::UnitReflection)
            return {1.0, 0.0};
        const double four_pi = 4.0 * kPi;
        return {wavelength / (std::pow(four_pi, 1.5) * loc.r * loc.r), 0.0};
    }

    EchoFrame synthesize_frame(const ArrayConfig &cfg, const CpiClock &clock, std::span<const TargetState> states,
                               const Eigen::VectorXcd &weights, const Eigen::VectorXcd &probe,
                               const LinkBudget &budget, RandomStream *noise_rng)
    {
        EchoFrame frame;
        frame.reflection = reflection_coefficient(states.front().location(), budget, cfg.wavelength());
        frame.samples = noiseless_echo(cfg, clock, states, weights, probe, frame.reflection, budget.tx_power_w);
        frame.probe = probe;
        frame.transmit_weights = weights;
        if (noise_rng)
            return add_noise(std::move(frame), budget.noise_power_w, *noise_rng);
        frame.noise_power = budget.noise_power_w;
        return frame;
    }

} // namespace nfpb
