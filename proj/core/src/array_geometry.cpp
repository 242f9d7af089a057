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

#include "nfpb/array_geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nfpb
{
    ArrayConfig ArrayConfig::half_wavelength(int num_elements, double carrier_frequency_hz)
    {
        ArrayConfig cfg;
        cfg.num_elements = num_elements;
        cfg.carrier_frequency_hz = carrier_frequency_hz;
        cfg.element_spacing_m = 0.0;
        cfg.validate();
        cfg.element_spacing_m = cfg.spacing();
        return cfg;
    }

    void ArrayConfig::validate() const
    {
        if (num_elements < 2)
            throw std::invalid_argument("ArrayConfig: num_elements must be >= 2, got " + std::to_string(num_elements));
        if (!(carrier_frequency_hz > 0.0) || !std::isfinite(carrier_frequency_hz))
            throw std::invalid_argument("ArrayConfig: carrier_frequency_hz must be positive");
        if (element_spacing_m < 0.0 || !std::isfinite(element_spacing_m))
            throw std::invalid_argument("ArrayConfig: element_spacing_m must be positive");
    }

    Eigen::VectorXd ArrayConfig::element_xs() const
    {
        Eigen::VectorXd xs(num_elements);
        for (int i = 0; i < num_elements; ++i)
            xs[i] = element_x(i);
        return xs;
    }

    void PolarLocation::validate() const
    {
        if (!(r > 0.0) || !std::isfinite(r))
            throw std::domain_error("PolarLocation: distance must be positive, got " + std::to_string(r));
        if (!(theta > 0.0 && theta < kPi))
            throw std::domain_error("PolarLocation: angle must lie in (0, pi), got " + std::to_string(theta));
    }

    Eigen::Vector2d PolarLocation::cartesian() const
    {
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    std::vector<Eigen::Vector2d> element_positions(const ArrayConfig &cfg)
    {
        cfg.validate();
        std::vector<Eigen::Vector2d> out;
        out.reserve(cfg.num_elements);
        for (int i = 0; i < cfg.num_elements; ++i)
            out.emplace_back(cfg.element_x(i), 0.0);
        return out;
    }

    double element_target_distance(const ArrayConfig &cfg, const PolarLocation &loc, double n)
    {
        const double x = n * cfg.spacing();
        return std::sqrt(loc.r * loc.r + x * x - 2.0 * loc.r * x * std::cos(loc.theta));
    }

    Eigen::VectorXcd nearfield_steering(const ArrayConfig &cfg, const PolarLocation &loc)
    {
        cfg.validate();
        loc.validate();
        const double k = cfg.wavenumber();
        Eigen::VectorXcd a(cfg.num_elements);
        for (int i = 0; i < cfg.num_elements; ++i)
        {
            // r_n - r in cancellation-free form: (x^2 - 2 r x cos) / (r_n + r)
            const double x = cfg.element_x(i);
            const double rn = element_target_distance(cfg, loc, cfg.element_index(i));
            const double excess = (x * x - 2.0 * loc.r * x * std::cos(loc.theta)) / (rn + loc.r);
            a[i] = std::polar(1.0, -k * excess);
        }
        return a;
    }

    Eigen::VectorXcd farfield_steering(const ArrayConfig &cfg, double theta)
    {
        cfg.validate();
        const double k = cfg.wavenumber();
        const double c = std::cos(theta);
        Eigen::VectorXcd a(cfg.num_elements);
        for (int i = 0; i < cfg.num_elements; ++i)
            a[i] = std::polar(1.0, k * cfg.element_x(i) * c);
        return a;
    }

    double rayleigh_distance(const ArrayConfig &cfg)
    {
        cfg.validate();
        const double D = cfg.aperture();
        return 2.0 * D * D / cfg.wavelength();
    }

} // namespace nfpb
