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

#ifndef NFPB_ARRAY_GEOMETRY_HPP
#define NFPB_ARRAY_GEOMETRY_HPP

#include <Eigen/Dense>

#include <numbers>
#include <vector>

namespace nfpb
{
    inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact
    inline constexpr double kPi = std::numbers::pi;

    /// Uniform linear array along the x-axis, centred on the origin.
    ///
    /// Elements carry centred indices n = i - (N-1)/2, so even arrays use
    /// half-integer indices and the array centre is always the phase reference.
    struct ArrayConfig
    {
        int num_elements = 0;
        double carrier_frequency_hz = 0.0;
        double element_spacing_m = 0.0; // 0 selects half a wavelength

        /// Half-wavelength spaced array, the usual default.
        static ArrayConfig half_wavelength(int num_elements, double carrier_frequency_hz);

        void validate() const; // throws std::invalid_argument

        double wavelength() const { return kSpeedOfLight / carrier_frequency_hz; }
        double wavenumber() const { return 2.0 * kPi / wavelength(); }
        double spacing() const { return element_spacing_m > 0.0 ? element_spacing_m : 0.5 * wavelength(); }
        double aperture() const { return (num_elements - 1) * spacing(); }

        /// Centred index of the i-th element, i in [0, N).
        double element_index(int i) const { return i - 0.5 * (num_elements - 1); }
        double element_x(int i) const { return element_index(i) * spacing(); }
        Eigen::VectorXd element_xs() const;
    };

    /// Target location in the front half-plane. theta is measured from the
    /// positive x-axis (the array axis), r from the array centre.
    struct PolarLocation
    {
        double theta = kPi / 2.0;
        double r = 1.0;

        void validate() const; // throws std::domain_error
        Eigen::Vector2d cartesian() const;
    };

    std::vector<Eigen::Vector2d> element_positions(const ArrayConfig &cfg);

    /// Exact distance from the element with centred index n to the target.
    double element_target_distance(const ArrayConfig &cfg, const PolarLocation &loc, double n);

    /// Spherical-wave steering vector, element n = exp(-j k (r_n - r)).
    Eigen::VectorXcd nearfield_steering(const ArrayConfig &cfg, const PolarLocation &loc);

    /// Planar-wave steering vector, element n = exp(+j k n d cos(theta)).
    Eigen::VectorXcd farfield_steering(const ArrayConfig &cfg, double theta);

    /// 2 D^2 / lambda with D = (N-1) d.
    double rayleigh_distance(const ArrayConfig &cfg);

} // namespace nfpb

#endif
