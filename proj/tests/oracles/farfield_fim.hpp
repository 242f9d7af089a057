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

// Closed-form angle Fisher information for a static far-field target seen by
// a focused uniform linear array. Written from scratch, without the library,
// so that it can check the numerical Jacobian path.

#ifndef NFPB_ORACLES_FARFIELD_FIM_HPP
#define NFPB_ORACLES_FARFIELD_FIM_HPP

#include <cmath>

namespace nfpb::oracle
{
    /// FIM_theta_theta = (2 / sigma^2) P |beta|^2 |g|^2 M sum_n (k x_n sin theta)^2
    /// with |g|^2 = N for a matched transmit beam and x_n = (n - (N-1)/2) d.
    inline double farfield_theta_fim(int n_elements, double wavelength, double spacing, double theta, int snapshots,
                                     double beta_abs2, double tx_power, double noise_power)
    {
        const double pi = 3.14159265358979323846;
        const double k = 2.0 * pi / wavelength;
        double sum = 0.0;
        for (int i = 0; i < n_elements; ++i)
        {
            const double x = (i - 0.5 * (n_elements - 1)) * spacing;
            const double phase_rate = k * x * std::sin(theta);
            sum += phase_rate * phase_rate;
        }
        const double tx_gain = n_elements;
        return 2.0 / noise_power * tx_power * beta_abs2 * tx_gain * snapshots * sum;
    }

    /// Same quantity written with the closed-form sum of squared indices,
    /// sum_n n^2 = N (N^2 - 1) / 12.
    inline double farfield_theta_fim_closed(int n_elements, double wavelength, double spacing, double theta,
                                            int snapshots, double beta_abs2, double tx_power, double noise_power)
    {
        const double pi = 3.14159265358979323846;
        const double k = 2.0 * pi / wavelength;
        const double n = n_elements;
        const double sum_n2 = n * (n * n - 1.0) / 12.0;
        const double s = k * spacing * std::sin(theta);
        return 2.0 / noise_power * tx_power * beta_abs2 * n * snapshots * s * s * sum_n2;
    }
} // namespace nfpb::oracle

#endif
