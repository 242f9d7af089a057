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

#ifndef NFPB_RANDOM_HPP
#define NFPB_RANDOM_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace nfpb
{
    /// Seeded random stream. Sub-streams are derived from a master seed and a
    /// name so that, e.g., noise realisations change with the seed while the
    /// ground-truth trajectory does not.
    ///
    /// Uniform and Gaussian variates are computed here rather than through
    /// <random> distributions, whose algorithms differ between standard
    /// libraries; only the engine (mt19937_64, fully specified) is reused.
    class RandomStream
    {
    public:
        explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

        static RandomStream derive(std::uint64_t master_seed, std::string_view name, std::uint64_t index = 0);

        double uniform();  // [0, 1)
        double gaussian(); // N(0, 1), Box-Muller
        std::complex<double> complex_gaussian(double variance); // circularly symmetric CN(0, variance)
        std::complex<double> unit_phasor();                     // uniform phase

    private:
        std::mt19937_64 engine_;
        double spare_ = 0.0;
        bool has_spare_ = false;
    };

} // namespace nfpb

#endif
