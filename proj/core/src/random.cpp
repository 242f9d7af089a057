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

#include "nfpb/random.hpp"

#include "nfpb/array_geometry.hpp"

#include <cmath>

namespace nfpb
{
    namespace
    {
        std::uint64_t splitmix64(std::uint64_t x)
        {
            x += 0x9E3779B97F4A7C15ULL;
            x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
            x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
            return x ^ (x >> 31);
        }

        std::uint64_t fnv1a(std::string_view s)
        {
            std::uint64_t h = 0xCBF29CE484222325ULL;
            for (unsigned char c : s)
            {
                h ^= c;
                h *= 0x100000001B3ULL;
            }
            return h;
        }
    } // namespace

    RandomStream RandomStream::derive(std::uint64_t master_seed, std::string_view name, std::uint64_t index)
    {
        return RandomStream(splitmix64(splitmix64(master_seed ^ fnv1a(name)) + index));
    }

    double RandomStream::uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double RandomStream::gaussian()
    {
        if (has_spare_)
        {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * kPi * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * kPi * u2);
    }

    std::complex<double> RandomStream::complex_gaussian(double variance)
    {
        const double s = std::sqrt(0.5 * variance);
        const double re = gaussian();
        const double im = gaussian();
        return {s * re, s * im};
    }

    std::complex<double> RandomStream::unit_phasor()
    {
        return std::polar(1.0, 2.0 * kPi * uniform());
    }

} // namespace nfpb
