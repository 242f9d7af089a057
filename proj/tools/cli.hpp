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

#ifndef NFPB_TOOLS_CLI_HPP
#define NFPB_TOOLS_CLI_HPP

#include <iosfwd>

namespace nfpb
{
    enum ExitCode : int
    {
        kExitOk = 0,
        kExitConfigError = 2,
        kExitRuntimeFailure = 3,
    };

    /// nfpb {crb-sweep|track|estimate-once|mc-rmse} --config PATH --out DIR [--seed U64]
    int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace nfpb

#endif
