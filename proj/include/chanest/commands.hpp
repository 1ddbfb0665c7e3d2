// SPDX-License-Identifier: Apache-2.0
//
// chanest: preamble-based OFDM channel estimation simulator
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


#ifndef CHANEST_COMMANDS_HPP
#define CHANEST_COMMANDS_HPP

#include "chanest/config.hpp"
#include "chanest/error.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace chanest
{

// Paths written by a command, in write order.
using Written = std::vector<std::filesystem::path>;

Written cmd_gen_dataset(const RunConfig &cfg);
Written cmd_train(const RunConfig &cfg);
Written cmd_eval(const RunConfig &cfg);
Written cmd_sweep_train_snr(const RunConfig &cfg);
Written cmd_sweep_wl(const RunConfig &cfg);

enum class RegistryAction
{
    Add,
    List,
    Select,
};

struct RegistryArgs
{
    RegistryAction action = RegistryAction::List;
    std::string model_file; // add
    std::string model_id;   // add
    std::string channel;    // select
    double snr_db = 10.0;   // select
};

// list and select print to out; select prints the chosen model_id.
void cmd_registry(const RunConfig &cfg, const RegistryArgs &args, std::ostream &out);

// 2 config error, 3 missing artifact, 4 numerical failure.
int exit_code_for(Errc code) noexcept;

} // namespace chanest

#endif
