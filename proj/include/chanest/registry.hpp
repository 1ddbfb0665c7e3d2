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


#ifndef CHANEST_REGISTRY_HPP
#define CHANEST_REGISTRY_HPP

#include "chanest/dnn.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chanest
{

struct RegistryEntry
{
    std::string model_id;
    std::optional<double> training_snr_db;
    std::string channel_model;
    std::string arch_tag;
    std::string file; // relative to the registry directory
};

// Directory of model files plus index.json. The directory is created on the first add.
class ModelRegistry
{
  public:
    explicit ModelRegistry(std::filesystem::path dir);

    const std::filesystem::path &directory() const noexcept { return dir_; }
    const std::vector<RegistryEntry> &entries() const noexcept { return entries_; }

    // Validates the model, copies it in as <model_id>.json and rewrites the index.
    const RegistryEntry &add(const std::filesystem::path &model_file, std::string model_id);

    // Lowest (channel mismatch, |training SNR - operating SNR|, model_id). Models trained on
    // an SNR mixture rank after every single-SNR model of the same channel.
    const RegistryEntry &select(std::string_view channel_model, double operating_snr_db) const;

    const RegistryEntry *find(std::string_view model_id) const;
    dnn::DnnModel load(const RegistryEntry &entry) const;

  private:
    void save_index() const;

    std::filesystem::path dir_;
    std::vector<RegistryEntry> entries_;
};

} // namespace chanest

#endif
