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


#ifndef CHANEST_DATASET_IO_HPP
#define CHANEST_DATASET_IO_HPP

#include "chanest/dnn.hpp"
#include "chanest/evaluation.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chanest
{

// Either one fixed SNR or a per-row uniform draw over [lo, hi] dB. "inf" means noiseless.
struct SnrSpec
{
    std::optional<double> fixed_db;
    double lo = 0.0;
    double hi = 0.0;

    static SnrSpec fixed(double snr_db);
    static SnrSpec uniform(double lo, double hi);
    // "10", "-5.5", "inf", "uniform(-50,50)"
    static SnrSpec parse(std::string_view text);

    std::string label() const;
    double draw(RngStream &rng) const;
};

struct DatasetSpec
{
    LinkSetup link;
    std::size_t samples = 30000;
    SnrSpec snr = SnrSpec::fixed(10.0);
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

struct GeneratedDataset
{
    dnn::Dataset data;
    std::vector<double> row_snr;
};

// Row i: stacked LS estimate from a fresh frame and the stacked true response.
GeneratedDataset generate_dataset(const DatasetSpec &spec);

nlohmann::json dataset_manifest(const DatasetSpec &spec);
std::filesystem::path manifest_path(const std::filesystem::path &csv);

// CSV: snr_db, in_0 .. in_{2K-1}, target_0 .. target_{2K-1}; the manifest goes next to it.
void write_dataset(const GeneratedDataset &ds, const DatasetSpec &spec, const std::filesystem::path &csv);
GeneratedDataset read_dataset(const std::filesystem::path &csv);

// Text file helpers shared by the commands.
void write_text_file(const std::filesystem::path &path, std::string_view text);
std::string read_text_file(const std::filesystem::path &path);
std::string format_number(double v);

} // namespace chanest

#endif
