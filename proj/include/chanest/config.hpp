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


#ifndef CHANEST_CONFIG_HPP
#define CHANEST_CONFIG_HPP

#include "chanest/dataset_io.hpp"
#include "chanest/evaluation.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chanest
{

// Flat run configuration. The JSON form uses the same field names.
struct RunConfig
{
    std::uint64_t seed = 1;
    std::size_t workers = 1; // never written to sidecars: results do not depend on it
    std::string out = "out";

    // link
    std::string channel = "flat-rayleigh"; // builtin name or profile JSON path
    std::string modulation = "qpsk";
    std::size_t data_symbols = 1;
    std::size_t preamble_count = 2;

    // SNR grid: explicit list, else start:step:stop
    std::vector<double> snr_db;
    double snr_start = 0.0;
    double snr_stop = 30.0;
    double snr_step = 5.0;
    std::size_t frames = 1000;

    // estimators
    std::vector<std::string> estimators = {"ls", "lmmse", "lsdnn", "ideal"};
    std::string quant = "fp64";
    std::string model;         // model JSON path
    std::string registry;      // registry directory
    std::string rh_source;     // channel name/profile for estimate_rh, or an R_h matrix JSON; defaults to channel
    std::size_t rh_draws = 100000;

    // dataset and training
    std::string dataset;       // dataset CSV for train
    std::size_t samples = 30000;
    std::string train_snr = "10";
    std::string arch = "lsdnn1";
    std::size_t epochs = 500;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double split_ratio = 0.8;

    // sweeps
    std::vector<std::string> train_snrs = {"-10", "0", "10", "20", "30"};
    std::vector<std::string> formats = {"fp32", "q24_8", "q16_8"};

    static RunConfig from_json(const nlohmann::json &doc);
    static RunConfig load(const std::string &path);
    // Resolved configuration, excluding the worker count.
    nlohmann::json to_json() const;

    void validate() const;
    std::vector<double> snr_grid() const;
    LinkSetup link() const;
    dnn::TrainConfig train_config() const;
};

// R_h from a matrix file {"size": n, "re": [...], "im": [...]} (row-major).
CplxMatrix load_rh_matrix(const std::string &path);
void save_rh_matrix(const CplxMatrix &m, const std::string &path);

} // namespace chanest

#endif
