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


#ifndef CHANEST_PHY_HPP
#define CHANEST_PHY_HPP

#include "chanest/numerics.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chanest
{

using Bits = std::vector<std::uint8_t>;

// OFDM geometry. Frequency-domain vectors handled by the simulator have one entry
// per active subcarrier, in the order of active_indices (logical -26..-1, +1..+26
// for the default profile). pilot_slots/data_slots are positions into that vector.
struct FrameConfig
{
    std::size_t fft_size = 64;
    std::size_t active_count = 52;
    std::size_t cp_len = 16; // metadata only; the model works per subcarrier
    std::size_t preamble_count = 2;
    std::vector<int> active_indices; // FFT bins
    std::vector<int> pilot_indices;  // FFT bins, subset of active_indices
    std::vector<int> data_indices;   // FFT bins, active minus pilots
    std::vector<std::size_t> pilot_slots;
    std::vector<std::size_t> data_slots;

    // Throws BadConfig when the index maps are inconsistent.
    void validate() const;
};

// 802.11 geometry: K=64, 52 active bins, CP 16, two LTS, pilots at +-7 and +-21.
FrameConfig build_default_frame();

// Builds a config from logical subcarrier numbers (negative values wrap into the FFT).
FrameConfig make_frame(std::size_t fft_size, std::size_t cp_len, std::size_t preamble_count,
                       std::span<const int> active_logical, std::span<const int> pilot_logical);

struct PreambleSpec
{
    std::vector<CplxVec> symbols; // preamble_count vectors of length active_count
    double energy = 0.0;          // sum_k |D[k]|^2 of one symbol
};

// The 52 nonzero 802.11 L-LTF values for subcarriers -26..-1, +1..+26.
std::span<const int> default_lts_sequence() noexcept;

// Repeats one +-1 training symbol preamble_count times.
PreambleSpec build_preamble(const FrameConfig &cfg, std::optional<std::span<const int>> custom = std::nullopt);

enum class Modulation
{
    Bpsk,
    Qpsk,
    Qam16,
};

// Gray-mapped constellation with unit average energy. Point i carries the bit
// pattern of i written MSB first, so constellation[0b01] is the point for bits (0, 1).
//
//   BPSK   0 -> +1, 1 -> -1
//   QPSK   (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)
//   16QAM  (b0 b1 | b2 b3) -> (I + jQ) / sqrt(10), 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
struct ModScheme
{
    Modulation kind = Modulation::Qpsk;
    std::string name;
    std::size_t bits_per_symbol = 2;
    CplxVec constellation;

    static ModScheme make(Modulation kind);
    static ModScheme from_name(std::string_view name);
};

// 802.11 pilot polarity for subcarriers -21, -7, +7, +21.
std::vector<int> default_pilot_values();

CplxVec modulate(std::span<const std::uint8_t> bits, const ModScheme &scheme, const FrameConfig &cfg,
                 std::span<const int> pilot_values);

// x_hat[k] = y[k] / h_hat[k]
CplxVec equalize(std::span<const Cplx> y, std::span<const Cplx> h_hat);

// Minimum-distance hard decision on the data slots. Ties resolve to the smallest bit pattern.
Bits demap(std::span<const Cplx> x_hat, const ModScheme &scheme, const FrameConfig &cfg);

struct BitErrorCount
{
    std::size_t errors = 0;
    std::size_t total = 0;
};

BitErrorCount bit_errors(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx);

} // namespace chanest

#endif
