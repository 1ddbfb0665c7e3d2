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


#include "chanest/phy.hpp"

#include "chanest/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>

namespace chanest
{

namespace
{

constexpr std::array<int, 52> kLts = {
    1, 1,  -1, -1, 1,  1,  -1, 1,  -1, 1,  1,  1,  1,  1, 1, -1, -1, 1,  1,  -1, 1,  -1, 1,  1,  1,  1,
    1, -1, -1, 1,  1,  -1, 1,  -1, 1,  -1, -1, -1, -1, -1, 1, 1,  -1, -1, 1,  -1, 1,  -1, 1,  1,  1,  1,
};

int to_bin(int logical, std::size_t fft_size)
{
    const int n = static_cast<int>(fft_size);
    return ((logical % n) + n) % n;
}

} // namespace

void FrameConfig::validate() const
{
    const auto fail = [](const std::string &msg) { throw Error(Errc::BadConfig, "frame config: " + msg); };
    if (fft_size == 0)
        fail("fft_size must be positive");
    if (active_indices.size() != active_count)
        fail("active_indices has " + std::to_string(active_indices.size()) + " entries, expected " +
             std::to_string(active_count));
    if (preamble_count == 0)
        fail("preamble_count must be at least 1");
    std::set<int> active;
    for (int k : active_indices)
    {
        if (k < 0 || static_cast<std::size_t>(k) >= fft_size)
            fail("active bin out of range");
        if (!active.insert(k).second)
            fail("duplicate active bin");
    }
    if (pilot_slots.size() != pilot_indices.size() || data_slots.size() != data_indices.size())
        fail("slot maps out of sync with index maps");
    if (pilot_indices.size() + data_indices.size() != active_count)
        fail("pilot and data bins must partition the active bins");
    std::set<int> seen;
    for (std::size_t i = 0; i < pilot_indices.size(); ++i)
    {
        if (!active.contains(pilot_indices[i]) || !seen.insert(pilot_indices[i]).second)
            fail("pilot bin not active or duplicated");
        if (active_indices.at(pilot_slots[i]) != pilot_indices[i])
            fail("pilot slot does not point at its bin");
    }
    for (std::size_t i = 0; i < data_indices.size(); ++i)
    {
        if (!active.contains(data_indices[i]) || !seen.insert(data_indices[i]).second)
            fail("data bin not active or overlaps a pilot");
        if (active_indices.at(data_slots[i]) != data_indices[i])
            fail("data slot does not point at its bin");
    }
}

FrameConfig make_frame(std::size_t fft_size, std::size_t cp_len, std::size_t preamble_count,
                       std::span<const int> active_logical, std::span<const int> pilot_logical)
{
    FrameConfig cfg;
    cfg.fft_size = fft_size;
    cfg.cp_len = cp_len;
    cfg.preamble_count = preamble_count;
    cfg.active_count = active_logical.size();
    const std::set<int> pilots(pilot_logical.begin(), pilot_logical.end());
    for (std::size_t slot = 0; slot < active_logical.size(); ++slot)
    {
        const int logical = active_logical[slot];
        const int half = static_cast<int>(fft_size / 2);
        if (logical < -half || logical >= half)
            throw Error(Errc::BadConfig, "frame config: subcarrier " + std::to_string(logical) + " outside the FFT");
        const int bin = to_bin(logical, fft_size);
        cfg.active_indices.push_back(bin);
        if (pilots.contains(logical))
        {
            cfg.pilot_indices.push_back(bin);
            cfg.pilot_slots.push_back(slot);
        }
        else
        {
            cfg.data_indices.push_back(bin);
            cfg.data_slots.push_back(slot);
        }
    }
    if (cfg.pilot_indices.size() != pilots.size())
        throw Error(Errc::BadConfig, "frame config: pilot subcarrier outside the active set");
    cfg.validate();
    return cfg;
}

FrameConfig build_default_frame()
{
    std::vector<int> active;
    for (int k = -26; k <= 26; ++k)
        if (k != 0)
            active.push_back(k);
    const std::array<int, 4> pilots = {-21, -7, 7, 21};
    return make_frame(64, 16, 2, active, pilots);
}

std::span<const int> default_lts_sequence() noexcept
{
    return kLts;
}

PreambleSpec build_preamble(const FrameConfig &cfg, std::optional<std::span<const int>> custom)
{
    std::span<const int> seq = custom.value_or(default_lts_sequence());
    if (seq.size() != cfg.active_count)
        throw Error(Errc::BadSequenceLength, "preamble sequence has " + std::to_string(seq.size()) +
                                                 " entries, expected " + std::to_string(cfg.active_count));
    CplxVec symbol(seq.size());
    double energy = 0.0;
    for (std::size_t k = 0; k < seq.size(); ++k)
    {
        if (seq[k] != 1 && seq[k] != -1)
            throw Error(Errc::NonBpskEntry, "preamble entry " + std::to_string(k) + " is not +-1");
        symbol[k] = static_cast<double>(seq[k]);
        energy += std::norm(symbol[k]);
    }
    PreambleSpec p;
    p.symbols.assign(cfg.preamble_count, symbol);
    p.energy = energy;
    return p;
}

ModScheme ModScheme::make(Modulation kind)
{
    ModScheme s;
    s.kind = kind;
    switch (kind)
    {
    case Modulation::Bpsk:
        s.name = "bpsk";
        s.bits_per_symbol = 1;
        s.constellation = {Cplx(1.0, 0.0), Cplx(-1.0, 0.0)};
        break;
    case Modulation::Qpsk: {
        s.name = "qpsk";
        s.bits_per_symbol = 2;
        const double a = 1.0 / std::sqrt(2.0);
        for (int p = 0; p < 4; ++p)
        {
            const int b0 = (p >> 1) & 1, b1 = p & 1;
            s.constellation.emplace_back(a * (1 - 2 * b0), a * (1 - 2 * b1));
        }
        break;
    }
    case Modulation::Qam16: {
        s.name = "qam16";
        s.bits_per_symbol = 4;
        const std::array<double, 4> level = {-3.0, -1.0, 3.0, 1.0}; // index = 2-bit Gray label
        const double a = 1.0 / std::sqrt(10.0);
        for (int p = 0; p < 16; ++p)
            s.constellation.emplace_back(a * level[(p >> 2) & 3], a * level[p & 3]);
        break;
    }
    }
    return s;
}

ModScheme ModScheme::from_name(std::string_view name)
{
    if (name == "bpsk")
        return make(Modulation::Bpsk);
    if (name == "qpsk")
        return make(Modulation::Qpsk);
    if (name == "qam16" || name == "16qam")
        return make(Modulation::Qam16);
    throw Error(Errc::BadConfig, "unknown modulation '" + std::string(name) + "'");
}

std::vector<int> default_pilot_values()
{
    return {1, 1, 1, -1};
}

CplxVec modulate(std::span<const std::uint8_t> bits, const ModScheme &scheme, const FrameConfig &cfg,
                 std::span<const int> pilot_values)
{
    const std::size_t bps = scheme.bits_per_symbol;
    if (bits.size() != cfg.data_slots.size() * bps)
        throw Error(Errc::BitCountMismatch, "got " + std::to_string(bits.size()) + " bits, expected " +
                                                std::to_string(cfg.data_slots.size() * bps));
    if (pilot_values.size() != cfg.pilot_slots.size())
        throw Error(Errc::BitCountMismatch, "pilot value count differs from pilot bins");

    CplxVec x(cfg.active_count);
    for (std::size_t i = 0; i < cfg.data_slots.size(); ++i)
    {
        std::size_t label = 0;
        for (std::size_t b = 0; b < bps; ++b)
            label = (label << 1) | (bits[i * bps + b] & 1U);
        x[cfg.data_slots[i]] = scheme.constellation[label];
    }
    for (std::size_t i = 0; i < cfg.pilot_slots.size(); ++i)
        x[cfg.pilot_slots[i]] = static_cast<double>(pilot_values[i]);
    return x;
}

CplxVec equalize(std::span<const Cplx> y, std::span<const Cplx> h_hat)
{
    if (y.size() != h_hat.size())
        throw Error(Errc::LengthMismatch, "equalizer input lengths differ");
    CplxVec x(y.size());
    for (std::size_t k = 0; k < y.size(); ++k)
        x[k] = cplx_div(y[k], h_hat[k]);
    return x;
}

Bits demap(std::span<const Cplx> x_hat, const ModScheme &scheme, const FrameConfig &cfg)
{
    if (x_hat.size() != cfg.active_count)
        throw Error(Errc::LengthMismatch, "demapper expects one value per active subcarrier");
    const std::size_t bps = scheme.bits_per_symbol;
    Bits bits(cfg.data_slots.size() * bps);
    for (std::size_t i = 0; i < cfg.data_slots.size(); ++i)
    {
        const Cplx v = x_hat[cfg.data_slots[i]];
        std::size_t best = 0;
        double best_d = std::norm(v - scheme.constellation[0]);
        for (std::size_t p = 1; p < scheme.constellation.size(); ++p)
        {
            const double d = std::norm(v - scheme.constellation[p]);
            if (d < best_d)
            {
                best_d = d;
                best = p;
            }
        }
        for (std::size_t b = 0; b < bps; ++b)
            bits[i * bps + b] = static_cast<std::uint8_t>((best >> (bps - 1 - b)) & 1U);
    }
    return bits;
}

BitErrorCount bit_errors(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx)
{
    if (tx.size() != rx.size())
        throw Error(Errc::LengthMismatch, "bit sequences differ in length");
    BitErrorCount c;
    c.total = tx.size();
    for (std::size_t i = 0; i < tx.size(); ++i)
        c.errors += (tx[i] != rx[i]) ? 1 : 0;
    return c;
}

} // namespace chanest
