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


#ifndef CHANEST_CHANNEL_HPP
#define CHANEST_CHANNEL_HPP

#include "chanest/numerics.hpp"
#include "chanest/phy.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace chanest
{

enum class ChannelKind
{
    Ideal,
    FlatRayleigh,
    TappedDelayLine,
};

struct TapPower
{
    int delay = 0;      // samples
    double power = 0.0; // mean tap power, linear
};

struct ChannelModel
{
    std::string name;
    ChannelKind kind = ChannelKind::Ideal;
    std::vector<TapPower> taps; // TappedDelayLine only
    bool normalize_power = true;

    static ChannelModel ideal();
    static ChannelModel flat_rayleigh();
    // Powers are rescaled to sum to one when normalize_power is set.
    static ChannelModel tapped_delay_line(std::string name, std::vector<TapPower> taps, bool normalize_power = true);

    // Tap delays must stay inside the cyclic prefix of cfg.
    void validate(const FrameConfig &cfg) const;
};

// Shipped profiles: "ideal", "flat-rayleigh" and two stand-in TDL profiles
// ("urban-3tap", "rural-6tap") with contrasting delay spread.
ChannelModel builtin_channel(std::string_view name);
std::vector<std::string> builtin_channel_names();

// {"name": ..., "kind": "ideal"|"flat_rayleigh"|"tdl", "taps": [{"delay": d, "power": p}], "normalize_power": bool}
ChannelModel channel_from_json(const nlohmann::json &doc);
nlohmann::json channel_to_json(const ChannelModel &model);
ChannelModel load_channel_model(const std::filesystem::path &path);
// Builtin name, or a path to a JSON profile.
ChannelModel resolve_channel(std::string_view name_or_path);

struct ChannelRealization
{
    CplxVec h;                    // one gain per active subcarrier
    std::vector<Tap> source_taps; // empty unless drawn from a TDL
};

struct NoiseSpec
{
    double snr_db = 0.0;
    double n0 = 1.0; // complex noise variance per subcarrier

    static NoiseSpec from_snr_db(double snr_db);
    static NoiseSpec noiseless();
};

// Unit average symbol energy per active subcarrier: n0 = 10^(-snr/10).
double snr_to_n0(double snr_db);

ChannelRealization draw_channel(const ChannelModel &model, const FrameConfig &cfg, RngStream &rng);

// Y[k] = H[k] X[k] + V[k], V ~ CN(0, n0). Skips the noise draw entirely when n0 == 0.
CplxVec apply_channel(std::span<const Cplx> x, const ChannelRealization &h, const NoiseSpec &noise, RngStream &rng);

} // namespace chanest

#endif
