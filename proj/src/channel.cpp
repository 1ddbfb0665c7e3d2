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


#include "chanest/channel.hpp"

#include "chanest/error.hpp"

#include <cmath>
#include <fstream>

namespace chanest
{

ChannelModel ChannelModel::ideal()
{
    return {"ideal", ChannelKind::Ideal, {}, true};
}

ChannelModel ChannelModel::flat_rayleigh()
{
    return {"flat-rayleigh", ChannelKind::FlatRayleigh, {}, true};
}

ChannelModel ChannelModel::tapped_delay_line(std::string name, std::vector<TapPower> taps, bool normalize_power)
{
    if (taps.empty())
        throw Error(Errc::BadConfig, "tapped delay line needs at least one tap");
    double total = 0.0;
    for (const auto &t : taps)
    {
        if (!(t.power >= 0.0) || !std::isfinite(t.power))
            throw Error(Errc::BadConfig, "tap power must be finite and non-negative");
        total += t.power;
    }
    if (!(total > 0.0))
        throw Error(Errc::BadConfig, "tap powers sum to zero");
    if (normalize_power)
        for (auto &t : taps)
            t.power /= total;
    return {std::move(name), ChannelKind::TappedDelayLine, std::move(taps), normalize_power};
}

void ChannelModel::validate(const FrameConfig &cfg) const
{
    if (kind != ChannelKind::TappedDelayLine)
        return;
    if (taps.empty())
        throw Error(Errc::BadConfig, "channel '" + name + "' has no taps");
    double total = 0.0;
    for (const auto &t : taps)
    {
        if (t.delay < 0 || static_cast<std::size_t>(t.delay) >= cfg.cp_len)
            throw Error(Errc::DelayOutOfRange, "channel '" + name + "': tap delay " + std::to_string(t.delay) +
                                                   " not inside the cyclic prefix");
        total += t.power;
    }
    if (normalize_power && std::abs(total - 1.0) > 1e-9)
        throw Error(Errc::BadConfig, "channel '" + name + "': normalized tap powers do not sum to 1");
}

ChannelModel builtin_channel(std::string_view name)
{
    if (name == "ideal")
        return ChannelModel::ideal();
    if (name == "flat-rayleigh")
        return ChannelModel::flat_rayleigh();
    // Stand-in vehicular profiles. Only the qualitative frequency selectivity matters.
    if (name == "urban-3tap")
        return ChannelModel::tapped_delay_line("urban-3tap", {{0, 0.5}, {1, 0.3}, {2, 0.2}});
    if (name == "rural-6tap")
        return ChannelModel::tapped_delay_line("rural-6tap",
                                               {{0, 0.40}, {3, 0.25}, {6, 0.15}, {9, 0.10}, {12, 0.06}, {15, 0.04}});
    throw Error(Errc::BadConfig, "unknown channel model '" + std::string(name) + "'");
}

std::vector<std::string> builtin_channel_names()
{
    return {"ideal", "flat-rayleigh", "urban-3tap", "rural-6tap"};
}

ChannelModel channel_from_json(const nlohmann::json &doc)
{
    try
    {
        const std::string name = doc.at("name").get<std::string>();
        const std::string kind = doc.at("kind").get<std::string>();
        if (kind == "ideal")
            return {name, ChannelKind::Ideal, {}, true};
        if (kind == "flat_rayleigh" || kind == "flat-rayleigh")
            return {name, ChannelKind::FlatRayleigh, {}, true};
        if (kind == "tdl" || kind == "tapped_delay_line")
        {
            std::vector<TapPower> taps;
            for (const auto &t : doc.at("taps"))
                taps.push_back({t.at("delay").get<int>(), t.at("power").get<double>()});
            return ChannelModel::tapped_delay_line(name, std::move(taps), doc.value("normalize_power", true));
        }
        throw Error(Errc::BadConfig, "unknown channel kind '" + kind + "'");
    }
    catch (const nlohmann::json::exception &e)
    {
        throw Error(Errc::BadConfig, std::string("channel profile: ") + e.what());
    }
}

nlohmann::json channel_to_json(const ChannelModel &model)
{
    nlohmann::json doc;
    doc["name"] = model.name;
    switch (model.kind)
    {
    case ChannelKind::Ideal: doc["kind"] = "ideal"; break;
    case ChannelKind::FlatRayleigh: doc["kind"] = "flat_rayleigh"; break;
    case ChannelKind::TappedDelayLine: doc["kind"] = "tdl"; break;
    }
    doc["normalize_power"] = model.normalize_power;
    auto taps = nlohmann::json::array();
    for (const auto &t : model.taps)
        taps.push_back({{"delay", t.delay}, {"power", t.power}});
    doc["taps"] = taps;
    return doc;
}

ChannelModel load_channel_model(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::IoError, "cannot open channel profile " + path.string());
    nlohmann::json doc;
    try
    {
        in >> doc;
    }
    catch (const nlohmann::json::exception &e)
    {
        throw Error(Errc::BadConfig, path.string() + ": " + e.what());
    }
    return channel_from_json(doc);
}

ChannelModel resolve_channel(std::string_view name_or_path)
{
    for (const auto &n : builtin_channel_names())
        if (n == name_or_path)
            return builtin_channel(name_or_path);
    if (!std::filesystem::exists(std::filesystem::path(name_or_path)))
        throw Error(Errc::BadConfig, "unknown channel model '" + std::string(name_or_path) +
                                         "' (not a builtin name or an existing profile file)");
    return load_channel_model(std::filesystem::path(name_or_path));
}

NoiseSpec NoiseSpec::from_snr_db(double snr_db)
{
    return {snr_db, snr_to_n0(snr_db)};
}

NoiseSpec NoiseSpec::noiseless()
{
    return {INFINITY, 0.0};
}

double snr_to_n0(double snr_db)
{
    return std::pow(10.0, -snr_db / 10.0);
}

ChannelRealization draw_channel(const ChannelModel &model, const FrameConfig &cfg, RngStream &rng)
{
    ChannelRealization out;
    switch (model.kind)
    {
    case ChannelKind::Ideal:
        out.h.assign(cfg.active_count, Cplx(1.0, 0.0));
        break;
    case ChannelKind::FlatRayleigh:
        out.h.assign(cfg.active_count, rng.complex_normal(1.0));
        break;
    case ChannelKind::TappedDelayLine:
        model.validate(cfg);
        for (const auto &t : model.taps)
            out.source_taps.push_back({t.delay, rng.complex_normal(t.power)});
        out.h = taps_to_freq(out.source_taps, cfg.active_indices, cfg.fft_size);
        break;
    }
    return out;
}

CplxVec apply_channel(std::span<const Cplx> x, const ChannelRealization &h, const NoiseSpec &noise, RngStream &rng)
{
    if (x.size() != h.h.size())
        throw Error(Errc::LengthMismatch, "symbol and channel lengths differ");
    CplxVec y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
    {
        y[k] = h.h[k] * x[k];
        if (noise.n0 > 0.0)
            y[k] += rng.complex_normal(noise.n0);
    }
    return y;
}

} // namespace chanest
