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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace chanest;

TEST(Snr, Convention)
{
    EXPECT_DOUBLE_EQ(snr_to_n0(0.0), 1.0);
    EXPECT_NEAR(snr_to_n0(10.0), 0.1, 1e-16);
    EXPECT_NEAR(snr_to_n0(20.0), 0.01, 1e-17);
    EXPECT_NEAR(snr_to_n0(-10.0), 10.0, 1e-14);
    const auto n = NoiseSpec::from_snr_db(3.0);
    EXPECT_DOUBLE_EQ(n.n0, snr_to_n0(3.0));
    EXPECT_EQ(NoiseSpec::noiseless().n0, 0.0);
}

TEST(Channel, IdealIsUnity)
{
    const auto cfg = build_default_frame();
    RngStream rng(1, 1);
    const auto ch = draw_channel(ChannelModel::ideal(), cfg, rng);
    ASSERT_EQ(ch.h.size(), 52u);
    for (const auto &h : ch.h)
        EXPECT_EQ(h, Cplx(1, 0));
}

TEST(Channel, FlatRayleighEnergyAndFlatness)
{
    const auto cfg = build_default_frame();
    RngStream rng(2, 2);
    double e = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i)
    {
        const auto ch = draw_channel(ChannelModel::flat_rayleigh(), cfg, rng);
        if (i < 100)
            for (const auto &h : ch.h)
                ASSERT_EQ(h, ch.h.front());
        e += std::norm(ch.h[17]);
    }
    EXPECT_NEAR(e / draws, 1.0, 0.02);
}

TEST(Channel, SingleTapTdlIsFlat)
{
    const auto cfg = build_default_frame();
    RngStream rng(3, 3);
    const auto model = ChannelModel::tapped_delay_line("one", {{0, 1.0}});
    for (int i = 0; i < 100; ++i)
    {
        const auto ch = draw_channel(model, cfg, rng);
        for (const auto &h : ch.h)
            EXPECT_NEAR(std::abs(h - ch.h.front()), 0.0, 1e-15);
        ASSERT_EQ(ch.source_taps.size(), 1u);
    }
}

TEST(Channel, TdlPowersNormalized)
{
    const auto m = ChannelModel::tapped_delay_line("x", {{0, 2.0}, {2, 1.0}, {4, 1.0}});
    double total = 0.0;
    for (const auto &t : m.taps)
        total += t.power;
    EXPECT_NEAR(total, 1.0, 1e-15);
    EXPECT_NEAR(m.taps[0].power, 0.5, 1e-15);
    const auto raw = ChannelModel::tapped_delay_line("y", {{0, 2.0}}, false);
    EXPECT_EQ(raw.taps[0].power, 2.0);
}

TEST(Channel, DelaysMustFitCyclicPrefix)
{
    const auto cfg = build_default_frame();
    const auto ok = ChannelModel::tapped_delay_line("ok", {{0, 0.5}, {15, 0.5}});
    EXPECT_NO_THROW(ok.validate(cfg));
    const auto bad = ChannelModel::tapped_delay_line("bad", {{0, 0.5}, {16, 0.5}});
    try
    {
        bad.validate(cfg);
        FAIL();
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.code(), Errc::DelayOutOfRange);
    }
}

TEST(Channel, TdlCorrelationMatchesPowerProfileDft)
{
    // E[H_a conj(H_b)] = sum_l p_l exp(-j 2 pi (k_a - k_b) d_l / K)
    const auto cfg = build_default_frame();
    for (const auto &name : {"urban-3tap", "rural-6tap"})
    {
        const auto model = builtin_channel(name);
        const std::size_t n = cfg.active_count;
        CplxMatrix emp(n, n), ana(n, n);
        RngStream rng(4, 4);
        const int draws = 10000;
        for (int d = 0; d < draws; ++d)
        {
            const auto ch = draw_channel(model, cfg, rng);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    emp(a, b) += ch.h[a] * std::conj(ch.h[b]);
        }
        emp *= 1.0 / draws;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                for (const auto &t : model.taps)
                {
                    const double ph = -2.0 * std::numbers::pi * (cfg.active_indices[a] - cfg.active_indices[b]) *
                                      t.delay / static_cast<double>(cfg.fft_size);
                    ana(a, b) += t.power * Cplx(std::cos(ph), std::sin(ph));
                }
        EXPECT_LT((emp - ana).frobenius_norm() / ana.frobenius_norm(), 0.05) << name;
    }
}

TEST(ApplyChannel, NoiselessIsProduct)
{
    const auto cfg = build_default_frame();
    RngStream rng(5, 5);
    const auto ch = draw_channel(builtin_channel("urban-3tap"), cfg, rng);
    CplxVec x(52);
    for (auto &v : x)
        v = rng.complex_normal(1.0);
    const auto y = apply_channel(x, ch, NoiseSpec::noiseless(), rng);
    for (std::size_t k = 0; k < 52; ++k)
        EXPECT_LT(std::abs(y[k] - ch.h[k] * x[k]), 1e-15);
    EXPECT_THROW(apply_channel(CplxVec(3), ch, NoiseSpec::noiseless(), rng), Error);
}

TEST(ApplyChannel, NoiseVarianceAndIndependence)
{
    const auto cfg = build_default_frame();
    RngStream rng(6, 6);
    const auto ch = draw_channel(ChannelModel::ideal(), cfg, rng);
    const auto noise = NoiseSpec::from_snr_db(7.0);
    const CplxVec zero(52);
    double var = 0.0, re2 = 0.0;
    Cplx cross{};
    const int symbols = 2000; // 104,000 bins
    for (int s = 0; s < symbols; ++s)
    {
        const auto y = apply_channel(zero, ch, noise, rng);
        for (std::size_t k = 0; k < 52; ++k)
        {
            var += std::norm(y[k]);
            re2 += y[k].real() * y[k].real();
        }
        for (std::size_t k = 0; k + 1 < 52; ++k)
            cross += y[k] * std::conj(y[k + 1]);
    }
    const double bins = symbols * 52.0;
    EXPECT_NEAR(var / bins / noise.n0, 1.0, 0.02);
    EXPECT_NEAR(re2 / bins / noise.n0, 0.5, 0.01);
    EXPECT_LT(std::abs(cross) / (symbols * 51.0) / noise.n0, 0.02);
}

TEST(ChannelJson, RoundTripAndFiles)
{
    const auto m = builtin_channel("rural-6tap");
    const auto back = channel_from_json(channel_to_json(m));
    EXPECT_EQ(back.name, m.name);
    EXPECT_EQ(back.kind, ChannelKind::TappedDelayLine);
    ASSERT_EQ(back.taps.size(), m.taps.size());
    for (std::size_t i = 0; i < m.taps.size(); ++i)
    {
        EXPECT_EQ(back.taps[i].delay, m.taps[i].delay);
        EXPECT_NEAR(back.taps[i].power, m.taps[i].power, 1e-15);
    }

    const auto dir = std::filesystem::temp_directory_path() / "chanest_channel_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "two.json";
    std::ofstream(path) << R"({"name": "two", "kind": "tdl", "taps": [{"delay": 0, "power": 1}, {"delay": 4, "power": 1}]})";
    const auto loaded = resolve_channel(path.string());
    EXPECT_EQ(loaded.name, "two");
    EXPECT_NEAR(loaded.taps[1].power, 0.5, 1e-15);

    EXPECT_EQ(resolve_channel("flat-rayleigh").kind, ChannelKind::FlatRayleigh);
    EXPECT_THROW(resolve_channel("no-such-channel"), Error);
    std::ofstream(dir / "bad.json") << R"({"name": "b", "kind": "warp"})";
    EXPECT_THROW(resolve_channel((dir / "bad.json").string()), Error);
    std::filesystem::remove_all(dir);
}

TEST(Channel, RealizationReusedAcrossSymbols)
{
    // the same realization applied twice without noise yields identical outputs
    const auto cfg = build_default_frame();
    RngStream rng(7, 7);
    const auto ch = draw_channel(builtin_channel("urban-3tap"), cfg, rng);
    const CplxVec ones(52, Cplx(1, 0));
    EXPECT_EQ(apply_channel(ones, ch, NoiseSpec::noiseless(), rng), apply_channel(ones, ch, NoiseSpec::noiseless(), rng));
    EXPECT_EQ(apply_channel(ones, ch, NoiseSpec::noiseless(), rng), ch.h);
}
