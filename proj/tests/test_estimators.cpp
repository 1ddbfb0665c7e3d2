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
#include "chanest/estimators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace chanest;

namespace
{

std::vector<CplxVec> receive_preamble(const PreambleSpec &pre, const ChannelRealization &ch, const NoiseSpec &noise,
                                      RngStream &rng)
{
    std::vector<CplxVec> y;
    for (const auto &d : pre.symbols)
        y.push_back(apply_channel(d, ch, noise, rng));
    return y;
}

// Random Hermitian positive definite matrix G G^H + shift I.
CplxMatrix random_hpd(std::size_t n, RngStream &rng, double shift)
{
    CplxMatrix g(n, n);
    for (auto &v : g.data())
        v = rng.complex_normal(1.0);
    auto r = g * g.conj_transpose();
    for (std::size_t i = 0; i < n; ++i)
        r(i, i) += shift;
    return r;
}

CplxMatrix analytic_tdl_rh(const ChannelModel &m, const FrameConfig &cfg)
{
    const std::size_t n = cfg.active_count;
    CplxMatrix r(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (const auto &t : m.taps)
            {
                const double ph = -2.0 * std::numbers::pi * (cfg.active_indices[a] - cfg.active_indices[b]) * t.delay /
                                  static_cast<double>(cfg.fft_size);
                r(a, b) += t.power * Cplx(std::cos(ph), std::sin(ph));
            }
    return r;
}

} // namespace

TEST(Ls, Examples)
{
    PreambleSpec one{{CplxVec{{1, 0}, {1, 0}}}, 2.0};
    const CplxVec h{{0.3, -0.2}, {-1.5, 0.25}};
    EXPECT_EQ(ls_estimate(std::vector<CplxVec>{h}, one).h_hat, h);

    PreambleSpec two{{CplxVec{{1, 0}, {-1, 0}}, CplxVec{{1, 0}, {-1, 0}}}, 2.0};
    const CplxVec y1{{1.0, 2.0}, {3.0, -4.0}}, y2{{0.5, -1.0}, {1.0, 1.0}};
    const auto est = ls_estimate(std::vector<CplxVec>{y1, y2}, two).h_hat;
    EXPECT_EQ(est[0], Cplx(0.75, 0.5));
    EXPECT_EQ(est[1], Cplx(-2.0, 1.5)); // sign flip of the average

    PreambleSpec neg{{CplxVec{{-1, 0}}}, 1.0};
    EXPECT_EQ(ls_estimate(std::vector<CplxVec>{CplxVec{{0.4, -0.9}}}, neg).h_hat[0], Cplx(-0.4, 0.9));
}

TEST(Ls, GeneralComplexPreambleUsesDivision)
{
    PreambleSpec p{{CplxVec{{0, 1}}}, 1.0};
    const auto est = ls_estimate(std::vector<CplxVec>{CplxVec{{2, 0}}}, p).h_hat;
    EXPECT_NEAR(std::abs(est[0] - Cplx(0, -2)), 0.0, 1e-15);
}

TEST(Ls, Errors)
{
    PreambleSpec zero{{CplxVec{{1, 0}, {0, 0}}}, 1.0};
    try
    {
        ls_estimate(std::vector<CplxVec>{CplxVec{{1, 0}, {1, 0}}}, zero);
        FAIL();
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.code(), Errc::ZeroPreambleEntry);
    }
    PreambleSpec ok{{CplxVec{{1, 0}}}, 1.0};
    EXPECT_THROW(ls_estimate(std::vector<CplxVec>{}, ok), Error);
    EXPECT_THROW(ls_estimate(std::vector<CplxVec>{CplxVec(2)}, ok), Error);
}

TEST(Ls, NoiselessIsExactOnRandomChannels)
{
    const auto cfg = build_default_frame();
    const auto pre = build_preamble(cfg);
    RngStream rng(1, 1);
    for (const auto &name : builtin_channel_names())
        for (int t = 0; t < 20; ++t)
        {
            const auto ch = draw_channel(builtin_channel(name), cfg, rng);
            const auto est = ls_estimate(receive_preamble(pre, ch, NoiseSpec::noiseless(), rng), pre);
            EXPECT_EQ(est.h_hat, ch.h);
        }
}

TEST(Ls, UnbiasedWithHalvedNoiseVariance)
{
    const auto cfg = build_default_frame();
    const auto pre = build_preamble(cfg);
    const auto noise = NoiseSpec::from_snr_db(5.0);
    RngStream rng(2, 2);
    const auto ch = draw_channel(builtin_channel("urban-3tap"), cfg, rng);
    const int frames = 100000;
    Cplx bias{};
    double var = 0.0;
    const std::size_t k = 11;
    for (int f = 0; f < frames; ++f)
    {
        const auto est = ls_estimate(receive_preamble(pre, ch, noise, rng), pre);
        const Cplx e = est.h_hat[k] - ch.h[k];
        bias += e;
        var += std::norm(e);
    }
    bias /= frames;
    var /= frames;
    const double sigma_mean = std::sqrt(noise.n0 / 2.0 / 2.0 / frames); // per component
    EXPECT_LT(std::abs(bias.real()), 3.0 * sigma_mean);
    EXPECT_LT(std::abs(bias.imag()), 3.0 * sigma_mean);
    EXPECT_NEAR(var / (noise.n0 / 2.0), 1.0, 0.05);
}

TEST(EstimateRh, Examples)
{
    const auto cfg = build_default_frame();
    RngStream rng(3, 3);
    const auto ones = estimate_rh(ChannelModel::ideal(), cfg, 5, rng);
    for (const auto &v : ones.data())
        EXPECT_EQ(v, Cplx(1, 0));

    const auto flat = estimate_rh(ChannelModel::flat_rayleigh(), cfg, 100000, rng);
    for (const auto &v : flat.data())
        EXPECT_NEAR(std::abs(v - Cplx(1, 0)), 0.0, 0.03);

    // equal-power taps at every delay 0..63 make the bins independent
    std::vector<TapPower> taps;
    for (int d = 0; d < 64; ++d)
        taps.push_back({d, 1.0});
    auto white = ChannelModel::tapped_delay_line("white", taps);
    FrameConfig wide = cfg;
    wide.cp_len = 64;
    const auto eye = estimate_rh(white, wide, 20000, rng);
    for (std::size_t i = 0; i < eye.rows(); ++i)
        for (std::size_t j = 0; j < eye.cols(); ++j)
            EXPECT_NEAR(std::abs(eye(i, j) - Cplx(i == j ? 1.0 : 0.0, 0.0)), 0.0, 0.05);

    // exactly Hermitian after symmetrization
    EXPECT_EQ((flat - flat.conj_transpose()).max_abs(), 0.0);
    EXPECT_THROW(estimate_rh(ChannelModel::ideal(), cfg, 0, rng), Error);
}

TEST(Lmmse, NoiselessLimitIsLs)
{
    RngStream rng(4, 4);
    const auto r = random_hpd(52, rng, 0.5);
    CplxVec h(52);
    for (auto &v : h)
        v = rng.complex_normal(1.0);
    const auto out = lmmse_estimate({h}, {r, 0.0, 52.0, 64});
    for (std::size_t k = 0; k < 52; ++k)
        EXPECT_NEAR(std::abs(out[k] - h[k]), 0.0, 1e-9);
}

TEST(Lmmse, ScalarPriorShrinks)
{
    const double s2 = 0.7, n0 = 0.05, ep = 52.0;
    CplxMatrix r = CplxMatrix::identity(52);
    r *= s2;
    RngStream rng(5, 5);
    CplxVec h(52);
    for (auto &v : h)
        v = rng.complex_normal(1.0);
    const auto out = lmmse_estimate({h}, {r, n0, ep, 64});
    const double g = s2 / (s2 + 64.0 * n0 / ep);
    for (std::size_t k = 0; k < 52; ++k)
        EXPECT_NEAR(std::abs(out[k] - g * h[k]), 0.0, 1e-14);
}

TEST(Lmmse, TwoByTwoMatchesCramerSolve)
{
    RngStream rng(6, 6);
    for (int t = 0; t < 50; ++t)
    {
        const auto r = random_hpd(2, rng, 0.0);
        const double n0 = 0.01 + rng.uniform();
        const LmmseParams p{r, n0, 2.0, 64};
        const double lam = p.loading();
        const CplxVec h{rng.complex_normal(1.0), rng.complex_normal(1.0)};

        // z = (R + lam I)^{-1} h by Cramer's rule, then R z
        const Cplx a = r(0, 0) + lam, b = r(0, 1), c = r(1, 0), d = r(1, 1) + lam;
        const Cplx det = a * d - b * c;
        const Cplx z0 = (h[0] * d - b * h[1]) / det;
        const Cplx z1 = (a * h[1] - c * h[0]) / det;
        const Cplx e0 = r(0, 0) * z0 + r(0, 1) * z1;
        const Cplx e1 = r(1, 0) * z0 + r(1, 1) * z1;

        const auto out = lmmse_estimate({h}, p);
        EXPECT_NEAR(std::abs(out[0] - e0), 0.0, 1e-9);
        EXPECT_NEAR(std::abs(out[1] - e1), 0.0, 1e-9);
    }
}

TEST(Lmmse, FilterMatchesOneShot)
{
    RngStream rng(7, 7);
    const auto r = random_hpd(8, rng, 0.1);
    const LmmseParams p{r, 0.2, 8.0, 64};
    const LmmseFilter f(p);
    CplxVec h(8);
    for (auto &v : h)
        v = rng.complex_normal(1.0);
    EXPECT_EQ(f.apply({h}), lmmse_estimate({h}, p));
    EXPECT_THROW(lmmse_estimate({CplxVec(3)}, p), Error);
}

TEST(Lmmse, SingularPriorWithoutNoiseThrows)
{
    CplxMatrix ones(4, 4, {1, 0});
    try
    {
        lmmse_estimate({CplxVec(4, {1, 0})}, {ones, 0.0, 4.0, 64});
        FAIL();
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.code(), Errc::SingularMatrix);
    }
}

TEST(Lmmse, DominatesLsWithMatchedPrior)
{
    const auto cfg = build_default_frame();
    const auto pre = build_preamble(cfg);
    const auto model = builtin_channel("rural-6tap");
    const auto r = analytic_tdl_rh(model, cfg);
    for (const double snr : {-10.0, 0.0, 10.0, 20.0, 30.0})
    {
        const auto noise = NoiseSpec::from_snr_db(snr);
        const LmmseFilter f({r, noise.n0, pre.energy, cfg.fft_size});
        RngStream rng(8, static_cast<std::uint64_t>(snr + 100));
        MeanAccumulator ls_acc, lm_acc;
        for (int t = 0; t < 2000; ++t)
        {
            const auto ch = draw_channel(model, cfg, rng);
            const auto ls = ls_estimate(receive_preamble(pre, ch, noise, rng), pre);
            nmse(ls.h_hat, ch.h, ls_acc);
            nmse(f.apply(ls), ch.h, lm_acc);
        }
        EXPECT_LE(lm_acc.mean(), ls_acc.mean()) << snr;
    }
}

TEST(Lmmse, MismatchedPriorLosesToLsAtHighSnr)
{
    const auto cfg = build_default_frame();
    const auto pre = build_preamble(cfg);
    const auto truth = builtin_channel("rural-6tap");
    const auto wrong = analytic_tdl_rh(builtin_channel("urban-3tap"), cfg);
    const auto noise = NoiseSpec::from_snr_db(40.0);
    const LmmseFilter f({wrong, noise.n0, pre.energy, cfg.fft_size});
    RngStream rng(9, 9);
    MeanAccumulator ls_acc, lm_acc;
    for (int t = 0; t < 500; ++t)
    {
        const auto ch = draw_channel(truth, cfg, rng);
        const auto ls = ls_estimate(receive_preamble(pre, ch, noise, rng), pre);
        nmse(ls.h_hat, ch.h, ls_acc);
        nmse(f.apply(ls), ch.h, lm_acc);
    }
    EXPECT_GT(lm_acc.mean(), ls_acc.mean());
}

TEST(Stacking, RoundTripAndOrder)
{
    const CplxVec h{{1, -1}, {2, -2}, {3, -3}};
    const auto v = stack_complex(h);
    EXPECT_EQ(v, (std::vector<double>{1, 2, 3, -1, -2, -3}));
    EXPECT_EQ(unstack_complex(v), h);
    EXPECT_THROW(unstack_complex(std::vector<double>{1, 2, 3}), Error);
}

TEST(Lsdnn, IdentityNetworkPassesLsThrough)
{
    // hidden = ReLU([I; -I] x), output = [I, -I] hidden = x
    const std::size_t k = 4, w = 2 * k;
    RngStream rng(10, 10);
    auto model = dnn::DnnModel::create(std::vector<std::size_t>{w, 2 * w, w}, rng);
    auto &l1 = model.layers[0];
    auto &l2 = model.layers[1];
    std::fill(l1.weights.begin(), l1.weights.end(), 0.0);
    std::fill(l2.weights.begin(), l2.weights.end(), 0.0);
    std::fill(l1.bias.begin(), l1.bias.end(), 0.0);
    std::fill(l2.bias.begin(), l2.bias.end(), 0.0);
    for (std::size_t i = 0; i < w; ++i)
    {
        l1.weights[i * w + i] = 1.0;
        l1.weights[(w + i) * w + i] = -1.0;
        l2.weights[i * 2 * w + i] = 1.0;
        l2.weights[i * 2 * w + w + i] = -1.0;
    }
    model.norm_in = dnn::NormStats::identity(w);
    model.norm_out = dnn::NormStats::identity(w);

    const CplxVec h{{0.5, -0.25}, {-1, 2}, {0, 0.125}, {3, -3}};
    EXPECT_EQ(lsdnn_estimate({h}, model), h);
    EXPECT_EQ(lsdnn_estimate({h}, model), lsdnn_estimate({h}, model));
    try
    {
        lsdnn_estimate({CplxVec(3)}, model);
        FAIL();
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.code(), Errc::WidthMismatch);
    }
}

TEST(Lsdnn, NormalizationIsAppliedAroundTheNetwork)
{
    // single linear layer y = x; norm_in/out make the output mu_out + sigma_out (x - mu_in) / sigma_in
    RngStream rng(11, 11);
    auto model = dnn::DnnModel::create(std::vector<std::size_t>{2, 2}, rng);
    model.layers[0].weights = {1, 0, 0, 1};
    model.layers[0].bias = {0, 0};
    model.norm_in = {{1.0, -1.0}, {2.0, 4.0}};
    model.norm_out = {{0.5, 0.0}, {3.0, 0.5}};
    const auto out = lsdnn_estimate({CplxVec{{5.0, 3.0}}}, model);
    EXPECT_DOUBLE_EQ(out[0].real(), 0.5 + 3.0 * (5.0 - 1.0) / 2.0);
    EXPECT_DOUBLE_EQ(out[0].imag(), 0.0 + 0.5 * (3.0 + 1.0) / 4.0);
}

TEST(Nmse, Examples)
{
    const CplxVec h{{1, 2}, {-0.5, 0.25}, {3, 0}};
    EXPECT_EQ(nmse(h, h), 0.0);
    EXPECT_DOUBLE_EQ(nmse(CplxVec(3), h), 1.0);
    CplxVec twice = h;
    for (auto &v : twice)
        v *= 2.0;
    EXPECT_DOUBLE_EQ(nmse(twice, h), 1.0);
    try
    {
        nmse(h, CplxVec(3));
        FAIL();
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.code(), Errc::ZeroReference);
    }
    EXPECT_THROW(nmse(h, CplxVec(2)), Error);
}

TEST(MeanAccumulator, MeanAndStandardError)
{
    MeanAccumulator acc;
    EXPECT_EQ(acc.stderr_of_mean(), 0.0);
    for (const double v : {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0})
        acc.add(v);
    EXPECT_EQ(acc.count(), 8u);
    EXPECT_DOUBLE_EQ(acc.mean(), 5.0);
    // sample variance 32/7
    EXPECT_NEAR(acc.stderr_of_mean(), std::sqrt(32.0 / 7.0 / 8.0), 1e-15);

    MeanAccumulator frames;
    const CplxVec h{{1, 0}};
    nmse(CplxVec{{0, 0}}, h, frames);
    nmse(h, h, frames);
    EXPECT_DOUBLE_EQ(frames.mean(), 0.5);
}
