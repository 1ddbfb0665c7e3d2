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


#include "chanest/estimators.hpp"

#include "chanest/error.hpp"

#include <cmath>

namespace chanest
{

LsEstimate ls_estimate(std::span<const CplxVec> y_preamble, const PreambleSpec &preamble)
{
    if (y_preamble.empty())
        throw Error(Errc::LengthMismatch, "LS needs at least one received preamble symbol");
    if (preamble.symbols.empty())
        throw Error(Errc::LengthMismatch, "preamble has no symbols");
    const auto &d = preamble.symbols.front();
    const std::size_t n = d.size();
    for (const auto &y : y_preamble)
        if (y.size() != n)
            throw Error(Errc::LengthMismatch, "received preamble length differs from the reference");

    const double kp = static_cast<double>(y_preamble.size());
    LsEstimate out;
    out.h_hat.resize(n);
    for (std::size_t k = 0; k < n; ++k)
    {
        Cplx sum{};
        for (const auto &y : y_preamble)
            sum += y[k];
        const Cplx dk = d[k];
        if (dk == Cplx{})
            throw Error(Errc::ZeroPreambleEntry, "preamble entry " + std::to_string(k) + " is zero");
        if (dk == Cplx(1.0, 0.0))
            out.h_hat[k] = sum / kp;
        else if (dk == Cplx(-1.0, 0.0))
            out.h_hat[k] = -sum / kp;
        else
            out.h_hat[k] = cplx_div(sum, kp * dk);
    }
    return out;
}

CplxMatrix estimate_rh(const ChannelModel &model, const FrameConfig &cfg, std::size_t draws, RngStream &rng)
{
    if (draws == 0)
        throw Error(Errc::BadConfig, "estimate_rh needs at least one draw");
    const std::size_t n = cfg.active_count;
    CplxMatrix r(n, n);
    for (std::size_t d = 0; d < draws; ++d)
    {
        const auto h = draw_channel(model, cfg, rng).h;
        for (std::size_t i = 0; i < n; ++i)
        {
            auto row = r.row(i);
            const Cplx hi = h[i];
            for (std::size_t j = 0; j < n; ++j)
                row[j] += hi * std::conj(h[j]);
        }
    }
    r *= 1.0 / static_cast<double>(draws);
    for (std::size_t i = 0; i < n; ++i)
    {
        r(i, i) = r(i, i).real();
        for (std::size_t j = i + 1; j < n; ++j)
        {
            const Cplx avg = 0.5 * (r(i, j) + std::conj(r(j, i)));
            r(i, j) = avg;
            r(j, i) = std::conj(avg);
        }
    }
    return r;
}

LmmseFilter::LmmseFilter(const LmmseParams &params)
{
    const auto &r = params.r_h;
    if (!r.square())
        throw Error(Errc::LengthMismatch, "R_h must be square");
    if (!(params.e_p > 0.0))
        throw Error(Errc::BadConfig, "preamble energy must be positive");
    CplxMatrix a = r;
    const double load = params.loading();
    for (std::size_t i = 0; i < a.rows(); ++i)
        a(i, i) += load;
    w_ = r * lu_invert(a);
}

CplxVec LmmseFilter::apply(const LsEstimate &ls) const
{
    return w_ * std::span<const Cplx>(ls.h_hat);
}

CplxVec lmmse_estimate(const LsEstimate &ls, const LmmseParams &params)
{
    if (params.r_h.rows() != ls.h_hat.size())
        throw Error(Errc::LengthMismatch, "R_h size differs from the LS estimate");
    return LmmseFilter(params).apply(ls);
}

std::vector<double> stack_complex(std::span<const Cplx> h)
{
    const std::size_t n = h.size();
    std::vector<double> v(2 * n);
    for (std::size_t k = 0; k < n; ++k)
    {
        v[k] = h[k].real();
        v[n + k] = h[k].imag();
    }
    return v;
}

CplxVec unstack_complex(std::span<const double> v)
{
    if (v.size() % 2 != 0)
        throw Error(Errc::WidthMismatch, "stacked vector must have even length");
    const std::size_t n = v.size() / 2;
    CplxVec h(n);
    for (std::size_t k = 0; k < n; ++k)
        h[k] = {v[k], v[n + k]};
    return h;
}

CplxVec lsdnn_estimate(const LsEstimate &ls, const dnn::DnnModel &model)
{
    if (2 * ls.h_hat.size() != model.input_width() || model.input_width() != model.output_width())
        throw Error(Errc::WidthMismatch, "model width " + std::to_string(model.input_width()) +
                                             " does not match 2 x " + std::to_string(ls.h_hat.size()));
    auto x = stack_complex(ls.h_hat);
    model.norm_in.normalize(x);
    auto y = dnn::forward(model, x);
    model.norm_out.denormalize(y);
    return unstack_complex(y);
}

double nmse(std::span<const Cplx> h_hat, std::span<const Cplx> h_true)
{
    if (h_hat.size() != h_true.size())
        throw Error(Errc::LengthMismatch, "NMSE inputs differ in length");
    double err = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < h_true.size(); ++k)
    {
        err += std::norm(h_hat[k] - h_true[k]);
        ref += std::norm(h_true[k]);
    }
    if (!(ref > 0.0))
        throw Error(Errc::ZeroReference, "reference channel has zero energy");
    return err / ref;
}

double nmse(std::span<const Cplx> h_hat, std::span<const Cplx> h_true, MeanAccumulator &accumulate)
{
    const double v = nmse(h_hat, h_true);
    accumulate.add(v);
    return v;
}

void MeanAccumulator::add(double v) noexcept
{
    ++n_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (v - mean_);
}

double MeanAccumulator::mean() const noexcept
{
    return mean_;
}

double MeanAccumulator::stderr_of_mean() const noexcept
{
    if (n_ < 2)
        return 0.0;
    const double var = m2_ / static_cast<double>(n_ - 1);
    return std::sqrt(var / static_cast<double>(n_));
}

} // namespace chanest
