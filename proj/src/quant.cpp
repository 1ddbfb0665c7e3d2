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


#include "chanest/quant.hpp"

#include "chanest/error.hpp"

#include <cmath>
#include <string>

namespace chanest::quant
{

namespace
{

double round_half_even(double v)
{
    const double f = std::floor(v);
    const double diff = v - f;
    if (diff > 0.5)
        return f + 1.0;
    if (diff < 0.5)
        return f;
    return std::fmod(f, 2.0) == 0.0 ? f : f + 1.0;
}

} // namespace

double FixedPointFormat::step() const
{
    return std::ldexp(1.0, -(total_bits - integer_bits));
}

double FixedPointFormat::min_value() const
{
    return -std::ldexp(1.0, integer_bits - 1);
}

double FixedPointFormat::max_value() const
{
    return std::ldexp(1.0, integer_bits - 1) - step();
}

void FixedPointFormat::validate() const
{
    if (!(1 <= integer_bits && integer_bits <= total_bits && total_bits <= 64))
        throw Error(Errc::BadConfig, "fixed-point format needs 1 <= I <= W <= 64, got Q(" + std::to_string(total_bits) +
                                         "," + std::to_string(integer_bits) + ")");
}

double quantize(double x, const FixedPointFormat &fmt)
{
    const int frac = fmt.total_bits - fmt.integer_bits;
    const double scaled = std::ldexp(x, frac);
    double n = 0.0;
    switch (fmt.rounding)
    {
    case Rounding::NearestEven: n = round_half_even(scaled); break;
    case Rounding::NearestAway: n = std::round(scaled); break;
    case Rounding::Truncate: n = std::floor(scaled); break;
    }
    const double lo = -std::ldexp(1.0, fmt.total_bits - 1);
    const double hi = std::ldexp(1.0, fmt.total_bits - 1) - 1.0;
    if (n < lo || n > hi)
    {
        if (fmt.overflow == Overflow::Saturate)
            n = n < lo ? lo : hi;
        else
        {
            const double span = std::ldexp(1.0, fmt.total_bits);
            n -= span * std::floor((n - lo) / span);
        }
    }
    return std::ldexp(n, -frac);
}

double round_to_half(double x)
{
    if (x == 0.0 || !std::isfinite(x))
        return x;
    int e = 0;
    std::frexp(x, &e); // |x| in [2^(e-1), 2^e)
    const int exponent = std::max(e - 1, -14);
    const double step = std::ldexp(1.0, exponent - 10);
    const double q = round_half_even(x / step) * step;
    if (std::abs(q) > 65504.0)
        return std::copysign(INFINITY, x);
    return q;
}

double round_to_single(double x)
{
    return static_cast<double>(static_cast<float>(x));
}

NumberFormat NumberFormat::fixed_point(int total_bits, int integer_bits, Rounding r, Overflow o)
{
    NumberFormat f{FormatKind::Fixed, {total_bits, integer_bits, r, o}};
    f.fixed.validate();
    return f;
}

NumberFormat NumberFormat::parse(std::string_view text)
{
    const auto bad = [&](const std::string &why) {
        return Error(Errc::BadConfig, "number format '" + std::string(text) + "': " + why);
    };
    if (text == "fp64")
        return float64();
    if (text == "fp32")
        return float32();
    if (text == "fp16")
        return float16();
    if (text.size() < 4 || text[0] != 'q')
        throw bad("expected fp64, fp32, fp16 or q<W>_<I>[:<round>:<overflow>]");

    std::string body(text.substr(1));
    std::string round_s, overflow_s;
    if (const auto c1 = body.find(':'); c1 != std::string::npos)
    {
        const auto c2 = body.find(':', c1 + 1);
        if (c2 == std::string::npos)
            throw bad("rounding and overflow must be given together");
        round_s = body.substr(c1 + 1, c2 - c1 - 1);
        overflow_s = body.substr(c2 + 1);
        body.resize(c1);
    }
    const auto us = body.find('_');
    if (us == std::string::npos)
        throw bad("missing '_' between W and I");
    int w = 0, i = 0;
    try
    {
        std::size_t used = 0;
        w = std::stoi(body.substr(0, us), &used);
        if (used != us)
            throw bad("W is not an integer");
        const std::string is = body.substr(us + 1);
        i = std::stoi(is, &used);
        if (used != is.size())
            throw bad("I is not an integer");
    }
    catch (const std::logic_error &)
    {
        throw bad("W and I must be integers");
    }

    Rounding r = Rounding::NearestAway;
    Overflow o = Overflow::Saturate;
    if (!round_s.empty())
    {
        if (round_s == "even")
            r = Rounding::NearestEven;
        else if (round_s == "away")
            r = Rounding::NearestAway;
        else if (round_s == "trunc")
            r = Rounding::Truncate;
        else
            throw bad("rounding must be even, away or trunc");
        if (overflow_s == "sat")
            o = Overflow::Saturate;
        else if (overflow_s == "wrap")
            o = Overflow::Wrap;
        else
            throw bad("overflow must be sat or wrap");
    }
    try
    {
        return fixed_point(w, i, r, o);
    }
    catch (const Error &e)
    {
        throw bad(e.what());
    }
}

std::string NumberFormat::label() const
{
    switch (kind)
    {
    case FormatKind::Float64: return "fp64";
    case FormatKind::Float32: return "fp32";
    case FormatKind::Float16: return "fp16";
    case FormatKind::Fixed: break;
    }
    std::string s = "q" + std::to_string(fixed.total_bits) + "_" + std::to_string(fixed.integer_bits);
    if (fixed.rounding != Rounding::NearestAway || fixed.overflow != Overflow::Saturate)
    {
        s += fixed.rounding == Rounding::NearestEven ? ":even" : fixed.rounding == Rounding::Truncate ? ":trunc" : ":away";
        s += fixed.overflow == Overflow::Wrap ? ":wrap" : ":sat";
    }
    return s;
}

double NumberFormat::apply(double x) const
{
    switch (kind)
    {
    case FormatKind::Float64: return x;
    case FormatKind::Float32: return round_to_single(x);
    case FormatKind::Float16: return round_to_half(x);
    case FormatKind::Fixed: return quantize(x, fixed);
    }
    return x;
}

void NumberFormat::apply(std::span<double> xs) const
{
    if (is_identity())
        return;
    for (auto &x : xs)
        x = apply(x);
}

bool operator==(const NumberFormat &a, const NumberFormat &b)
{
    if (a.kind != b.kind)
        return false;
    if (a.kind != FormatKind::Fixed)
        return true;
    return a.fixed.total_bits == b.fixed.total_bits && a.fixed.integer_bits == b.fixed.integer_bits &&
           a.fixed.rounding == b.fixed.rounding && a.fixed.overflow == b.fixed.overflow;
}

std::vector<NumberFormat> parse_format_list(std::string_view csv)
{
    std::vector<NumberFormat> out;
    std::size_t start = 0;
    while (start <= csv.size())
    {
        auto end = csv.find(',', start);
        if (end == std::string_view::npos)
            end = csv.size();
        const auto item = csv.substr(start, end - start);
        if (!item.empty())
            out.push_back(NumberFormat::parse(item));
        start = end + 1;
    }
    if (out.empty())
        throw Error(Errc::BadConfig, "format list is empty");
    return out;
}

// ---- networks -----------------------------------------------------------

QuantizedNetwork::QuantizedNetwork(const dnn::DnnModel &model, const QuantPolicy &policy)
    : model_(model), policy_(policy)
{
    model_.validate();
    for (auto &L : model_.layers)
    {
        policy_.weight.apply(L.weights);
        policy_.weight.apply(L.bias);
    }
}

std::vector<double> QuantizedNetwork::forward(std::span<const double> x) const
{
    if (x.size() != model_.input_width())
        throw Error(Errc::WidthMismatch, "input width " + std::to_string(x.size()) + ", model expects " +
                                             std::to_string(model_.input_width()));
    std::vector<double> a(x.begin(), x.end());
    policy_.input.apply(a);
    for (std::size_t l = 0; l < model_.layers.size(); ++l)
    {
        const auto &L = model_.layers[l];
        const bool hidden = l + 1 < model_.layers.size();
        std::vector<double> z(L.outputs);
        for (std::size_t j = 0; j < L.outputs; ++j)
        {
            const double *w = L.weights.data() + j * L.inputs;
            double acc = 0.0;
            for (std::size_t i = 0; i < L.inputs; ++i)
                acc += w[i] * a[i];
            acc += L.bias[j];
            z[j] = hidden ? (acc > 0.0 ? acc : 0.0) : acc;
        }
        (hidden ? policy_.activation : policy_.output).apply(z);
        a = std::move(z);
    }
    return a;
}

std::vector<double> quantized_forward(const dnn::DnnModel &model, std::span<const double> x, const QuantPolicy &policy)
{
    return QuantizedNetwork(model, policy).forward(x);
}

LsEstimate quantized_ls(std::span<const CplxVec> y_preamble, const PreambleSpec &preamble, const NumberFormat &fmt)
{
    if (fmt.is_identity())
        return ls_estimate(y_preamble, preamble);
    if (y_preamble.empty() || preamble.symbols.empty())
        throw Error(Errc::LengthMismatch, "LS needs at least one received preamble symbol");
    const auto &d = preamble.symbols.front();
    const std::size_t n = d.size();
    for (const auto &y : y_preamble)
        if (y.size() != n)
            throw Error(Errc::LengthMismatch, "received preamble length differs from the reference");

    const auto q = [&](double v) { return fmt.apply(v); };
    const double kp = static_cast<double>(y_preamble.size());
    LsEstimate out;
    out.h_hat.resize(n);
    for (std::size_t k = 0; k < n; ++k)
    {
        double sr = 0.0, si = 0.0;
        for (const auto &y : y_preamble)
        {
            sr = q(sr + q(y[k].real()));
            si = q(si + q(y[k].imag()));
        }
        const Cplx dk = d[k];
        if (dk == Cplx{})
            throw Error(Errc::ZeroPreambleEntry, "preamble entry " + std::to_string(k) + " is zero");
        if (dk == Cplx(1.0, 0.0) || dk == Cplx(-1.0, 0.0))
        {
            const double sign = dk.real();
            out.h_hat[k] = {q(sign * sr / kp), q(sign * si / kp)};
        }
        else
        {
            // (s / K_p) / D with every product and sum held in the format
            const double xr = q(kp * dk.real()), xi = q(kp * dk.imag());
            const double den = q(q(xr * xr) + q(xi * xi));
            if (den == 0.0)
                throw Error(Errc::DivisionByZero, "quantized preamble entry vanished");
            const double nr = q(q(xr * sr) + q(xi * si));
            const double ni = q(q(xr * si) - q(xi * sr));
            out.h_hat[k] = {q(nr / den), q(ni / den)};
        }
    }
    return out;
}

CplxVec quantized_lsdnn(const LsEstimate &ls, const QuantizedNetwork &net)
{
    const auto &model = net.model();
    if (2 * ls.h_hat.size() != model.input_width())
        throw Error(Errc::WidthMismatch, "model width does not match the LS estimate");
    auto x = stack_complex(ls.h_hat);
    model.norm_in.normalize(x);
    auto y = net.forward(x);
    model.norm_out.denormalize(y);
    net.policy().output.apply(y);
    return unstack_complex(y);
}

} // namespace chanest::quant
