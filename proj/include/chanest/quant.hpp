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


#ifndef CHANEST_QUANT_HPP
#define CHANEST_QUANT_HPP

#include "chanest/dnn.hpp"
#include "chanest/estimators.hpp"
#include "chanest/phy.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chanest::quant
{

enum class Rounding
{
    NearestEven,
    NearestAway,
    Truncate, // toward -inf, i.e. dropping two's-complement LSBs
};

enum class Overflow
{
    Saturate,
    Wrap,
};

// Signed Q(W, I): W total bits, I integer bits including sign, step 2^-(W-I).
struct FixedPointFormat
{
    int total_bits = 18;
    int integer_bits = 9;
    Rounding rounding = Rounding::NearestAway;
    Overflow overflow = Overflow::Saturate;

    double step() const;
    double min_value() const; // -2^(I-1)
    double max_value() const; // 2^(I-1) - step
    void validate() const;
};

// Nearest representable value under the format's rounding and overflow policy.
double quantize(double x, const FixedPointFormat &fmt);

// IEEE binary16 / binary32 round-to-nearest-even, returned as double.
double round_to_half(double x);
double round_to_single(double x);

enum class FormatKind
{
    Float64,
    Float32,
    Float16,
    Fixed,
};

struct NumberFormat
{
    FormatKind kind = FormatKind::Float64;
    FixedPointFormat fixed;

    static NumberFormat float64() { return {}; }
    static NumberFormat float32() { return {FormatKind::Float32, {}}; }
    static NumberFormat float16() { return {FormatKind::Float16, {}}; }
    static NumberFormat fixed_point(int total_bits, int integer_bits, Rounding r = Rounding::NearestAway,
                                    Overflow o = Overflow::Saturate);

    // "fp64" | "fp32" | "fp16" | "q<W>_<I>[:<round>:<overflow>]", round in {even, away, trunc},
    // overflow in {sat, wrap}.
    static NumberFormat parse(std::string_view text);
    std::string label() const;

    bool is_identity() const noexcept { return kind == FormatKind::Float64; }
    double apply(double x) const;
    void apply(std::span<double> xs) const;

    friend bool operator==(const NumberFormat &a, const NumberFormat &b);
};

std::vector<NumberFormat> parse_format_list(std::string_view csv);

struct QuantPolicy
{
    NumberFormat input;
    NumberFormat weight;
    NumberFormat activation;
    NumberFormat output;

    static QuantPolicy uniform(const NumberFormat &fmt) { return {fmt, fmt, fmt, fmt}; }
    bool is_identity() const noexcept
    {
        return input.is_identity() && weight.is_identity() && activation.is_identity() && output.is_identity();
    }
};

// Network with weights and biases stored already quantized. Accumulation inside a
// layer runs in double; values are quantized at layer boundaries only.
class QuantizedNetwork
{
  public:
    QuantizedNetwork(const dnn::DnnModel &model, const QuantPolicy &policy);

    std::vector<double> forward(std::span<const double> x) const;
    const dnn::DnnModel &model() const noexcept { return model_; }
    const QuantPolicy &policy() const noexcept { return policy_; }

  private:
    dnn::DnnModel model_;
    QuantPolicy policy_;
};

std::vector<double> quantized_forward(const dnn::DnnModel &model, std::span<const double> x, const QuantPolicy &policy);

// LS with the received samples, running sum and quotient all held in fmt.
LsEstimate quantized_ls(std::span<const CplxVec> y_preamble, const PreambleSpec &preamble, const NumberFormat &fmt);

// Full LSDNN chain around a quantized network: normalization and denormalization are
// evaluated in double and their results re-quantized to the input/output formats.
CplxVec quantized_lsdnn(const LsEstimate &ls, const QuantizedNetwork &net);

} // namespace chanest::quant

#endif
