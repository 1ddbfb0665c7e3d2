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


#ifndef CHANEST_EVALUATION_HPP
#define CHANEST_EVALUATION_HPP

#include "chanest/channel.hpp"
#include "chanest/dnn.hpp"
#include "chanest/estimators.hpp"
#include "chanest/phy.hpp"
#include "chanest/quant.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chanest
{

// Stream domain tags. Each Monte-Carlo consumer draws from its own family of streams.
inline constexpr std::uint64_t kEvalDomain = 0x4556;
inline constexpr std::uint64_t kDatasetDomain = 0x4453;
inline constexpr std::uint64_t kRhDomain = 0x5248;

enum class EstimatorKind
{
    Ls,
    Lmmse,
    Lsdnn,
    Ideal,
};

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(std::string_view name);
std::vector<EstimatorKind> parse_estimator_list(std::string_view csv);

// Everything fixed about the link apart from SNR.
struct LinkSetup
{
    FrameConfig frame;
    PreambleSpec preamble;
    ModScheme scheme;
    std::vector<int> pilot_values;
    ChannelModel channel;
    std::size_t data_symbols = 1;

    static LinkSetup standard(ChannelModel channel, Modulation modulation = Modulation::Qpsk);
    void validate() const;
};

struct SimulatedFrame
{
    ChannelRealization channel;
    std::vector<CplxVec> y_preamble;
    std::vector<Bits> tx_bits;
    std::vector<CplxVec> y_data;
};

// One channel draw held static over the preamble and all data symbols.
SimulatedFrame simulate_frame(const LinkSetup &link, const NoiseSpec &noise, RngStream &rng, bool with_data = true);

struct EstimatorSet
{
    std::vector<EstimatorKind> kinds;
    const dnn::DnnModel *model = nullptr; // required by Lsdnn
    std::optional<CplxMatrix> r_h;        // required by Lmmse
    quant::NumberFormat quant;            // applied to Ls and Lsdnn
    std::string model_id;
};

struct EvalSpec
{
    LinkSetup link;
    std::vector<double> snr_db;
    std::size_t frames = 1000;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    std::uint64_t domain = kEvalDomain;
    bool keep_frames = false; // retain per-frame NMSE and BER in the rows

    void validate() const;
};

struct EvalRow
{
    double snr_db = 0.0;
    double nmse_mean = 0.0;
    double nmse_stderr = 0.0;
    double ber = 0.0;
    double ber_stderr = 0.0;
    std::size_t bit_errors = 0;
    std::size_t bits_total = 0;
    std::vector<double> frame_nmse;
    std::vector<double> frame_ber;
};

struct EvalReport
{
    std::string estimator;
    std::string model_id;
    std::string quant;
    std::uint64_t seed = 0;
    std::size_t frames = 0;
    std::vector<EvalRow> rows;
};

// One report per requested estimator, all computed on the same simulated frames.
std::vector<EvalReport> run_eval(const EvalSpec &spec, const EstimatorSet &estimators);

// Header plus one line per SNR: snr_db,nmse_mean,nmse_stderr,ber,bits_total
std::string report_csv(const EvalReport &report);

// Standard error of the mean of a - b for paired samples.
double paired_stderr(std::span<const double> a, std::span<const double> b);

// Equalization that maps bins with a zero estimate to a zero symbol instead of failing.
CplxVec equalize_or_zero(std::span<const Cplx> y, std::span<const Cplx> h_hat);

// Sequence of SNR values start, start + step, ... up to and including stop.
std::vector<double> snr_range(double start, double stop, double step);

} // namespace chanest

namespace chanest::quant
{

struct WlSweepRow
{
    NumberFormat format;
    EvalReport lsdnn;
    EvalReport ls;
};

// One evaluation per format over the same frame set.
std::vector<WlSweepRow> wl_sweep(const dnn::DnnModel &model, const EvalSpec &spec, std::span<const NumberFormat> formats);

} // namespace chanest::quant

#endif
