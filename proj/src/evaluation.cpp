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


#include "chanest/evaluation.hpp"

#include "chanest/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

namespace chanest
{

std::string estimator_name(EstimatorKind kind)
{
    switch (kind)
    {
    case EstimatorKind::Ls: return "ls";
    case EstimatorKind::Lmmse: return "lmmse";
    case EstimatorKind::Lsdnn: return "lsdnn";
    case EstimatorKind::Ideal: return "ideal";
    }
    return "?";
}

EstimatorKind estimator_from_name(std::string_view name)
{
    if (name == "ls")
        return EstimatorKind::Ls;
    if (name == "lmmse")
        return EstimatorKind::Lmmse;
    if (name == "lsdnn")
        return EstimatorKind::Lsdnn;
    if (name == "ideal")
        return EstimatorKind::Ideal;
    throw Error(Errc::BadConfig, "unknown estimator '" + std::string(name) + "' (ls, lmmse, lsdnn, ideal)");
}

std::vector<EstimatorKind> parse_estimator_list(std::string_view csv)
{
    std::vector<EstimatorKind> out;
    std::size_t start = 0;
    while (start <= csv.size())
    {
        auto end = csv.find(',', start);
        if (end == std::string_view::npos)
            end = csv.size();
        if (end > start)
        {
            const auto kind = estimator_from_name(csv.substr(start, end - start));
            if (std::find(out.begin(), out.end(), kind) == out.end())
                out.push_back(kind);
        }
        start = end + 1;
    }
    if (out.empty())
        throw Error(Errc::BadConfig, "estimator list is empty");
    return out;
}

LinkSetup LinkSetup::standard(ChannelModel channel, Modulation modulation)
{
    LinkSetup link;
    link.frame = build_default_frame();
    link.preamble = build_preamble(link.frame);
    link.scheme = ModScheme::make(modulation);
    link.pilot_values = default_pilot_values();
    link.channel = std::move(channel);
    return link;
}

void LinkSetup::validate() const
{
    frame.validate();
    channel.validate(frame);
    if (preamble.symbols.size() != frame.preamble_count)
        throw Error(Errc::BadConfig, "preamble symbol count does not match the frame");
    if (pilot_values.size() != frame.pilot_slots.size())
        throw Error(Errc::BadConfig, "pilot value count does not match the frame");
}

SimulatedFrame simulate_frame(const LinkSetup &link, const NoiseSpec &noise, RngStream &rng, bool with_data)
{
    SimulatedFrame f;
    f.channel = draw_channel(link.channel, link.frame, rng);
    f.y_preamble.reserve(link.preamble.symbols.size());
    for (const auto &d : link.preamble.symbols)
        f.y_preamble.push_back(apply_channel(d, f.channel, noise, rng));
    if (!with_data)
        return f;

    const std::size_t nbits = link.frame.data_slots.size() * link.scheme.bits_per_symbol;
    for (std::size_t s = 0; s < link.data_symbols; ++s)
    {
        Bits bits(nbits);
        std::uint64_t word = 0;
        for (std::size_t i = 0; i < nbits; ++i)
        {
            if (i % 64 == 0)
                word = rng.next_u64();
            bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
        }
        const auto x = modulate(bits, link.scheme, link.frame, link.pilot_values);
        f.y_data.push_back(apply_channel(x, f.channel, noise, rng));
        f.tx_bits.push_back(std::move(bits));
    }
    return f;
}

void EvalSpec::validate() const
{
    link.validate();
    if (snr_db.empty())
        throw Error(Errc::BadConfig, "SNR grid is empty");
    if (frames == 0)
        throw Error(Errc::BadConfig, "frames per point must be at least 1");
}

CplxVec equalize_or_zero(std::span<const Cplx> y, std::span<const Cplx> h_hat)
{
    if (y.size() != h_hat.size())
        throw Error(Errc::LengthMismatch, "equalizer inputs differ in length");
    CplxVec out(y.size());
    for (std::size_t k = 0; k < y.size(); ++k)
        out[k] = h_hat[k] == Cplx{} ? Cplx{} : cplx_div(y[k], h_hat[k]);
    return out;
}

double paired_stderr(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw Error(Errc::LengthMismatch, "paired samples differ in length");
    MeanAccumulator acc;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc.add(a[i] - b[i]);
    return acc.stderr_of_mean();
}

std::vector<double> snr_range(double start, double stop, double step)
{
    if (!(step > 0.0) || stop < start)
        throw Error(Errc::BadConfig, "SNR range needs step > 0 and stop >= start");
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i)
        out.push_back(start + static_cast<double>(i) * step);
    return out;
}

namespace
{

struct FrameResult
{
    double nmse = 0.0;
    std::size_t errors = 0;
    std::size_t bits = 0;
};

template <typename Fn> void parallel_for(std::size_t n, std::size_t workers, Fn &&fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++)
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto &t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace

std::vector<EvalReport> run_eval(const EvalSpec &spec, const EstimatorSet &est)
{
    spec.validate();
    if (est.kinds.empty())
        throw Error(Errc::BadConfig, "no estimators selected");
    const bool wants_dnn = std::find(est.kinds.begin(), est.kinds.end(), EstimatorKind::Lsdnn) != est.kinds.end();
    const bool wants_lmmse = std::find(est.kinds.begin(), est.kinds.end(), EstimatorKind::Lmmse) != est.kinds.end();
    if (wants_dnn && est.model == nullptr)
        throw Error(Errc::MissingModel, "lsdnn needs a trained model");
    if (wants_lmmse && !est.r_h)
        throw Error(Errc::MissingRh, "lmmse needs a channel autocorrelation source");
    const auto &link = spec.link;
    const std::size_t k_on = link.frame.active_count;
    if (wants_dnn && est.model->input_width() != 2 * k_on)
        throw Error(Errc::WidthMismatch, "model width does not match the frame");

    std::unique_ptr<quant::QuantizedNetwork> qnet;
    if (wants_dnn && !est.quant.is_identity())
        qnet = std::make_unique<quant::QuantizedNetwork>(*est.model, quant::QuantPolicy::uniform(est.quant));

    const std::size_t n_est = est.kinds.size();
    std::vector<EvalReport> reports(n_est);
    for (std::size_t e = 0; e < n_est; ++e)
    {
        reports[e].estimator = estimator_name(est.kinds[e]);
        const bool uses_model = est.kinds[e] == EstimatorKind::Lsdnn;
        const bool uses_quant = est.kinds[e] == EstimatorKind::Ls || uses_model;
        reports[e].model_id = uses_model ? est.model_id : "";
        reports[e].quant = uses_quant ? est.quant.label() : "fp64";
        reports[e].seed = spec.seed;
        reports[e].frames = spec.frames;
    }

    std::vector<FrameResult> results(n_est * spec.frames);
    for (std::size_t si = 0; si < spec.snr_db.size(); ++si)
    {
        const auto noise = NoiseSpec::from_snr_db(spec.snr_db[si]);
        std::optional<LmmseFilter> lmmse;
        if (wants_lmmse)
            lmmse.emplace(LmmseParams{*est.r_h, noise.n0, link.preamble.energy, link.frame.fft_size});

        parallel_for(spec.frames, spec.workers, [&](std::size_t fi) {
            RngStream rng(spec.seed, RngStream::key({spec.domain, si, fi}));
            const auto frame = simulate_frame(link, noise, rng);
            const auto &h = frame.channel.h;

            std::optional<LsEstimate> ls_plain, ls_q;
            const auto plain_ls = [&]() -> const LsEstimate & {
                if (!ls_plain)
                    ls_plain = ls_estimate(frame.y_preamble, link.preamble);
                return *ls_plain;
            };
            const auto quant_ls = [&]() -> const LsEstimate & {
                if (est.quant.is_identity())
                    return plain_ls();
                if (!ls_q)
                    ls_q = quant::quantized_ls(frame.y_preamble, link.preamble, est.quant);
                return *ls_q;
            };

            for (std::size_t e = 0; e < n_est; ++e)
            {
                CplxVec h_hat;
                switch (est.kinds[e])
                {
                case EstimatorKind::Ls: h_hat = quant_ls().h_hat; break;
                case EstimatorKind::Lmmse: h_hat = lmmse->apply(plain_ls()); break;
                case EstimatorKind::Lsdnn:
                    h_hat = qnet ? quant::quantized_lsdnn(quant_ls(), *qnet) : lsdnn_estimate(plain_ls(), *est.model);
                    break;
                case EstimatorKind::Ideal: h_hat = h; break;
                }
                FrameResult &r = results[e * spec.frames + fi];
                r.nmse = nmse(h_hat, h);
                r.errors = 0;
                r.bits = 0;
                for (std::size_t s = 0; s < frame.y_data.size(); ++s)
                {
                    const auto rx = demap(equalize_or_zero(frame.y_data[s], h_hat), link.scheme, link.frame);
                    const auto cnt = bit_errors(frame.tx_bits[s], rx);
                    r.errors += cnt.errors;
                    r.bits += cnt.total;
                }
            }
        });

        for (std::size_t e = 0; e < n_est; ++e)
        {
            EvalRow row;
            row.snr_db = spec.snr_db[si];
            MeanAccumulator nm, br;
            for (std::size_t fi = 0; fi < spec.frames; ++fi)
            {
                const auto &r = results[e * spec.frames + fi];
                const double fb = r.bits ? static_cast<double>(r.errors) / static_cast<double>(r.bits) : 0.0;
                nm.add(r.nmse);
                br.add(fb);
                row.bit_errors += r.errors;
                row.bits_total += r.bits;
                if (spec.keep_frames)
                {
                    row.frame_nmse.push_back(r.nmse);
                    row.frame_ber.push_back(fb);
                }
            }
            row.nmse_mean = nm.mean();
            row.nmse_stderr = nm.stderr_of_mean();
            row.ber = row.bits_total ? static_cast<double>(row.bit_errors) / static_cast<double>(row.bits_total) : 0.0;
            row.ber_stderr = br.stderr_of_mean();
            reports[e].rows.push_back(std::move(row));
        }
    }
    return reports;
}

std::string report_csv(const EvalReport &report)
{
    std::string out = "snr_db,nmse_mean,nmse_stderr,ber,bits_total\n";
    char buf[160];
    for (const auto &r : report.rows)
    {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%zu\n", r.snr_db, r.nmse_mean, r.nmse_stderr, r.ber,
                      r.bits_total);
        out += buf;
    }
    return out;
}

} // namespace chanest

namespace chanest::quant
{

std::vector<WlSweepRow> wl_sweep(const dnn::DnnModel &model, const EvalSpec &spec, std::span<const NumberFormat> formats)
{
    if (formats.empty())
        throw Error(Errc::BadConfig, "word-length sweep needs at least one format");
    std::vector<WlSweepRow> rows;
    for (const auto &fmt : formats)
    {
        EstimatorSet est;
        est.kinds = {EstimatorKind::Lsdnn, EstimatorKind::Ls};
        est.model = &model;
        est.quant = fmt;
        auto reports = run_eval(spec, est);
        rows.push_back({fmt, std::move(reports[0]), std::move(reports[1])});
    }
    return rows;
}

} // namespace chanest::quant
