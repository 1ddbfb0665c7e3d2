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


#include "chanest/dataset_io.hpp"

#include "chanest/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace chanest
{

namespace fs = std::filesystem;

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SnrSpec SnrSpec::fixed(double snr_db)
{
    SnrSpec s;
    s.fixed_db = snr_db;
    s.lo = s.hi = snr_db;
    return s;
}

SnrSpec SnrSpec::uniform(double lo, double hi)
{
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw Error(Errc::BadConfig, "uniform SNR range needs finite lo <= hi");
    SnrSpec s;
    s.lo = lo;
    s.hi = hi;
    return s;
}

SnrSpec SnrSpec::parse(std::string_view text)
{
    const std::string t(text);
    if (t == "inf")
        return fixed(INFINITY);
    if (t.rfind("uniform(", 0) == 0 && t.back() == ')')
    {
        const auto comma = t.find(',');
        if (comma == std::string::npos)
            throw Error(Errc::BadConfig, "SNR spec '" + t + "': expected uniform(lo,hi)");
        char *end = nullptr;
        const std::string a = t.substr(8, comma - 8), b = t.substr(comma + 1, t.size() - comma - 2);
        const double lo = std::strtod(a.c_str(), &end);
        if (end == a.c_str() || *end)
            throw Error(Errc::BadConfig, "SNR spec '" + t + "': bad lower bound");
        const double hi = std::strtod(b.c_str(), &end);
        if (end == b.c_str() || *end)
            throw Error(Errc::BadConfig, "SNR spec '" + t + "': bad upper bound");
        return uniform(lo, hi);
    }
    char *end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || *end || !std::isfinite(v))
        throw Error(Errc::BadConfig, "SNR spec '" + t + "': expected a number, inf or uniform(lo,hi)");
    return fixed(v);
}

std::string SnrSpec::label() const
{
    char buf[80];
    if (fixed_db)
    {
        if (std::isinf(*fixed_db))
            return "inf";
        std::snprintf(buf, sizeof buf, "%g", *fixed_db);
    }
    else
        std::snprintf(buf, sizeof buf, "uniform(%g,%g)", lo, hi);
    return buf;
}

double SnrSpec::draw(RngStream &rng) const
{
    if (fixed_db)
        return *fixed_db;
    return lo + (hi - lo) * rng.uniform();
}

GeneratedDataset generate_dataset(const DatasetSpec &spec)
{
    spec.link.validate();
    if (spec.samples == 0)
        throw Error(Errc::BadConfig, "dataset needs at least one sample");
    const std::size_t width = 2 * spec.link.frame.active_count;
    GeneratedDataset out;
    out.data.inputs = dnn::RealMatrix(spec.samples, width);
    out.data.targets = dnn::RealMatrix(spec.samples, width);
    out.row_snr.resize(spec.samples);
    if (spec.snr.fixed_db && std::isfinite(*spec.snr.fixed_db))
        out.data.meta.snr_db = spec.snr.fixed_db;
    out.data.meta.snr_spec = spec.snr.label();
    out.data.meta.channel_model = spec.link.channel.name;
    out.data.meta.seed = spec.seed;

    // each row owns its stream, so the split across workers does not matter
    const auto fill = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
        {
            RngStream rng(spec.seed, RngStream::key({kDatasetDomain, i}));
            const double snr = spec.snr.draw(rng);
            const auto frame = simulate_frame(spec.link, NoiseSpec::from_snr_db(snr), rng, false);
            const auto ls = ls_estimate(frame.y_preamble, spec.link.preamble);
            const auto x = stack_complex(ls.h_hat);
            const auto y = stack_complex(frame.channel.h);
            std::copy(x.begin(), x.end(), out.data.inputs.row(i).begin());
            std::copy(y.begin(), y.end(), out.data.targets.row(i).begin());
            out.row_snr[i] = snr;
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(spec.workers, spec.samples));
    if (workers == 1)
        fill(0, spec.samples);
    else
    {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (spec.samples + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try
                {
                    fill(std::min(w * chunk, spec.samples), std::min((w + 1) * chunk, spec.samples));
                }
                catch (...)
                {
                    errors[w] = std::current_exception();
                }
            });
        for (auto &t : pool)
            t.join();
        for (auto &e : errors)
            if (e)
                std::rethrow_exception(e);
    }
    return out;
}

nlohmann::json dataset_manifest(const DatasetSpec &spec)
{
    nlohmann::json snr;
    snr["spec"] = spec.snr.label();
    if (spec.snr.fixed_db && std::isfinite(*spec.snr.fixed_db))
        snr["snr_db"] = *spec.snr.fixed_db;
    else
        snr["snr_db"] = nullptr;
    const auto &f = spec.link.frame;
    return {
        {"samples", spec.samples},
        {"snr", snr},
        {"channel", channel_to_json(spec.link.channel)},
        {"seed", spec.seed},
        {"frame",
         {{"fft_size", f.fft_size},
          {"active_count", f.active_count},
          {"cp_len", f.cp_len},
          {"preamble_count", f.preamble_count}}},
        {"columns", 1 + 4 * f.active_count},
    };
}

fs::path manifest_path(const fs::path &csv)
{
    fs::path p = csv;
    p.replace_extension(".manifest.json");
    return p;
}

void write_text_file(const fs::path &path, std::string_view text)
{
    if (path.has_parent_path())
    {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        throw Error(Errc::IoError, "write to " + path.string() + " failed");
}

std::string read_text_file(const fs::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_dataset(const GeneratedDataset &ds, const DatasetSpec &spec, const fs::path &csv)
{
    const std::size_t width = ds.data.inputs.cols;
    std::string text = "snr_db";
    for (std::size_t c = 0; c < width; ++c)
        text += ",in_" + std::to_string(c);
    for (std::size_t c = 0; c < width; ++c)
        text += ",target_" + std::to_string(c);
    text += '\n';
    text.reserve(text.size() + ds.data.size() * (2 * width + 1) * 24);
    char buf[40];
    for (std::size_t i = 0; i < ds.data.size(); ++i)
    {
        text += std::isinf(ds.row_snr[i]) ? "inf" : format_number(ds.row_snr[i]);
        for (const double v : ds.data.inputs.row(i))
        {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            text += buf;
        }
        for (const double v : ds.data.targets.row(i))
        {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            text += buf;
        }
        text += '\n';
    }
    write_text_file(csv, text);
    write_text_file(manifest_path(csv), dataset_manifest(spec).dump(2) + "\n");
}

GeneratedDataset read_dataset(const fs::path &csv)
{
    std::ifstream in(csv);
    if (!in)
        throw Error(Errc::IoError, "cannot open dataset " + csv.string());
    std::string line;
    if (!std::getline(in, line))
        throw Error(Errc::CorruptFile, "dataset " + csv.string() + " is empty");
    std::size_t columns = 1;
    for (const char c : line)
        columns += c == ',';
    if (columns < 3 || (columns - 1) % 2 != 0)
        throw Error(Errc::CorruptFile, "dataset header has " + std::to_string(columns) + " columns");
    const std::size_t width = (columns - 1) / 2;

    std::vector<double> values;
    std::vector<double> snrs;
    std::size_t line_no = 1;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty())
            continue;
        const char *p = line.c_str();
        for (std::size_t c = 0; c < columns; ++c)
        {
            char *end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p || (c + 1 < columns && *end != ',') || (c + 1 == columns && *end != '\0' && *end != '\r'))
                throw Error(Errc::CorruptFile, csv.string() + ":" + std::to_string(line_no) + ": bad value in column " +
                                                   std::to_string(c));
            (c == 0 ? snrs : values).push_back(v);
            p = end + 1;
        }
    }
    if (snrs.empty())
        throw Error(Errc::EmptyDataset, "dataset " + csv.string() + " has no rows");

    GeneratedDataset out;
    const std::size_t rows = snrs.size();
    out.data.inputs = dnn::RealMatrix(rows, width);
    out.data.targets = dnn::RealMatrix(rows, width);
    for (std::size_t i = 0; i < rows; ++i)
    {
        const double *src = values.data() + i * 2 * width;
        std::copy(src, src + width, out.data.inputs.row(i).begin());
        std::copy(src + width, src + 2 * width, out.data.targets.row(i).begin());
    }
    out.row_snr = std::move(snrs);

    const auto mpath = manifest_path(csv);
    if (fs::exists(mpath))
    {
        try
        {
            const auto m = nlohmann::json::parse(read_text_file(mpath));
            const auto &snr = m.at("snr");
            if (!snr.at("snr_db").is_null())
                out.data.meta.snr_db = snr.at("snr_db").get<double>();
            out.data.meta.snr_spec = snr.at("spec").get<std::string>();
            out.data.meta.channel_model = m.at("channel").at("name").get<std::string>();
            out.data.meta.seed = m.at("seed").get<std::uint64_t>();
        }
        catch (const nlohmann::json::exception &e)
        {
            throw Error(Errc::CorruptFile, "manifest " + mpath.string() + ": " + e.what());
        }
    }
    else
    {
        bool same = true;
        for (const double s : out.row_snr)
            same = same && s == out.row_snr.front();
        if (same && std::isfinite(out.row_snr.front()))
            out.data.meta.snr_db = out.row_snr.front();
        out.data.meta.snr_spec = same ? SnrSpec::fixed(out.row_snr.front()).label() : "mixed";
    }
    return out;
}

} // namespace chanest
