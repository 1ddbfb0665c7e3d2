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


#include "chanest/config.hpp"

#include "chanest/error.hpp"

#include <set>

namespace chanest
{

namespace
{

template <typename T> void take(const nlohmann::json &doc, const char *key, T &dst)
{
    if (auto it = doc.find(key); it != doc.end())
        dst = it->get<T>();
}

} // namespace

RunConfig RunConfig::from_json(const nlohmann::json &doc)
{
    if (!doc.is_object())
        throw Error(Errc::BadConfig, "config must be a JSON object");
    static const std::set<std::string> known = {
        "seed",      "workers",   "out",        "channel",  "modulation",    "data_symbols", "preamble_count",
        "snr_db",    "snr_start", "snr_stop",   "snr_step", "frames",        "estimators",   "quant",
        "model",     "registry",  "rh_source",  "rh_draws", "dataset",       "samples",      "train_snr",
        "arch",      "epochs",    "batch_size", "learning_rate", "split_ratio", "train_snrs", "formats"};
    for (const auto &[key, value] : doc.items())
        if (!known.count(key))
            throw Error(Errc::BadConfig, "unknown config field '" + key + "'");

    RunConfig c;
    try
    {
        take(doc, "seed", c.seed);
        take(doc, "workers", c.workers);
        take(doc, "out", c.out);
        take(doc, "channel", c.channel);
        take(doc, "modulation", c.modulation);
        take(doc, "data_symbols", c.data_symbols);
        take(doc, "preamble_count", c.preamble_count);
        take(doc, "snr_db", c.snr_db);
        take(doc, "snr_start", c.snr_start);
        take(doc, "snr_stop", c.snr_stop);
        take(doc, "snr_step", c.snr_step);
        take(doc, "frames", c.frames);
        take(doc, "estimators", c.estimators);
        take(doc, "quant", c.quant);
        take(doc, "model", c.model);
        take(doc, "registry", c.registry);
        take(doc, "rh_source", c.rh_source);
        take(doc, "rh_draws", c.rh_draws);
        take(doc, "dataset", c.dataset);
        take(doc, "samples", c.samples);
        if (auto it = doc.find("train_snr"); it != doc.end())
            c.train_snr = it->is_number() ? SnrSpec::fixed(it->get<double>()).label() : it->get<std::string>();
        take(doc, "arch", c.arch);
        take(doc, "epochs", c.epochs);
        take(doc, "batch_size", c.batch_size);
        take(doc, "learning_rate", c.learning_rate);
        take(doc, "split_ratio", c.split_ratio);
        if (auto it = doc.find("train_snrs"); it != doc.end())
        {
            c.train_snrs.clear();
            for (const auto &v : *it)
                c.train_snrs.push_back(v.is_number() ? SnrSpec::fixed(v.get<double>()).label() : v.get<std::string>());
        }
        take(doc, "formats", c.formats);
    }
    catch (const nlohmann::json::exception &e)
    {
        throw Error(Errc::BadConfig, std::string("config: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::load(const std::string &path)
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(read_text_file(path));
    }
    catch (const nlohmann::json::exception &e)
    {
        throw Error(Errc::BadConfig, "config " + path + ": " + e.what());
    }
    return from_json(doc);
}

nlohmann::json RunConfig::to_json() const
{
    return {
        {"seed", seed},
        {"out", out},
        {"channel", channel},
        {"modulation", modulation},
        {"data_symbols", data_symbols},
        {"preamble_count", preamble_count},
        {"snr_db", snr_grid()},
        {"frames", frames},
        {"estimators", estimators},
        {"quant", quant},
        {"model", model},
        {"registry", registry},
        {"rh_source", rh_source.empty() ? channel : rh_source},
        {"rh_draws", rh_draws},
        {"dataset", dataset},
        {"samples", samples},
        {"train_snr", train_snr},
        {"arch", arch},
        {"epochs", epochs},
        {"batch_size", batch_size},
        {"learning_rate", learning_rate},
        {"split_ratio", split_ratio},
        {"train_snrs", train_snrs},
        {"formats", formats},
    };
}

void RunConfig::validate() const
{
    if (frames == 0)
        throw Error(Errc::BadConfig, "frames must be at least 1");
    if (data_symbols == 0)
        throw Error(Errc::BadConfig, "data_symbols must be at least 1");
    if (preamble_count == 0)
        throw Error(Errc::BadConfig, "preamble_count must be at least 1");
    if (workers == 0)
        throw Error(Errc::BadConfig, "workers must be at least 1");
    (void)snr_grid();
    train_config().validate();
}

std::vector<double> RunConfig::snr_grid() const
{
    if (!snr_db.empty())
        return snr_db;
    return snr_range(snr_start, snr_stop, snr_step);
}

LinkSetup RunConfig::link() const
{
    auto link = LinkSetup::standard(resolve_channel(channel), ModScheme::from_name(modulation).kind);
    link.data_symbols = data_symbols;
    if (preamble_count != link.frame.preamble_count)
    {
        link.frame.preamble_count = preamble_count;
        link.preamble = build_preamble(link.frame);
    }
    link.validate();
    return link;
}

dnn::TrainConfig RunConfig::train_config() const
{
    dnn::TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.learning_rate = learning_rate;
    t.split_ratio = split_ratio;
    t.seed = seed;
    return t;
}

CplxMatrix load_rh_matrix(const std::string &path)
{
    try
    {
        const auto doc = nlohmann::json::parse(read_text_file(path));
        const auto n = doc.at("size").get<std::size_t>();
        const auto re = doc.at("re").get<std::vector<double>>();
        const auto im = doc.at("im").get<std::vector<double>>();
        if (re.size() != n * n || im.size() != n * n)
            throw Error(Errc::ShapeInconsistency, "R_h file " + path + " does not hold size x size entries");
        CplxMatrix m(n, n);
        for (std::size_t i = 0; i < n * n; ++i)
            m.data()[i] = {re[i], im[i]};
        return m;
    }
    catch (const nlohmann::json::exception &e)
    {
        throw Error(Errc::CorruptFile, "R_h file " + path + ": " + e.what());
    }
}

void save_rh_matrix(const CplxMatrix &m, const std::string &path)
{
    std::string text = "{\n  \"size\": " + std::to_string(m.rows()) + ",\n  \"re\": [";
    for (std::size_t i = 0; i < m.data().size(); ++i)
        text += (i ? "," : "") + format_number(m.data()[i].real());
    text += "],\n  \"im\": [";
    for (std::size_t i = 0; i < m.data().size(); ++i)
        text += (i ? "," : "") + format_number(m.data()[i].imag());
    text += "]\n}\n";
    write_text_file(path, text);
}

} // namespace chanest
