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


#include "chanest/commands.hpp"
#include "chanest/dataset_io.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

using namespace chanest;

namespace
{

enum class Kind
{
    Uint,
    Real,
    Text,
    RealList,
    TextList,
};

struct Flag
{
    const char *name;
    Kind kind;
    const char *help;
};

const Flag kFlags[] = {
    {"seed", Kind::Uint, "Master seed"},
    {"workers", Kind::Uint, "Monte-Carlo worker threads"},
    {"out", Kind::Text, "Output directory"},
    {"channel", Kind::Text, "Channel model: ideal, flat-rayleigh, urban-3tap, rural-6tap or a profile JSON"},
    {"modulation", Kind::Text, "bpsk, qpsk or 16qam"},
    {"data-symbols", Kind::Uint, "Data OFDM symbols per frame"},
    {"preamble-count", Kind::Uint, "Preamble symbols per frame"},
    {"snr-db", Kind::RealList, "Comma-separated SNR points in dB"},
    {"snr-start", Kind::Real, "First SNR of the range"},
    {"snr-stop", Kind::Real, "Last SNR of the range"},
    {"snr-step", Kind::Real, "SNR range step"},
    {"frames", Kind::Uint, "Frames per SNR point"},
    {"estimators", Kind::TextList, "Subset of ls,lmmse,lsdnn,ideal"},
    {"quant", Kind::Text, "Number format for LS and LSDNN: fp64, fp32, fp16, q<W>_<I>[:round:overflow]"},
    {"model", Kind::Text, "Model JSON"},
    {"registry", Kind::Text, "Model registry directory"},
    {"rh-source", Kind::Text, "Channel name or R_h matrix JSON for LMMSE"},
    {"rh-draws", Kind::Uint, "Channel draws for the R_h estimate"},
    {"dataset", Kind::Text, "Dataset CSV"},
    {"samples", Kind::Uint, "Dataset rows"},
    {"train-snr", Kind::Text, "Training SNR: number, inf or uniform(lo,hi)"},
    {"arch", Kind::Text, "lsdnn1 or lsdnn2"},
    {"epochs", Kind::Uint, "Training epochs"},
    {"batch-size", Kind::Uint, "Mini-batch size"},
    {"learning-rate", Kind::Real, "ADAM learning rate"},
    {"split-ratio", Kind::Real, "Training fraction of the dataset"},
    {"train-snrs", Kind::TextList, "Training SNRs for sweep-train-snr"},
    {"formats", Kind::TextList, "Formats for sweep-wl"},
};

std::vector<std::string> split(const std::string &s)
{
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (const char c : s)
    {
        depth += c == '(' ? 1 : c == ')' ? -1 : 0;
        if (c == ',' && depth == 0)
        {
            if (!cur.empty())
                out.push_back(cur);
            cur.clear();
        }
        else
            cur += c;
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

nlohmann::json convert(Kind kind, const std::string &text, const std::string &flag)
{
    try
    {
        switch (kind)
        {
        case Kind::Uint: {
            std::size_t used = 0;
            const auto v = std::stoull(text, &used);
            if (used != text.size() || text.front() == '-')
                throw std::invalid_argument(text);
            return v;
        }
        case Kind::Real: {
            std::size_t used = 0;
            const auto v = std::stod(text, &used);
            if (used != text.size())
                throw std::invalid_argument(text);
            return v;
        }
        case Kind::Text: return text;
        case Kind::RealList: {
            auto arr = nlohmann::json::array();
            for (const auto &item : split(text))
                arr.push_back(convert(Kind::Real, item, flag));
            return arr;
        }
        case Kind::TextList: return split(text);
        }
    }
    catch (const std::logic_error &)
    {
    }
    throw Error(Errc::BadConfig, "--" + flag + ": cannot parse '" + text + "'");
}

std::string field_name(const char *flag)
{
    std::string s(flag);
    for (auto &c : s)
        if (c == '-')
            c = '_';
    return s;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Preamble-based OFDM channel estimation: LS, LMMSE and LSDNN"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration; flags override its fields");
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option *> options;
    for (const auto &f : kFlags)
        options[f.name] = app.add_option(std::string("--") + f.name, values[f.name], f.help);

    auto *gen = app.add_subcommand("gen-dataset", "Simulate (LS estimate, true channel) training rows");
    auto *train = app.add_subcommand("train", "Train an LSDNN model on a dataset CSV");
    auto *eval = app.add_subcommand("eval", "NMSE and BER of the selected estimators over an SNR grid");
    auto *sweep_snr = app.add_subcommand("sweep-train-snr", "Train per training SNR and evaluate over the test grid");
    auto *sweep_wl = app.add_subcommand("sweep-wl", "Evaluate LS and LSDNN under several number formats");
    auto *registry = app.add_subcommand("registry", "Manage the model registry");
    registry->require_subcommand(1);

    RegistryArgs reg_args;
    auto *reg_add = registry->add_subcommand("add", "Validate a model and add it to the registry");
    reg_add->add_option("model_file", reg_args.model_file, "Model JSON")->required();
    reg_add->add_option("--id", reg_args.model_id, "Model id")->required();
    auto *reg_list = registry->add_subcommand("list", "List registered models");
    auto *reg_select = registry->add_subcommand("select", "Choose a model for a channel and operating SNR");
    reg_select->add_option("--for-channel", reg_args.channel, "Channel model name")->required();
    reg_select->add_option("--operating-snr", reg_args.snr_db, "Operating SNR in dB")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try
    {
        nlohmann::json doc = nlohmann::json::object();
        if (!config_path.empty())
            doc = nlohmann::json::parse(read_text_file(config_path));
        for (const auto &f : kFlags)
            if (options[f.name]->count() > 0)
                doc[field_name(f.name)] = convert(f.kind, values[f.name], f.name);
        if (options["snr-db"]->count() == 0 &&
            options["snr-start"]->count() + options["snr-stop"]->count() + options["snr-step"]->count() > 0)
            doc.erase("snr_db");
        const RunConfig cfg = RunConfig::from_json(doc);

        Written written;
        if (*gen)
            written = cmd_gen_dataset(cfg);
        else if (*train)
            written = cmd_train(cfg);
        else if (*eval)
            written = cmd_eval(cfg);
        else if (*sweep_snr)
            written = cmd_sweep_train_snr(cfg);
        else if (*sweep_wl)
            written = cmd_sweep_wl(cfg);
        else if (*registry)
        {
            reg_args.action = *reg_add ? RegistryAction::Add : *reg_list ? RegistryAction::List : RegistryAction::Select;
            cmd_registry(cfg, reg_args, std::cout);
        }
        (void)reg_select;
        for (const auto &p : written)
            std::cout << p.string() << "\n";
        return 0;
    }
    catch (const Error &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.code());
    }
    catch (const nlohmann::json::exception &e)
    {
        std::fprintf(stderr, "error [config]: %s\n", e.what());
        return 2;
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
