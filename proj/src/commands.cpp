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
#include "chanest/registry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

namespace chanest
{

namespace fs = std::filesystem;

namespace
{

void write_csv(const fs::path &path, const std::string &csv, const nlohmann::json &meta, Written &written)
{
    write_text_file(path, csv);
    fs::path sidecar = path;
    sidecar += ".meta.json";
    write_text_file(sidecar, meta.dump(2) + "\n");
    written.push_back(path);
    written.push_back(sidecar);
}

std::string file_label(const std::string &snr_spec)
{
    std::string s;
    for (const char c : snr_spec)
        s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
    return s;
}

struct ResolvedModel
{
    dnn::DnnModel model;
    std::string id;
};

std::optional<ResolvedModel> resolve_model(const RunConfig &cfg, const LinkSetup &link)
{
    if (!cfg.model.empty())
    {
        if (!fs::exists(cfg.model))
            throw Error(Errc::MissingModel, "model file " + cfg.model + " not found");
        return ResolvedModel{dnn::load_model(cfg.model), fs::path(cfg.model).stem().string()};
    }
    if (!cfg.registry.empty())
    {
        ModelRegistry reg(cfg.registry);
        const auto grid = cfg.snr_grid();
        const double operating = 0.5 * (grid.front() + grid.back());
        const auto &entry = reg.select(link.channel.name, operating);
        return ResolvedModel{reg.load(entry), entry.model_id};
    }
    return std::nullopt;
}

CplxMatrix resolve_rh(const RunConfig &cfg, const LinkSetup &link)
{
    const std::string src = cfg.rh_source.empty() ? cfg.channel : cfg.rh_source;
    if (fs::path(src).extension() == ".json" && fs::exists(src))
    {
        const auto doc = nlohmann::json::parse(read_text_file(src), nullptr, false);
        if (doc.is_object() && doc.contains("size"))
            return load_rh_matrix(src);
    }
    ChannelModel model;
    try
    {
        model = resolve_channel(src);
    }
    catch (const Error &e)
    {
        throw Error(Errc::MissingRh, "R_h source '" + src + "': " + e.what());
    }
    RngStream rng(cfg.seed, RngStream::key({kRhDomain}));
    return estimate_rh(model, link.frame, cfg.rh_draws, rng);
}

DatasetSpec dataset_spec(const RunConfig &cfg, const LinkSetup &link, const std::string &snr)
{
    DatasetSpec spec;
    spec.link = link;
    spec.samples = cfg.samples;
    spec.snr = SnrSpec::parse(snr);
    spec.seed = cfg.seed;
    spec.workers = cfg.workers;
    return spec;
}

dnn::TrainResult train_model(const RunConfig &cfg, const dnn::Dataset &data)
{
    const auto arch = dnn::arch_from_tag(cfg.arch);
    const auto sizes = dnn::build_arch(data.inputs.cols / 2, arch);
    const std::size_t every = std::max<std::size_t>(1, cfg.epochs / 10);
    auto result = dnn::train(data, sizes, cfg.train_config(), [&](const dnn::EpochLoss &e) {
        if (e.epoch % every == 0 || e.epoch == cfg.epochs)
            std::fprintf(stderr, "epoch %zu/%zu train %.6g val %.6g\n", e.epoch, cfg.epochs, e.train_loss, e.val_loss);
    });
    result.model.meta.arch_tag = dnn::arch_tag(arch);
    for (const auto v : result.model.layers.back().bias)
        if (!std::isfinite(v))
            throw Error(Errc::DivisionByZero, "training diverged to non-finite weights");
    return result;
}

EvalSpec eval_spec(const RunConfig &cfg, const LinkSetup &link)
{
    EvalSpec spec;
    spec.link = link;
    spec.snr_db = cfg.snr_grid();
    spec.frames = cfg.frames;
    spec.seed = cfg.seed;
    spec.workers = cfg.workers;
    return spec;
}

std::string row_tail(const EvalRow &r)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%zu\n", r.snr_db, r.nmse_mean, r.nmse_stderr, r.ber,
                  r.bits_total);
    return buf;
}

} // namespace

Written cmd_gen_dataset(const RunConfig &cfg)
{
    cfg.validate();
    const auto link = cfg.link();
    const auto spec = dataset_spec(cfg, link, cfg.train_snr);
    const auto ds = generate_dataset(spec);
    const fs::path csv = fs::path(cfg.out) / "dataset.csv";
    write_dataset(ds, spec, csv);
    auto manifest = dataset_manifest(spec);
    manifest["config"] = cfg.to_json();
    write_text_file(manifest_path(csv), manifest.dump(2) + "\n");
    return {csv, manifest_path(csv)};
}

Written cmd_train(const RunConfig &cfg)
{
    cfg.validate();
    const fs::path data_path = cfg.dataset.empty() ? fs::path(cfg.out) / "dataset.csv" : fs::path(cfg.dataset);
    if (!fs::exists(data_path))
        throw Error(Errc::IoError, "dataset " + data_path.string() + " not found");
    const auto ds = read_dataset(data_path);
    const auto result = train_model(cfg, ds.data);

    Written written;
    const fs::path model_path = fs::path(cfg.out) / "model.json";
    dnn::save_model(result.model, model_path);
    written.push_back(model_path);

    std::string csv = "epoch,train_loss,val_loss\n";
    for (const auto &h : result.history)
        csv += std::to_string(h.epoch) + "," + format_number(h.train_loss) + "," + format_number(h.val_loss) + "\n";
    nlohmann::json meta = {{"dataset", data_path.string()}, {"config", cfg.to_json()}};
    write_csv(fs::path(cfg.out) / "history.csv", csv, meta, written);
    return written;
}

Written cmd_eval(const RunConfig &cfg)
{
    cfg.validate();
    const auto link = cfg.link();
    EstimatorSet est;
    for (const auto &name : cfg.estimators)
        est.kinds.push_back(estimator_from_name(name));
    est.quant = quant::NumberFormat::parse(cfg.quant);

    std::optional<ResolvedModel> model;
    if (std::find(est.kinds.begin(), est.kinds.end(), EstimatorKind::Lsdnn) != est.kinds.end())
    {
        model = resolve_model(cfg, link);
        if (!model)
            throw Error(Errc::MissingModel, "lsdnn needs --model or --registry");
        est.model = &model->model;
        est.model_id = model->id;
    }
    if (std::find(est.kinds.begin(), est.kinds.end(), EstimatorKind::Lmmse) != est.kinds.end())
        est.r_h = resolve_rh(cfg, link);

    const auto reports = run_eval(eval_spec(cfg, link), est);
    Written written;
    for (const auto &r : reports)
    {
        nlohmann::json meta = {{"estimator", r.estimator}, {"model_id", r.model_id}, {"quant", r.quant},
                               {"seed", r.seed},           {"frames", r.frames},     {"config", cfg.to_json()}};
        write_csv(fs::path(cfg.out) / ("eval_" + r.estimator + ".csv"), report_csv(r), meta, written);
    }
    return written;
}

Written cmd_sweep_train_snr(const RunConfig &cfg)
{
    cfg.validate();
    if (cfg.train_snrs.empty())
        throw Error(Errc::BadConfig, "train_snrs is empty");
    const auto link = cfg.link();
    const auto spec = eval_spec(cfg, link);
    const fs::path out(cfg.out);

    Written written;
    std::string matrix = "train_snr,snr_db,nmse_mean,nmse_stderr,ber,bits_total\n";
    std::string summary = "train_snr,mean_nmse\n";
    double best = INFINITY;
    std::string best_label;
    for (const auto &snr : cfg.train_snrs)
    {
        std::fprintf(stderr, "training at SNR %s\n", snr.c_str());
        const auto ds = generate_dataset(dataset_spec(cfg, link, snr));
        const auto result = train_model(cfg, ds.data);
        const auto label = SnrSpec::parse(snr).label();
        const fs::path model_path = out / "models" / ("train_" + file_label(label) + ".json");
        dnn::save_model(result.model, model_path);
        written.push_back(model_path);

        EstimatorSet est;
        est.kinds = {EstimatorKind::Lsdnn};
        est.model = &result.model;
        est.model_id = model_path.stem().string();
        const auto report = run_eval(spec, est).front();
        double total = 0.0;
        for (const auto &r : report.rows)
        {
            matrix += label + "," + row_tail(r);
            total += r.nmse_mean;
        }
        const double mean = total / static_cast<double>(report.rows.size());
        summary += label + "," + format_number(mean) + "\n";
        if (mean < best)
        {
            best = mean;
            best_label = label;
        }
    }
    const nlohmann::json meta = {{"best_train_snr", best_label}, {"config", cfg.to_json()}};
    write_csv(out / "train_snr_sweep.csv", matrix, meta, written);
    write_csv(out / "train_snr_summary.csv", summary, meta, written);
    std::fprintf(stderr, "lowest mean NMSE with training SNR %s\n", best_label.c_str());
    return written;
}

Written cmd_sweep_wl(const RunConfig &cfg)
{
    cfg.validate();
    const auto link = cfg.link();
    const auto model = resolve_model(cfg, link);
    if (!model)
        throw Error(Errc::MissingModel, "sweep-wl needs --model or --registry");
    std::vector<quant::NumberFormat> formats;
    for (const auto &f : cfg.formats)
        formats.push_back(quant::NumberFormat::parse(f));
    if (formats.empty())
        throw Error(Errc::BadConfig, "formats is empty");

    const auto rows = quant::wl_sweep(model->model, eval_spec(cfg, link), formats);
    std::string csv = "format,estimator,snr_db,nmse_mean,nmse_stderr,ber,bits_total\n";
    for (const auto &row : rows)
        for (const auto *rep : {&row.lsdnn, &row.ls})
            for (const auto &r : rep->rows)
                csv += row.format.label() + "," + rep->estimator + "," + row_tail(r);
    Written written;
    const nlohmann::json meta = {{"model_id", model->id}, {"config", cfg.to_json()}};
    write_csv(fs::path(cfg.out) / "wl_sweep.csv", csv, meta, written);
    return written;
}

void cmd_registry(const RunConfig &cfg, const RegistryArgs &args, std::ostream &out)
{
    if (cfg.registry.empty())
        throw Error(Errc::BadConfig, "registry commands need --registry <dir>");
    ModelRegistry reg(cfg.registry);
    switch (args.action)
    {
    case RegistryAction::Add: {
        const auto &e = reg.add(args.model_file, args.model_id);
        out << e.model_id << "\n";
        break;
    }
    case RegistryAction::List:
        out << "model_id,training_snr_db,channel_model,arch_tag,file\n";
        for (const auto &e : reg.entries())
            out << e.model_id << "," << (e.training_snr_db ? format_number(*e.training_snr_db) : "") << ","
                << e.channel_model << "," << e.arch_tag << "," << e.file << "\n";
        break;
    case RegistryAction::Select: out << reg.select(args.channel, args.snr_db).model_id << "\n"; break;
    }
}

int exit_code_for(Errc code) noexcept
{
    switch (code)
    {
    case Errc::BadConfig:
    case Errc::BadSequenceLength:
    case Errc::NonBpskEntry:
    case Errc::DelayOutOfRange:
    case Errc::DuplicateId:
    case Errc::WidthMismatch:
    case Errc::EmptyDataset: return 2;
    case Errc::MissingModel:
    case Errc::MissingRh:
    case Errc::IoError:
    case Errc::CorruptFile:
    case Errc::FormatVersionMismatch:
    case Errc::ShapeInconsistency:
    case Errc::NoCandidate: return 3;
    default: return 4;
    }
}

} // namespace chanest
