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


#include "chanest/registry.hpp"

#include "chanest/dataset_io.hpp"
#include "chanest/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace chanest
{

namespace fs = std::filesystem;

namespace
{

bool valid_id(std::string_view id)
{
    if (id.empty())
        return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
               c == '.';
    }) && id.front() != '.';
}

} // namespace

ModelRegistry::ModelRegistry(fs::path dir) : dir_(std::move(dir))
{
    const auto index = dir_ / "index.json";
    if (!fs::exists(index))
        return;
    try
    {
        const auto doc = nlohmann::json::parse(read_text_file(index));
        for (const auto &m : doc.at("models"))
        {
            RegistryEntry e;
            e.model_id = m.at("model_id").get<std::string>();
            if (!m.at("training_snr_db").is_null())
                e.training_snr_db = m.at("training_snr_db").get<double>();
            e.channel_model = m.at("channel_model").get<std::string>();
            e.arch_tag = m.at("arch_tag").get<std::string>();
            e.file = m.at("file").get<std::string>();
            entries_.push_back(std::move(e));
        }
    }
    catch (const nlohmann::json::exception &e)
    {
        throw Error(Errc::CorruptFile, "registry index " + index.string() + ": " + e.what());
    }
}

const RegistryEntry &ModelRegistry::add(const fs::path &model_file, std::string model_id)
{
    if (!valid_id(model_id))
        throw Error(Errc::BadConfig, "model id '" + model_id + "' must be [A-Za-z0-9._-] and not start with '.'");
    if (find(model_id))
        throw Error(Errc::DuplicateId, "model id '" + model_id + "' is already registered");
    if (!fs::exists(model_file))
        throw Error(Errc::MissingModel, "model file " + model_file.string() + " not found");
    const auto model = dnn::load_model(model_file);

    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec)
        throw Error(Errc::IoError, "cannot create registry directory " + dir_.string() + ": " + ec.message());
    RegistryEntry e;
    e.model_id = std::move(model_id);
    e.training_snr_db = model.meta.training_snr_db;
    e.channel_model = model.meta.channel_model;
    e.arch_tag = model.meta.arch_tag;
    e.file = e.model_id + ".json";
    const std::string id = e.model_id;
    write_text_file(dir_ / e.file, dnn::model_to_json(model));
    entries_.push_back(std::move(e));
    std::sort(entries_.begin(), entries_.end(),
              [](const RegistryEntry &a, const RegistryEntry &b) { return a.model_id < b.model_id; });
    save_index();
    return *find(id);
}

const RegistryEntry *ModelRegistry::find(std::string_view model_id) const
{
    for (const auto &e : entries_)
        if (e.model_id == model_id)
            return &e;
    return nullptr;
}

const RegistryEntry &ModelRegistry::select(std::string_view channel_model, double operating_snr_db) const
{
    if (entries_.empty())
        throw Error(Errc::NoCandidate, "registry " + dir_.string() + " has no models");
    const auto score = [&](const RegistryEntry &e) {
        const int mismatch = e.channel_model == channel_model ? 0 : 1;
        const double distance = e.training_snr_db ? std::abs(*e.training_snr_db - operating_snr_db)
                                                  : std::numeric_limits<double>::infinity();
        return std::make_tuple(mismatch, distance, std::string_view(e.model_id));
    };
    const auto best = std::min_element(entries_.begin(), entries_.end(),
                                       [&](const RegistryEntry &a, const RegistryEntry &b) { return score(a) < score(b); });
    return *best;
}

dnn::DnnModel ModelRegistry::load(const RegistryEntry &entry) const
{
    const auto path = dir_ / entry.file;
    if (!fs::exists(path))
        throw Error(Errc::MissingModel, "registry file " + path.string() + " is missing");
    return dnn::load_model(path);
}

void ModelRegistry::save_index() const
{
    auto models = nlohmann::json::array();
    for (const auto &e : entries_)
    {
        nlohmann::json m;
        m["model_id"] = e.model_id;
        if (e.training_snr_db)
            m["training_snr_db"] = *e.training_snr_db;
        else
            m["training_snr_db"] = nullptr;
        m["channel_model"] = e.channel_model;
        m["arch_tag"] = e.arch_tag;
        m["file"] = e.file;
        models.push_back(std::move(m));
    }
    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["models"] = std::move(models);
    write_text_file(dir_ / "index.json", doc.dump(2) + "\n");
}

} // namespace chanest
