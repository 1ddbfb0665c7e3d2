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


#ifndef CHANEST_DNN_HPP
#define CHANEST_DNN_HPP

#include "chanest/numerics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chanest::dnn
{

// Row-major real matrix; one sample per row.
struct RealMatrix
{
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

// Per-feature affine normalization (x - mu) / sigma.
struct NormStats
{
    std::vector<double> mu;
    std::vector<double> sigma;

    static NormStats identity(std::size_t width);
    // Population mean and standard deviation over the selected rows. A feature with
    // zero spread gets sigma = 1 so the transform stays invertible.
    static NormStats from_rows(const RealMatrix &m, std::span<const std::size_t> rows);

    std::size_t size() const noexcept { return mu.size(); }
    void normalize(std::span<double> x) const;
    void denormalize(std::span<double> x) const;
    void validate(std::size_t width) const;
};

enum class Arch
{
    Lsdnn1, // one hidden layer of k_on neurons
    Lsdnn2, // two hidden layers of 2 k_on neurons
};

std::string arch_tag(Arch arch);
Arch arch_from_tag(std::string_view tag);

// Layer widths N_0..N_L with N_0 = N_L = 2 k_on.
std::vector<std::size_t> build_arch(std::size_t k_on, Arch arch);

// sum_l (N_l * N_{l-1} + N_l)
std::size_t parameter_count(std::span<const std::size_t> layer_sizes);

struct DenseLayer
{
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights; // outputs x inputs, row-major
    std::vector<double> bias;    // outputs
};

struct ModelMeta
{
    std::optional<double> training_snr_db; // empty for SNR mixtures
    std::string snr_spec;                  // e.g. "10" or "uniform(-50,50)"
    std::string channel_model;
    std::size_t epochs = 0;
    std::string arch_tag;
    std::string init = "glorot_uniform";
    std::uint64_t seed = 0;
};

// Fully connected network: ReLU on hidden layers, identity on the output layer.
struct DnnModel
{
    std::vector<std::size_t> layer_sizes;
    std::vector<DenseLayer> layers;
    NormStats norm_in;
    NormStats norm_out;
    ModelMeta meta;

    // Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases, identity normalization.
    static DnnModel create(std::span<const std::size_t> layer_sizes, RngStream &init_rng);

    std::size_t input_width() const { return layer_sizes.front(); }
    std::size_t output_width() const { return layer_sizes.back(); }
    std::size_t parameter_count() const;
    // Throws ShapeInconsistency when shapes do not chain.
    void validate() const;
};

struct ForwardCache
{
    std::vector<std::vector<double>> pre;  // pre-activation per layer
    std::vector<std::vector<double>> post; // post[0] is the input, post[l] the output of layer l
};

std::vector<double> forward(const DnnModel &model, std::span<const double> x, ForwardCache *cache = nullptr);

struct Gradients
{
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;

    static Gradients zeros_like(const DnnModel &model);
    Gradients &operator+=(const Gradients &other);
    Gradients &operator*=(double s);
    double max_abs() const;
};

// Per-sample loss (1/N_L) * ||y - target||^2.
double sample_loss(const DnnModel &model, std::span<const double> x, std::span<const double> target);

// Exact gradient of sample_loss. The ReLU derivative at 0 is taken as 0.
Gradients backprop(const DnnModel &model, std::span<const double> x, std::span<const double> target,
                   double *loss = nullptr);

struct TrainConfig
{
    std::size_t epochs = 500;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double split_ratio = 0.8;
    std::uint64_t seed = 1;

    void validate() const;
};

struct AdamState
{
    Gradients m;
    Gradients v;

    static AdamState for_model(const DnnModel &model);
};

// One bias-corrected ADAM update at step t >= 1.
void adam_step(DnnModel &model, const Gradients &grads, AdamState &state, const TrainConfig &cfg, std::size_t t);

struct DatasetMeta
{
    std::optional<double> snr_db;
    std::string snr_spec;
    std::string channel_model;
    std::uint64_t seed = 0;
};

// inputs: stacked LS estimates, targets: stacked true channel; one frame per row.
struct Dataset
{
    RealMatrix inputs;
    RealMatrix targets;
    DatasetMeta meta;

    std::size_t size() const noexcept { return inputs.rows; }
};

struct EpochLoss
{
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult
{
    DnnModel model;
    std::vector<EpochLoss> history;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> val_rows;
};

// Seeded shuffle and split, normalization statistics from the training split only,
// then mini-batch ADAM on the normalized MSE for cfg.epochs. Deterministic in cfg.seed.
TrainResult train(const Dataset &data, std::span<const std::size_t> layer_sizes, const TrainConfig &cfg,
                  const std::function<void(const EpochLoss &)> &on_epoch = {});

// Mean normalized-space loss of the model over the selected dataset rows.
double dataset_loss(const DnnModel &model, const Dataset &data, std::span<const std::size_t> rows);

// Mean of per-sample gradients over a batch, computed with the batched training kernels.
Gradients batch_gradients(const DnnModel &model, const RealMatrix &inputs, const RealMatrix &targets,
                          double *loss = nullptr);

inline constexpr int kModelFormatVersion = 1;

void save_model(const DnnModel &model, const std::filesystem::path &path);
DnnModel load_model(const std::filesystem::path &path);
std::string model_to_json(const DnnModel &model);
DnnModel model_from_json(std::string_view text);

struct GradCheckReport
{
    double max_rel_error = 0.0;
    std::size_t samples = 0;
    std::size_t parameters_checked = 0;
    double tolerance = 0.0;
    bool passed = false;
};

using GradientFn =
    std::function<Gradients(const DnnModel &, std::span<const double> x, std::span<const double> target)>;

// Compares analytic gradients against central differences (step epsilon) of an
// extended-precision reference loss on random samples. Relative error is
// |a - n| / max(|a|, |n|, 1e-8). Defaults to checking backprop.
GradCheckReport grad_check(const DnnModel &model, std::size_t samples, double tolerance, RngStream &rng,
                           const GradientFn &gradient = {}, double epsilon = 1e-5);

} // namespace chanest::dnn

#endif
