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


#include "chanest/dnn.hpp"

#include "chanest/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace chanest::dnn
{

namespace
{

// Stream domains for the training seed.
constexpr std::uint64_t kSplitDomain = 0x5350;
constexpr std::uint64_t kInitDomain = 0x494e;
constexpr std::uint64_t kShuffleDomain = 0x5348;

void require(bool ok, Errc code, const std::string &msg)
{
    if (!ok)
        throw Error(code, msg);
}

} // namespace

// ---- NormStats ----------------------------------------------------------

NormStats NormStats::identity(std::size_t width)
{
    return {std::vector<double>(width, 0.0), std::vector<double>(width, 1.0)};
}

NormStats NormStats::from_rows(const RealMatrix &m, std::span<const std::size_t> rows)
{
    require(!rows.empty(), Errc::EmptyDataset, "normalization statistics need at least one row");
    NormStats s;
    s.mu.assign(m.cols, 0.0);
    s.sigma.assign(m.cols, 0.0);
    for (std::size_t r : rows)
    {
        const auto x = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c)
            s.mu[c] += x[c];
    }
    const double n = static_cast<double>(rows.size());
    for (auto &v : s.mu)
        v /= n;
    for (std::size_t r : rows)
    {
        const auto x = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c)
        {
            const double d = x[c] - s.mu[c];
            s.sigma[c] += d * d;
        }
    }
    for (auto &v : s.sigma)
    {
        v = std::sqrt(v / n);
        if (!(v > 1e-12))
            v = 1.0;
    }
    return s;
}

void NormStats::normalize(std::span<double> x) const
{
    require(x.size() == mu.size(), Errc::WidthMismatch, "normalization width differs from input");
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = (x[i] - mu[i]) / sigma[i];
}

void NormStats::denormalize(std::span<double> x) const
{
    require(x.size() == mu.size(), Errc::WidthMismatch, "normalization width differs from output");
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = x[i] * sigma[i] + mu[i];
}

void NormStats::validate(std::size_t width) const
{
    require(mu.size() == width && sigma.size() == width, Errc::ShapeInconsistency,
            "normalization statistics have the wrong width");
    for (double s : sigma)
        require(s > 0.0 && std::isfinite(s), Errc::ShapeInconsistency, "normalization sigma must be positive");
}

// ---- architecture -------------------------------------------------------

std::string arch_tag(Arch arch)
{
    return arch == Arch::Lsdnn1 ? "lsdnn1" : "lsdnn2";
}

Arch arch_from_tag(std::string_view tag)
{
    if (tag == "lsdnn1" || tag == "LSDNN1")
        return Arch::Lsdnn1;
    if (tag == "lsdnn2" || tag == "LSDNN2")
        return Arch::Lsdnn2;
    throw Error(Errc::BadConfig, "unknown architecture '" + std::string(tag) + "'");
}

std::vector<std::size_t> build_arch(std::size_t k_on, Arch arch)
{
    require(k_on >= 1, Errc::BadConfig, "k_on must be at least 1");
    const std::size_t w = 2 * k_on;
    if (arch == Arch::Lsdnn1)
        return {w, k_on, w};
    return {w, w, w, w};
}

std::size_t parameter_count(std::span<const std::size_t> layer_sizes)
{
    std::size_t n = 0;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l)
        n += layer_sizes[l] * layer_sizes[l - 1] + layer_sizes[l];
    return n;
}

// ---- model --------------------------------------------------------------

DnnModel DnnModel::create(std::span<const std::size_t> layer_sizes, RngStream &init_rng)
{
    require(layer_sizes.size() >= 2, Errc::ShapeInconsistency, "a network needs input and output widths");
    DnnModel m;
    m.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
    for (std::size_t l = 1; l < layer_sizes.size(); ++l)
    {
        DenseLayer layer;
        layer.inputs = layer_sizes[l - 1];
        layer.outputs = layer_sizes[l];
        require(layer.inputs > 0 && layer.outputs > 0, Errc::ShapeInconsistency, "layer widths must be positive");
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
        layer.weights.resize(layer.inputs * layer.outputs);
        for (auto &w : layer.weights)
            w = (2.0 * init_rng.uniform() - 1.0) * limit;
        layer.bias.assign(layer.outputs, 0.0);
        m.layers.push_back(std::move(layer));
    }
    m.norm_in = NormStats::identity(m.input_width());
    m.norm_out = NormStats::identity(m.output_width());
    return m;
}

std::size_t DnnModel::parameter_count() const
{
    std::size_t n = 0;
    for (const auto &l : layers)
        n += l.weights.size() + l.bias.size();
    return n;
}

void DnnModel::validate() const
{
    require(layer_sizes.size() >= 2, Errc::ShapeInconsistency, "a network needs input and output widths");
    require(layers.size() + 1 == layer_sizes.size(), Errc::ShapeInconsistency, "layer count differs from layer_sizes");
    for (std::size_t l = 0; l < layers.size(); ++l)
    {
        const auto &L = layers[l];
        const std::string where = "layer " + std::to_string(l);
        require(L.inputs == layer_sizes[l] && L.outputs == layer_sizes[l + 1], Errc::ShapeInconsistency,
                where + " widths do not chain");
        require(L.weights.size() == L.inputs * L.outputs, Errc::ShapeInconsistency,
                where + " has " + std::to_string(L.weights.size()) + " weights, expected " +
                    std::to_string(L.inputs * L.outputs));
        require(L.bias.size() == L.outputs, Errc::ShapeInconsistency, where + " bias length mismatch");
    }
    norm_in.validate(input_width());
    norm_out.validate(output_width());
}

// ---- forward / backward (single sample) ---------------------------------

std::vector<double> forward(const DnnModel &model, std::span<const double> x, ForwardCache *cache)
{
    require(x.size() == model.input_width(), Errc::WidthMismatch,
            "input width " + std::to_string(x.size()) + ", model expects " + std::to_string(model.input_width()));
    std::vector<double> a(x.begin(), x.end());
    if (cache)
    {
        cache->pre.clear();
        cache->post.assign(1, a);
    }
    for (std::size_t l = 0; l < model.layers.size(); ++l)
    {
        const auto &L = model.layers[l];
        const bool hidden = l + 1 < model.layers.size();
        std::vector<double> z(L.bias);
        for (std::size_t j = 0; j < L.outputs; ++j)
        {
            const double *w = L.weights.data() + j * L.inputs;
            double acc = 0.0;
            for (std::size_t i = 0; i < L.inputs; ++i)
                acc += w[i] * a[i];
            z[j] += acc;
        }
        if (cache)
            cache->pre.push_back(z);
        if (hidden)
            for (auto &v : z)
                v = v > 0.0 ? v : 0.0;
        a = std::move(z);
        if (cache)
            cache->post.push_back(a);
    }
    return a;
}

Gradients Gradients::zeros_like(const DnnModel &model)
{
    Gradients g;
    for (const auto &L : model.layers)
    {
        g.weights.emplace_back(L.weights.size(), 0.0);
        g.bias.emplace_back(L.bias.size(), 0.0);
    }
    return g;
}

Gradients &Gradients::operator+=(const Gradients &other)
{
    for (std::size_t l = 0; l < weights.size(); ++l)
    {
        for (std::size_t i = 0; i < weights[l].size(); ++i)
            weights[l][i] += other.weights[l][i];
        for (std::size_t i = 0; i < bias[l].size(); ++i)
            bias[l][i] += other.bias[l][i];
    }
    return *this;
}

Gradients &Gradients::operator*=(double s)
{
    for (auto &v : weights)
        for (auto &x : v)
            x *= s;
    for (auto &v : bias)
        for (auto &x : v)
            x *= s;
    return *this;
}

double Gradients::max_abs() const
{
    double m = 0.0;
    for (const auto &v : weights)
        for (double x : v)
            m = std::max(m, std::abs(x));
    for (const auto &v : bias)
        for (double x : v)
            m = std::max(m, std::abs(x));
    return m;
}

double sample_loss(const DnnModel &model, std::span<const double> x, std::span<const double> target)
{
    require(target.size() == model.output_width(), Errc::WidthMismatch, "target width differs from model output");
    const auto y = forward(model, x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        s += (y[i] - target[i]) * (y[i] - target[i]);
    return s / static_cast<double>(y.size());
}

Gradients backprop(const DnnModel &model, std::span<const double> x, std::span<const double> target, double *loss)
{
    require(target.size() == model.output_width(), Errc::WidthMismatch, "target width differs from model output");
    ForwardCache cache;
    const auto y = forward(model, x, &cache);
    const double n_out = static_cast<double>(y.size());

    std::vector<double> delta(y.size());
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
    {
        const double e = y[i] - target[i];
        s += e * e;
        delta[i] = 2.0 * e / n_out;
    }
    if (loss)
        *loss = s / n_out;

    Gradients g = Gradients::zeros_like(model);
    for (std::size_t l = model.layers.size(); l-- > 0;)
    {
        const auto &L = model.layers[l];
        const auto &a_prev = cache.post[l];
        for (std::size_t j = 0; j < L.outputs; ++j)
        {
            g.bias[l][j] = delta[j];
            double *gw = g.weights[l].data() + j * L.inputs;
            for (std::size_t i = 0; i < L.inputs; ++i)
                gw[i] = delta[j] * a_prev[i];
        }
        if (l == 0)
            break;
        std::vector<double> prev(L.inputs, 0.0);
        for (std::size_t j = 0; j < L.outputs; ++j)
        {
            const double *w = L.weights.data() + j * L.inputs;
            for (std::size_t i = 0; i < L.inputs; ++i)
                prev[i] += delta[j] * w[i];
        }
        const auto &z_prev = cache.pre[l - 1];
        for (std::size_t i = 0; i < L.inputs; ++i)
            prev[i] = z_prev[i] > 0.0 ? prev[i] : 0.0;
        delta = std::move(prev);
    }
    return g;
}

// ---- ADAM ---------------------------------------------------------------

void TrainConfig::validate() const
{
    require(epochs >= 1, Errc::BadConfig, "epochs must be at least 1");
    require(batch_size >= 1, Errc::BadConfig, "batch_size must be at least 1");
    require(split_ratio > 0.0 && split_ratio < 1.0, Errc::BadConfig, "split_ratio must lie in (0, 1)");
    require(learning_rate > 0.0, Errc::BadConfig, "learning_rate must be positive");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0, Errc::BadConfig,
            "ADAM betas must lie in [0, 1)");
    require(adam_eps > 0.0, Errc::BadConfig, "adam_eps must be positive");
}

AdamState AdamState::for_model(const DnnModel &model)
{
    return {Gradients::zeros_like(model), Gradients::zeros_like(model)};
}

namespace
{

void adam_update(std::vector<double> &theta, const std::vector<double> &g, std::vector<double> &m,
                 std::vector<double> &v, double b1, double b2, double step, double c1, double c2, double eps)
{
    for (std::size_t i = 0; i < theta.size(); ++i)
    {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        theta[i] -= step * m_hat / (std::sqrt(v_hat) + eps);
    }
}

} // namespace

void adam_step(DnnModel &model, const Gradients &grads, AdamState &state, const TrainConfig &cfg, std::size_t t)
{
    require(t >= 1, Errc::BadConfig, "ADAM step count starts at 1");
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t l = 0; l < model.layers.size(); ++l)
    {
        auto &L = model.layers[l];
        adam_update(L.weights, grads.weights[l], state.m.weights[l], state.v.weights[l], b1, b2, cfg.learning_rate,
                    c1, c2, cfg.adam_eps);
        adam_update(L.bias, grads.bias[l], state.m.bias[l], state.v.bias[l], b1, b2, cfg.learning_rate, c1, c2,
                    cfg.adam_eps);
    }
}

// ---- batched kernels ----------------------------------------------------

namespace
{

// Scratch buffers for one mini-batch. act[0] holds the batch inputs.
struct BatchWorkspace
{
    std::vector<RealMatrix> act;
    std::vector<RealMatrix> pre;
    std::vector<std::vector<double>> wt; // transposed weights, inputs x outputs
    RealMatrix delta;
    RealMatrix delta_prev;

    void resize(const DnnModel &model, std::size_t batch)
    {
        const std::size_t nl = model.layers.size();
        act.resize(nl + 1);
        pre.resize(nl);
        wt.resize(nl);
        act[0] = RealMatrix(batch, model.input_width());
        for (std::size_t l = 0; l < nl; ++l)
        {
            pre[l] = RealMatrix(batch, model.layer_sizes[l + 1]);
            act[l + 1] = RealMatrix(batch, model.layer_sizes[l + 1]);
            wt[l].resize(model.layers[l].weights.size());
        }
    }
};

void forward_batch(const DnnModel &model, std::size_t batch, BatchWorkspace &ws)
{
    const std::size_t nl = model.layers.size();
    for (std::size_t l = 0; l < nl; ++l)
    {
        const auto &L = model.layers[l];
        const std::size_t in = L.inputs, out = L.outputs;
        double *wt = ws.wt[l].data();
        for (std::size_t j = 0; j < out; ++j)
            for (std::size_t i = 0; i < in; ++i)
                wt[i * out + j] = L.weights[j * in + i];

        const bool hidden = l + 1 < nl;
        for (std::size_t b = 0; b < batch; ++b)
        {
            const double *a = ws.act[l].data.data() + b * in;
            double *z = ws.pre[l].data.data() + b * out;
            std::copy(L.bias.begin(), L.bias.end(), z);
            for (std::size_t i = 0; i < in; ++i)
            {
                const double ai = a[i];
                if (ai == 0.0)
                    continue;
                const double *w = wt + i * out;
                for (std::size_t j = 0; j < out; ++j)
                    z[j] += ai * w[j];
            }
            double *y = ws.act[l + 1].data.data() + b * out;
            if (hidden)
                for (std::size_t j = 0; j < out; ++j)
                    y[j] = z[j] > 0.0 ? z[j] : 0.0;
            else
                std::copy(z, z + out, y);
        }
    }
}

// Accumulates mean gradients into g (overwritten) and returns the mean loss.
double backward_batch(const DnnModel &model, std::size_t batch, const double *targets, BatchWorkspace &ws,
                      Gradients &g)
{
    const std::size_t nl = model.layers.size();
    const std::size_t n_out = model.output_width();
    const double scale = 2.0 / (static_cast<double>(n_out) * static_cast<double>(batch));

    ws.delta = RealMatrix(batch, n_out);
    double loss = 0.0;
    const double *y = ws.act[nl].data.data();
    for (std::size_t k = 0; k < batch * n_out; ++k)
    {
        const double e = y[k] - targets[k];
        loss += e * e;
        ws.delta.data[k] = scale * e;
    }

    for (std::size_t l = nl; l-- > 0;)
    {
        const auto &L = model.layers[l];
        const std::size_t in = L.inputs, out = L.outputs;
        auto &gw = g.weights[l];
        auto &gb = g.bias[l];
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t b = 0; b < batch; ++b)
        {
            const double *d = ws.delta.data.data() + b * out;
            const double *a = ws.act[l].data.data() + b * in;
            for (std::size_t j = 0; j < out; ++j)
            {
                const double dj = d[j];
                if (dj == 0.0)
                    continue;
                gb[j] += dj;
                double *row = gw.data() + j * in;
                for (std::size_t i = 0; i < in; ++i)
                    row[i] += dj * a[i];
            }
        }
        if (l == 0)
            break;

        ws.delta_prev = RealMatrix(batch, in);
        for (std::size_t b = 0; b < batch; ++b)
        {
            const double *d = ws.delta.data.data() + b * out;
            double *p = ws.delta_prev.data.data() + b * in;
            for (std::size_t j = 0; j < out; ++j)
            {
                const double dj = d[j];
                if (dj == 0.0)
                    continue;
                const double *w = L.weights.data() + j * in;
                for (std::size_t i = 0; i < in; ++i)
                    p[i] += dj * w[i];
            }
            const double *z = ws.pre[l - 1].data.data() + b * in;
            for (std::size_t i = 0; i < in; ++i)
                p[i] = z[i] > 0.0 ? p[i] : 0.0;
        }
        std::swap(ws.delta, ws.delta_prev);
    }
    return loss / (static_cast<double>(n_out) * static_cast<double>(batch));
}

double mean_loss_rows(const DnnModel &model, const RealMatrix &inputs, const RealMatrix &targets)
{
    constexpr std::size_t chunk = 256;
    BatchWorkspace ws;
    double total = 0.0;
    const std::size_t n_out = model.output_width();
    for (std::size_t start = 0; start < inputs.rows; start += chunk)
    {
        const std::size_t b = std::min(chunk, inputs.rows - start);
        ws.resize(model, b);
        std::copy_n(inputs.data.begin() + static_cast<std::ptrdiff_t>(start * inputs.cols), b * inputs.cols,
                    ws.act[0].data.begin());
        forward_batch(model, b, ws);
        const double *y = ws.act.back().data.data();
        const double *t = targets.data.data() + start * n_out;
        for (std::size_t k = 0; k < b * n_out; ++k)
            total += (y[k] - t[k]) * (y[k] - t[k]);
    }
    return total / (static_cast<double>(inputs.rows) * static_cast<double>(n_out));
}

RealMatrix gather_normalized(const RealMatrix &src, std::span<const std::size_t> rows, const NormStats &stats)
{
    RealMatrix out(rows.size(), src.cols);
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        auto dst = out.row(r);
        const auto s = src.row(rows[r]);
        std::copy(s.begin(), s.end(), dst.begin());
        stats.normalize(dst);
    }
    return out;
}

} // namespace

Gradients batch_gradients(const DnnModel &model, const RealMatrix &inputs, const RealMatrix &targets, double *loss)
{
    require(inputs.cols == model.input_width() && targets.cols == model.output_width(), Errc::WidthMismatch,
            "batch widths differ from the model");
    require(inputs.rows == targets.rows && inputs.rows > 0, Errc::EmptyDataset, "batch rows mismatch or empty");
    BatchWorkspace ws;
    ws.resize(model, inputs.rows);
    ws.act[0].data = inputs.data;
    forward_batch(model, inputs.rows, ws);
    Gradients g = Gradients::zeros_like(model);
    const double l = backward_batch(model, inputs.rows, targets.data.data(), ws, g);
    if (loss)
        *loss = l;
    return g;
}

double dataset_loss(const DnnModel &model, const Dataset &data, std::span<const std::size_t> rows)
{
    require(!rows.empty(), Errc::EmptyDataset, "no rows to evaluate");
    const RealMatrix in = gather_normalized(data.inputs, rows, model.norm_in);
    const RealMatrix tg = gather_normalized(data.targets, rows, model.norm_out);
    return mean_loss_rows(model, in, tg);
}

TrainResult train(const Dataset &data, std::span<const std::size_t> layer_sizes, const TrainConfig &cfg,
                  const std::function<void(const EpochLoss &)> &on_epoch)
{
    cfg.validate();
    const std::size_t m = data.size();
    require(m >= 2, Errc::EmptyDataset, "training needs at least two rows, got " + std::to_string(m));
    require(data.targets.rows == m, Errc::ShapeInconsistency, "dataset inputs and targets differ in rows");
    require(layer_sizes.size() >= 2, Errc::ShapeInconsistency, "a network needs input and output widths");
    require(data.inputs.cols == layer_sizes.front() && data.targets.cols == layer_sizes.back(), Errc::WidthMismatch,
            "dataset widths do not match the architecture");

    TrainResult result;

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    RngStream split_rng(cfg.seed, RngStream::key({kSplitDomain}));
    for (std::size_t i = m - 1; i > 0; --i)
        std::swap(order[i], order[split_rng.below(i + 1)]);
    auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(m) * cfg.split_ratio));
    n_train = std::clamp<std::size_t>(n_train, 1, m - 1);
    result.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    result.val_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

    RngStream init_rng(cfg.seed, RngStream::key({kInitDomain}));
    DnnModel model = DnnModel::create(layer_sizes, init_rng);
    model.norm_in = NormStats::from_rows(data.inputs, result.train_rows);
    model.norm_out = NormStats::from_rows(data.targets, result.train_rows);

    const RealMatrix train_in = gather_normalized(data.inputs, result.train_rows, model.norm_in);
    const RealMatrix train_tg = gather_normalized(data.targets, result.train_rows, model.norm_out);
    const RealMatrix val_in = gather_normalized(data.inputs, result.val_rows, model.norm_in);
    const RealMatrix val_tg = gather_normalized(data.targets, result.val_rows, model.norm_out);

    AdamState adam = AdamState::for_model(model);
    Gradients grads = Gradients::zeros_like(model);
    BatchWorkspace ws;
    std::vector<double> batch_targets;
    std::vector<std::size_t> perm(n_train);
    std::size_t step = 0;
    const std::size_t in_w = model.input_width(), out_w = model.output_width();

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch)
    {
        std::iota(perm.begin(), perm.end(), 0);
        RngStream shuffle_rng(cfg.seed, RngStream::key({kShuffleDomain, epoch}));
        for (std::size_t i = n_train - 1; i > 0; --i)
            std::swap(perm[i], perm[shuffle_rng.below(i + 1)]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size)
        {
            const std::size_t b = std::min(cfg.batch_size, n_train - start);
            if (ws.act.empty() || ws.act[0].rows != b)
                ws.resize(model, b);
            batch_targets.resize(b * out_w);
            for (std::size_t r = 0; r < b; ++r)
            {
                const std::size_t src = perm[start + r];
                std::copy_n(train_in.data.begin() + static_cast<std::ptrdiff_t>(src * in_w), in_w,
                            ws.act[0].data.begin() + static_cast<std::ptrdiff_t>(r * in_w));
                std::copy_n(train_tg.data.begin() + static_cast<std::ptrdiff_t>(src * out_w), out_w,
                            batch_targets.begin() + static_cast<std::ptrdiff_t>(r * out_w));
            }
            forward_batch(model, b, ws);
            const double loss = backward_batch(model, b, batch_targets.data(), ws, grads);
            epoch_loss += loss * static_cast<double>(b);
            adam_step(model, grads, adam, cfg, ++step);
        }

        EpochLoss row{epoch, epoch_loss / static_cast<double>(n_train), mean_loss_rows(model, val_in, val_tg)};
        result.history.push_back(row);
        if (on_epoch)
            on_epoch(row);
    }

    model.meta.epochs = cfg.epochs;
    model.meta.seed = cfg.seed;
    model.meta.snr_spec = data.meta.snr_spec;
    model.meta.training_snr_db = data.meta.snr_db;
    model.meta.channel_model = data.meta.channel_model;
    result.model = std::move(model);
    return result;
}

// ---- serialization ------------------------------------------------------

namespace
{

void put_number(std::ostream &os, double v)
{
    require(std::isfinite(v), Errc::CorruptFile, "cannot serialize a non-finite model value");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

void put_array(std::ostream &os, const std::vector<double> &v)
{
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        if (i)
            os << ',';
        put_number(os, v[i]);
    }
    os << ']';
}

void put_stats(std::ostream &os, const NormStats &s)
{
    os << "{\"mu\":";
    put_array(os, s.mu);
    os << ",\"sigma\":";
    put_array(os, s.sigma);
    os << '}';
}

std::vector<double> get_array(const nlohmann::json &j)
{
    require(j.is_array(), Errc::CorruptFile, "expected a numeric array");
    std::vector<double> v;
    v.reserve(j.size());
    for (const auto &x : j)
    {
        require(x.is_number(), Errc::CorruptFile, "expected a number");
        v.push_back(x.get<double>());
    }
    return v;
}

NormStats get_stats(const nlohmann::json &j)
{
    return {get_array(j.at("mu")), get_array(j.at("sigma"))};
}

} // namespace

std::string model_to_json(const DnnModel &model)
{
    model.validate();
    std::ostringstream os;
    os << "{\n  \"format_version\": " << kModelFormatVersion << ",\n  \"activation\": \"relu\",\n";
    os << "  \"layer_sizes\": [";
    for (std::size_t i = 0; i < model.layer_sizes.size(); ++i)
        os << (i ? "," : "") << model.layer_sizes[i];
    os << "],\n  \"parameter_count\": " << model.parameter_count() << ",\n  \"layers\": [\n";
    for (std::size_t l = 0; l < model.layers.size(); ++l)
    {
        os << "    {\"weights\": ";
        put_array(os, model.layers[l].weights);
        os << ",\n     \"bias\": ";
        put_array(os, model.layers[l].bias);
        os << '}' << (l + 1 < model.layers.size() ? ",\n" : "\n");
    }
    os << "  ],\n  \"norm_in\": ";
    put_stats(os, model.norm_in);
    os << ",\n  \"norm_out\": ";
    put_stats(os, model.norm_out);

    const auto &m = model.meta;
    os << ",\n  \"meta\": {\"training_snr_db\": ";
    if (m.training_snr_db)
        put_number(os, *m.training_snr_db);
    else
        os << "null";
    os << ", \"snr_spec\": " << nlohmann::json(m.snr_spec).dump()
       << ", \"channel_model\": " << nlohmann::json(m.channel_model).dump() << ", \"epochs\": " << m.epochs
       << ", \"arch_tag\": " << nlohmann::json(m.arch_tag).dump() << ", \"init\": " << nlohmann::json(m.init).dump()
       << ", \"seed\": " << m.seed << "}\n}\n";
    return os.str();
}

DnnModel model_from_json(std::string_view text)
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::exception &e)
    {
        throw Error(Errc::CorruptFile, std::string("model is not valid JSON: ") + e.what());
    }
    try
    {
        require(doc.is_object(), Errc::CorruptFile, "model document must be an object");
        const int version = doc.at("format_version").get<int>();
        require(version == kModelFormatVersion, Errc::FormatVersionMismatch,
                "model format_version " + std::to_string(version) + ", supported " +
                    std::to_string(kModelFormatVersion));

        DnnModel m;
        m.layer_sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
        require(m.layer_sizes.size() >= 2, Errc::ShapeInconsistency, "layer_sizes needs at least two entries");
        const auto &layers = doc.at("layers");
        require(layers.is_array() && layers.size() + 1 == m.layer_sizes.size(), Errc::ShapeInconsistency,
                "layer count differs from layer_sizes");
        for (std::size_t l = 0; l < layers.size(); ++l)
        {
            DenseLayer L;
            L.inputs = m.layer_sizes[l];
            L.outputs = m.layer_sizes[l + 1];
            L.weights = get_array(layers[l].at("weights"));
            L.bias = get_array(layers[l].at("bias"));
            m.layers.push_back(std::move(L));
        }
        m.norm_in = get_stats(doc.at("norm_in"));
        m.norm_out = get_stats(doc.at("norm_out"));
        if (doc.contains("meta"))
        {
            const auto &j = doc["meta"];
            if (j.contains("training_snr_db") && !j["training_snr_db"].is_null())
                m.meta.training_snr_db = j["training_snr_db"].get<double>();
            m.meta.snr_spec = j.value("snr_spec", "");
            m.meta.channel_model = j.value("channel_model", "");
            m.meta.epochs = j.value("epochs", std::size_t{0});
            m.meta.arch_tag = j.value("arch_tag", "");
            m.meta.init = j.value("init", "");
            m.meta.seed = j.value("seed", std::uint64_t{0});
        }
        m.validate();
        if (doc.contains("parameter_count"))
            require(doc["parameter_count"].get<std::size_t>() == m.parameter_count(), Errc::ShapeInconsistency,
                    "declared parameter_count differs from the stored values");
        return m;
    }
    catch (const nlohmann::json::exception &e)
    {
        throw Error(Errc::CorruptFile, std::string("model document: ") + e.what());
    }
}

void save_model(const DnnModel &model, const std::filesystem::path &path)
{
    const std::string text = model_to_json(model);
    if (path.has_parent_path())
    {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), Errc::IoError, "cannot write model file " + path.string());
    out << text;
    require(static_cast<bool>(out), Errc::IoError, "failed writing model file " + path.string());
}

DnnModel load_model(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), Errc::IoError, "cannot open model file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

// ---- gradient check -----------------------------------------------------

namespace
{

// Reference loss in extended precision, written independently of forward().
long double reference_loss(const DnnModel &model, std::span<const double> x, std::span<const double> target)
{
    std::vector<long double> a(x.begin(), x.end());
    for (std::size_t l = 0; l < model.layers.size(); ++l)
    {
        const auto &L = model.layers[l];
        std::vector<long double> z(L.outputs);
        for (std::size_t j = 0; j < L.outputs; ++j)
        {
            long double acc = L.bias[j];
            for (std::size_t i = 0; i < L.inputs; ++i)
                acc += static_cast<long double>(L.weights[j * L.inputs + i]) * a[i];
            z[j] = (l + 1 < model.layers.size() && acc < 0.0L) ? 0.0L : acc;
        }
        a = std::move(z);
    }
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        const long double e = a[i] - static_cast<long double>(target[i]);
        s += e * e;
    }
    return s / static_cast<long double>(a.size());
}

} // namespace

GradCheckReport grad_check(const DnnModel &model, std::size_t samples, double tolerance, RngStream &rng,
                           const GradientFn &gradient, double epsilon)
{
    model.validate();
    GradCheckReport report;
    report.tolerance = tolerance;
    report.samples = samples;

    DnnModel probe = model;
    std::vector<double> x(model.input_width()), t(model.output_width());
    for (std::size_t s = 0; s < samples; ++s)
    {
        for (auto &v : x)
            v = rng.gaussian_pair().first;
        for (auto &v : t)
            v = rng.gaussian_pair().first;
        const Gradients g = gradient ? gradient(model, x, t) : backprop(model, x, t);

        const auto check = [&](double &param, double analytic) {
            const double saved = param;
            const double hi = saved + epsilon;
            const double lo = saved - epsilon;
            param = hi;
            const long double up = reference_loss(probe, x, t);
            param = lo;
            const long double down = reference_loss(probe, x, t);
            param = saved;
            const double numeric =
                static_cast<double>((up - down) / (static_cast<long double>(hi) - static_cast<long double>(lo)));
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            report.max_rel_error = std::max(report.max_rel_error, std::abs(analytic - numeric) / denom);
            ++report.parameters_checked;
        };

        for (std::size_t l = 0; l < probe.layers.size(); ++l)
        {
            auto &L = probe.layers[l];
            for (std::size_t i = 0; i < L.weights.size(); ++i)
                check(L.weights[i], g.weights[l][i]);
            for (std::size_t i = 0; i < L.bias.size(); ++i)
                check(L.bias[i], g.bias[l][i]);
        }
    }
    report.passed = samples > 0 && report.max_rel_error < tolerance;
    return report;
}

} // namespace chanest::dnn
