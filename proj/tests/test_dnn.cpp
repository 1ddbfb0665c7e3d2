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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

using namespace chanest;
using namespace chanest::dnn;

namespace
{

DnnModel zero_model(std::vector<std::size_t> sizes)
{
    RngStream rng(0, 0);
    auto m = DnnModel::create(sizes, rng);
    for (auto &L : m.layers)
    {
        std::fill(L.weights.begin(), L.weights.end(), 0.0);
        std::fill(L.bias.begin(), L.bias.end(), 0.0);
    }
    return m;
}

// Rows living on a low-dimensional subspace so a bottleneck network can represent identity.
Dataset identity_dataset(std::size_t rows, std::size_t width, std::size_t rank, std::uint64_t seed)
{
    RngStream rng(seed, 1);
    std::vector<std::vector<double>> basis(rank, std::vector<double>(width));
    for (auto &b : basis)
        for (auto &v : b)
            v = rng.gaussian_pair().first;
    Dataset d;
    d.inputs = RealMatrix(rows, width);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < rank; ++i)
        {
            const double c = rng.gaussian_pair().first;
            for (std::size_t j = 0; j < width; ++j)
                d.inputs.row(r)[j] += c * basis[i][j];
        }
    d.targets = d.inputs;
    return d;
}

} // namespace

TEST(Arch, ShapesAndParameterCounts)
{
    EXPECT_EQ(build_arch(52, Arch::Lsdnn1), (std::vector<std::size_t>{104, 52, 104}));
    EXPECT_EQ(build_arch(52, Arch::Lsdnn2), (std::vector<std::size_t>{104, 104, 104, 104}));
    EXPECT_EQ(parameter_count(build_arch(52, Arch::Lsdnn1)), 10972u);
    EXPECT_EQ(parameter_count(build_arch(52, Arch::Lsdnn2)), 3u * (104u * 104u + 104u));
    EXPECT_EQ(build_arch(1, Arch::Lsdnn1), (std::vector<std::size_t>{2, 1, 2}));
    EXPECT_EQ(arch_from_tag("lsdnn2"), Arch::Lsdnn2);
    EXPECT_THROW(arch_from_tag("lsdnn3"), Error);
}

TEST(Forward, HandEvaluatedTwoTwoOne)
{
    auto m = zero_model({2, 2, 1});
    m.layers[0].weights = {1, 0, 0, 1};
    m.layers[1].weights = {1, -1};
    m.layers[1].bias = {0.5};
    ForwardCache cache;
    const auto y = forward(m, std::vector<double>{2, -3}, &cache);
    ASSERT_EQ(y.size(), 1u);
    EXPECT_DOUBLE_EQ(y[0], 2.5);
    EXPECT_EQ(cache.post[1], (std::vector<double>{2, 0}));
    EXPECT_EQ(cache.pre[0], (std::vector<double>{2, -3}));
}

TEST(Forward, ZeroWeightsGiveOutputBias)
{
    auto m = zero_model({3, 4, 2});
    m.layers[0].bias = {1.0, -2.0, 0.5, 0.0};
    m.layers[1].bias = {0.25, -0.75};
    ForwardCache cache;
    const auto y = forward(m, std::vector<double>{5, 6, 7}, &cache);
    EXPECT_EQ(cache.post[1], (std::vector<double>{1.0, 0.0, 0.5, 0.0}));
    EXPECT_EQ(y, (std::vector<double>{0.25, -0.75}));
}

TEST(Forward, OutputLayerIsLinear)
{
    auto m = zero_model({1, 1});
    m.layers[0].weights = {2.0};
    m.layers[0].bias = {-5.0};
    EXPECT_DOUBLE_EQ(forward(m, std::vector<double>{1.0})[0], -3.0);
}

TEST(Forward, WidthMismatch)
{
    const auto m = zero_model({3, 2, 3});
    try
    {
        forward(m, std::vector<double>{1, 2});
        FAIL();
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.code(), Errc::WidthMismatch);
    }
}

TEST(Forward, HiddenLayerIsPositivelyHomogeneous)
{
    RngStream rng(1, 1);
    const auto m = DnnModel::create(build_arch(52, Arch::Lsdnn1), rng);
    std::vector<double> x(104);
    for (auto &v : x)
        v = rng.gaussian_pair().first;
    ForwardCache c1, c2;
    forward(m, x, &c1);
    auto x2 = x;
    for (auto &v : x2)
        v *= 3.5;
    forward(m, x2, &c2);
    for (std::size_t i = 0; i < 52; ++i)
        EXPECT_NEAR(c2.post[1][i], 3.5 * c1.post[1][i], 1e-12);
}

TEST(Backprop, PerfectFitHasZeroGradient)
{
    RngStream rng(2, 2);
    const auto m = DnnModel::create(std::vector<std::size_t>{4, 3, 4}, rng);
    const std::vector<double> x{0.1, -0.2, 0.3, 0.4};
    const auto y = forward(m, x);
    double loss = -1.0;
    const auto g = backprop(m, x, y, &loss);
    EXPECT_EQ(loss, 0.0);
    EXPECT_EQ(g.max_abs(), 0.0);
}

TEST(Backprop, SingleLinearNeuron)
{
    auto m = zero_model({1, 1});
    m.layers[0].weights = {1.0};
    double loss = 0.0;
    const auto g = backprop(m, std::vector<double>{1.0}, std::vector<double>{0.0}, &loss);
    EXPECT_DOUBLE_EQ(loss, 1.0);
    EXPECT_DOUBLE_EQ(g.weights[0][0], 2.0);
    EXPECT_DOUBLE_EQ(g.bias[0][0], 2.0);
}

TEST(Backprop, ReluSubgradientAtZeroIsZero)
{
    // hidden pre-activation exactly 0: first-layer parameters get no gradient
    auto m = zero_model({1, 1, 1});
    m.layers[1].weights = {1.0};
    const auto g = backprop(m, std::vector<double>{1.0}, std::vector<double>{1.0});
    EXPECT_EQ(g.weights[0][0], 0.0);
    EXPECT_EQ(g.bias[0][0], 0.0);
    EXPECT_DOUBLE_EQ(g.bias[1][0], -2.0);
}

TEST(Backprop, SampleLossIsMeanSquare)
{
    auto m = zero_model({2, 2});
    m.layers[0].bias = {1.0, 3.0};
    EXPECT_DOUBLE_EQ(sample_loss(m, std::vector<double>{0, 0}, std::vector<double>{0, 0}), (1.0 + 9.0) / 2.0);
}

TEST(GradCheck, FreshLsdnn1Passes)
{
    RngStream rng(3, 3);
    const auto m = DnnModel::create(build_arch(52, Arch::Lsdnn1), rng);
    const auto report = grad_check(m, 3, 1e-5, rng);
    EXPECT_TRUE(report.passed) << report.max_rel_error;
    EXPECT_EQ(report.parameters_checked, 3u * 10972u);
}

TEST(GradCheck, CorruptedGradientFails)
{
    RngStream rng(4, 4);
    const auto m = DnnModel::create(std::vector<std::size_t>{6, 3, 6}, rng);
    const GradientFn scaled = [](const DnnModel &model, std::span<const double> x, std::span<const double> t) {
        auto g = backprop(model, x, t);
        g *= 1.01;
        return g;
    };
    const auto report = grad_check(m, 5, 1e-5, rng, scaled);
    EXPECT_FALSE(report.passed);
    EXPECT_GT(report.max_rel_error, 5e-3);
}

TEST(GradCheck, LinearModelNearMachinePrecision)
{
    RngStream rng(5, 5);
    const auto m = DnnModel::create(std::vector<std::size_t>{8, 8}, rng);
    const auto report = grad_check(m, 5, 1e-5, rng);
    EXPECT_TRUE(report.passed);
    EXPECT_LT(report.max_rel_error, 1e-8);
}

TEST(GradCheck, BatchGradientsAverageSampleGradients)
{
    RngStream rng(6, 6);
    const auto m = DnnModel::create(std::vector<std::size_t>{5, 4, 5}, rng);
    RealMatrix in(7, 5), tg(7, 5);
    for (auto &v : in.data)
        v = rng.gaussian_pair().first;
    for (auto &v : tg.data)
        v = rng.gaussian_pair().first;
    double batch_loss = 0.0;
    const auto gb = batch_gradients(m, in, tg, &batch_loss);
    auto sum = Gradients::zeros_like(m);
    double loss_sum = 0.0;
    for (std::size_t r = 0; r < 7; ++r)
    {
        double l = 0.0;
        sum += backprop(m, in.row(r), tg.row(r), &l);
        loss_sum += l;
    }
    sum *= 1.0 / 7.0;
    EXPECT_NEAR(batch_loss, loss_sum / 7.0, 1e-14);
    for (std::size_t l = 0; l < sum.weights.size(); ++l)
    {
        for (std::size_t i = 0; i < sum.weights[l].size(); ++i)
            EXPECT_NEAR(gb.weights[l][i], sum.weights[l][i], 1e-14);
        for (std::size_t i = 0; i < sum.bias[l].size(); ++i)
            EXPECT_NEAR(gb.bias[l][i], sum.bias[l][i], 1e-14);
    }
}

TEST(Adam, ZeroGradientLeavesParameters)
{
    RngStream rng(7, 7);
    auto m = DnnModel::create(std::vector<std::size_t>{3, 2}, rng);
    const auto before = m.layers[0].weights;
    auto state = AdamState::for_model(m);
    adam_step(m, Gradients::zeros_like(m), state, TrainConfig{}, 1);
    EXPECT_EQ(m.layers[0].weights, before);
}

TEST(Adam, FirstStepMovesByLearningRate)
{
    auto m = zero_model({1, 1});
    auto state = AdamState::for_model(m);
    auto g = Gradients::zeros_like(m);
    g.weights[0][0] = 1.0;
    g.bias[0][0] = -4.0;
    adam_step(m, g, state, TrainConfig{}, 1);
    // m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
    EXPECT_NEAR(m.layers[0].weights[0], -1e-3, 1e-11);
    EXPECT_NEAR(m.layers[0].bias[0], 1e-3, 1e-11);
}

TEST(Adam, ConstantGradientMovesMonotonically)
{
    auto m = zero_model({1, 1});
    auto state = AdamState::for_model(m);
    auto g = Gradients::zeros_like(m);
    g.weights[0][0] = 0.3;
    double prev = 0.0;
    for (std::size_t t = 1; t <= 100; ++t)
    {
        adam_step(m, g, state, TrainConfig{}, t);
        EXPECT_LT(m.layers[0].weights[0], prev);
        prev = m.layers[0].weights[0];
    }
    EXPECT_NEAR(prev, -0.1, 1e-6);
}

TEST(TrainConfig, Validation)
{
    TrainConfig c;
    EXPECT_NO_THROW(c.validate());
    c.split_ratio = 1.0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.epochs = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Train, SplitSizes)
{
    Dataset d;
    d.inputs = RealMatrix(30000, 2);
    d.targets = RealMatrix(30000, 2);
    RngStream rng(8, 8);
    for (auto &v : d.inputs.data)
        v = rng.uniform();
    d.targets = d.inputs;
    TrainConfig c;
    c.epochs = 1;
    const auto r = train(d, std::vector<std::size_t>{2, 1, 2}, c);
    EXPECT_EQ(r.train_rows.size(), 24000u);
    EXPECT_EQ(r.val_rows.size(), 6000u);
    std::vector<std::size_t> all = r.train_rows;
    all.insert(all.end(), r.val_rows.begin(), r.val_rows.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i)
        ASSERT_EQ(all[i], i);
    EXPECT_EQ(r.history.size(), 1u);
}

TEST(Train, IdentityTaskConverges)
{
    const auto d = identity_dataset(2000, 104, 12, 9);
    TrainConfig c;
    c.epochs = 200;
    c.seed = 3;
    const auto sizes = build_arch(52, Arch::Lsdnn1);
    const auto r = train(d, sizes, c);
    ASSERT_EQ(r.history.size(), 200u);

    RngStream init(c.seed, 99);
    auto fresh = DnnModel::create(sizes, init);
    fresh.norm_in = r.model.norm_in;
    fresh.norm_out = r.model.norm_out;
    const double initial = dataset_loss(fresh, d, r.val_rows);
    EXPECT_LT(r.history.back().val_loss, 1e-3 * initial);
    EXPECT_NEAR(dataset_loss(r.model, d, r.val_rows), r.history.back().val_loss, 1e-12);

    // 10-epoch block means never increase
    for (std::size_t b = 10; b + 10 <= r.history.size(); b += 10)
    {
        double prev = 0.0, cur = 0.0;
        for (std::size_t i = 0; i < 10; ++i)
        {
            prev += r.history[b - 10 + i].train_loss;
            cur += r.history[b + i].train_loss;
        }
        EXPECT_LE(cur, prev) << "block at epoch " << b;
    }
}

TEST(Train, DeterministicForSeed)
{
    const auto d = identity_dataset(300, 8, 3, 10);
    TrainConfig c;
    c.epochs = 5;
    c.batch_size = 16;
    const std::vector<std::size_t> sizes{8, 4, 8};
    const auto a = train(d, sizes, c);
    const auto b = train(d, sizes, c);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i)
    {
        EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
        EXPECT_EQ(a.history[i].val_loss, b.history[i].val_loss);
    }
    EXPECT_EQ(model_to_json(a.model), model_to_json(b.model));
    c.seed = 2;
    EXPECT_NE(model_to_json(train(d, sizes, c).model), model_to_json(a.model));
}

TEST(Train, NormalizationUsesTrainingSplitOnly)
{
    // skewed data: values grow with the row index, so any split gives different moments
    Dataset d;
    d.inputs = RealMatrix(400, 4);
    for (std::size_t r = 0; r < 400; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            d.inputs.row(r)[c] = std::pow(static_cast<double>(r) / 40.0, 3.0) + static_cast<double>(c);
    d.targets = d.inputs;
    TrainConfig c;
    c.epochs = 1;
    const auto r = train(d, std::vector<std::size_t>{4, 2, 4}, c);
    const auto from_train = NormStats::from_rows(d.inputs, r.train_rows);
    const auto from_val = NormStats::from_rows(d.inputs, r.val_rows);
    EXPECT_EQ(r.model.norm_in.mu, from_train.mu);
    EXPECT_EQ(r.model.norm_in.sigma, from_train.sigma);
    EXPECT_NE(r.model.norm_in.mu, from_val.mu);
    EXPECT_EQ(r.model.norm_out.mu, NormStats::from_rows(d.targets, r.train_rows).mu);
}

TEST(Train, NeedsTwoRows)
{
    Dataset d;
    d.inputs = RealMatrix(1, 2);
    d.targets = RealMatrix(1, 2);
    try
    {
        train(d, std::vector<std::size_t>{2, 2}, TrainConfig{});
        FAIL();
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.code(), Errc::EmptyDataset);
    }
}

TEST(NormStats, PopulationMomentsAndConstantColumns)
{
    RealMatrix m(4, 2);
    const double vals[4] = {1, 2, 3, 6};
    for (std::size_t r = 0; r < 4; ++r)
    {
        m.row(r)[0] = vals[r];
        m.row(r)[1] = 7.0;
    }
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    const auto s = NormStats::from_rows(m, rows);
    EXPECT_DOUBLE_EQ(s.mu[0], 3.0);
    EXPECT_DOUBLE_EQ(s.sigma[0], std::sqrt((4.0 + 1.0 + 0.0 + 9.0) / 4.0));
    EXPECT_DOUBLE_EQ(s.mu[1], 7.0);
    EXPECT_DOUBLE_EQ(s.sigma[1], 1.0);
    std::vector<double> x{5.0, 8.0};
    s.normalize(x);
    s.denormalize(x);
    EXPECT_DOUBLE_EQ(x[0], 5.0);
    EXPECT_DOUBLE_EQ(x[1], 8.0);
}

TEST(Serialization, RoundTripIsExact)
{
    RngStream rng(11, 11);
    auto m = DnnModel::create(build_arch(52, Arch::Lsdnn1), rng);
    for (auto &v : m.norm_in.mu)
        v = rng.gaussian_pair().first;
    for (auto &v : m.norm_out.sigma)
        v = 0.1 + rng.uniform();
    for (auto &v : m.layers[0].bias)
        v = rng.gaussian_pair().first * 1e-7;
    m.meta.training_snr_db = 10.0;
    m.meta.channel_model = "flat-rayleigh";
    m.meta.arch_tag = "lsdnn1";
    m.meta.snr_spec = "10";
    m.meta.epochs = 500;
    m.meta.seed = 77;

    const auto path = std::filesystem::temp_directory_path() / "chanest_dnn_test" / "m.json";
    save_model(m, path);
    const auto back = load_model(path);
    EXPECT_EQ(back.layer_sizes, m.layer_sizes);
    for (std::size_t l = 0; l < m.layers.size(); ++l)
    {
        EXPECT_EQ(back.layers[l].weights, m.layers[l].weights);
        EXPECT_EQ(back.layers[l].bias, m.layers[l].bias);
    }
    EXPECT_EQ(back.norm_in.mu, m.norm_in.mu);
    EXPECT_EQ(back.norm_out.sigma, m.norm_out.sigma);
    EXPECT_EQ(back.meta.training_snr_db, m.meta.training_snr_db);
    EXPECT_EQ(back.meta.channel_model, "flat-rayleigh");
    EXPECT_EQ(back.meta.arch_tag, "lsdnn1");
    EXPECT_EQ(back.meta.epochs, 500u);
    EXPECT_EQ(back.meta.seed, 77u);
    EXPECT_EQ(back.meta.init, "glorot_uniform");
    for (int t = 0; t < 100; ++t)
    {
        std::vector<double> x(104);
        for (auto &v : x)
            v = rng.gaussian_pair().first;
        EXPECT_EQ(forward(back, x), forward(m, x));
    }
    EXPECT_EQ(model_to_json(back), model_to_json(m));
    std::filesystem::remove_all(path.parent_path());
}

TEST(Serialization, ParameterCountMatchesSerializedValues)
{
    for (const auto arch : {Arch::Lsdnn1, Arch::Lsdnn2})
    {
        RngStream rng(12, 12);
        const auto m = DnnModel::create(build_arch(52, arch), rng);
        const auto doc = nlohmann::json::parse(model_to_json(m));
        std::size_t values = 0;
        for (const auto &L : doc["layers"])
            values += L["weights"].size() + L["bias"].size();
        EXPECT_EQ(values, parameter_count(build_arch(52, arch)));
        EXPECT_EQ(doc["parameter_count"].get<std::size_t>(), values);
        EXPECT_EQ(doc["layer_sizes"].get<std::vector<std::size_t>>(), build_arch(52, arch));
    }
}

TEST(Serialization, MissingTrainingSnrIsNull)
{
    const auto m = zero_model({2, 2});
    const auto doc = nlohmann::json::parse(model_to_json(m));
    EXPECT_TRUE(doc["meta"]["training_snr_db"].is_null());
    EXPECT_FALSE(model_from_json(model_to_json(m)).meta.training_snr_db.has_value());
}

TEST(Serialization, Errors)
{
    const auto m = zero_model({2, 3, 2});
    auto doc = nlohmann::json::parse(model_to_json(m));
    const auto expect_code = [](const std::string &text, Errc code) {
        try
        {
            model_from_json(text);
            FAIL() << "no error";
        }
        catch (const Error &e)
        {
            EXPECT_EQ(e.code(), code) << e.what();
        }
    };

    auto bad_weights = doc;
    bad_weights["layers"][0]["weights"].erase(0);
    bad_weights.erase("parameter_count");
    expect_code(bad_weights.dump(), Errc::ShapeInconsistency);

    auto bad_version = doc;
    bad_version["format_version"] = 2;
    expect_code(bad_version.dump(), Errc::FormatVersionMismatch);

    auto bad_count = doc;
    bad_count["parameter_count"] = 3;
    expect_code(bad_count.dump(), Errc::ShapeInconsistency);

    auto bad_sigma = doc;
    bad_sigma["norm_in"]["sigma"][0] = 0.0;
    expect_code(bad_sigma.dump(), Errc::ShapeInconsistency);

    expect_code("{\"format_version\": 1", Errc::CorruptFile);
    expect_code("{\"format_version\": 1}", Errc::CorruptFile);
    expect_code("[1, 2]", Errc::CorruptFile);

    try
    {
        load_model("/nonexistent/model.json");
        FAIL();
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.code(), Errc::IoError);
    }
}
