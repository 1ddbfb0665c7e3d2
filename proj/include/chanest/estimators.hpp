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


#ifndef CHANEST_ESTIMATORS_HPP
#define CHANEST_ESTIMATORS_HPP

#include "chanest/channel.hpp"
#include "chanest/dnn.hpp"
#include "chanest/numerics.hpp"
#include "chanest/phy.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace chanest
{

struct LsEstimate
{
    CplxVec h_hat;
};

// H_LS[k] = (sum_q Y[k, q]) / (K_p D[k]). A +-1 preamble takes the sign-flip path.
LsEstimate ls_estimate(std::span<const CplxVec> y_preamble, const PreambleSpec &preamble);

// Sample autocorrelation (1/draws) sum H H^H, symmetrized to be exactly Hermitian.
CplxMatrix estimate_rh(const ChannelModel &model, const FrameConfig &cfg, std::size_t draws, RngStream &rng);

struct LmmseParams
{
    CplxMatrix r_h;
    double n0 = 0.0;
    double e_p = 1.0;
    std::size_t k_total = 64;

    double loading() const { return static_cast<double>(k_total) * n0 / e_p; }
};

// W = R_h (R_h + (K n0 / E_p) I)^{-1}, factored once and applied per frame.
class LmmseFilter
{
  public:
    explicit LmmseFilter(const LmmseParams &params);

    CplxVec apply(const LsEstimate &ls) const;
    const CplxMatrix &matrix() const noexcept { return w_; }

  private:
    CplxMatrix w_;
};

CplxVec lmmse_estimate(const LsEstimate &ls, const LmmseParams &params);

// [re_0 .. re_{K-1}, im_0 .. im_{K-1}]
std::vector<double> stack_complex(std::span<const Cplx> h);
CplxVec unstack_complex(std::span<const double> v);

// stack -> normalize(norm_in) -> network -> denormalize(norm_out) -> unstack
CplxVec lsdnn_estimate(const LsEstimate &ls, const dnn::DnnModel &model);

// ||h_hat - h||^2 / ||h||^2 for one frame.
double nmse(std::span<const Cplx> h_hat, std::span<const Cplx> h_true);

// Running mean and standard error of per-frame values.
class MeanAccumulator
{
  public:
    void add(double v) noexcept;
    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept;
    double stderr_of_mean() const noexcept;

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Per-frame NMSE, also added to a running per-frame average.
double nmse(std::span<const Cplx> h_hat, std::span<const Cplx> h_true, MeanAccumulator &accumulate);

} // namespace chanest

#endif
