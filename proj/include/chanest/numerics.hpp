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

#ifndef CHANEST_NUMERICS_HPP
#define CHANEST_NUMERICS_HPP

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace chanest
{

using Cplx = std::complex<double>;
using CplxVec = std::vector<Cplx>;

// Standard complex division y / x. Throws DivisionByZero when |x|^2 == 0.
Cplx cplx_div(Cplx y, Cplx x);

// Dense complex matrix, row-major.
class CplxMatrix
{
  public:
    CplxMatrix() = default;
    CplxMatrix(std::size_t rows, std::size_t cols, Cplx fill = {});

    static CplxMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    Cplx &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Cplx &operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<Cplx> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const Cplx> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<Cplx> &data() noexcept { return data_; }
    const std::vector<Cplx> &data() const noexcept { return data_; }

    CplxMatrix conj_transpose() const;
    double frobenius_norm() const;
    double max_abs() const;

    CplxMatrix &operator+=(const CplxMatrix &other);
    CplxMatrix &operator-=(const CplxMatrix &other);
    CplxMatrix &operator*=(double s);

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Cplx> data_;
};

CplxMatrix operator*(const CplxMatrix &a, const CplxMatrix &b);
CplxMatrix operator+(CplxMatrix a, const CplxMatrix &b);
CplxMatrix operator-(CplxMatrix a, const CplxMatrix &b);
CplxVec operator*(const CplxMatrix &a, std::span<const Cplx> v);

// LU factorization P*A = L*U with partial pivoting on the largest column magnitude.
// A pivot below 1e-12 * max|a_ij| is treated as singular.
class LuDecomposition
{
  public:
    explicit LuDecomposition(const CplxMatrix &m);

    std::size_t size() const noexcept { return lu_.rows(); }
    CplxVec solve(std::span<const Cplx> b) const;
    CplxMatrix solve(const CplxMatrix &b) const;
    CplxMatrix inverse() const;

  private:
    CplxMatrix lu_;
    std::vector<std::size_t> perm_;
};

CplxMatrix lu_invert(const CplxMatrix &m);

// One channel tap at an integer sample delay.
struct Tap
{
    int delay = 0;
    Cplx gain{};
};

// H[k] = sum_l gain_l * exp(-j 2 pi k delay_l / fft_size) at every requested bin.
CplxVec taps_to_freq(std::span<const Tap> taps, std::span<const int> k_indices, std::size_t fft_size);

// Counter-based random stream. The draw sequence depends only on (seed, stream_id),
// so Monte-Carlo results are independent of worker count and scheduling.
class RngStream
{
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

    // Folds a tuple of indices (domain tag, snr index, frame index, ...) into one stream id.
    static std::uint64_t key(std::initializer_list<std::uint64_t> parts) noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    std::uint64_t next_u64() noexcept;
    // Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept;
    // Box-Muller: two independent N(0, 1) samples.
    std::pair<double, double> gaussian_pair() noexcept;
    // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    Cplx complex_normal(double variance) noexcept;

  private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace chanest

#endif
