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


#include "chanest/numerics.hpp"

#include "chanest/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace chanest
{

Cplx cplx_div(Cplx y, Cplx x)
{
    const double xr = x.real(), xi = x.imag();
    const double yr = y.real(), yi = y.imag();
    const double den = xr * xr + xi * xi;
    if (den == 0.0)
        throw Error(Errc::DivisionByZero, "complex divisor has zero magnitude");
    return {(xr * yr + xi * yi) / den, (xr * yi - xi * yr) / den};
}

// ---- CplxMatrix ---------------------------------------------------------

CplxMatrix::CplxMatrix(std::size_t rows, std::size_t cols, Cplx fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
}

CplxMatrix CplxMatrix::identity(std::size_t n)
{
    CplxMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

CplxMatrix CplxMatrix::conj_transpose() const
{
    CplxMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            t(c, r) = std::conj((*this)(r, c));
    return t;
}

double CplxMatrix::frobenius_norm() const
{
    double s = 0.0;
    for (const auto &z : data_)
        s += std::norm(z);
    return std::sqrt(s);
}

double CplxMatrix::max_abs() const
{
    double m = 0.0;
    for (const auto &z : data_)
        m = std::max(m, std::abs(z));
    return m;
}

static void require_same_shape(const CplxMatrix &a, const CplxMatrix &b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error(Errc::LengthMismatch, "matrix shapes differ");
}

CplxMatrix &CplxMatrix::operator+=(const CplxMatrix &other)
{
    require_same_shape(*this, other);
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] += other.data_[i];
    return *this;
}

CplxMatrix &CplxMatrix::operator-=(const CplxMatrix &other)
{
    require_same_shape(*this, other);
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] -= other.data_[i];
    return *this;
}

CplxMatrix &CplxMatrix::operator*=(double s)
{
    for (auto &z : data_)
        z *= s;
    return *this;
}

CplxMatrix operator*(const CplxMatrix &a, const CplxMatrix &b)
{
    if (a.cols() != b.rows())
        throw Error(Errc::LengthMismatch, "matrix product inner dimensions differ");
    CplxMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k)
        {
            const Cplx aik = a(i, k);
            const auto src = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                dst[j] += aik * src[j];
        }
    }
    return out;
}

CplxMatrix operator+(CplxMatrix a, const CplxMatrix &b) { return a += b; }
CplxMatrix operator-(CplxMatrix a, const CplxMatrix &b) { return a -= b; }

CplxVec operator*(const CplxMatrix &a, std::span<const Cplx> v)
{
    if (a.cols() != v.size())
        throw Error(Errc::LengthMismatch, "matrix-vector dimensions differ");
    CplxVec out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        Cplx acc{};
        const auto r = a.row(i);
        for (std::size_t j = 0; j < v.size(); ++j)
            acc += r[j] * v[j];
        out[i] = acc;
    }
    return out;
}

// ---- LU -----------------------------------------------------------------

LuDecomposition::LuDecomposition(const CplxMatrix &m) : lu_(m), perm_(m.rows())
{
    if (!m.square() || m.rows() == 0)
        throw Error(Errc::LengthMismatch, "LU requires a non-empty square matrix");

    const std::size_t n = m.rows();
    const double tol = 1e-12 * m.max_abs();
    for (std::size_t i = 0; i < n; ++i)
        perm_[i] = i;

    for (std::size_t k = 0; k < n; ++k)
    {
        std::size_t p = k;
        double best = std::abs(lu_(k, k));
        for (std::size_t r = k + 1; r < n; ++r)
        {
            const double mag = std::abs(lu_(r, k));
            if (mag > best)
            {
                best = mag;
                p = r;
            }
        }
        if (!(best > tol))
            throw Error(Errc::SingularMatrix, "pivot " + std::to_string(best) + " at column " + std::to_string(k));

        if (p != k)
        {
            std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
            std::swap(perm_[k], perm_[p]);
        }

        const Cplx pivot = lu_(k, k);
        const auto pivot_row = lu_.row(k);
        for (std::size_t r = k + 1; r < n; ++r)
        {
            const Cplx f = lu_(r, k) / pivot;
            lu_(r, k) = f;
            if (f == Cplx{})
                continue;
            auto dst = lu_.row(r);
            for (std::size_t c = k + 1; c < n; ++c)
                dst[c] -= f * pivot_row[c];
        }
    }
}

CplxVec LuDecomposition::solve(std::span<const Cplx> b) const
{
    const std::size_t n = size();
    if (b.size() != n)
        throw Error(Errc::LengthMismatch, "right-hand side length differs from matrix size");

    CplxVec x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = b[perm_[i]];
    // forward: L has unit diagonal
    for (std::size_t i = 0; i < n; ++i)
    {
        Cplx acc = x[i];
        const auto r = lu_.row(i);
        for (std::size_t j = 0; j < i; ++j)
            acc -= r[j] * x[j];
        x[i] = acc;
    }
    for (std::size_t i = n; i-- > 0;)
    {
        Cplx acc = x[i];
        const auto r = lu_.row(i);
        for (std::size_t j = i + 1; j < n; ++j)
            acc -= r[j] * x[j];
        x[i] = acc / r[i];
    }
    return x;
}

CplxMatrix LuDecomposition::solve(const CplxMatrix &b) const
{
    const std::size_t n = size();
    if (b.rows() != n)
        throw Error(Errc::LengthMismatch, "right-hand side rows differ from matrix size");

    CplxMatrix x(n, b.cols());
    CplxVec column(n);
    for (std::size_t c = 0; c < b.cols(); ++c)
    {
        for (std::size_t r = 0; r < n; ++r)
            column[r] = b(r, c);
        const CplxVec sol = solve(column);
        for (std::size_t r = 0; r < n; ++r)
            x(r, c) = sol[r];
    }
    return x;
}

CplxMatrix LuDecomposition::inverse() const
{
    return solve(CplxMatrix::identity(size()));
}

CplxMatrix lu_invert(const CplxMatrix &m)
{
    return LuDecomposition(m).inverse();
}

// ---- taps ---------------------------------------------------------------

CplxVec taps_to_freq(std::span<const Tap> taps, std::span<const int> k_indices, std::size_t fft_size)
{
    const auto n = static_cast<long long>(fft_size);
    for (const auto &t : taps)
        if (t.delay < 0 || t.delay >= n)
            throw Error(Errc::DelayOutOfRange, "tap delay " + std::to_string(t.delay) + " outside [0, " +
                                                   std::to_string(fft_size) + ")");

    CplxVec h(k_indices.size());
    for (std::size_t i = 0; i < k_indices.size(); ++i)
    {
        const long long k = k_indices[i];
        if (k < 0 || k >= n)
            throw Error(Errc::DelayOutOfRange, "bin index " + std::to_string(k) + " outside FFT");
        Cplx acc{};
        for (const auto &t : taps)
        {
            // reduce k*d mod N first so the phase argument stays exact
            const long long m = (k * t.delay) % n;
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
            acc += t.gain * Cplx(std::cos(phase), std::sin(phase));
        }
        h[i] = acc;
    }
    return h;
}

// ---- RngStream ----------------------------------------------------------

namespace
{

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id), key_(mix64(mix64(seed + kGolden) ^ (stream_id * 0xd1b54a32d192ed03ULL + 1)))
{
}

std::uint64_t RngStream::key(std::initializer_list<std::uint64_t> parts) noexcept
{
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto p : parts)
        h = mix64(h ^ (p + kGolden + (h << 6) + (h >> 2)));
    return h;
}

std::uint64_t RngStream::next_u64() noexcept
{
    return mix64(key_ + (++counter_) * kGolden);
}

double RngStream::uniform() noexcept
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept
{
    if (n <= 1)
        return 0;
    // rejection keeps the draw unbiased
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do
        v = next_u64();
    while (v >= limit);
    return v % n;
}

std::pair<double, double> RngStream::gaussian_pair() noexcept
{
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

Cplx RngStream::complex_normal(double variance) noexcept
{
    const auto [a, b] = gaussian_pair();
    const double s = std::sqrt(variance / 2.0);
    return {s * a, s * b};
}

} // namespace chanest
