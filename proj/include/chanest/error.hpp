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

#ifndef CHANEST_ERROR_HPP
#define CHANEST_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace chanest
{

enum class Errc
{
    DivisionByZero,
    DelayOutOfRange,
    SingularMatrix,
    BadSequenceLength,
    NonBpskEntry,
    BitCountMismatch,
    LengthMismatch,
    ZeroPreambleEntry,
    WidthMismatch,
    ZeroReference,
    EmptyDataset,
    FormatVersionMismatch,
    ShapeInconsistency,
    CorruptFile,
    IoError,
    BadConfig,
    MissingModel,
    MissingRh,
    DuplicateId,
    NoCandidate,
};

std::string_view errc_name(Errc code) noexcept;

// Every library failure is reported as an Error carrying a machine-readable code.
class Error : public std::runtime_error
{
  public:
    Error(Errc code, const std::string &what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

} // namespace chanest

#endif
