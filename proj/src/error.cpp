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


#include "chanest/error.hpp"

namespace chanest
{

std::string_view errc_name(Errc code) noexcept
{
    switch (code)
    {
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::DelayOutOfRange: return "DelayOutOfRange";
    case Errc::SingularMatrix: return "SingularMatrix";
    case Errc::BadSequenceLength: return "BadSequenceLength";
    case Errc::NonBpskEntry: return "NonBpskEntry";
    case Errc::BitCountMismatch: return "BitCountMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ZeroPreambleEntry: return "ZeroPreambleEntry";
    case Errc::WidthMismatch: return "WidthMismatch";
    case Errc::ZeroReference: return "ZeroReference";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::FormatVersionMismatch: return "FormatVersionMismatch";
    case Errc::ShapeInconsistency: return "ShapeInconsistency";
    case Errc::CorruptFile: return "CorruptFile";
    case Errc::IoError: return "IoError";
    case Errc::BadConfig: return "BadConfig";
    case Errc::MissingModel: return "MissingModel";
    case Errc::MissingRh: return "MissingRh";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::NoCandidate: return "NoCandidate";
    }
    return "Unknown";
}

} // namespace chanest
