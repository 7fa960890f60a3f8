// Copyright 2026 The spap Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <spap/core.hpp>
#include <spap/pipeline.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spap {

/*
 * Weight container layout, all integers little-endian:
 *
 *      "SPAPWT01"                       8 bytes magic
 *      u32 entry count
 *      per entry:
 *          u32 name length, UTF-8 name bytes
 *          u32 rows, u32 cols
 *          rows*cols IEEE-754 binary64 values, row-major
 */
inline constexpr std::string_view container_magic = "SPAPWT01";

struct NamedMatrix
{
    std::string name;
    MatrixXd value;
};

std::string encode_container(const std::vector<NamedMatrix>& entries);
std::vector<NamedMatrix> decode_container(std::string_view bytes);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

void write_container(const std::filesystem::path& path, const std::vector<NamedMatrix>& entries);
std::vector<NamedMatrix> read_container(const std::filesystem::path& path);

const NamedMatrix* find_entry(const std::vector<NamedMatrix>& entries, std::string_view name);

/// Entries "layers.<i>.up", "layers.<i>.gate", "layers.<i>.down".
std::vector<NamedMatrix> model_to_entries(const ToyModel& model);
ToyModel model_from_entries(const std::vector<NamedMatrix>& entries, bool residual);

}  // namespace spap
