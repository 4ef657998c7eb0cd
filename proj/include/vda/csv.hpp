// Copyright 2026 The vda Authors.
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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vda::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "".
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field only when it contains a comma, quote or newline.
std::string quote(std::string_view field);

std::string join(const std::vector<std::string>& fields);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by exact header name, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Parses text with a header line. Blank lines are skipped; a trailing CR
/// on each line is dropped. Short rows are padded with empty fields.
Table parse(const std::string& text);
Table read_file(const std::filesystem::path& path);

/// Shortest decimal that round-trips to the same double.
std::string number(double v);
std::string number(const std::optional<double>& v);

/// Parses a number; empty strings give nullopt, garbage throws ValueError.
std::optional<double> parse_number(std::string_view s, std::string_view context);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vda::csv
