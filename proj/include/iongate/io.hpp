// Copyright 2026 The iongate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace iongate::io {

/// Locale-independent "%.15g".
std::string fmt(double x);

/// Simple CSV table: header plus numeric rows.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(const std::vector<double> &values);
    std::string str() const { return out_; }

private:
    std::size_t width_;
    std::string out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const;
};

/// Parse a numeric CSV with a header line. Blank lines and lines starting
/// with '#' are skipped.
CsvTable parse_csv(const std::string &text);

std::string read_file(const std::filesystem::path &p);
void write_file(const std::filesystem::path &p, const std::string &content);

/// Throws ConfigError if `j` is not an object or has a key outside `allowed`.
void check_keys(const nlohmann::json &j, std::initializer_list<const char *> allowed, const char *what);

}  // namespace iongate::io
