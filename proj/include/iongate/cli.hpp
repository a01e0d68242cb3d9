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
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace iongate::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPhysics = 3;

std::vector<std::string> subcommands();

/// Complete configuration for `subcommand` with every key at its default.
nlohmann::json default_config(const std::string &subcommand);

/// Applies "a.b.c=value"; value is parsed as JSON when possible, else kept as a string.
void apply_override(nlohmann::json &config, const std::string &assignment);

/// Recursively merges `user` into `base`; throws ConfigError on type clashes.
void merge_config(nlohmann::json &base, const nlohmann::json &user, const std::string &path = "");

struct RunOutcome {
    int exit_code = kExitOk;
    nlohmann::json summary;
};

/*
 * Runs one subcommand with a fully merged configuration and writes
 * config.snapshot.json, run.json and CSV artifacts into `out_dir`.
 * ConfigError and PhysicsError propagate to the caller.
 */
RunOutcome run(const std::string &subcommand, const nlohmann::json &config, const std::filesystem::path &out_dir,
               std::ostream &log);

/// Command-line entry point; returns the process exit code.
int main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace iongate::cli
