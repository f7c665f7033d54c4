// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace clvr::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";

/// Bad flag combinations found after parsing; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  std::optional<std::uint64_t> seed;
  std::string report_path;
  std::string command;
  std::vector<std::string> args;  // argv without the program name and --report
  std::vector<std::pair<std::string, std::string>> inputs;  // path, bytes
  Json results = Json::object();

  /// --seed, else $CLVR_SEED.
  std::optional<std::uint64_t> seed_override() const;
  std::uint64_t resolved_seed() const { return seed_override().value_or(0); }
  /// Reads a file and records it for the report digest.
  std::string read_input(const std::string& path);
  std::string inputs_digest() const;
};

std::string num(double v);
std::vector<double> parse_doubles(const std::string& text);

void register_data_commands(CLI::App& app, Context& ctx);
void register_weight_commands(CLI::App& app, Context& ctx);
void register_analysis_commands(CLI::App& app, Context& ctx);

}  // namespace clvr::cli
