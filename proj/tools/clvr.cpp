// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "cli_common.hpp"
#include "clvr/error.hpp"
#include "clvr/hash.hpp"
#include "clvr/tensor_map.hpp"

namespace clvr::cli {

std::optional<std::uint64_t> Context::seed_override() const {
  if (seed) return *seed;
  if (const char* env = std::getenv("CLVR_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("CLVR_SEED is not an unsigned integer: ") + env);
  }
  return std::nullopt;
}

std::string Context::read_input(const std::string& path) {
  std::string bytes = read_file(path);
  inputs.emplace_back(path, bytes);
  return bytes;
}

std::string Context::inputs_digest() const {
  std::string buf;
  for (const auto& a : args) {
    buf += a;
    buf.push_back('\0');
  }
  for (const auto& [path, bytes] : inputs) {
    buf += path;
    buf.push_back('\0');
    buf += std::to_string(bytes.size());
    buf.push_back('\0');
    buf += bytes;
  }
  return to_hex(blake2b_256(buf));
}

std::string num(double v) {
  char out[64];
  std::snprintf(out, sizeof out, "%.10g", v);
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError("not a number list: '" + text + "'");
    }
  }
  return out;
}

}  // namespace clvr::cli

int main(int argc, char** argv) {
  using namespace clvr::cli;
  Context ctx;
  CLI::App app{"Closed-loop visual reasoning toolkit: data synthesis, merging, probes and statistics", "clvr"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.add_option("--seed", ctx.seed, "Master seed (default: $CLVR_SEED, else 0)");
  app.add_option("--report", ctx.report_path, "Write a JSON report to this path");

  register_data_commands(app, ctx);
  register_weight_commands(app, ctx);
  register_analysis_commands(app, ctx);
  auto fall = [](auto& self, CLI::App* parent) -> void {
    for (auto* sub : parent->get_subcommands({})) {
      sub->fallthrough();
      self(self, sub);
    }
  };
  fall(fall, &app);

  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--report") {
      ++i;
      continue;
    }
    if (a.rfind("--report=", 0) == 0) continue;
    ctx.args.push_back(a);
  }

  try {
    app.parse(argc, argv);
    if (!ctx.report_path.empty()) {
      Json report;
      report["tool_version"] = kToolVersion;
      report["command"] = ctx.command;
      report["inputs_digest"] = ctx.inputs_digest();
      report["results"] = ctx.results;
      clvr::write_file(ctx.report_path, report.dump(2) + "\n");
    }
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "clvr: error: usage: " << e.what() << " (see --help)\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "clvr: error: usage: " << e.what() << "\n";
    return 2;
  } catch (const clvr::Error& e) {
    std::cerr << "clvr: error: " << (e.code().empty() ? "domain" : e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "clvr: error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
