// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace clvr {

/// Domain error raised by library operations. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  /// Short machine-readable tag, e.g. "out_of_range" or "payload_length".
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace clvr
