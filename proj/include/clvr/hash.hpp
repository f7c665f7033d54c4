// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace clvr {

using Digest = std::array<std::uint8_t, 32>;

/// BLAKE2b with a 32-byte output.
Digest blake2b_256(std::span<const std::uint8_t> bytes);
Digest blake2b_256(std::string_view text);

/// Lowercase hex.
std::string to_hex(const Digest& digest);
/// Throws clvr::Error on anything but 64 hex characters.
Digest digest_from_hex(std::string_view hex);

}  // namespace clvr
