// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// Delta-space weight merging: task deltas against a shared base, fused
// model construction W_base + sum(deltas), LoRA increments and the global
// relative Frobenius shift.

#pragma once

#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "clvr/tensor_map.hpp"

namespace clvr {

enum class MatchMode { strict, lenient };

/// Names present on one side only.
struct KeyDiff {
  std::vector<std::string> only_in_first;
  std::vector<std::string> only_in_second;
  bool empty() const { return only_in_first.empty() && only_in_second.empty(); }
};

KeyDiff diff_keys(const TensorMap& first, const TensorMap& second);

/// Elementwise ckpt - base. Strict mode requires identical key sets; lenient
/// mode works on the shared keys and lists the rest in `skipped`.
TensorMap delta(const TensorMap& ckpt, const TensorMap& base, MatchMode mode = MatchMode::strict,
                KeyDiff* skipped = nullptr);

struct MergeOptions {
  MatchMode mode = MatchMode::strict;
  /// When set, only base tensors whose names match are updated.
  std::optional<std::regex> name_filter;
};

struct MergeResult {
  TensorMap fused;
  /// Delta keys with no counterpart in the base (lenient mode only).
  std::vector<std::string> skipped_delta_keys;
  /// Base keys that some delta does not carry (treated as zero).
  std::vector<std::string> zero_filled_keys;
  /// Base keys excluded by the name filter.
  std::vector<std::string> filtered_keys;
};

/// W_fused = W_base + sum_i delta_i. Each element accumulates in double,
/// deltas in argument order, and is rounded to f32 once.
MergeResult apply_merge(const TensorMap& base, const std::vector<TensorMap>& deltas,
                        const MergeOptions& options = {});

struct LoraAdapter {
  std::string target;
  Tensor a;  // r x n
  Tensor b;  // m x r
  double alpha = 1.0;
  int rank = 1;
};

/// {target: (alpha / rank) * B * A}. If `expected_shape` is given, (m, n)
/// must equal it.
TensorMap expand_lora(const LoraAdapter& adapter,
                      const std::optional<std::vector<std::int64_t>>& expected_shape = std::nullopt);

/// Reads "<target>.lora_A"/"<target>.lora_B", falling back to
/// "lora_A"/"lora_B".
LoraAdapter lora_from_container(const TensorMap& tensors, const std::string& target, double alpha, int rank);

/// sqrt(sum ||other - reference||_F^2) / sqrt(sum ||reference||_F^2) over
/// all tensors. Requires identical keys and shapes; throws
/// clvr::Error("zero_reference") on a zero reference.
double relative_frobenius(const TensorMap& reference, const TensorMap& other);

double frobenius_norm(const Tensor& t);

struct TensorShift {
  double delta_frobenius = 0.0;
  double base_frobenius = 0.0;
};

struct MergeReport {
  std::map<std::string, TensorShift> per_tensor;
  /// nullopt when the shared base has zero norm.
  std::optional<double> global_relative_shift;
  std::vector<std::string> missing_in_base;
  std::vector<std::string> missing_in_delta;

  /// Global shift recomputed from the per-tensor entries.
  std::optional<double> recompute_global() const;
};

MergeReport merge_report(const TensorMap& base, const TensorMap& delta);

}  // namespace clvr
