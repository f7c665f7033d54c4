// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include "clvr/merge.hpp"

#include <cmath>

#include "clvr/error.hpp"

namespace clvr {

namespace {

void require_same_shape(const std::string& name, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw Error("shape_mismatch", "tensor '" + name + "': shape mismatch");
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size() && i < 8; ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  if (names.size() > 8) out += ", ...";
  return out;
}

double squared_norm(const Tensor& t) {
  double acc = 0.0;
  for (float v : t.data) acc += static_cast<double>(v) * static_cast<double>(v);
  return acc;
}

}  // namespace

KeyDiff diff_keys(const TensorMap& first, const TensorMap& second) {
  KeyDiff d;
  for (const auto& [k, v] : first) {
    if (!second.count(k)) d.only_in_first.push_back(k);
  }
  for (const auto& [k, v] : second) {
    if (!first.count(k)) d.only_in_second.push_back(k);
  }
  return d;
}

TensorMap delta(const TensorMap& ckpt, const TensorMap& base, MatchMode mode, KeyDiff* skipped) {
  const KeyDiff diff = diff_keys(ckpt, base);
  if (mode == MatchMode::strict && !diff.empty()) {
    std::string msg = "key sets differ;";
    if (!diff.only_in_first.empty()) msg += " only in checkpoint: " + join_names(diff.only_in_first) + ";";
    if (!diff.only_in_second.empty()) msg += " only in base: " + join_names(diff.only_in_second) + ";";
    throw Error("key_mismatch", msg);
  }
  if (skipped) *skipped = diff;
  TensorMap out;
  for (const auto& [name, c] : ckpt) {
    auto it = base.find(name);
    if (it == base.end()) continue;
    require_same_shape(name, c, it->second);
    Tensor d = Tensor::zeros(c.shape);
    for (std::size_t i = 0; i < c.data.size(); ++i) d.data[i] = c.data[i] - it->second.data[i];
    out.emplace(name, std::move(d));
  }
  return out;
}

MergeResult apply_merge(const TensorMap& base, const std::vector<TensorMap>& deltas, const MergeOptions& options) {
  MergeResult result;
  for (std::size_t di = 0; di < deltas.size(); ++di) {
    for (const auto& [name, d] : deltas[di]) {
      auto it = base.find(name);
      if (it == base.end()) {
        if (options.mode == MatchMode::strict) {
          throw Error("key_mismatch", "delta " + std::to_string(di) + " key '" + name + "' absent from base");
        }
        result.skipped_delta_keys.push_back(name);
        continue;
      }
      require_same_shape(name, it->second, d);
    }
  }

  for (const auto& [name, b] : base) {
    if (options.name_filter && !std::regex_search(name, *options.name_filter)) {
      result.fused.emplace(name, b);
      result.filtered_keys.push_back(name);
      continue;
    }
    std::vector<const Tensor*> parts;
    bool zero_filled = false;
    for (const auto& d : deltas) {
      auto it = d.find(name);
      if (it == d.end()) {
        zero_filled = true;
      } else {
        parts.push_back(&it->second);
      }
    }
    if (zero_filled) result.zero_filled_keys.push_back(name);
    Tensor fused = Tensor::zeros(b.shape);
    for (std::size_t i = 0; i < b.data.size(); ++i) {
      double acc = b.data[i];
      for (const Tensor* p : parts) acc += p->data[i];
      fused.data[i] = static_cast<float>(acc);
    }
    result.fused.emplace(name, std::move(fused));
  }
  return result;
}

TensorMap expand_lora(const LoraAdapter& adapter, const std::optional<std::vector<std::int64_t>>& expected_shape) {
  if (adapter.rank < 1) throw Error("lora_dims", "rank must be positive");
  if (!(adapter.alpha > 0.0)) throw Error("lora_dims", "alpha must be positive");
  if (!adapter.a.is_matrix() || !adapter.b.is_matrix()) throw Error("lora_dims", "A and B must be 2-D");
  const auto a = adapter.a.matrix();
  const auto b = adapter.b.matrix();
  if (a.rows() != adapter.rank || b.cols() != adapter.rank) {
    throw Error("lora_dims", "A must be r x n and B m x r with r = " + std::to_string(adapter.rank));
  }
  if (expected_shape && *expected_shape != std::vector<std::int64_t>{b.rows(), a.cols()}) {
    throw Error("lora_dims", "B*A shape does not match target tensor '" + adapter.target + "'");
  }
  const double scale = adapter.alpha / static_cast<double>(adapter.rank);
  const Eigen::MatrixXd product = scale * (b.cast<double>() * a.cast<double>());
  TensorMap out;
  out.emplace(adapter.target, Tensor::from_matrix(product));
  return out;
}

LoraAdapter lora_from_container(const TensorMap& tensors, const std::string& target, double alpha, int rank) {
  auto find = [&](const std::string& suffix) -> const Tensor& {
    if (auto it = tensors.find(target + "." + suffix); it != tensors.end()) return it->second;
    if (auto it = tensors.find(suffix); it != tensors.end()) return it->second;
    throw Error("lora_dims", "adapter lacks '" + target + "." + suffix + "' and '" + suffix + "'");
  };
  LoraAdapter adapter;
  adapter.target = target;
  adapter.a = find("lora_A");
  adapter.b = find("lora_B");
  adapter.alpha = alpha;
  adapter.rank = rank;
  return adapter;
}

double frobenius_norm(const Tensor& t) { return std::sqrt(squared_norm(t)); }

double relative_frobenius(const TensorMap& reference, const TensorMap& other) {
  const KeyDiff diff = diff_keys(reference, other);
  if (!diff.empty()) throw Error("key_mismatch", "reference and other must share keys");
  double num = 0.0;
  double den = 0.0;
  for (const auto& [name, r] : reference) {
    const Tensor& o = other.at(name);
    require_same_shape(name, r, o);
    for (std::size_t i = 0; i < r.data.size(); ++i) {
      const double d = static_cast<double>(o.data[i]) - static_cast<double>(r.data[i]);
      num += d * d;
    }
    den += squared_norm(r);
  }
  if (den == 0.0) throw Error("zero_reference", "reference has zero Frobenius norm");
  return std::sqrt(num) / std::sqrt(den);
}

std::optional<double> MergeReport::recompute_global() const {
  double num = 0.0;
  double den = 0.0;
  for (const auto& [name, s] : per_tensor) {
    num += s.delta_frobenius * s.delta_frobenius;
    den += s.base_frobenius * s.base_frobenius;
  }
  if (den == 0.0) return std::nullopt;
  return std::sqrt(num / den);
}

MergeReport merge_report(const TensorMap& base, const TensorMap& delta_map) {
  MergeReport report;
  const KeyDiff diff = diff_keys(base, delta_map);
  report.missing_in_delta = diff.only_in_first;
  report.missing_in_base = diff.only_in_second;
  double num = 0.0;
  double den = 0.0;
  for (const auto& [name, d] : delta_map) {
    auto it = base.find(name);
    if (it == base.end()) continue;
    require_same_shape(name, it->second, d);
    const double dn = squared_norm(d);
    const double bn = squared_norm(it->second);
    report.per_tensor[name] = {std::sqrt(dn), std::sqrt(bn)};
    num += dn;
    den += bn;
  }
  if (den > 0.0) report.global_relative_shift = std::sqrt(num) / std::sqrt(den);
  return report;
}

}  // namespace clvr
