// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace clvr {

/// Dense f32 tensor in row-major order.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::int64_t> shape_, std::vector<float> data_);

  static Tensor zeros(std::vector<std::int64_t> shape);
  static Tensor scalar(float value) { return Tensor({1}, {value}); }
  template <typename Derived>
  static Tensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
    Tensor t = zeros({m.rows(), m.cols()});
    matrix_view(t) = m.template cast<float>();
    return t;
  }

  std::size_t numel() const { return data.size(); }
  bool is_matrix() const { return shape.size() == 2; }

  using RowMajorMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  /// 2-D view; throws unless the tensor is a matrix.
  Eigen::Map<const RowMajorMatrixXf> matrix() const;
  static Eigen::Map<RowMajorMatrixXf> matrix_view(Tensor& t);

  bool operator==(const Tensor&) const = default;
};

/// Product of dimensions; throws on a non-positive dimension.
std::size_t element_count(std::span<const std::int64_t> shape);

/// Named tensors, iterated in lexicographic name order.
using TensorMap = std::map<std::string, Tensor>;

// --- DSWM0001 container ---------------------------------------------------------

inline constexpr std::string_view kContainerMagic = "DSWM0001";

/// Layout: 8-byte magic | u64 LE header length | compact UTF-8 JSON header
/// {"tensors":{name:{"dtype":"f32","shape":[...],"offset":u64,"nbytes":u64}}}
/// with sorted names and contiguous offsets | LE binary32 payload.
std::string encode_container(const TensorMap& tensors);
/// Throws clvr::Error with code bad_magic, payload_length, shape_mismatch,
/// duplicate_name, bad_dtype or malformed.
TensorMap decode_container(std::string_view bytes);

TensorMap load_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const TensorMap& tensors, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace clvr
