// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include "clvr/tensor_map.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "clvr/error.hpp"

namespace clvr {

static_assert(std::endian::native == std::endian::little, "container codec assumes a little-endian host");
static_assert(sizeof(float) == 4);

std::size_t element_count(std::span<const std::int64_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw Error("shape_mismatch", "tensor dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<std::int64_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (shape.empty() || element_count(shape) != data.size()) {
    throw Error("shape_mismatch", "data length does not match shape");
  }
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
  const std::size_t n = element_count(shape);
  return Tensor(std::move(shape), std::vector<float>(n, 0.0f));
}

Eigen::Map<const Tensor::RowMajorMatrixXf> Tensor::matrix() const {
  if (!is_matrix()) throw Error("shape_mismatch", "tensor is not 2-D");
  return {data.data(), shape[0], shape[1]};
}

Eigen::Map<Tensor::RowMajorMatrixXf> Tensor::matrix_view(Tensor& t) {
  if (!t.is_matrix()) throw Error("shape_mismatch", "tensor is not 2-D");
  return {t.data.data(), t.shape[0], t.shape[1]};
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(in[static_cast<std::size_t>(i)]);
  return v;
}

}  // namespace

std::string encode_container(const TensorMap& tensors) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    if (t.shape.empty() || element_count(t.shape) != t.data.size()) {
      throw Error("shape_mismatch", "tensor '" + name + "': data length does not match shape");
    }
    const std::uint64_t nbytes = t.data.size() * sizeof(float);
    nlohmann::ordered_json e;
    e["dtype"] = "f32";
    e["shape"] = t.shape;
    e["offset"] = offset;
    e["nbytes"] = nbytes;
    entries[name] = std::move(e);
    offset += nbytes;
  }
  nlohmann::ordered_json header;
  header["tensors"] = std::move(entries);
  const std::string header_text = header.dump();

  std::string out;
  out.reserve(kContainerMagic.size() + 8 + header_text.size() + offset);
  out.append(kContainerMagic);
  put_u64(out, header_text.size());
  out.append(header_text);
  for (const auto& [name, t] : tensors) {
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  }
  return out;
}

TensorMap decode_container(std::string_view bytes) {
  if (bytes.size() < kContainerMagic.size() || bytes.substr(0, kContainerMagic.size()) != kContainerMagic) {
    throw Error("bad_magic", "not a DSWM0001 container (bad magic)");
  }
  if (bytes.size() < 16) throw Error("payload_length", "truncated header length field");
  const std::uint64_t header_len = get_u64(bytes.substr(8, 8));
  if (header_len > bytes.size() - 16) throw Error("payload_length", "header extends past end of file");
  const std::string_view header_text = bytes.substr(16, header_len);
  const std::string_view payload = bytes.substr(16 + header_len);

  // Duplicate keys are legal JSON for the parser but not for the container.
  std::set<std::string> seen;
  std::string duplicate;
  auto cb = [&](int depth, nlohmann::json::parse_event_t event, nlohmann::json& parsed) {
    if (event == nlohmann::json::parse_event_t::key && depth == 2 && parsed.is_string()) {
      if (!seen.insert(parsed.get<std::string>()).second && duplicate.empty()) {
        duplicate = parsed.get<std::string>();
      }
    }
    return true;
  };
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text.begin(), header_text.end(), cb);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed", std::string("container header: ") + e.what());
  }
  if (!duplicate.empty()) throw Error("duplicate_name", "duplicate tensor name '" + duplicate + "'");

  TensorMap out;
  try {
    std::uint64_t expected_offset = 0;
    for (const auto& [name, e] : header.at("tensors").items()) {
      if (e.at("dtype").get<std::string>() != "f32") {
        throw Error("bad_dtype", "tensor '" + name + "': only f32 is supported");
      }
      auto shape = e.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto nbytes = e.at("nbytes").get<std::uint64_t>();
      if (shape.empty()) throw Error("shape_mismatch", "tensor '" + name + "': empty shape");
      const std::size_t n = element_count(shape);
      if (nbytes != n * sizeof(float)) {
        throw Error("shape_mismatch", "tensor '" + name + "': nbytes does not match shape");
      }
      if (offset != expected_offset) {
        throw Error("malformed", "tensor '" + name + "': offsets must be contiguous");
      }
      if (offset + nbytes > payload.size()) {
        throw Error("payload_length", "tensor '" + name + "': payload length too short");
      }
      std::vector<float> data(n);
      std::memcpy(data.data(), payload.data() + offset, nbytes);
      out.emplace(name, Tensor(std::move(shape), std::move(data)));
      expected_offset = offset + nbytes;
    }
    if (expected_offset != payload.size()) {
      throw Error("payload_length", "payload length " + std::to_string(payload.size()) +
                                        " does not match header total " + std::to_string(expected_offset));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed", std::string("container header: ") + e.what());
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("io", "write failed for '" + path.string() + "'");
}

TensorMap load_checkpoint(const std::filesystem::path& path) { return decode_container(read_file(path)); }

void save_checkpoint(const TensorMap& tensors, const std::filesystem::path& path) {
  write_file(path, encode_container(tensors));
}

}  // namespace clvr
