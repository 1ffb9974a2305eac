#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskvec/dtype.hpp"

namespace taskvec {

// Dense row-major tensor of binary64 values; the working representation for
// all delta and score arithmetic.
struct TensorF64 {
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  std::size_t numel() const { return data.size(); }
  std::int64_t rows() const { return shape.empty() ? 0 : shape[0]; }
  // Product of the trailing axes; equals the input dimension for 2-D weights.
  std::int64_t cols() const;
};

std::size_t shape_numel(std::span<const std::int64_t> shape);

struct TensorMeta {
  std::string name;
  DType dtype = DType::F32;
  std::vector<std::int64_t> shape;
  // Byte range into the file's data region; populated on load, recomputed on save.
  std::uint64_t data_begin = 0;
  std::uint64_t data_end = 0;

  std::size_t numel() const { return shape_numel(shape); }
  std::size_t nbytes() const { return numel() * element_size(dtype); }
  int rank() const { return int(shape.size()); }
};

struct StoredTensor {
  TensorMeta meta;
  std::vector<std::byte> data;
};

// Ordered collection of named tensors; iteration is ascending by name.
// Treated as immutable once fully constructed, so sharing read-only across
// threads is safe.
class Checkpoint {
 public:
  using TensorMap = std::map<std::string, StoredTensor, std::less<>>;

  void add_tensor(std::string name, DType dtype, std::vector<std::int64_t> shape,
                  std::vector<std::byte> data);
  void add_tensor_f64(std::string name, DType dtype, std::vector<std::int64_t> shape,
                      std::span<const double> values);

  bool has_tensor(std::string_view name) const;
  const StoredTensor& tensor(std::string_view name) const;
  std::vector<double> widened(std::string_view name) const;
  TensorF64 widened_tensor(std::string_view name) const;

  std::size_t tensor_count() const { return tensors_.size(); }
  const TensorMap& tensors() const { return tensors_; }
  std::vector<std::string> tensor_names() const;

  void set_metadata(std::string key, std::string value);
  std::optional<std::string> metadata(std::string_view key) const;
  const std::map<std::string, std::string>& user_metadata() const { return metadata_; }

 private:
  TensorMap tensors_;
  std::map<std::string, std::string> metadata_;
};

// Container layout: 8-byte little-endian unsigned header length N, N bytes of
// JSON (tensor name -> {dtype, shape, data_offsets}, plus optional
// "__metadata__" string map), then the raw little-endian data region.
Checkpoint load_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Canonical header JSON: the exact bytes save_checkpoint writes.
std::string header_json(const Checkpoint& ckpt);
// FNV-1a64 of the canonical header as a 16-digit hex string.
std::string header_fingerprint(const Checkpoint& ckpt);

}  // namespace taskvec
