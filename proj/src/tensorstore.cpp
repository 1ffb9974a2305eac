#include "taskvec/tensorstore.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "taskvec/errors.hpp"
#include "taskvec/rng.hpp"

namespace taskvec {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kMaxHeaderBytes = 1ull << 31;

char hex_digit(std::uint64_t v) { return "0123456789abcdef"[v & 0xF]; }

std::string to_hex(std::uint64_t v) {
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[std::size_t(i)] = hex_digit(v);
  return s;
}

}  // namespace

std::int64_t TensorF64::cols() const {
  if (shape.empty() || shape[0] == 0) return 0;
  return std::int64_t(data.size()) / shape[0];
}

std::size_t shape_numel(std::span<const std::int64_t> shape) {
  std::size_t n = 1;
  for (std::int64_t d : shape) {
    if (d < 0) raise("InvariantViolation", "negative dimension");
    n *= std::size_t(d);
  }
  return n;
}

void Checkpoint::add_tensor(std::string name, DType dtype, std::vector<std::int64_t> shape,
                            std::vector<std::byte> data) {
  TensorMeta meta;
  meta.name = name;
  meta.dtype = dtype;
  meta.shape = std::move(shape);
  if (data.size() != meta.nbytes())
    raise("InvariantViolation", "tensor \"" + name + "\": buffer has " +
                                    std::to_string(data.size()) + " bytes, metadata implies " +
                                    std::to_string(meta.nbytes()));
  if (tensors_.count(name))
    raise("InvariantViolation", "duplicate tensor \"" + name + "\"");
  tensors_.emplace(std::move(name), StoredTensor{std::move(meta), std::move(data)});
}

void Checkpoint::add_tensor_f64(std::string name, DType dtype, std::vector<std::int64_t> shape,
                                std::span<const double> values) {
  if (values.size() != shape_numel(shape))
    raise("InvariantViolation", "tensor \"" + name + "\": value count mismatches shape");
  std::vector<std::byte> data(values.size() * element_size(dtype));
  narrow_buffer(values, dtype, data);
  add_tensor(std::move(name), dtype, std::move(shape), std::move(data));
}

bool Checkpoint::has_tensor(std::string_view name) const {
  return tensors_.find(name) != tensors_.end();
}

const StoredTensor& Checkpoint::tensor(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) raise("MissingTensor", "no tensor named \"" + std::string(name) + "\"");
  return it->second;
}

std::vector<double> Checkpoint::widened(std::string_view name) const {
  const StoredTensor& t = tensor(name);
  std::vector<double> out(t.meta.numel());
  widen_buffer(t.data, t.meta.dtype, out);
  return out;
}

TensorF64 Checkpoint::widened_tensor(std::string_view name) const {
  const StoredTensor& t = tensor(name);
  return TensorF64{t.meta.shape, widened(name)};
}

std::vector<std::string> Checkpoint::tensor_names() const {
  std::vector<std::string> names;
  names.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) names.push_back(name);
  return names;
}

void Checkpoint::set_metadata(std::string key, std::string value) {
  metadata_[std::move(key)] = std::move(value);
}

std::optional<std::string> Checkpoint::metadata(std::string_view key) const {
  auto it = metadata_.find(std::string(key));
  if (it == metadata_.end()) return std::nullopt;
  return it->second;
}

std::string header_json(const Checkpoint& ckpt) {
  ordered_json header = ordered_json::object();
  if (!ckpt.user_metadata().empty()) {
    ordered_json meta = ordered_json::object();
    for (const auto& [k, v] : ckpt.user_metadata()) meta[k] = v;
    header["__metadata__"] = std::move(meta);
  }
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors()) {
    ordered_json entry = ordered_json::object();
    entry["dtype"] = std::string(dtype_name(t.meta.dtype));
    entry["shape"] = t.meta.shape;
    const std::uint64_t end = offset + t.data.size();
    entry["data_offsets"] = {offset, end};
    header[name] = std::move(entry);
    offset = end;
  }
  return header.dump();
}

std::string header_fingerprint(const Checkpoint& ckpt) {
  return to_hex(fnv1a64(header_json(ckpt)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) raise("IoError", "cannot open \"" + path.string() + "\" for reading");

  file.seekg(0, std::ios::end);
  const std::uint64_t file_size = std::uint64_t(file.tellg());
  file.seekg(0);

  if (file_size < 8) raise("MalformedHeader", "file shorter than the 8-byte header length");
  std::uint64_t header_len = 0;
  file.read(reinterpret_cast<char*>(&header_len), 8);
  if (!file) raise("IoError", "failed reading header length");
  if (header_len == 0) raise("MalformedHeader", "declared header length is zero");
  if (header_len > file_size - 8 || header_len > kMaxHeaderBytes)
    raise("MalformedHeader", "declared header length " + std::to_string(header_len) +
                                 " exceeds the file");

  std::string header_text(header_len, '\0');
  file.read(header_text.data(), std::streamsize(header_len));
  if (!file) raise("IoError", "failed reading header");

  ordered_json header;
  try {
    header = ordered_json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    raise("MalformedHeader", std::string("header is not valid JSON: ") + e.what());
  }
  if (!header.is_object()) raise("MalformedHeader", "header is not a JSON object");

  Checkpoint ckpt;
  struct Pending {
    TensorMeta meta;
  };
  std::vector<Pending> pending;

  for (const auto& [key, value] : header.items()) {
    if (key == "__metadata__") {
      if (!value.is_object()) raise("MalformedHeader", "__metadata__ is not an object");
      for (const auto& [mk, mv] : value.items()) {
        if (!mv.is_string()) raise("MalformedHeader", "__metadata__ values must be strings");
        ckpt.set_metadata(mk, mv.get<std::string>());
      }
      continue;
    }
    if (!value.is_object()) raise("MalformedHeader", "tensor entry \"" + key + "\" is not an object");
    if (!value.contains("dtype") || !value["dtype"].is_string())
      raise("MalformedHeader", "tensor \"" + key + "\" lacks a dtype string");
    if (!value.contains("shape") || !value["shape"].is_array())
      raise("MalformedHeader", "tensor \"" + key + "\" lacks a shape array");
    if (!value.contains("data_offsets") || !value["data_offsets"].is_array() ||
        value["data_offsets"].size() != 2)
      raise("MalformedHeader", "tensor \"" + key + "\" lacks a [begin, end) offset pair");

    TensorMeta meta;
    meta.name = key;
    meta.dtype = dtype_from_name(value["dtype"].get<std::string>());
    for (const auto& d : value["shape"]) {
      if (!d.is_number_integer() && !d.is_number_unsigned())
        raise("MalformedHeader", "tensor \"" + key + "\" has a non-integer dimension");
      const std::int64_t dim = d.get<std::int64_t>();
      if (dim < 0) raise("MalformedHeader", "tensor \"" + key + "\" has a negative dimension");
      meta.shape.push_back(dim);
    }
    const auto& offs = value["data_offsets"];
    if (!offs[0].is_number_unsigned() && !offs[0].is_number_integer())
      raise("MalformedHeader", "tensor \"" + key + "\" has non-integer offsets");
    meta.data_begin = offs[0].get<std::uint64_t>();
    meta.data_end = offs[1].get<std::uint64_t>();
    if (meta.data_end < meta.data_begin)
      raise("MalformedHeader", "tensor \"" + key + "\" has end < begin");
    if (meta.data_end - meta.data_begin != meta.nbytes())
      raise("MalformedHeader", "tensor \"" + key + "\" byte range disagrees with dtype x shape");
    pending.push_back({std::move(meta)});
  }

  // Non-empty ranges of distinct tensors must not overlap.
  {
    std::vector<const TensorMeta*> ranges;
    for (const Pending& p : pending)
      if (p.meta.data_end > p.meta.data_begin) ranges.push_back(&p.meta);
    std::sort(ranges.begin(), ranges.end(), [](const TensorMeta* a, const TensorMeta* b) {
      return a->data_begin < b->data_begin;
    });
    for (std::size_t i = 1; i < ranges.size(); ++i)
      if (ranges[i]->data_begin < ranges[i - 1]->data_end)
        raise("OffsetOverlap", "tensors \"" + ranges[i - 1]->name + "\" and \"" +
                                   ranges[i]->name + "\" declare overlapping data ranges");
  }

  const std::uint64_t data_size = file_size - 8 - header_len;
  for (const Pending& p : pending)
    if (p.meta.data_end > data_size)
      raise("TruncatedData", "tensor \"" + p.meta.name + "\" extends to byte " +
                                 std::to_string(p.meta.data_end) + " but the data region has " +
                                 std::to_string(data_size));

  // Header validated; stream tensor payloads one at a time.
  for (Pending& p : pending) {
    std::vector<std::byte> data(p.meta.nbytes());
    if (!data.empty()) {
      file.seekg(std::streamoff(8 + header_len + p.meta.data_begin));
      file.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size()));
      if (!file) raise("IoError", "failed reading tensor \"" + p.meta.name + "\"");
    }
    ckpt.add_tensor(p.meta.name, p.meta.dtype, p.meta.shape, std::move(data));
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  for (const auto& [name, t] : ckpt.tensors())
    if (t.data.size() != t.meta.nbytes())
      raise("InvariantViolation", "tensor \"" + name + "\" buffer length mismatches its metadata");

  const std::string header = header_json(ckpt);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) raise("IoError", "cannot open \"" + path.string() + "\" for writing");

  const std::uint64_t header_len = header.size();
  file.write(reinterpret_cast<const char*>(&header_len), 8);
  file.write(header.data(), std::streamsize(header.size()));
  for (const auto& [name, t] : ckpt.tensors())
    if (!t.data.empty())
      file.write(reinterpret_cast<const char*>(t.data.data()), std::streamsize(t.data.size()));
  file.flush();
  if (!file) raise("IoError", "failed writing \"" + path.string() + "\"");
}

}  // namespace taskvec
