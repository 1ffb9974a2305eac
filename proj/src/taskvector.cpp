#include "taskvec/taskvector.hpp"

#include <iostream>
#include <sstream>

#include "json.hpp"
#include "taskvec/errors.hpp"

namespace taskvec {

bool glob_match(std::string_view pattern, std::string_view text) {
  // Iterative '*'/'?' matcher with backtracking to the last star.
  std::size_t p = 0, t = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

bool TensorFilter::selects(const TensorMeta& meta) const {
  if (meta.rank() < min_rank) return false;
  if (float_only) {
    // All supported storage dtypes are floating; the knob exists so future
    // integer dtypes stay excluded by default.
    switch (meta.dtype) {
      case DType::F64:
      case DType::F32:
      case DType::F16:
      case DType::BF16:
        break;
    }
  }
  if (!include_globs.empty()) {
    bool matched = false;
    for (const std::string& g : include_globs)
      if (glob_match(g, meta.name)) {
        matched = true;
        break;
      }
    if (!matched) return false;
  }
  for (const std::string& g : exclude_globs)
    if (glob_match(g, meta.name)) return false;
  return true;
}

TaskVector diff(const Checkpoint& ft, const Checkpoint& pre, const TensorFilter& filter) {
  TaskVector tv;
  tv.base_fingerprint = header_fingerprint(pre);

  for (const auto& [name, ft_tensor] : ft.tensors()) {
    if (!filter.selects(ft_tensor.meta)) continue;
    if (!pre.has_tensor(name))
      raise("AlignmentError", "tensor \"" + name + "\" is absent from the base checkpoint");
    const StoredTensor& pre_tensor = pre.tensor(name);
    if (pre_tensor.meta.shape != ft_tensor.meta.shape)
      raise("AlignmentError", "tensor \"" + name + "\" has mismatched shapes");

    TensorF64 delta;
    delta.shape = ft_tensor.meta.shape;
    delta.data.resize(ft_tensor.meta.numel());
    std::vector<double> ft_w = ft.widened(name);
    std::vector<double> pre_w = pre.widened(name);
    for (std::size_t i = 0; i < delta.data.size(); ++i) delta.data[i] = ft_w[i] - pre_w[i];

    tv.source_dtypes.emplace(name, ft_tensor.meta.dtype);
    tv.deltas.emplace(name, std::move(delta));
  }
  // Selected tensors present only in pre are a misalignment, not a silent skip.
  for (const auto& [name, pre_tensor] : pre.tensors()) {
    if (!filter.selects(pre_tensor.meta)) continue;
    if (!ft.has_tensor(name))
      raise("AlignmentError", "tensor \"" + name + "\" is absent from the fine-tuned checkpoint");
  }
  if (tv.deltas.empty()) raise("EmptySelection", "the filter selects no tensors");
  return tv;
}

Checkpoint apply(const Checkpoint& pre, const TaskVector& tv, const ApplyOptions& opts) {
  if (!tv.base_fingerprint.empty() && tv.base_fingerprint != "unspecified") {
    const std::string actual = header_fingerprint(pre);
    if (actual != tv.base_fingerprint) {
      if (opts.strict_fingerprint)
        raise("FingerprintMismatch", "task vector was diffed against base " +
                                         tv.base_fingerprint + ", got " + actual);
      std::ostream& warn = opts.warnings ? *opts.warnings : std::cerr;
      warn << "warning: FingerprintMismatch: task vector base " << tv.base_fingerprint
           << " differs from checkpoint " << actual << "\n";
    }
  }

  for (const auto& [name, delta] : tv.deltas) {
    if (!pre.has_tensor(name))
      raise("AlignmentError", "delta tensor \"" + name + "\" is absent from the base checkpoint");
    if (pre.tensor(name).meta.shape != delta.shape)
      raise("AlignmentError", "delta tensor \"" + name + "\" has mismatched shape");
  }

  Checkpoint out;
  for (const auto& [name, tensor] : pre.tensors()) {
    auto it = tv.deltas.find(name);
    if (it == tv.deltas.end()) {
      out.add_tensor(name, tensor.meta.dtype, tensor.meta.shape, tensor.data);
      continue;
    }
    const TensorF64& delta = it->second;
    std::vector<double> merged = pre.widened(name);
    for (std::size_t i = 0; i < merged.size(); ++i)
      // Skipping the add for exact-zero deltas keeps -0.0 entries bit-stable.
      if (delta.data[i] != 0.0) merged[i] += delta.data[i];
    auto dt_it = tv.source_dtypes.find(name);
    const DType out_dtype = dt_it != tv.source_dtypes.end() ? dt_it->second : tensor.meta.dtype;
    out.add_tensor_f64(name, out_dtype, tensor.meta.shape, merged);
  }
  return out;
}

TaskVector compose_lora(const FactorMap& a_factors, const FactorMap& b_factors, double scale,
                        std::string base_fingerprint) {
  for (const auto& [name, _] : a_factors)
    if (!b_factors.count(name)) raise("MissingPair", "adapter \"" + name + "\" has A but no B");
  for (const auto& [name, _] : b_factors)
    if (!a_factors.count(name)) raise("MissingPair", "adapter \"" + name + "\" has B but no A");

  TaskVector tv;
  tv.base_fingerprint = std::move(base_fingerprint);
  for (const auto& [name, b] : b_factors) {
    const TensorF64& a = a_factors.at(name);
    if (a.shape.size() != 2 || b.shape.size() != 2)
      raise("RankMismatch", "adapter \"" + name + "\" factors must be 2-D");
    const std::int64_t out_dim = b.shape[0], r_b = b.shape[1];
    const std::int64_t r_a = a.shape[0], in_dim = a.shape[1];
    if (r_a != r_b)
      raise("RankMismatch", "adapter \"" + name + "\": B is [" + std::to_string(out_dim) + ", " +
                                std::to_string(r_b) + "] but A is [" + std::to_string(r_a) + ", " +
                                std::to_string(in_dim) + "]");

    TensorF64 delta;
    delta.shape = {out_dim, in_dim};
    delta.data.assign(std::size_t(out_dim) * std::size_t(in_dim), 0.0);
    for (std::int64_t i = 0; i < out_dim; ++i)
      for (std::int64_t j = 0; j < in_dim; ++j) {
        double acc = 0.0;
        for (std::int64_t k = 0; k < r_a; ++k)
          acc += b.data[std::size_t(i * r_b + k)] * a.data[std::size_t(k * in_dim + j)];
        delta.data[std::size_t(i * in_dim + j)] = scale * acc;
      }
    tv.deltas.emplace(name, std::move(delta));
  }
  return tv;
}

Checkpoint taskvector_to_checkpoint(const TaskVector& tv, DType storage) {
  Checkpoint out;
  nlohmann::ordered_json dtypes = nlohmann::ordered_json::object();
  for (const auto& [name, delta] : tv.deltas) {
    out.add_tensor_f64(name, storage, delta.shape, delta.data);
    auto it = tv.source_dtypes.find(name);
    if (it != tv.source_dtypes.end()) dtypes[name] = std::string(dtype_name(it->second));
  }
  out.set_metadata("taskvec.base_fingerprint", tv.base_fingerprint);
  out.set_metadata("taskvec.source_dtypes", dtypes.dump());
  return out;
}

TaskVector taskvector_from_checkpoint(const Checkpoint& ckpt) {
  TaskVector tv;
  tv.base_fingerprint = ckpt.metadata("taskvec.base_fingerprint").value_or("unspecified");
  if (auto dtypes_json = ckpt.metadata("taskvec.source_dtypes")) {
    nlohmann::json dtypes;
    try {
      dtypes = nlohmann::json::parse(*dtypes_json);
    } catch (const nlohmann::json::exception& e) {
      raise("MalformedHeader", std::string("taskvec.source_dtypes is not valid JSON: ") + e.what());
    }
    for (const auto& [name, dt] : dtypes.items())
      tv.source_dtypes.emplace(name, dtype_from_name(dt.get<std::string>()));
  }
  for (const auto& [name, _] : ckpt.tensors()) tv.deltas.emplace(name, ckpt.widened_tensor(name));
  return tv;
}

}  // namespace taskvec
