#include "taskvec/criteria.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "taskvec/errors.hpp"
#include "taskvec/rng.hpp"

namespace taskvec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_shape(const TensorF64& delta, const TensorF64& w_pre) {
  if (delta.shape != w_pre.shape)
    raise("ShapeMismatch", "delta and pre-trained matrices have different shapes");
}

}  // namespace

std::string_view criterion_name(Criterion c) {
  switch (c) {
    case Criterion::Fapm:
      return "fapm";
    case Criterion::Magnitude:
      return "magnitude";
    case Criterion::Relative:
      return "relative";
    case Criterion::Wanda:
      return "wanda";
    case Criterion::Random:
      return "random";
  }
  return "fapm";
}

Criterion criterion_from_name(std::string_view name) {
  if (name == "fapm") return Criterion::Fapm;
  if (name == "magnitude") return Criterion::Magnitude;
  if (name == "relative") return Criterion::Relative;
  if (name == "wanda") return Criterion::Wanda;
  if (name == "random") return Criterion::Random;
  raise("UsageError", "unknown criterion \"" + std::string(name) + "\"");
}

ColumnNorms column_norms_from_checkpoint(const Checkpoint& ckpt) {
  ColumnNorms out;
  for (const auto& [name, tensor] : ckpt.tensors()) {
    if (tensor.meta.rank() != 1)
      raise("InvalidNorms", "norms tensor \"" + name + "\" must be 1-D");
    std::vector<double> values = ckpt.widened(name);
    for (double v : values)
      if (!(v >= 0.0) || std::isinf(v))
        raise("InvalidNorms", "norms tensor \"" + name + "\" must be finite and non-negative");
    out.norms.emplace(name, std::move(values));
  }
  return out;
}

Checkpoint column_norms_to_checkpoint(const ColumnNorms& norms) {
  Checkpoint out;
  for (const auto& [name, values] : norms.norms)
    out.add_tensor_f64(name, DType::F32, {std::int64_t(values.size())}, values);
  return out;
}

double avg_abs(const TensorF64& m) {
  if (m.data.empty()) raise("EmptyTensor", "avg_abs of an empty matrix");
  double sum = 0.0;
  for (double v : m.data) sum += std::fabs(v);
  return sum / double(m.data.size());
}

TensorF64 score_fapm(const TensorF64& delta, const TensorF64& w_pre) {
  require_same_shape(delta, w_pre);
  TensorF64 s{delta.shape, std::vector<double>(delta.data.size())};
  if (delta.data.empty()) return s;
  const double avg = avg_abs(w_pre);
  for (std::size_t i = 0; i < delta.data.size(); ++i) {
    const double ad = std::fabs(delta.data[i]);
    if (ad == 0.0) {
      s.data[i] = 0.0;  // |delta| factors both terms
    } else if (w_pre.data[i] == 0.0) {
      s.data[i] = -kInf;  // unbounded relative change: pruned first
    } else {
      s.data[i] = ad - avg * (ad / std::fabs(w_pre.data[i]));
    }
  }
  return s;
}

TensorF64 score_magnitude(const TensorF64& delta) {
  TensorF64 s{delta.shape, std::vector<double>(delta.data.size())};
  for (std::size_t i = 0; i < delta.data.size(); ++i) s.data[i] = std::fabs(delta.data[i]);
  return s;
}

TensorF64 score_relative(const TensorF64& delta, const TensorF64& w_pre) {
  require_same_shape(delta, w_pre);
  TensorF64 s{delta.shape, std::vector<double>(delta.data.size())};
  for (std::size_t i = 0; i < delta.data.size(); ++i) {
    const double ad = std::fabs(delta.data[i]);
    if (ad == 0.0) {
      s.data[i] = 0.0;
    } else if (w_pre.data[i] == 0.0) {
      s.data[i] = kInf;  // unbounded relative change: kept first under this criterion
    } else {
      s.data[i] = ad / std::fabs(w_pre.data[i]);
    }
  }
  return s;
}

TensorF64 score_wanda(const TensorF64& delta, std::span<const double> norms) {
  const std::int64_t cols = delta.cols();
  if (delta.shape.empty() || std::int64_t(norms.size()) != cols)
    raise("NormLengthMismatch", "norms length " + std::to_string(norms.size()) +
                                    " does not match the input dimension " + std::to_string(cols));
  TensorF64 s{delta.shape, std::vector<double>(delta.data.size())};
  for (std::size_t i = 0; i < delta.data.size(); ++i)
    s.data[i] = std::fabs(delta.data[i]) * norms[i % std::size_t(cols)];
  return s;
}

TensorF64 score_random(std::span<const std::int64_t> shape, std::uint64_t global_seed,
                       std::string_view tensor_name) {
  TensorF64 s;
  s.shape.assign(shape.begin(), shape.end());
  s.data.resize(shape_numel(shape));
  SplitMix64 rng{tensor_stream_seed(global_seed, tensor_name)};
  for (double& v : s.data) v = rng.next_unit();
  return s;
}

}  // namespace taskvec
