#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskvec/tensorstore.hpp"

namespace taskvec {

enum class Criterion { Fapm, Magnitude, Relative, Wanda, Random };

std::string_view criterion_name(Criterion c);
Criterion criterion_from_name(std::string_view name);  // UsageError

// Per-tensor input-activation column norms consumed by the wanda criterion.
// Always supplied as a file (a checkpoint of 1-D F32 tensors keyed by the
// target tensor's name); collecting them requires model inference and is out
// of scope here.
struct ColumnNorms {
  std::map<std::string, std::vector<double>, std::less<>> norms;
};

ColumnNorms column_norms_from_checkpoint(const Checkpoint& ckpt);
Checkpoint column_norms_to_checkpoint(const ColumnNorms& norms);

// Mean of elementwise absolute values, binary64 accumulation in index order.
double avg_abs(const TensorF64& m);  // EmptyTensor

// Scores are binary64 and never NaN. Zero-denominator sentinel rules:
// delta == 0 scores 0; w_pre == 0 with delta != 0 scores -inf under fapm
// (pruned first) and +inf under relative (kept first).
TensorF64 score_fapm(const TensorF64& delta, const TensorF64& w_pre);
TensorF64 score_magnitude(const TensorF64& delta);
TensorF64 score_relative(const TensorF64& delta, const TensorF64& w_pre);
// S[i][j] = |delta[i][j]| * norms[j]; norms length must equal the flattened
// input dimension (numel / shape[0]).
TensorF64 score_wanda(const TensorF64& delta, std::span<const double> norms);
// Deterministic per-tensor stream: splitmix64 seeded with
// global_seed XOR fnv1a(tensor_name).
TensorF64 score_random(std::span<const std::int64_t> shape, std::uint64_t global_seed,
                       std::string_view tensor_name);

}  // namespace taskvec
