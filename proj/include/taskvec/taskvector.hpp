#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "taskvec/tensorstore.hpp"

namespace taskvec {

// Glob with '*' (any run) and '?' (single char), matched against the full name.
bool glob_match(std::string_view pattern, std::string_view text);

// Selects which tensors take part in task-vector arithmetic. A tensor is
// selected iff it matches include (empty list = match all), matches no
// exclude, has rank >= min_rank, and has a floating dtype when float_only.
struct TensorFilter {
  std::vector<std::string> include_globs;
  std::vector<std::string> exclude_globs;
  int min_rank = 2;
  bool float_only = true;

  bool selects(const TensorMeta& meta) const;
};

// Checkpoint-shaped delta tagged with the identity of its base.
struct TaskVector {
  std::map<std::string, TensorF64, std::less<>> deltas;
  std::string base_fingerprint;
  std::map<std::string, DType, std::less<>> source_dtypes;
};

// deltas[name] = widen(ft[name]) - widen(pre[name]), binary64.
TaskVector diff(const Checkpoint& ft, const Checkpoint& pre, const TensorFilter& filter = {});

struct ApplyOptions {
  // Fingerprint mismatch is a warning by default: chained merges legitimately
  // apply a delta to a base other than the one it was diffed against.
  bool strict_fingerprint = false;
  std::ostream* warnings = nullptr;  // nullptr -> std::cerr
};

// Adds deltas onto pre in binary64 and casts each tensor back to its source
// dtype. Tensors without a delta are copied from pre bit-exactly.
Checkpoint apply(const Checkpoint& pre, const TaskVector& tv, const ApplyOptions& opts = {});

using FactorMap = std::map<std::string, TensorF64, std::less<>>;

// deltas[name] = scale * (B . A), binary64 row-by-column accumulation.
// B is [out, r], A is [r, in].
TaskVector compose_lora(const FactorMap& a_factors, const FactorMap& b_factors, double scale,
                        std::string base_fingerprint = "unspecified");

// Task vectors persist as ordinary checkpoints (F32 by default) with
// user_metadata keys "taskvec.base_fingerprint" and "taskvec.source_dtypes".
Checkpoint taskvector_to_checkpoint(const TaskVector& tv, DType storage = DType::F32);
TaskVector taskvector_from_checkpoint(const Checkpoint& ckpt);

}  // namespace taskvec
