#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "taskvec/tensorstore.hpp"

namespace taskvec {

enum class MaskScope { Local, Global };
std::string_view scope_name(MaskScope s);
MaskScope scope_from_name(std::string_view name);  // UsageError

struct MaskEntry {
  std::vector<std::int64_t> shape;
  std::vector<std::uint8_t> bits;  // 1 = keep
  std::size_t keep_count = 0;
};

struct PruneMask {
  std::map<std::string, MaskEntry, std::less<>> entries;
  double sparsity = 0.0;
  MaskScope scope = MaskScope::Local;

  std::size_t total_elements() const;
  std::size_t total_kept() const;
};

// round_half_up((1 - s) * n), clamped to [0, n].
std::size_t keep_count(std::size_t n, double sparsity);  // SparsityOutOfRange

// Keeps exactly the k largest scores; ties prefer the lower flattened
// row-major index. Deterministic across platforms.
MaskEntry select_topk(const TensorF64& scores, std::size_t k);  // KOutOfRange

TensorF64 apply_mask(const TensorF64& delta, const MaskEntry& mask);  // ShapeMismatch
void apply_mask_inplace(TensorF64& delta, const MaskEntry& mask);

using ScoreMaps = std::map<std::string, TensorF64, std::less<>>;

// Pools every score into one selection with a single global keep count; ties
// prefer (ascending tensor name, ascending flat index). Note fapm scores are
// normalized per tensor, so cross-tensor comparison is weak; local scope is
// the default everywhere.
PruneMask select_global(const ScoreMaps& score_maps, double sparsity);  // SparsityOutOfRange

// Same-shape F32 tensors of {0.0, 1.0} for external inspection.
Checkpoint mask_to_checkpoint(const PruneMask& mask);

}  // namespace taskvec
