#include "taskvec/masking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "taskvec/errors.hpp"

namespace taskvec {

namespace {

// Full sort below this size; selection above it.
constexpr std::size_t kSortCutoff = 4096;

void require_no_nan(const TensorF64& scores) {
  for (double v : scores.data)
    if (std::isnan(v)) raise("InvalidScores", "score matrix contains NaN");
}

}  // namespace

std::string_view scope_name(MaskScope s) {
  return s == MaskScope::Local ? "local" : "global";
}

MaskScope scope_from_name(std::string_view name) {
  if (name == "local") return MaskScope::Local;
  if (name == "global") return MaskScope::Global;
  raise("UsageError", "unknown scope \"" + std::string(name) + "\"");
}

std::size_t PruneMask::total_elements() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries) n += e.bits.size();
  return n;
}

std::size_t PruneMask::total_kept() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries) n += e.keep_count;
  return n;
}

std::size_t keep_count(std::size_t n, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity <= 1.0))
    raise("SparsityOutOfRange", "sparsity " + std::to_string(sparsity) + " outside [0, 1]");
  const double kept = (1.0 - sparsity) * double(n);
  const double rounded = std::floor(kept + 0.5);  // half up
  if (rounded <= 0.0) return 0;
  const std::size_t k = std::size_t(rounded);
  return std::min(k, n);
}

MaskEntry select_topk(const TensorF64& scores, std::size_t k) {
  const std::size_t n = scores.data.size();
  if (k > n) raise("KOutOfRange", "k = " + std::to_string(k) + " exceeds " + std::to_string(n));
  require_no_nan(scores);

  MaskEntry entry;
  entry.shape = scores.shape;
  entry.bits.assign(n, 0);
  entry.keep_count = k;
  if (k == 0) return entry;
  if (k == n) {
    std::fill(entry.bits.begin(), entry.bits.end(), 1);
    return entry;
  }

  const double* s = scores.data.data();
  // Higher score first; ties prefer the lower flattened index. This is a
  // strict total order, so the selected set is unique and platform-stable.
  auto better = [s](std::uint64_t a, std::uint64_t b) {
    if (s[a] != s[b]) return s[a] > s[b];
    return a < b;
  };

  std::vector<std::uint64_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n <= kSortCutoff) {
    std::sort(idx.begin(), idx.end(), better);
  } else {
    std::nth_element(idx.begin(), idx.begin() + std::ptrdiff_t(k) - 1, idx.end(), better);
  }
  for (std::size_t i = 0; i < k; ++i) entry.bits[idx[i]] = 1;
  return entry;
}

TensorF64 apply_mask(const TensorF64& delta, const MaskEntry& mask) {
  TensorF64 out = delta;
  apply_mask_inplace(out, mask);
  return out;
}

void apply_mask_inplace(TensorF64& delta, const MaskEntry& mask) {
  if (delta.shape != mask.shape)
    raise("ShapeMismatch", "mask shape differs from delta shape");
  for (std::size_t i = 0; i < delta.data.size(); ++i)
    if (!mask.bits[i]) delta.data[i] = 0.0;
}

PruneMask select_global(const ScoreMaps& score_maps, double sparsity) {
  PruneMask mask;
  mask.sparsity = sparsity;
  mask.scope = MaskScope::Global;

  std::size_t total = 0;
  for (const auto& [name, scores] : score_maps) {
    require_no_nan(scores);
    total += scores.data.size();
    mask.entries.emplace(name, MaskEntry{scores.shape,
                                         std::vector<std::uint8_t>(scores.data.size(), 0), 0});
  }
  const std::size_t k = keep_count(total, sparsity);
  if (k == 0) return mask;

  // Pool (score, global index) pairs; map iteration is ascending by name, so
  // the global index order realizes the (name, flat index) tie-break.
  std::vector<std::pair<double, std::uint64_t>> pool;
  pool.reserve(total);
  std::uint64_t base = 0;
  for (const auto& [name, scores] : score_maps) {
    for (std::size_t i = 0; i < scores.data.size(); ++i)
      pool.emplace_back(scores.data[i], base + i);
    base += scores.data.size();
  }
  auto better = [](const std::pair<double, std::uint64_t>& a,
                   const std::pair<double, std::uint64_t>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  if (pool.size() <= kSortCutoff) {
    std::sort(pool.begin(), pool.end(), better);
  } else {
    std::nth_element(pool.begin(), pool.begin() + std::ptrdiff_t(k) - 1, pool.end(), better);
  }

  std::vector<std::uint64_t> kept(k);
  for (std::size_t i = 0; i < k; ++i) kept[i] = pool[i].second;
  std::sort(kept.begin(), kept.end());

  base = 0;
  auto it = kept.begin();
  for (auto& [name, entry] : mask.entries) {
    const std::uint64_t end = base + entry.bits.size();
    while (it != kept.end() && *it < end) {
      entry.bits[std::size_t(*it - base)] = 1;
      ++entry.keep_count;
      ++it;
    }
    base = end;
  }
  return mask;
}

Checkpoint mask_to_checkpoint(const PruneMask& mask) {
  Checkpoint out;
  for (const auto& [name, entry] : mask.entries) {
    std::vector<double> values(entry.bits.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = entry.bits[i] ? 1.0 : 0.0;
    out.add_tensor_f64(name, DType::F32, entry.shape, values);
  }
  return out;
}

}  // namespace taskvec
