#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "taskvec/criteria.hpp"
#include "taskvec/masking.hpp"
#include "taskvec/taskvector.hpp"

namespace taskvec {

struct PruneConfig {
  Criterion criterion = Criterion::Fapm;
  double sparsity = 0.9;
  MaskScope scope = MaskScope::Local;
  TensorFilter filter;
  std::uint64_t seed = 0;                 // random criterion
  std::optional<std::string> norms_path;  // required iff criterion == Wanda and no in-memory norms
  double lora_scale = 1.0;
  enum class OneDimPolicy { Ft, Pre };
  // Unselected tensors (1-D, below min_rank, or filtered out) are copied
  // bit-exactly from this side.
  OneDimPolicy one_dim = OneDimPolicy::Ft;
  int threads = 0;  // per-tensor parallelism cap; 0 = hardware default
};

std::string_view one_dim_name(PruneConfig::OneDimPolicy p);
PruneConfig::OneDimPolicy one_dim_from_name(std::string_view name);  // UsageError

struct TensorReport {
  std::string name;
  std::size_t elements = 0;
  std::size_t keep_count = 0;
  double achieved_sparsity = 0.0;  // 1 - keep_count / elements, exactly
  bool has_quantiles = false;
  std::array<double, 5> score_quantiles{};  // q0, q25, q50, q75, q100 over finite scores
  std::size_t pos_inf = 0;
  std::size_t neg_inf = 0;
  double max_cast_abs_error = 0.0;  // write-back cast error, max over elements
};

struct RunReport {
  std::vector<TensorReport> tensors;  // ascending by name
  std::size_t total_elements = 0;
  std::size_t total_kept = 0;
  double wall_ms = 0.0;
  std::string settings_json;  // pipeline settings echo, stable key order

  std::string to_json(int indent = 2) const;
};

std::string prune_settings_json(const PruneConfig& cfg, std::string_view pipeline);

// diff -> score -> mask -> merge. Output tensor set equals ft's: selected
// tensors get pre + mask (x) (ft - pre) computed in binary64 and cast to the
// ft dtype; the rest are copied per cfg.one_dim.
std::pair<Checkpoint, RunReport> prune_merge(const Checkpoint& pre, const Checkpoint& ft,
                                             const PruneConfig& cfg,
                                             const ColumnNorms* norms = nullptr);

// (1 - alpha) * pre + alpha * ft over mutual tensors, binary64, cast to the
// ft dtype; ft-only tensors are copied.
Checkpoint wise_ft(const Checkpoint& pre, const Checkpoint& ft, double alpha);

// Composes dense deltas scale * (B . A) from adapter factors, then scores,
// masks, and merges exactly as prune_merge.
std::pair<Checkpoint, RunReport> lora_prune_merge(const Checkpoint& pre, const FactorMap& a_factors,
                                                  const FactorMap& b_factors, const PruneConfig& cfg,
                                                  const ColumnNorms* norms = nullptr);

enum class BasePolicy { PreviousMerged, OriginalPre };
std::string_view base_policy_name(BasePolicy p);
BasePolicy base_policy_from_name(std::string_view name);  // UsageError

struct SequentialStage {
  const Checkpoint* ft = nullptr;
  PruneConfig cfg;
};

// Chained fine-tune/prune/merge stages. PreviousMerged diffs each stage
// against the running merged model; OriginalPre diffs every stage against the
// original base and accumulates the masked deltas additively.
std::pair<Checkpoint, std::vector<RunReport>> sequential_merge(
    const std::vector<SequentialStage>& stages, const Checkpoint& base,
    BasePolicy policy = BasePolicy::PreviousMerged, const ColumnNorms* norms = nullptr);

struct SweepRow {
  double sparsity = 0.0;
  std::size_t total_elements = 0;
  std::size_t total_kept = 0;
  double sum_abs_kept = 0.0;
  double sum_rel_kept_finite = 0.0;
  double wall_ms = 0.0;
  std::vector<std::pair<std::string, std::size_t>> per_tensor_kept;  // name -> keep count
};

// One row per requested sparsity, in input order. Scores are computed once
// and reused; duplicate sparsities reuse the already-computed row. When
// on_point is set, the merged checkpoint for each distinct sparsity is built
// and passed to it.
std::vector<SweepRow> sweep(const Checkpoint& pre, const Checkpoint& ft, Criterion criterion,
                            const std::vector<double>& sparsities, const PruneConfig& base_cfg,
                            const ColumnNorms* norms = nullptr,
                            const std::function<void(const SweepRow&, const Checkpoint&)>& on_point = {});

// Header: sparsity,total_elements,total_kept,sum_abs_kept,sum_rel_kept_finite,wall_ms
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Algorithm internals shared by sweep, the demo, and tests.
ScoreMaps compute_score_maps(const Checkpoint& pre, const Checkpoint& ft, const PruneConfig& cfg,
                             const ColumnNorms* norms = nullptr);
PruneMask compute_prune_mask(const Checkpoint& pre, const Checkpoint& ft, const PruneConfig& cfg,
                             const ColumnNorms* norms = nullptr);

struct KeptSums {
  double sum_abs = 0.0;
  double sum_rel_finite = 0.0;
};
KeptSums kept_sums(const TensorF64& delta, const TensorF64& w_pre, const MaskEntry& mask);

}  // namespace taskvec
