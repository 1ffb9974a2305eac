#include "taskvec/pipelines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "json.hpp"
#include "taskvec/errors.hpp"
#include "taskvec/parallel.hpp"
#include "taskvec/reporting.hpp"

namespace taskvec {

namespace {

using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void require_sparsity(double s) {
  if (!(s >= 0.0 && s <= 1.0))
    raise("SparsityOutOfRange", "sparsity " + std::to_string(s) + " outside [0, 1]");
}

TensorF64 criterion_scores(const std::string& name, const TensorF64& delta, const TensorF64& pre64,
                           const PruneConfig& cfg, const ColumnNorms* norms) {
  if (delta.data.empty()) return TensorF64{delta.shape, {}};
  switch (cfg.criterion) {
    case Criterion::Fapm:
      return score_fapm(delta, pre64);
    case Criterion::Magnitude:
      return score_magnitude(delta);
    case Criterion::Relative:
      return score_relative(delta, pre64);
    case Criterion::Wanda: {
      auto it = norms->norms.find(name);
      if (it == norms->norms.end())
        raise("MissingNorms", "no activation norms for tensor \"" + name + "\"");
      return score_wanda(delta, it->second);
    }
    case Criterion::Random:
      return score_random(delta.shape, cfg.seed, name);
  }
  return score_magnitude(delta);
}

const ColumnNorms* resolve_norms(const PruneConfig& cfg, const ColumnNorms* norms,
                                 ColumnNorms& storage) {
  if (cfg.criterion != Criterion::Wanda) return norms;
  if (norms) return norms;
  if (!cfg.norms_path)
    raise("MissingNorms", "the wanda criterion needs an activation-norms file");
  storage = column_norms_from_checkpoint(load_checkpoint(*cfg.norms_path));
  return &storage;
}

// Selected tensor names, ascending; validates alignment between ft and pre.
std::vector<std::string> select_names(const Checkpoint& pre, const Checkpoint& ft,
                                      const PruneConfig& cfg, const ColumnNorms* norms) {
  std::vector<std::string> selected;
  for (const auto& [name, tensor] : ft.tensors()) {
    if (!cfg.filter.selects(tensor.meta)) continue;
    if (!pre.has_tensor(name))
      raise("AlignmentError", "tensor \"" + name + "\" is absent from the pre-trained checkpoint");
    if (pre.tensor(name).meta.shape != tensor.meta.shape)
      raise("AlignmentError", "tensor \"" + name + "\" has mismatched shapes");
    selected.push_back(name);
  }
  if (selected.empty()) raise("EmptySelection", "the filter selects no tensors");
  if (cfg.criterion == Criterion::Wanda)
    for (const std::string& name : selected)
      if (ft.tensor(name).meta.numel() > 0 && !norms->norms.count(name))
        raise("MissingNorms", "no activation norms for tensor \"" + name + "\"");
  return selected;
}

TensorReport stats_for(const std::string& name, const TensorF64& scores, std::size_t kept) {
  TensorReport rep;
  rep.name = name;
  rep.elements = scores.data.size();
  rep.keep_count = kept;
  rep.achieved_sparsity =
      rep.elements == 0 ? 0.0 : 1.0 - double(kept) / double(rep.elements);
  const SentinelCounts sc = count_sentinels(scores.data);
  rep.pos_inf = sc.pos_inf;
  rep.neg_inf = sc.neg_inf;
  if (sc.pos_inf + sc.neg_inf < rep.elements && rep.elements > 0) {
    const double qs[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
    const std::vector<double> vals = score_quantiles(scores.data, qs);
    std::copy(vals.begin(), vals.end(), rep.score_quantiles.begin());
    rep.has_quantiles = true;
  }
  return rep;
}

// Merge one tensor: kept positions get pre + delta in binary64, dropped
// positions keep the pre value untouched (adding 0.0 would flip -0.0), then
// narrow to out_dtype. Reuses delta as the merged buffer and pre64 as the
// widen-back scratch.
StoredTensor merge_tensor(const std::string& name, TensorF64& delta, TensorF64& pre64,
                          const MaskEntry& mask, DType out_dtype, double& max_cast_err) {
  const std::size_t n = delta.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.bits[i] && delta.data[i] != 0.0)
      delta.data[i] += pre64.data[i];
    else
      delta.data[i] = pre64.data[i];
  }
  StoredTensor out;
  out.meta.name = name;
  out.meta.dtype = out_dtype;
  out.meta.shape = delta.shape;
  out.data.resize(n * element_size(out_dtype));
  narrow_buffer(delta.data, out_dtype, out.data);

  widen_buffer(out.data, out_dtype, pre64.data);
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pre64.data[i] == delta.data[i]) continue;  // also covers matching infinities
    if (std::isnan(pre64.data[i]) && std::isnan(delta.data[i])) continue;
    err = std::max(err, std::fabs(pre64.data[i] - delta.data[i]));
  }
  max_cast_err = err;
  return out;
}

struct Slot {
  StoredTensor out;
  TensorReport report;
};

// Shared prune/merge core. delta_source returns the binary64 delta for a
// selected tensor; output dtype comes from out_dtype_of.
template <typename DeltaFn, typename DTypeFn>
std::pair<Checkpoint, RunReport> run_prune(
    const Checkpoint& pre, const Checkpoint& output_base, const std::vector<std::string>& selected,
    const PruneConfig& cfg, const ColumnNorms* norms, DeltaFn delta_source, DTypeFn out_dtype_of,
    std::string settings) {
  const auto t0 = Clock::now();
  std::vector<Slot> slots(selected.size());

  if (cfg.scope == MaskScope::Local) {
    parallel_for(selected.size(), cfg.threads, [&](std::size_t i) {
      const std::string& name = selected[i];
      TensorF64 pre64 = pre.widened_tensor(name);
      TensorF64 delta = delta_source(name, pre64);
      const std::size_t n = delta.data.size();
      TensorF64 scores = criterion_scores(name, delta, pre64, cfg, norms);
      const MaskEntry mask = select_topk(scores, keep_count(n, cfg.sparsity));
      slots[i].report = stats_for(name, scores, mask.keep_count);
      scores = TensorF64{};
      slots[i].out = merge_tensor(name, delta, pre64, mask, out_dtype_of(name),
                                  slots[i].report.max_cast_abs_error);
    });
  } else {
    // Global scope pools every score, so score maps stay resident; the merge
    // pass recomputes deltas tensor by tensor.
    std::vector<TensorF64> score_vec(selected.size());
    parallel_for(selected.size(), cfg.threads, [&](std::size_t i) {
      const std::string& name = selected[i];
      TensorF64 pre64 = pre.widened_tensor(name);
      TensorF64 delta = delta_source(name, pre64);
      score_vec[i] = criterion_scores(name, delta, pre64, cfg, norms);
    });
    ScoreMaps maps;
    for (std::size_t i = 0; i < selected.size(); ++i)
      maps.emplace(selected[i], std::move(score_vec[i]));
    score_vec.clear();
    const PruneMask gmask = select_global(maps, cfg.sparsity);

    parallel_for(selected.size(), cfg.threads, [&](std::size_t i) {
      const std::string& name = selected[i];
      TensorF64 pre64 = pre.widened_tensor(name);
      TensorF64 delta = delta_source(name, pre64);
      const MaskEntry& mask = gmask.entries.at(name);
      slots[i].report = stats_for(name, maps.at(name), mask.keep_count);
      slots[i].out = merge_tensor(name, delta, pre64, mask, out_dtype_of(name),
                                  slots[i].report.max_cast_abs_error);
    });
  }

  std::unordered_map<std::string_view, std::size_t> slot_of;
  slot_of.reserve(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) slot_of.emplace(selected[i], i);

  Checkpoint merged;
  for (const auto& [name, tensor] : output_base.tensors()) {
    auto it = slot_of.find(name);
    if (it != slot_of.end()) {
      StoredTensor& s = slots[it->second].out;
      merged.add_tensor(name, s.meta.dtype, s.meta.shape, std::move(s.data));
      continue;
    }
    // Not selected: copy bit-exactly from the configured side.
    if (cfg.one_dim == PruneConfig::OneDimPolicy::Ft || &pre == &output_base) {
      merged.add_tensor(name, tensor.meta.dtype, tensor.meta.shape, tensor.data);
    } else {
      if (!pre.has_tensor(name))
        raise("AlignmentError", "tensor \"" + name +
                                    "\" is absent from the pre-trained checkpoint (one_dim=pre)");
      const StoredTensor& src = pre.tensor(name);
      merged.add_tensor(name, src.meta.dtype, src.meta.shape, src.data);
    }
  }

  RunReport report;
  report.settings_json = std::move(settings);
  for (Slot& s : slots) {
    report.total_elements += s.report.elements;
    report.total_kept += s.report.keep_count;
    report.tensors.push_back(std::move(s.report));
  }
  report.wall_ms = ms_since(t0);
  return {std::move(merged), std::move(report)};
}

}  // namespace

std::string_view one_dim_name(PruneConfig::OneDimPolicy p) {
  return p == PruneConfig::OneDimPolicy::Ft ? "ft" : "pre";
}

PruneConfig::OneDimPolicy one_dim_from_name(std::string_view name) {
  if (name == "ft") return PruneConfig::OneDimPolicy::Ft;
  if (name == "pre") return PruneConfig::OneDimPolicy::Pre;
  raise("UsageError", "unknown one-dim policy \"" + std::string(name) + "\"");
}

std::string_view base_policy_name(BasePolicy p) {
  return p == BasePolicy::PreviousMerged ? "previous_merged" : "original_pre";
}

BasePolicy base_policy_from_name(std::string_view name) {
  if (name == "previous_merged") return BasePolicy::PreviousMerged;
  if (name == "original_pre") return BasePolicy::OriginalPre;
  raise("UsageError", "unknown base policy \"" + std::string(name) + "\"");
}

std::string prune_settings_json(const PruneConfig& cfg, std::string_view pipeline) {
  ordered_json j;
  j["pipeline"] = std::string(pipeline);
  j["criterion"] = std::string(criterion_name(cfg.criterion));
  j["sparsity"] = cfg.sparsity;
  j["scope"] = std::string(scope_name(cfg.scope));
  j["include"] = cfg.filter.include_globs;
  j["exclude"] = cfg.filter.exclude_globs;
  j["min_rank"] = cfg.filter.min_rank;
  j["float_only"] = cfg.filter.float_only;
  j["seed"] = cfg.seed;
  if (cfg.norms_path)
    j["norms_path"] = *cfg.norms_path;
  else
    j["norms_path"] = nullptr;
  j["lora_scale"] = cfg.lora_scale;
  j["one_dim_policy"] = std::string(one_dim_name(cfg.one_dim));
  j["threads"] = cfg.threads;
  return j.dump();
}

std::string RunReport::to_json(int indent) const {
  ordered_json j;
  j["settings"] =
      settings_json.empty() ? ordered_json::object() : ordered_json::parse(settings_json);
  ordered_json arr = ordered_json::array();
  for (const TensorReport& t : tensors) {
    ordered_json e;
    e["name"] = t.name;
    e["elements"] = t.elements;
    e["keep_count"] = t.keep_count;
    e["achieved_sparsity"] = t.achieved_sparsity;
    if (t.has_quantiles) {
      ordered_json q;
      q["q00"] = t.score_quantiles[0];
      q["q25"] = t.score_quantiles[1];
      q["q50"] = t.score_quantiles[2];
      q["q75"] = t.score_quantiles[3];
      q["q100"] = t.score_quantiles[4];
      e["score_quantiles"] = std::move(q);
    } else {
      e["score_quantiles"] = nullptr;
    }
    e["pos_inf"] = t.pos_inf;
    e["neg_inf"] = t.neg_inf;
    e["max_cast_abs_error"] = t.max_cast_abs_error;
    arr.push_back(std::move(e));
  }
  j["tensors"] = std::move(arr);
  ordered_json totals;
  totals["elements"] = total_elements;
  totals["kept"] = total_kept;
  totals["achieved_sparsity"] =
      total_elements == 0 ? 0.0 : 1.0 - double(total_kept) / double(total_elements);
  j["totals"] = std::move(totals);
  j["wall_ms"] = wall_ms;
  return j.dump(indent);
}

std::pair<Checkpoint, RunReport> prune_merge(const Checkpoint& pre, const Checkpoint& ft,
                                             const PruneConfig& cfg, const ColumnNorms* norms) {
  require_sparsity(cfg.sparsity);
  ColumnNorms norm_storage;
  norms = resolve_norms(cfg, norms, norm_storage);
  const std::vector<std::string> selected = select_names(pre, ft, cfg, norms);

  auto delta_source = [&](const std::string& name, const TensorF64& pre64) {
    TensorF64 delta = ft.widened_tensor(name);
    for (std::size_t i = 0; i < delta.data.size(); ++i) delta.data[i] -= pre64.data[i];
    return delta;
  };
  auto out_dtype_of = [&](const std::string& name) { return ft.tensor(name).meta.dtype; };
  return run_prune(pre, ft, selected, cfg, norms, delta_source, out_dtype_of,
                   prune_settings_json(cfg, "prune_merge"));
}

Checkpoint wise_ft(const Checkpoint& pre, const Checkpoint& ft, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    raise("AlphaOutOfRange", "alpha " + std::to_string(alpha) + " outside [0, 1]");

  for (const auto& [name, tensor] : ft.tensors())
    if (pre.has_tensor(name) && pre.tensor(name).meta.shape != tensor.meta.shape)
      raise("AlignmentError", "tensor \"" + name + "\" has mismatched shapes");

  Checkpoint out;
  for (const auto& [name, tensor] : ft.tensors()) {
    if (!pre.has_tensor(name)) {
      out.add_tensor(name, tensor.meta.dtype, tensor.meta.shape, tensor.data);
      continue;
    }
    std::vector<double> pre64 = pre.widened(name);
    std::vector<double> ft64 = ft.widened(name);
    for (std::size_t i = 0; i < ft64.size(); ++i)
      ft64[i] = (1.0 - alpha) * pre64[i] + alpha * ft64[i];
    out.add_tensor_f64(name, tensor.meta.dtype, tensor.meta.shape, ft64);
  }
  return out;
}

std::pair<Checkpoint, RunReport> lora_prune_merge(const Checkpoint& pre, const FactorMap& a_factors,
                                                  const FactorMap& b_factors, const PruneConfig& cfg,
                                                  const ColumnNorms* norms) {
  require_sparsity(cfg.sparsity);
  ColumnNorms norm_storage;
  norms = resolve_norms(cfg, norms, norm_storage);

  const TaskVector tv = compose_lora(a_factors, b_factors, cfg.lora_scale, header_fingerprint(pre));
  std::vector<std::string> selected;
  for (const auto& [name, delta] : tv.deltas) {
    if (!pre.has_tensor(name))
      raise("AlignmentError", "adapter target \"" + name + "\" is absent from the base checkpoint");
    if (pre.tensor(name).meta.shape != delta.shape)
      raise("AlignmentError", "adapter \"" + name + "\" composes to a mismatched shape");
    selected.push_back(name);
  }
  if (cfg.criterion == Criterion::Wanda)
    for (const std::string& name : selected)
      if (!tv.deltas.at(name).data.empty() && !norms->norms.count(name))
        raise("MissingNorms", "no activation norms for tensor \"" + name + "\"");

  auto delta_source = [&](const std::string& name, const TensorF64&) { return tv.deltas.at(name); };
  auto out_dtype_of = [&](const std::string& name) { return pre.tensor(name).meta.dtype; };
  return run_prune(pre, pre, selected, cfg, norms, delta_source, out_dtype_of,
                   prune_settings_json(cfg, "lora_prune_merge"));
}

std::pair<Checkpoint, std::vector<RunReport>> sequential_merge(
    const std::vector<SequentialStage>& stages, const Checkpoint& base, BasePolicy policy,
    const ColumnNorms* norms) {
  if (stages.empty()) raise("EmptyChain", "sequential merge needs at least one stage");

  std::vector<RunReport> reports;
  if (policy == BasePolicy::PreviousMerged) {
    Checkpoint current;
    const Checkpoint* cur = &base;
    for (const SequentialStage& stage : stages) {
      auto [merged, report] = prune_merge(*cur, *stage.ft, stage.cfg, norms);
      reports.push_back(std::move(report));
      current = std::move(merged);
      cur = &current;
    }
    return {std::move(current), std::move(reports)};
  }

  // OriginalPre: every stage diffs against the original base; masked deltas
  // accumulate additively.
  std::map<std::string, TensorF64, std::less<>> acc;
  for (const SequentialStage& stage : stages) {
    require_sparsity(stage.cfg.sparsity);
    ColumnNorms norm_storage;
    const ColumnNorms* stage_norms = resolve_norms(stage.cfg, norms, norm_storage);
    const std::vector<std::string> selected = select_names(base, *stage.ft, stage.cfg, stage_norms);

    RunReport report;
    report.settings_json = prune_settings_json(stage.cfg, "sequential_merge/original_pre");
    const auto t0 = Clock::now();
    for (const std::string& name : selected) {
      TensorF64 pre64 = base.widened_tensor(name);
      TensorF64 delta = stage.ft->widened_tensor(name);
      for (std::size_t i = 0; i < delta.data.size(); ++i) delta.data[i] -= pre64.data[i];
      TensorF64 scores = criterion_scores(name, delta, pre64, stage.cfg, stage_norms);
      const MaskEntry mask = select_topk(scores, keep_count(delta.data.size(), stage.cfg.sparsity));
      TensorReport rep = stats_for(name, scores, mask.keep_count);
      report.total_elements += rep.elements;
      report.total_kept += rep.keep_count;
      report.tensors.push_back(std::move(rep));
      apply_mask_inplace(delta, mask);
      auto it = acc.find(name);
      if (it == acc.end()) {
        acc.emplace(name, std::move(delta));
      } else {
        for (std::size_t i = 0; i < delta.data.size(); ++i) it->second.data[i] += delta.data[i];
      }
    }
    report.wall_ms = ms_since(t0);
    reports.push_back(std::move(report));
  }

  const Checkpoint& last_ft = *stages.back().ft;
  const PruneConfig& last_cfg = stages.back().cfg;
  Checkpoint merged;
  for (const auto& [name, tensor] : last_ft.tensors()) {
    auto it = acc.find(name);
    if (it == acc.end()) {
      if (last_cfg.one_dim == PruneConfig::OneDimPolicy::Ft) {
        merged.add_tensor(name, tensor.meta.dtype, tensor.meta.shape, tensor.data);
      } else {
        if (!base.has_tensor(name))
          raise("AlignmentError",
                "tensor \"" + name + "\" is absent from the base checkpoint (one_dim=pre)");
        const StoredTensor& src = base.tensor(name);
        merged.add_tensor(name, src.meta.dtype, src.meta.shape, src.data);
      }
      continue;
    }
    std::vector<double> out64 = base.widened(name);
    const TensorF64& delta = it->second;
    for (std::size_t i = 0; i < out64.size(); ++i)
      if (delta.data[i] != 0.0) out64[i] += delta.data[i];
    merged.add_tensor_f64(name, tensor.meta.dtype, tensor.meta.shape, out64);
  }
  return {std::move(merged), std::move(reports)};
}

ScoreMaps compute_score_maps(const Checkpoint& pre, const Checkpoint& ft, const PruneConfig& cfg,
                             const ColumnNorms* norms) {
  require_sparsity(cfg.sparsity);
  ColumnNorms norm_storage;
  norms = resolve_norms(cfg, norms, norm_storage);
  const std::vector<std::string> selected = select_names(pre, ft, cfg, norms);

  std::vector<TensorF64> score_vec(selected.size());
  parallel_for(selected.size(), cfg.threads, [&](std::size_t i) {
    const std::string& name = selected[i];
    TensorF64 pre64 = pre.widened_tensor(name);
    TensorF64 delta = ft.widened_tensor(name);
    for (std::size_t j = 0; j < delta.data.size(); ++j) delta.data[j] -= pre64.data[j];
    score_vec[i] = criterion_scores(name, delta, pre64, cfg, norms);
  });
  ScoreMaps maps;
  for (std::size_t i = 0; i < selected.size(); ++i)
    maps.emplace(selected[i], std::move(score_vec[i]));
  return maps;
}

PruneMask compute_prune_mask(const Checkpoint& pre, const Checkpoint& ft, const PruneConfig& cfg,
                             const ColumnNorms* norms) {
  const ScoreMaps maps = compute_score_maps(pre, ft, cfg, norms);
  if (cfg.scope == MaskScope::Global) return select_global(maps, cfg.sparsity);

  PruneMask mask;
  mask.sparsity = cfg.sparsity;
  mask.scope = MaskScope::Local;
  for (const auto& [name, scores] : maps)
    mask.entries.emplace(name,
                         select_topk(scores, keep_count(scores.data.size(), cfg.sparsity)));
  return mask;
}

KeptSums kept_sums(const TensorF64& delta, const TensorF64& w_pre, const MaskEntry& mask) {
  if (delta.shape != mask.shape || delta.shape != w_pre.shape)
    raise("ShapeMismatch", "kept_sums inputs have different shapes");
  KeptSums sums;
  for (std::size_t i = 0; i < delta.data.size(); ++i) {
    if (!mask.bits[i]) continue;
    const double ad = std::fabs(delta.data[i]);
    sums.sum_abs += ad;
    const double r = ad / std::fabs(w_pre.data[i]);
    if (std::isfinite(r)) sums.sum_rel_finite += r;
  }
  return sums;
}

std::vector<SweepRow> sweep(const Checkpoint& pre, const Checkpoint& ft, Criterion criterion,
                            const std::vector<double>& sparsities, const PruneConfig& base_cfg,
                            const ColumnNorms* norms,
                            const std::function<void(const SweepRow&, const Checkpoint&)>& on_point) {
  PruneConfig cfg = base_cfg;
  cfg.criterion = criterion;
  for (double s : sparsities) require_sparsity(s);

  std::vector<SweepRow> rows;
  if (sparsities.empty()) return rows;

  ColumnNorms norm_storage;
  norms = resolve_norms(cfg, norms, norm_storage);
  const std::vector<std::string> selected = select_names(pre, ft, cfg, norms);

  // Scores do not depend on the sparsity, so compute deltas and scores once.
  std::vector<TensorF64> deltas(selected.size());
  std::vector<TensorF64> pres(selected.size());
  std::vector<TensorF64> scores(selected.size());
  parallel_for(selected.size(), cfg.threads, [&](std::size_t i) {
    const std::string& name = selected[i];
    pres[i] = pre.widened_tensor(name);
    deltas[i] = ft.widened_tensor(name);
    for (std::size_t j = 0; j < deltas[i].data.size(); ++j)
      deltas[i].data[j] -= pres[i].data[j];
    scores[i] = criterion_scores(name, deltas[i], pres[i], cfg, norms);
  });

  std::map<double, std::size_t> memo;  // distinct sparsity -> first row index
  for (double s : sparsities) {
    auto seen = memo.find(s);
    if (seen != memo.end()) {
      rows.push_back(rows[seen->second]);  // identical row, computed once
      continue;
    }
    const auto t0 = Clock::now();
    SweepRow row;
    row.sparsity = s;

    std::vector<MaskEntry> masks(selected.size());
    if (cfg.scope == MaskScope::Global) {
      ScoreMaps maps;
      for (std::size_t i = 0; i < selected.size(); ++i) maps.emplace(selected[i], scores[i]);
      PruneMask gmask = select_global(maps, s);
      for (std::size_t i = 0; i < selected.size(); ++i)
        masks[i] = std::move(gmask.entries.at(selected[i]));
    } else {
      for (std::size_t i = 0; i < selected.size(); ++i)
        masks[i] = select_topk(scores[i], keep_count(scores[i].data.size(), s));
    }

    for (std::size_t i = 0; i < selected.size(); ++i) {
      const KeptSums sums = kept_sums(deltas[i], pres[i], masks[i]);
      row.total_elements += masks[i].bits.size();
      row.total_kept += masks[i].keep_count;
      row.sum_abs_kept += sums.sum_abs;
      row.sum_rel_kept_finite += sums.sum_rel_finite;
      row.per_tensor_kept.emplace_back(selected[i], masks[i].keep_count);
    }

    if (on_point) {
      PruneConfig point_cfg = cfg;
      point_cfg.sparsity = s;
      auto [merged, report] = prune_merge(pre, ft, point_cfg, norms);
      (void)report;
      row.wall_ms = ms_since(t0);
      rows.push_back(row);
      memo.emplace(s, rows.size() - 1);
      on_point(rows.back(), merged);
      continue;
    }
    row.wall_ms = ms_since(t0);
    rows.push_back(row);
    memo.emplace(s, rows.size() - 1);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "sparsity,total_elements,total_kept,sum_abs_kept,sum_rel_kept_finite,wall_ms\n";
  auto fmt = [](double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
  };
  for (const SweepRow& r : rows) {
    out += fmt(r.sparsity);
    out += ',';
    out += std::to_string(r.total_elements);
    out += ',';
    out += std::to_string(r.total_kept);
    out += ',';
    out += fmt(r.sum_abs_kept);
    out += ',';
    out += fmt(r.sum_rel_kept_finite);
    out += ',';
    out += fmt(r.wall_ms);
    out += '\n';
  }
  return out;
}

}  // namespace taskvec
