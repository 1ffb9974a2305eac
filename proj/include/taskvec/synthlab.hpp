#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taskvec/criteria.hpp"
#include "taskvec/tensorstore.hpp"

namespace taskvec {

struct Dist {
  enum class Kind { Normal, Uniform, Constant };
  Kind kind = Kind::Normal;
  double a = 0.0;  // mu | lo | value
  double b = 1.0;  // sigma | hi | unused
};

struct SynthTensorSpec {
  std::string name;
  std::vector<std::int64_t> shape;
  DType dtype = DType::F32;
  Dist dist;
};

struct SynthSpec {
  std::vector<SynthTensorSpec> tensors;
  std::uint64_t seed = 0;
};

// JSON shape: {"seed": 1, "tensors": [{"name": "w", "shape": [2, 3],
// "dtype": "F32", "dist": {"kind": "normal", "mu": 0, "sigma": 1}}]}
// uniform takes lo/hi, constant takes value.
SynthSpec synth_spec_from_json(const std::string& json_text);  // InvalidSpec

// Deterministic: per-tensor splitmix64 stream seeded with
// spec.seed XOR fnv1a(name); normals via Box-Muller on consecutive pairs.
Checkpoint gen_checkpoint(const SynthSpec& spec);  // InvalidSpec

// Two-task linear-regression forgetting exhibit: a "pre-trained" ridge fit on
// task A, a "fine-tuned" gradient-descent fit on task B, then prune-merge
// over the (criterion, sparsity) grid with held-out MSEs on both tasks.
struct DemoConfig {
  int d_in = 64;
  int d_out = 16;
  int n_samples = 1024;  // per task; first half trains, second half evaluates
  double ridge_lambda = 1e-3;
  int gd_steps = 500;
  double learning_rate = 0.05;
  std::vector<double> sparsities = {0.5, 0.7, 0.9};
  std::vector<Criterion> criteria = {Criterion::Fapm, Criterion::Magnitude, Criterion::Relative};
  std::uint64_t seed = 0;
};

struct DemoRow {
  std::string criterion;
  double sparsity = 0.0;
  double task_a_mse = 0.0;
  double task_b_mse = 0.0;
  double sum_abs_kept = 0.0;
  double sum_rel_kept_finite = 0.0;
  std::size_t total_elements = 0;
  std::size_t total_kept = 0;
  double wall_ms = 0.0;  // CSV only; JSON omits timing so reports compare byte-identical
};

struct DemoReport {
  DemoConfig config;
  double pre_task_a_mse = 0.0;
  double pre_task_b_mse = 0.0;
  double ft_task_a_mse = 0.0;
  double ft_task_b_mse = 0.0;
  bool gd_monotone = true;  // training MSE non-increasing over the final 90% of steps
  std::vector<DemoRow> rows;
};

DemoReport run_cf_demo(const DemoConfig& cfg);  // SingularSystem
std::string demo_report_json(const DemoReport& report, int indent = 2);
std::string demo_report_csv(const DemoReport& report);

}  // namespace taskvec
