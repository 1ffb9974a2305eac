#include "taskvec/reporting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include "taskvec/errors.hpp"

namespace taskvec {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace

std::string_view heatmap_source_name(HeatmapSource s) {
  switch (s) {
    case HeatmapSource::AbsPre:
      return "abs_pre";
    case HeatmapSource::AbsDelta:
      return "abs_delta";
    case HeatmapSource::RelChange:
      return "rel_change";
    case HeatmapSource::FapmScore:
      return "fapm_score";
  }
  return "abs_delta";
}

HeatmapSource heatmap_source_from_name(std::string_view name) {
  if (name == "abs_pre") return HeatmapSource::AbsPre;
  if (name == "abs_delta") return HeatmapSource::AbsDelta;
  if (name == "rel_change") return HeatmapSource::RelChange;
  if (name == "fapm_score") return HeatmapSource::FapmScore;
  raise("UsageError", "unknown heatmap source \"" + std::string(name) + "\"");
}

HeatmapGrid block_means(const TensorF64& matrix, std::int64_t gh, std::int64_t gw,
                        HeatmapSource source, std::string tensor_name) {
  const std::int64_t rows = matrix.rows();
  const std::int64_t cols = matrix.cols();
  if (gh < 1 || gw < 1 || gh > rows || gw > cols)
    raise("GridTooLarge", "grid " + std::to_string(gh) + "x" + std::to_string(gw) +
                              " does not fit a " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " matrix");

  // Sentinels would wipe out a whole block's mean; clamp them to the finite
  // extrema first.
  double fin_min = std::numeric_limits<double>::infinity();
  double fin_max = -std::numeric_limits<double>::infinity();
  bool any_finite = false;
  for (double v : matrix.data)
    if (std::isfinite(v)) {
      any_finite = true;
      fin_min = std::min(fin_min, v);
      fin_max = std::max(fin_max, v);
    }
  if (!any_finite) raise("NoFiniteValues", "matrix has no finite values to average");

  auto clamped = [&](double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? fin_max : fin_min;
  };

  // Leading blocks absorb the remainder, so extents differ by at most one.
  auto block_bounds = [](std::int64_t extent, std::int64_t blocks, std::int64_t b) {
    const std::int64_t base = extent / blocks, rem = extent % blocks;
    const std::int64_t begin = b * base + std::min(b, rem);
    return std::pair<std::int64_t, std::int64_t>{begin, begin + base + (b < rem ? 1 : 0)};
  };

  HeatmapGrid grid;
  grid.rows = gh;
  grid.cols = gw;
  grid.source = source;
  grid.tensor_name = std::move(tensor_name);
  grid.cells.resize(std::size_t(gh * gw));
  for (std::int64_t br = 0; br < gh; ++br) {
    const auto [r0, r1] = block_bounds(rows, gh, br);
    for (std::int64_t bc = 0; bc < gw; ++bc) {
      const auto [c0, c1] = block_bounds(cols, gw, bc);
      double sum = 0.0;
      for (std::int64_t r = r0; r < r1; ++r)
        for (std::int64_t c = c0; c < c1; ++c) sum += clamped(matrix.data[std::size_t(r * cols + c)]);
      grid.cells[std::size_t(br * gw + bc)] = sum / double((r1 - r0) * (c1 - c0));
    }
  }
  return grid;
}

SentinelCounts count_sentinels(std::span<const double> values) {
  SentinelCounts counts;
  for (double v : values) {
    if (v == std::numeric_limits<double>::infinity()) ++counts.pos_inf;
    else if (v == -std::numeric_limits<double>::infinity()) ++counts.neg_inf;
  }
  return counts;
}

std::vector<double> score_quantiles(std::span<const double> values, std::span<const double> qs) {
  std::vector<double> finite;
  finite.reserve(values.size());
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) raise("NoFiniteValues", "no finite values to take quantiles of");
  std::sort(finite.begin(), finite.end());

  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) {
    if (!(q >= 0.0 && q <= 1.0))
      raise("UsageError", "quantile " + std::to_string(q) + " outside [0, 1]");
    const double pos = q * double(finite.size() - 1);
    const std::size_t lo = std::size_t(std::floor(pos));
    const double frac = pos - double(lo);
    if (lo + 1 >= finite.size() || frac == 0.0) {
      out.push_back(finite[lo]);
    } else {
      out.push_back(finite[lo] * (1.0 - frac) + finite[lo + 1] * frac);
    }
  }
  return out;
}

void emit_heatmap(const HeatmapGrid& grid, std::ostream& out, HeatmapFormat format) {
  if (format == HeatmapFormat::Csv) {
    for (std::int64_t r = 0; r < grid.rows; ++r) {
      for (std::int64_t c = 0; c < grid.cols; ++c) {
        if (c) out << ',';
        out << format_double(grid.cells[std::size_t(r * grid.cols + c)]);
      }
      out << '\n';
    }
    return;
  }

  double lo = grid.cells[0], hi = grid.cells[0];
  for (double v : grid.cells) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  out << "P5\n" << grid.cols << ' ' << grid.rows << "\n255\n";
  for (double v : grid.cells) {
    unsigned byte = 128;  // constant grid renders mid-gray
    if (hi > lo) byte = unsigned(std::floor((v - lo) / (hi - lo) * 255.0 + 0.5));
    out.put(char(static_cast<unsigned char>(byte)));
  }
}

void emit_heatmap(const HeatmapGrid& grid, const std::filesystem::path& path, HeatmapFormat format) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) raise("IoError", "cannot open \"" + path.string() + "\" for writing");
  emit_heatmap(grid, file, format);
  file.flush();
  if (!file) raise("IoError", "failed writing \"" + path.string() + "\"");
}

}  // namespace taskvec
