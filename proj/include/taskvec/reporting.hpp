#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskvec/tensorstore.hpp"

namespace taskvec {

enum class HeatmapSource { AbsPre, AbsDelta, RelChange, FapmScore };
std::string_view heatmap_source_name(HeatmapSource s);
HeatmapSource heatmap_source_from_name(std::string_view name);  // UsageError

struct HeatmapGrid {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> cells;  // row-major block means, always finite
  HeatmapSource source = HeatmapSource::AbsDelta;
  std::string tensor_name;
};

// Partitions the matrix into gh x gw contiguous blocks whose extents differ
// by at most one (remainders go to the leading blocks) and averages each
// block. ±inf sentinels are clamped to the matrix's finite extrema before
// averaging. The matrix is viewed as [shape[0], numel/shape[0]].
HeatmapGrid block_means(const TensorF64& matrix, std::int64_t gh, std::int64_t gw,
                        HeatmapSource source, std::string tensor_name);  // GridTooLarge

struct SentinelCounts {
  std::size_t pos_inf = 0;
  std::size_t neg_inf = 0;
};
SentinelCounts count_sentinels(std::span<const double> values);

// Linear-interpolation quantiles over the sorted finite values; ±inf
// sentinels are excluded (count them separately via count_sentinels).
std::vector<double> score_quantiles(std::span<const double> values,
                                    std::span<const double> qs);  // NoFiniteValues

enum class HeatmapFormat { Csv, Pgm };

// CSV: one line per grid row, full binary64 precision. PGM: binary P5,
// min-max normalized per grid; a constant grid renders as mid-gray 128.
void emit_heatmap(const HeatmapGrid& grid, std::ostream& out, HeatmapFormat format);
void emit_heatmap(const HeatmapGrid& grid, const std::filesystem::path& path, HeatmapFormat format);

}  // namespace taskvec
