#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace taskvec {

// Storage element formats. F64/F32/F16 are IEEE-754 binary64/32/16; BF16 is
// bfloat16 (8 exponent bits, 7 mantissa bits).
enum class DType : std::uint8_t { F64, F32, F16, BF16 };

constexpr std::size_t element_size(DType t) {
  switch (t) {
    case DType::F64:
      return 8;
    case DType::F32:
      return 4;
    default:
      return 2;
  }
}

std::string_view dtype_name(DType t);
DType dtype_from_name(std::string_view name);  // UnknownDType

// Scalar conversions. Narrowing rounds to nearest, ties to even; a rounded
// magnitude past the target's largest finite value becomes ±inf.
std::uint16_t f32_to_f16_bits(float f);
float f16_bits_to_f32(std::uint16_t h);
std::uint16_t f32_to_bf16_bits(float f);
float bf16_bits_to_f32(std::uint16_t h);
float f64_to_f32(double v);

double decode_element(const std::byte* p, DType t);
void encode_element(double v, std::byte* p, DType t);

// Converts a raw little-endian element buffer between storage dtypes.
std::vector<std::byte> cast_tensor(std::span<const std::byte> buffer, DType from, DType to);

void widen_buffer(std::span<const std::byte> in, DType from, std::span<double> out);
void narrow_buffer(std::span<const double> in, DType to, std::span<std::byte> out);

}  // namespace taskvec
