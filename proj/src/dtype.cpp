#include "taskvec/dtype.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "taskvec/errors.hpp"

namespace taskvec {

std::string_view dtype_name(DType t) {
  switch (t) {
    case DType::F64:
      return "F64";
    case DType::F32:
      return "F32";
    case DType::F16:
      return "F16";
    case DType::BF16:
      return "BF16";
  }
  return "F32";
}

DType dtype_from_name(std::string_view name) {
  if (name == "F64") return DType::F64;
  if (name == "F32") return DType::F32;
  if (name == "F16") return DType::F16;
  if (name == "BF16") return DType::BF16;
  raise("UnknownDType", "unsupported dtype \"" + std::string(name) + "\"");
}

std::uint16_t f32_to_f16_bits(float f) {
  const std::uint32_t x = std::bit_cast<std::uint32_t>(f);
  const std::uint16_t sign = std::uint16_t((x >> 16) & 0x8000u);
  const std::uint32_t absx = x & 0x7FFFFFFFu;

  if (absx >= 0x7F800000u) {
    if (absx > 0x7F800000u) return std::uint16_t(sign | 0x7E00u);  // quiet NaN
    return std::uint16_t(sign | 0x7C00u);                          // inf
  }

  const int e = int(absx >> 23) - 127;
  if (e >= 16) return std::uint16_t(sign | 0x7C00u);  // magnitude >= 2^16: overflow to inf

  if (e >= -14) {
    // Normal target range; mantissa carry may still push into inf.
    std::uint32_t mant = absx & 0x7FFFFFu;
    std::uint32_t shifted = mant >> 13;
    const std::uint32_t rem = mant & 0x1FFFu;
    const std::uint32_t half = 0x1000u;
    if (rem > half || (rem == half && (shifted & 1u))) shifted += 1;
    std::uint32_t bits = (std::uint32_t(e + 15) << 10) + shifted;
    if (bits >= 0x7C00u) return std::uint16_t(sign | 0x7C00u);
    return std::uint16_t(sign | bits);
  }

  // Subnormal target range: result = RNE(significand24 >> (-e - 1)).
  const std::uint32_t sig = (absx & 0x7FFFFFu) | 0x800000u;
  const int shift = -e - 1;
  if (shift >= 25) return sign;  // below half of the minimum subnormal
  const std::uint32_t shifted = sig >> shift;
  const std::uint32_t rem = sig & ((1u << shift) - 1u);
  const std::uint32_t half = 1u << (shift - 1);
  std::uint32_t bits = shifted;
  if (rem > half || (rem == half && (shifted & 1u))) bits += 1;
  return std::uint16_t(sign | bits);  // bits == 0x400 lands exactly on the minimum normal
}

float f16_bits_to_f32(std::uint16_t h) {
  const std::uint32_t sign = std::uint32_t(h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1Fu;
  const std::uint32_t mant = h & 0x3FFu;
  if (exp == 0) {
    if (mant == 0) return std::bit_cast<float>(sign);
    const float v = std::ldexp(float(mant), -24);  // exact: integer scaled by a power of two
    return sign ? -v : v;
  }
  if (exp == 31) {
    if (mant == 0) return std::bit_cast<float>(sign | 0x7F800000u);
    return std::bit_cast<float>(sign | 0x7FC00000u | (mant << 13));
  }
  return std::bit_cast<float>(sign | ((exp - 15 + 127) << 23) | (mant << 13));
}

std::uint16_t f32_to_bf16_bits(float f) {
  const std::uint32_t x = std::bit_cast<std::uint32_t>(f);
  if ((x & 0x7F800000u) == 0x7F800000u && (x & 0x7FFFFFu) != 0)
    return std::uint16_t(((x >> 16) & 0x8000u) | 0x7FC0u);  // quiet NaN
  // RNE on the low 16 bits; the carry propagates into the exponent, taking the
  // largest finite values past the max to inf.
  const std::uint32_t lsb = (x >> 16) & 1u;
  return std::uint16_t((x + 0x7FFFu + lsb) >> 16);
}

float bf16_bits_to_f32(std::uint16_t h) {
  return std::bit_cast<float>(std::uint32_t(h) << 16);
}

float f64_to_f32(double v) {
  if (std::isnan(v)) return std::numeric_limits<float>::quiet_NaN();
  // Magnitudes at or past 2^128 - 2^103 round to inf; static_cast is not
  // defined for out-of-range values, so handle the boundary explicitly.
  constexpr double bound = 0x1.ffffffp+127;
  if (v >= bound) return std::numeric_limits<float>::infinity();
  if (v <= -bound) return -std::numeric_limits<float>::infinity();
  return static_cast<float>(v);
}

double decode_element(const std::byte* p, DType t) {
  switch (t) {
    case DType::F64: {
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
    case DType::F32: {
      float v;
      std::memcpy(&v, p, 4);
      return double(v);
    }
    case DType::F16: {
      std::uint16_t b;
      std::memcpy(&b, p, 2);
      return double(f16_bits_to_f32(b));
    }
    case DType::BF16: {
      std::uint16_t b;
      std::memcpy(&b, p, 2);
      return double(bf16_bits_to_f32(b));
    }
  }
  return 0.0;
}

void encode_element(double v, std::byte* p, DType t) {
  switch (t) {
    case DType::F64: {
      std::memcpy(p, &v, 8);
      return;
    }
    case DType::F32: {
      const float f = f64_to_f32(v);
      std::memcpy(p, &f, 4);
      return;
    }
    case DType::F16: {
      // f64 -> f32 -> f16 double rounding is innocuous: the 24-bit
      // intermediate satisfies the 2*11 + 2 bound for an 11-bit target.
      const std::uint16_t b = f32_to_f16_bits(f64_to_f32(v));
      std::memcpy(p, &b, 2);
      return;
    }
    case DType::BF16: {
      const std::uint16_t b = f32_to_bf16_bits(f64_to_f32(v));
      std::memcpy(p, &b, 2);
      return;
    }
  }
}

std::vector<std::byte> cast_tensor(std::span<const std::byte> buffer, DType from, DType to) {
  const std::size_t esz = element_size(from);
  if (buffer.size() % esz != 0)
    raise("InvariantViolation", "buffer length " + std::to_string(buffer.size()) +
                                    " not divisible by element size " + std::to_string(esz));
  const std::size_t n = buffer.size() / esz;
  std::vector<std::byte> out(n * element_size(to));
  if (from == to) {
    std::memcpy(out.data(), buffer.data(), buffer.size());
    return out;
  }
  const std::size_t osz = element_size(to);
  for (std::size_t i = 0; i < n; ++i)
    encode_element(decode_element(buffer.data() + i * esz, from), out.data() + i * osz, to);
  return out;
}

void widen_buffer(std::span<const std::byte> in, DType from, std::span<double> out) {
  const std::size_t esz = element_size(from);
  if (in.size() != out.size() * esz)
    raise("InvariantViolation", "widen size mismatch");
  switch (from) {
    case DType::F64:
      std::memcpy(out.data(), in.data(), in.size());
      return;
    case DType::F32: {
      const float* src = reinterpret_cast<const float*>(in.data());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = double(src[i]);
      return;
    }
    case DType::F16: {
      const std::uint16_t* src = reinterpret_cast<const std::uint16_t*>(in.data());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = double(f16_bits_to_f32(src[i]));
      return;
    }
    case DType::BF16: {
      const std::uint16_t* src = reinterpret_cast<const std::uint16_t*>(in.data());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = double(bf16_bits_to_f32(src[i]));
      return;
    }
  }
}

void narrow_buffer(std::span<const double> in, DType to, std::span<std::byte> out) {
  if (out.size() != in.size() * element_size(to))
    raise("InvariantViolation", "narrow size mismatch");
  switch (to) {
    case DType::F64:
      std::memcpy(out.data(), in.data(), out.size());
      return;
    case DType::F32: {
      float* dst = reinterpret_cast<float*>(out.data());
      for (std::size_t i = 0; i < in.size(); ++i) dst[i] = f64_to_f32(in[i]);
      return;
    }
    case DType::F16: {
      std::uint16_t* dst = reinterpret_cast<std::uint16_t*>(out.data());
      for (std::size_t i = 0; i < in.size(); ++i) dst[i] = f32_to_f16_bits(f64_to_f32(in[i]));
      return;
    }
    case DType::BF16: {
      std::uint16_t* dst = reinterpret_cast<std::uint16_t*>(out.data());
      for (std::size_t i = 0; i < in.size(); ++i) dst[i] = f32_to_bf16_bits(f64_to_f32(in[i]));
      return;
    }
  }
}

}  // namespace taskvec
