// Parameterizable binary floating-point emulation with round-to-nearest-even.
//
// The emulated format keeps a configurable number of stored mantissa bits and
// an unbounded exponent: no overflow, underflow, subnormals or NaN payloads.
// Values are carried in binary64, and the mantissa width is capped so that
// carrying out an exact operation in binary64 and then rounding to the target
// width never produces a double-rounding artifact.

#pragma once

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lpmc {

struct PrecisionSpec {
  // Stored fraction bits, excluding the implicit leading 1.
  int mantissa_bits;

  static constexpr int kMaxMantissaBits = 26;
  static constexpr int kCarrierMantissaBits = 52;

  // Half-ULP relative bound: one rounding has |R(x) - x| <= rho * |x|.
  double unit_roundoff() const { return std::ldexp(1.0, -(mantissa_bits + 1)); }

  bool is_carrier() const { return mantissa_bits >= kCarrierMantissaBits; }

  static PrecisionSpec bf16() { return {7}; }
  static PrecisionSpec fp16() { return {10}; }
  static PrecisionSpec fp22() { return {16}; }
  static PrecisionSpec fp32() { return {23}; }
  static PrecisionSpec carrier() { return {kCarrierMantissaBits}; }

  static PrecisionSpec custom(int m) {
    if (m < 1 || m > kMaxMantissaBits)
      throw std::invalid_argument("mantissa_bits must be in [1, " +
                                  std::to_string(kMaxMantissaBits) + "], got " +
                                  std::to_string(m));
    return {m};
  }

  // Names accepted in configs: bf16 | fp16 | fp22 | fp32 | carrier | custom:m.
  static PrecisionSpec parse(const std::string& name) {
    if (name == "bf16") return bf16();
    if (name == "fp16") return fp16();
    if (name == "fp22") return fp22();
    if (name == "fp32") return fp32();
    if (name == "carrier" || name == "fp64" || name == "double") return carrier();
    if (name.rfind("custom:", 0) == 0) {
      int m = 0;
      try {
        m = std::stoi(name.substr(7));
      } catch (const std::exception&) {
        throw std::invalid_argument("bad precision name: " + name);
      }
      return custom(m);
    }
    throw std::invalid_argument("bad precision name: " + name);
  }

  bool operator==(const PrecisionSpec&) const = default;
};

// Round x to the nearest value representable with spec.mantissa_bits stored
// fraction bits; half-way ties go to the candidate whose least-significant
// stored bit is 0. Pure significand masking: no string round-tripping.
inline double round_to_precision(double x, const PrecisionSpec& spec) {
  if (!std::isfinite(x)) throw std::domain_error("non-finite operand");
  if (x == 0.0 || spec.is_carrier()) return x;
  int exp;
  double frac = std::frexp(x, &exp);  // x = frac * 2^exp, |frac| in [0.5, 1)
  const int prec = spec.mantissa_bits + 1;
  // |scaled| in [2^m, 2^(m+1)); nearbyint under the default FE_TONEAREST mode
  // is exactly nearest-with-ties-to-even on the integer grid.
  double scaled = std::ldexp(frac, prec);
  double rounded = std::nearbyint(scaled);
  return std::ldexp(rounded, exp - prec);
}

inline bool is_representable(double x, const PrecisionSpec& spec) {
  return std::isfinite(x) && round_to_precision(x, spec) == x;
}

namespace detail {
inline void check_operand([[maybe_unused]] double x,
                          [[maybe_unused]] const PrecisionSpec& spec) {
  assert(is_representable(x, spec) && "operand not representable in spec");
}
}  // namespace detail

// Correctly rounded basic operations: the exact result is formed in the
// binary64 carrier and rounded once into the target width.
inline double fp_add(double x, double y, const PrecisionSpec& spec) {
  detail::check_operand(x, spec);
  detail::check_operand(y, spec);
  return round_to_precision(x + y, spec);
}

inline double fp_sub(double x, double y, const PrecisionSpec& spec) {
  detail::check_operand(x, spec);
  detail::check_operand(y, spec);
  return round_to_precision(x - y, spec);
}

inline double fp_mul(double x, double y, const PrecisionSpec& spec) {
  detail::check_operand(x, spec);
  detail::check_operand(y, spec);
  return round_to_precision(x * y, spec);
}

inline double fp_div(double x, double y, const PrecisionSpec& spec) {
  detail::check_operand(x, spec);
  detail::check_operand(y, spec);
  if (y == 0.0) throw std::domain_error("division by zero");
  return round_to_precision(x / y, spec);
}

inline double fp_sqrt(double x, const PrecisionSpec& spec) {
  detail::check_operand(x, spec);
  if (x < 0.0) throw std::domain_error("sqrt of negative operand");
  return round_to_precision(std::sqrt(x), spec);
}

// Distance to the next representable value of larger magnitude. For
// |x| in [2^k, 2^(k+1)) this is 2^(k - m), equivalently
// 2 * spacing-to-midpoint = rho * 2^(k+1).
inline double ulp_spacing(double x, const PrecisionSpec& spec) {
  if (!std::isfinite(x)) throw std::domain_error("non-finite operand");
  if (x == 0.0)
    throw std::domain_error("ulp_spacing undefined at zero with an unbounded exponent");
  int exp;
  std::frexp(x, &exp);  // |x| in [2^(exp-1), 2^exp)
  return std::ldexp(1.0, exp - 1 - spec.mantissa_bits);
}

}  // namespace lpmc
