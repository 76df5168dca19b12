#pragma once

// Numeric backends for non-negative weights.
//
// LogValue stores the natural log of a non-negative quantity; ExactRational
// wraps a GMP rational. Both expose the same arithmetic surface (+, *, /,
// pow_int, is_zero, log_of) so the exact engines can be written once as
// templates, with subtraction spelled out separately because its semantics
// differ (exact vs. cancellation-tracked).

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

#include <gmpxx.h>

namespace exactmrf {

enum class NumericMode { LogFloat, ExactRational };

class LogValue {
 public:
  // Default-constructed value is exact zero.
  constexpr LogValue() noexcept = default;

  static constexpr LogValue zero() noexcept { return LogValue{}; }
  static constexpr LogValue one() noexcept { return from_log(0.0); }
  // -inf maps to the zero sentinel; NaN and +inf are rejected.
  static constexpr LogValue from_log(double log_magnitude) {
    if (log_magnitude != log_magnitude || log_magnitude == std::numeric_limits<double>::infinity())
      throw std::domain_error("LogValue: log magnitude must be finite or -inf");
    LogValue v;
    v.log_ = log_magnitude;
    return v;
  }
  static LogValue from_linear(double value);

  constexpr bool is_zero() const noexcept { return log_ == kZeroLog; }
  // Natural log of the represented value; -inf for zero.
  constexpr double log() const noexcept { return log_; }
  double linear() const noexcept { return is_zero() ? 0.0 : std::exp(log_); }

  friend constexpr bool operator==(LogValue a, LogValue b) noexcept { return a.log_ == b.log_; }
  friend constexpr std::partial_ordering operator<=>(LogValue a, LogValue b) noexcept {
    return a.log_ <=> b.log_;
  }

  friend LogValue operator+(LogValue a, LogValue b) noexcept;
  friend constexpr LogValue operator*(LogValue a, LogValue b) noexcept {
    if (a.is_zero() || b.is_zero()) return zero();
    LogValue v;
    v.log_ = a.log_ + b.log_;
    return v;
  }
  // Throws std::domain_error on division by zero.
  friend LogValue operator/(LogValue a, LogValue b);
  LogValue& operator+=(LogValue b) noexcept { return *this = *this + b; }
  LogValue& operator*=(LogValue b) noexcept { return *this = *this * b; }

 private:
  static constexpr double kZeroLog = -std::numeric_limits<double>::infinity();
  double log_ = kZeroLog;
};

static_assert(sizeof(LogValue) == sizeof(double));
static_assert(std::is_standard_layout_v<LogValue> && std::is_trivially_copyable_v<LogValue>);

// Result of a log-domain subtraction. `digits_lost` estimates the decimal
// digits of relative precision destroyed by cancellation: log10(a / (a - b)).
struct LogDifference {
  LogValue value;
  double digits_lost = 0.0;
};

LogValue log_add(LogValue a, LogValue b) noexcept;
// Requires a >= b. Throws NegativeResult when b exceeds a beyond a few ulps;
// within that tolerance the result is zero with digits_lost = +inf.
LogDifference log_sub(LogValue a, LogValue b);
// 0^0 = 1.
LogValue pow_int(LogValue base, std::uint64_t exponent) noexcept;

class ExactRational {
 public:
  ExactRational() = default;
  ExactRational(long value) : value_(value) {}  // NOLINT(google-explicit-constructor)
  ExactRational(long num, unsigned long den);
  explicit ExactRational(mpq_class value) : value_(std::move(value)) { value_.canonicalize(); }

  // Accepts "12", "-0.125", "3.5e-7", "1E+3" and "num/den". Exact: no
  // binary rounding is involved. Throws std::invalid_argument.
  static ExactRational from_decimal(std::string_view text);
  // Exact value of the binary double.
  static ExactRational from_double(double value);

  // "num/den", or "num" for integers.
  std::string to_string() const;
  // Terminating decimal expansion when the denominator is 2^a 5^b.
  std::optional<std::string> to_decimal() const;

  std::string numerator() const { return value_.get_num().get_str(); }
  std::string denominator() const { return value_.get_den().get_str(); }
  int sign() const { return sgn(value_); }
  bool is_zero() const { return sgn(value_) == 0; }
  // Natural log; works far outside double range. -inf for zero.
  double log() const;
  double to_double() const { return value_.get_d(); }
  // Exact square root when both numerator and denominator are squares.
  std::optional<ExactRational> sqrt() const;

  const mpq_class& raw() const { return value_; }

  friend bool operator==(const ExactRational& a, const ExactRational& b) { return a.value_ == b.value_; }
  friend std::strong_ordering operator<=>(const ExactRational& a, const ExactRational& b) {
    int c = cmp(a.value_, b.value_);
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }
  friend ExactRational operator+(const ExactRational& a, const ExactRational& b) {
    return ExactRational(mpq_class(a.value_ + b.value_));
  }
  friend ExactRational operator-(const ExactRational& a, const ExactRational& b) {
    return ExactRational(mpq_class(a.value_ - b.value_));
  }
  friend ExactRational operator*(const ExactRational& a, const ExactRational& b) {
    return ExactRational(mpq_class(a.value_ * b.value_));
  }
  // Throws std::domain_error on division by zero.
  friend ExactRational operator/(const ExactRational& a, const ExactRational& b);
  ExactRational& operator+=(const ExactRational& b) {
    value_ += b.value_;
    return *this;
  }
  ExactRational& operator*=(const ExactRational& b) {
    value_ *= b.value_;
    return *this;
  }

 private:
  mpq_class value_;
};

ExactRational pow_int(const ExactRational& base, std::uint64_t exponent);

inline bool is_zero(LogValue v) noexcept { return v.is_zero(); }
inline bool is_zero(const ExactRational& v) { return v.is_zero(); }
inline double log_of(LogValue v) noexcept { return v.log(); }
inline double log_of(const ExactRational& v) { return v.log(); }

template <class V>
V one_of() {
  if constexpr (std::is_same_v<V, LogValue>)
    return LogValue::one();
  else
    return V(1);
}

LogValue to_log_value(const ExactRational& v);

}  // namespace exactmrf
