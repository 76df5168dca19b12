#include "exactmrf/numerics.hpp"

#include <cctype>
#include <stdexcept>

#include "exactmrf/errors.hpp"

namespace exactmrf {

LogValue LogValue::from_linear(double value) {
  if (!(value >= 0.0) || std::isinf(value))
    throw std::domain_error("LogValue: linear value must be finite and non-negative");
  return value == 0.0 ? zero() : from_log(std::log(value));
}

LogValue log_add(LogValue a, LogValue b) noexcept {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  double hi = a.log(), lo = b.log();
  if (hi < lo) std::swap(hi, lo);
  return LogValue::from_log(hi + std::log1p(std::exp(lo - hi)));
}

LogValue operator+(LogValue a, LogValue b) noexcept { return log_add(a, b); }

LogValue operator/(LogValue a, LogValue b) {
  if (b.is_zero()) throw std::domain_error("LogValue: division by zero");
  if (a.is_zero()) return LogValue::zero();
  return LogValue::from_log(a.log() - b.log());
}

LogDifference log_sub(LogValue a, LogValue b) {
  if (b.is_zero()) return {a, 0.0};
  const double inf = std::numeric_limits<double>::infinity();
  if (a.is_zero()) throw NegativeResult("log_sub: subtracting a positive value from zero");
  double d = b.log() - a.log();
  if (d >= 0.0) {
    double tol = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a.log()));
    if (d <= tol) return {LogValue::zero(), inf};
    throw NegativeResult("log_sub: result would be negative");
  }
  // log(1 - e^d), switching formulas at d = -ln 2 for accuracy.
  double log1mexp = d > -0.6931471805599453 ? std::log(-std::expm1(d)) : std::log1p(-std::exp(d));
  return {LogValue::from_log(a.log() + log1mexp), -log1mexp / 2.302585092994046};
}

LogValue pow_int(LogValue base, std::uint64_t exponent) noexcept {
  if (exponent == 0) return LogValue::one();
  if (base.is_zero()) return LogValue::zero();
  return LogValue::from_log(base.log() * static_cast<double>(exponent));
}

ExactRational::ExactRational(long num, unsigned long den) : value_(num, den) {
  if (den == 0) throw std::domain_error("ExactRational: zero denominator");
  value_.canonicalize();
}

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

mpz_class pow10(unsigned long e) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), 10, e);
  return r;
}

}  // namespace

ExactRational ExactRational::from_decimal(std::string_view text) {
  auto fail = [&] { return std::invalid_argument("not an exact decimal: '" + std::string(text) + "'"); };
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) throw fail();

  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    std::string_view num = s.substr(0, slash), den = s.substr(slash + 1);
    bool neg = !num.empty() && (num.front() == '-' || num.front() == '+');
    std::string_view num_digits = neg ? num.substr(1) : num;
    if (!all_digits(num_digits) || !all_digits(den)) throw fail();
    mpz_class n(std::string(num_digits), 10), d(std::string(den), 10);
    if (d == 0) throw fail();
    if (num.front() == '-') n = -n;
    return ExactRational(mpq_class(n, d));
  }

  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_part = s.substr(e + 1);
    s = s.substr(0, e);
    bool exp_neg = false;
    if (!exp_part.empty() && (exp_part.front() == '+' || exp_part.front() == '-')) {
      exp_neg = exp_part.front() == '-';
      exp_part.remove_prefix(1);
    }
    if (!all_digits(exp_part) || exp_part.size() > 6) throw fail();
    exponent = std::stol(std::string(exp_part));
    if (exp_neg) exponent = -exponent;
  }
  std::string digits;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view ip = s.substr(0, dot), fp = s.substr(dot + 1);
    if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)))
      throw fail();
    digits = std::string(ip) + std::string(fp);
    exponent -= static_cast<long>(fp.size());
  } else {
    if (!all_digits(s)) throw fail();
    digits = std::string(s);
  }
  mpq_class value{mpz_class(digits, 10)};
  if (exponent > 0)
    value *= pow10(static_cast<unsigned long>(exponent));
  else if (exponent < 0)
    value /= pow10(static_cast<unsigned long>(-exponent));
  if (negative) value = -value;
  return ExactRational(std::move(value));
}

ExactRational ExactRational::from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("ExactRational: non-finite double");
  mpq_class q;
  mpq_set_d(q.get_mpq_t(), value);
  return ExactRational(std::move(q));
}

std::string ExactRational::to_string() const {
  if (value_.get_den() == 1) return value_.get_num().get_str();
  return value_.get_num().get_str() + "/" + value_.get_den().get_str();
}

std::optional<std::string> ExactRational::to_decimal() const {
  mpz_class den = value_.get_den();
  unsigned long twos = mpz_remove(den.get_mpz_t(), den.get_mpz_t(), mpz_class(2).get_mpz_t());
  unsigned long fives = mpz_remove(den.get_mpz_t(), den.get_mpz_t(), mpz_class(5).get_mpz_t());
  if (den != 1) return std::nullopt;
  unsigned long places = std::max(twos, fives);
  mpz_class scaled = value_.get_num() * pow10(places) / value_.get_den();
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string digits = scaled.get_str();
  if (places > 0) {
    if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
    digits.insert(digits.size() - places, ".");
  }
  return negative ? "-" + digits : digits;
}

double ExactRational::log() const {
  if (sgn(value_) <= 0) {
    if (sgn(value_) == 0) return -std::numeric_limits<double>::infinity();
    throw std::domain_error("ExactRational::log of a negative value");
  }
  long num_exp = 0, den_exp = 0;
  double num_mant = mpz_get_d_2exp(&num_exp, value_.get_num_mpz_t());
  double den_mant = mpz_get_d_2exp(&den_exp, value_.get_den_mpz_t());
  return std::log(num_mant / den_mant) + static_cast<double>(num_exp - den_exp) * 0.6931471805599453;
}

std::optional<ExactRational> ExactRational::sqrt() const {
  if (sgn(value_) < 0) return std::nullopt;
  const mpz_class& n = value_.get_num();
  const mpz_class& d = value_.get_den();
  if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return std::nullopt;
  mpz_class rn, rd;
  mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
  return ExactRational(mpq_class(rn, rd));
}

ExactRational operator/(const ExactRational& a, const ExactRational& b) {
  if (b.is_zero()) throw std::domain_error("ExactRational: division by zero");
  return ExactRational(mpq_class(a.value_ / b.value_));
}

ExactRational pow_int(const ExactRational& base, std::uint64_t exponent) {
  mpz_class num, den;
  mpz_pow_ui(num.get_mpz_t(), base.raw().get_num_mpz_t(), exponent);
  mpz_pow_ui(den.get_mpz_t(), base.raw().get_den_mpz_t(), exponent);
  return ExactRational(mpq_class(num, den));
}

LogValue to_log_value(const ExactRational& v) {
  if (v.sign() < 0) throw std::domain_error("to_log_value: negative rational");
  return v.is_zero() ? LogValue::zero() : LogValue::from_log(v.log());
}

}  // namespace exactmrf
