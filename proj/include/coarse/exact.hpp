#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <compare>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "coarse/error.hpp"

namespace coarse {

// Expression templates are off so values behave like ordinary value types in
// std::min/std::max and brace initialisation.
using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>, boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<boost::multiprecision::rational_adaptor<boost::multiprecision::cpp_int_backend<>>,
                                               boost::multiprecision::et_off>;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::string to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

// Parses "3", "-0.25", "1.5e-3" or "7/3" without rounding.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&] { return ModelError("not an exact number: '" + std::string(text) + "'"); };
  if (text.empty()) throw fail();

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_rational(text.substr(0, slash));
    Rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) throw fail();
    return num / den;
  }

  std::size_t i = 0;
  bool negative = false;
  if (text[i] == '+' || text[i] == '-') negative = text[i++] == '-';

  BigInt digits = 0;
  long long frac_digits = 0;
  bool seen_digit = false, seen_point = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c >= '0' && c <= '9') {
      digits = digits * 10 + (c - '0');
      seen_digit = true;
      if (seen_point) ++frac_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw fail();

  long long exponent = 0;
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') throw fail();
    ++i;
    std::string_view rest = text.substr(i);
    if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), exponent);
    if (ec != std::errc{} || ptr != rest.data() + rest.size()) throw fail();
    if (exponent > 4000 || exponent < -4000) throw fail();
  }

  exponent -= frac_digits;
  BigInt scale = pow(BigInt(10), static_cast<unsigned>(exponent < 0 ? -exponent : exponent));
  Rational value = exponent < 0 ? Rational(digits, scale) : Rational(digits * scale);
  return negative ? -value : value;
}

// Uses the shortest round-trip decimal of a double, so 0.3 becomes 3/10
// rather than the binary expansion the double actually stores.
inline Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw ModelError("non-finite coordinate");
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return parse_rational(std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data())));
}

// Nonnegative length stored through its exact square, so that Euclidean
// distances such as sqrt(2) compare exactly against rational thresholds.
class Length {
 public:
  Length() = default;

  static Length from_value(const Rational& v) {
    if (v < 0) throw ContractError("negative length");
    Length l;
    l.square_ = v * v;
    l.approx_ = to_double(v);
    l.approx_square_ = to_double(l.square_);
    return l;
  }

  static Length from_square(Rational sq) {
    if (sq < 0) throw ContractError("negative squared length");
    Length l;
    l.approx_square_ = to_double(sq);
    l.approx_ = std::sqrt(l.approx_square_);
    l.square_ = std::move(sq);
    return l;
  }

  static Length infinite() {
    Length l;
    l.infinite_ = true;
    l.approx_ = std::numeric_limits<double>::infinity();
    l.approx_square_ = l.approx_;
    return l;
  }

  // Accepts a plain exact number or "sqrt(<exact number>)".
  static Length parse(std::string_view text) {
    if (text.starts_with("sqrt(") && text.ends_with(")")) {
      return from_square(parse_rational(text.substr(5, text.size() - 6)));
    }
    return from_value(parse_rational(text));
  }

  bool is_infinite() const { return infinite_; }
  bool is_zero() const { return !infinite_ && square_ == 0; }
  const Rational& square() const { return square_; }
  double value() const { return approx_; }
  double approx_square() const { return approx_square_; }

  // "3/2" when the length is rational, "sqrt(2)" otherwise.
  std::string exact_string() const {
    if (infinite_) return "inf";
    BigInt n = numerator(square_), d = denominator(square_);
    BigInt rn = sqrt(n), rd = sqrt(d);
    if (rn * rn == n && rd * rd == d) return to_string(Rational(rn, rd));
    return "sqrt(" + to_string(square_) + ")";
  }

  Length scaled(const Rational& factor) const {
    if (infinite_) return *this;
    return from_square(square_ * factor * factor);
  }

  friend bool operator==(const Length& a, const Length& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.square_ == b.square_;
  }

  friend std::strong_ordering operator<=>(const Length& a, const Length& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ <=> b.infinite_;
    if (a.square_ < b.square_) return std::strong_ordering::less;
    if (b.square_ < a.square_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  Rational square_ = 0;
  double approx_ = 0.0;
  double approx_square_ = 0.0;
  bool infinite_ = false;
};

// Exact rational root when the square is a perfect rational square, otherwise
// a rational upper bound within 10^-digits (relative to the denominator).
inline Rational rational_root_upper(const Length& l, unsigned digits = 12) {
  if (l.is_infinite()) throw ContractError("root of infinite length");
  BigInt n = numerator(l.square()), d = denominator(l.square());
  BigInt rn = sqrt(n), rd = sqrt(d);
  if (rn * rn == n && rd * rd == d) return Rational(rn, rd);
  BigInt scale = pow(BigInt(10), digits);
  BigInt radicand = n * d * scale * scale;
  BigInt root = sqrt(radicand);
  if (root * root != radicand) root += 1;
  return Rational(root, d * scale);
}

// Upper bound for a + b that is exact whenever both inputs are rational.
inline Length sum_upper(const Length& a, const Length& b) {
  if (a.is_infinite() || b.is_infinite()) return Length::infinite();
  return Length::from_value(rational_root_upper(a) + rational_root_upper(b));
}

// Value of a length whose square is a perfect rational square.
inline std::optional<Rational> exact_root(const Length& l) {
  if (l.is_infinite()) return std::nullopt;
  BigInt n = numerator(l.square()), d = denominator(l.square());
  BigInt rn = sqrt(n), rd = sqrt(d);
  if (rn * rn == n && rd * rd == d) return Rational(rn, rd);
  return std::nullopt;
}

// a + b, exact when both are rational, otherwise the upper bound of sum_upper.
inline Length sum_length(const Length& a, const Length& b) {
  auto ra = exact_root(a), rb = exact_root(b);
  if (ra && rb) return Length::from_value(*ra + *rb);
  return sum_upper(a, b);
}

// d > a + b, decided exactly: d^2 - a^2 - b^2 > 2ab, squared once more.
inline bool exceeds_sum(const Length& d, const Length& a, const Length& b) {
  if (a.is_infinite() || b.is_infinite()) return false;
  if (d.is_infinite()) return true;
  Rational lhs = d.square() - a.square() - b.square();
  if (lhs <= 0) return false;
  return lhs * lhs > 4 * a.square() * b.square();
}

}  // namespace coarse
