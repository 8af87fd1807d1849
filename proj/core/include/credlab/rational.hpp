#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace credlab {

// Thrown when a rational computation leaves the range representable with
// 64-bit numerator/denominator.  Callers that work on large grids should use
// the double-based code paths instead of pushing rationals past this limit.
class rational_overflow : public std::overflow_error {
public:
  rational_overflow() : std::overflow_error("rational arithmetic overflow") {}
};

// Exact rational number with a 64-bit numerator and positive 64-bit
// denominator, always stored in lowest terms.  Small auction instances (value
// and cost grids, bid menus, tie-break probabilities) stay inside this range
// comfortably, which lets profit comparisons be exact rather than tolerance
// based.
class Rat {
public:
  constexpr Rat() : num_(0), den_(1) {}
  Rat(std::int64_t n) : num_(n), den_(1) {}
  Rat(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  // Parses either an integer, a decimal literal such as "0.625", or a
  // fraction such as "5/3".  Decimal conversion is exact.
  static Rat parse(const std::string& text);

  // Exact conversion of a double that is a short decimal (at most nine
  // fractional digits after rounding).  Throws std::invalid_argument when the
  // value does not round-trip, which signals that the caller should not
  // pretend the input is exact.
  static Rat from_decimal(double x);

  friend Rat operator+(const Rat& a, const Rat& b) {
    return Rat(checked(add(mul(a.num_, b.den_), mul(b.num_, a.den_))),
               checked(mul(a.den_, b.den_)));
  }
  friend Rat operator-(const Rat& a, const Rat& b) {
    return Rat(checked(sub(mul(a.num_, b.den_), mul(b.num_, a.den_))),
               checked(mul(a.den_, b.den_)));
  }
  friend Rat operator*(const Rat& a, const Rat& b) {
    return Rat(checked(mul(a.num_, b.num_)), checked(mul(a.den_, b.den_)));
  }
  friend Rat operator/(const Rat& a, const Rat& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return Rat(checked(mul(a.num_, b.den_)), checked(mul(a.den_, b.num_)));
  }
  Rat operator-() const { return Rat(-num_, den_); }

  Rat& operator+=(const Rat& o) { return *this = *this + o; }
  Rat& operator-=(const Rat& o) { return *this = *this - o; }
  Rat& operator*=(const Rat& o) { return *this = *this * o; }
  Rat& operator/=(const Rat& o) { return *this = *this / o; }

  friend bool operator==(const Rat& a, const Rat& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rat& a, const Rat& b) {
    __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  // "3", "3/4" style rendering used in pretty reports and test output.
  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

private:
  static __int128 add(__int128 a, __int128 b) { return a + b; }
  static __int128 sub(__int128 a, __int128 b) { return a - b; }
  static __int128 mul(__int128 a, __int128 b) { return a * b; }
  static std::int64_t checked(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) throw rational_overflow();
    return static_cast<std::int64_t>(v);
  }

  void normalize() {
    if (den_ == 0) throw std::domain_error("rational with zero denominator");
    if (den_ < 0) {
      if (num_ == INT64_MIN || den_ == INT64_MIN) throw rational_overflow();
      num_ = -num_;
      den_ = -den_;
    }
    std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
    if (num_ == 0) den_ = 1;
  }

  std::int64_t num_;
  std::int64_t den_;
};

inline Rat abs(const Rat& r) { return r.num() < 0 ? -r : r; }

inline Rat Rat::parse(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    std::int64_t n = std::stoll(text.substr(0, slash));
    std::int64_t d = std::stoll(text.substr(slash + 1));
    return Rat(n, d);
  }
  auto dot = text.find('.');
  if (dot == std::string::npos) return Rat(std::stoll(text));
  std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  std::size_t frac_len = text.size() - dot - 1;
  if (frac_len > 18) throw std::invalid_argument("decimal literal too long");
  std::int64_t den = 1;
  for (std::size_t i = 0; i < frac_len; ++i) den = checked(mul(den, 10));
  return Rat(std::stoll(digits), den);
}

inline Rat Rat::from_decimal(double x) {
  // Scale by powers of ten until the value is integral; nine digits covers
  // every literal that appears in scenario files.
  double scale = 1.0;
  for (int digits = 0; digits <= 9; ++digits) {
    double rounded = std::nearbyint(x * scale);
    if (rounded / scale == x && std::abs(rounded) < 9.2e18) {
      return Rat(static_cast<std::int64_t>(rounded),
                 static_cast<std::int64_t>(scale));
    }
    scale *= 10.0;
  }
  throw std::invalid_argument("double is not a short decimal: " +
                              std::to_string(x));
}

}  // namespace credlab

template <>
struct std::hash<credlab::Rat> {
  std::size_t operator()(const credlab::Rat& r) const noexcept {
    std::size_t h = std::hash<std::int64_t>{}(r.num());
    h ^= std::hash<std::int64_t>{}(r.den()) + 0x9e3779b97f4a7c15ULL + (h << 6) +
         (h >> 2);
    return h;
  }
};
