#pragma once

#include <limits>
#include <ostream>

namespace pdlab {

/// A value in [-inf, +inf] used for rate functions. Infinity is carried as a
/// tag so optimizers never do arithmetic on IEEE infinities.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT: implicit by intent

  static constexpr ExtendedReal infinity() { return ExtendedReal(Tag::pos_inf); }
  static constexpr ExtendedReal neg_infinity() { return ExtendedReal(Tag::neg_inf); }

  constexpr bool is_finite() const { return tag_ == Tag::finite; }
  constexpr bool is_pos_inf() const { return tag_ == Tag::pos_inf; }
  constexpr bool is_neg_inf() const { return tag_ == Tag::neg_inf; }

  /// Finite value; undefined to call on an infinite value (returns +/-max).
  constexpr double value() const {
    switch (tag_) {
      case Tag::pos_inf: return std::numeric_limits<double>::max();
      case Tag::neg_inf: return -std::numeric_limits<double>::max();
      default: return value_;
    }
  }

  /// Lossy conversion to IEEE double (for printing and CSV output).
  constexpr double to_double() const {
    switch (tag_) {
      case Tag::pos_inf: return std::numeric_limits<double>::infinity();
      case Tag::neg_inf: return -std::numeric_limits<double>::infinity();
      default: return value_;
    }
  }

  friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.tag_ == b.tag_ && (a.tag_ != Tag::finite || a.value_ == b.value_);
  }
  friend constexpr bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.tag_ == b.tag_) return a.tag_ == Tag::finite && a.value_ < b.value_;
    if (a.tag_ == Tag::neg_inf || b.tag_ == Tag::pos_inf) return true;
    return false;
  }
  friend constexpr bool operator<=(const ExtendedReal& a, const ExtendedReal& b) { return !(b < a); }
  friend constexpr bool operator>(const ExtendedReal& a, const ExtendedReal& b) { return b < a; }
  friend constexpr bool operator>=(const ExtendedReal& a, const ExtendedReal& b) { return !(a < b); }

  /// Addition with +inf absorbing. (+inf) + (-inf) is not used by any rate
  /// function and yields +inf.
  friend constexpr ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.is_pos_inf() || b.is_pos_inf()) return infinity();
    if (a.is_neg_inf() || b.is_neg_inf()) return neg_infinity();
    return ExtendedReal(a.value_ + b.value_);
  }
  friend constexpr ExtendedReal operator-(const ExtendedReal& a) {
    if (a.is_pos_inf()) return neg_infinity();
    if (a.is_neg_inf()) return infinity();
    return ExtendedReal(-a.value_);
  }
  friend constexpr ExtendedReal operator-(const ExtendedReal& a, const ExtendedReal& b) { return a + (-b); }

  friend std::ostream& operator<<(std::ostream& os, const ExtendedReal& x) {
    if (x.is_pos_inf()) return os << "+inf";
    if (x.is_neg_inf()) return os << "-inf";
    return os << x.value_;
  }

 private:
  enum class Tag { finite, pos_inf, neg_inf };
  constexpr explicit ExtendedReal(Tag t) : tag_(t) {}

  double value_ = 0.0;
  Tag tag_ = Tag::finite;
};

}  // namespace pdlab
