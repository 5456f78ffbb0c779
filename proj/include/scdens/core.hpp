#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace scdens {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedTransform : public Error {
 public:
  using Error::Error;
};

class UnsupportedInstance : public Error {
 public:
  using Error::Error;
};

class ThresholdError : public Error {
 public:
  using Error::Error;
};

class HypothesisError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

// Raised when an iterative numerical routine exhausts its budget.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double partial) : Error(what), partial_(partial) {}
  double partial() const { return partial_; }

 private:
  double partial_;
};

// Real line extended by -inf and +inf. Infinite values carry no payload, so
// they cannot leak into arithmetic without an explicit check.
class ExtReal {
 public:
  enum class Kind { NegInf, Finite, PosInf };

  constexpr ExtReal(double v = 0.0) : kind_(Kind::Finite), v_(v) {
    if (v == kInf) kind_ = Kind::PosInf;
    if (v == -kInf) kind_ = Kind::NegInf;
  }
  static constexpr ExtReal neg_inf() { return ExtReal(Kind::NegInf); }
  static constexpr ExtReal pos_inf() { return ExtReal(Kind::PosInf); }

  constexpr Kind kind() const { return kind_; }
  constexpr bool finite() const { return kind_ == Kind::Finite; }
  constexpr bool is_neg_inf() const { return kind_ == Kind::NegInf; }
  constexpr bool is_pos_inf() const { return kind_ == Kind::PosInf; }

  double value() const {
    if (!finite()) throw DomainError("value() of an infinite extended real");
    return v_;
  }
  // IEEE view, for code that deliberately works with infinities.
  constexpr double as_double() const {
    return kind_ == Kind::Finite ? v_ : (kind_ == Kind::PosInf ? kInf : -kInf);
  }

  friend constexpr bool operator==(ExtReal a, ExtReal b) {
    return a.kind_ == b.kind_ && (a.kind_ != Kind::Finite || a.v_ == b.v_);
  }
  friend constexpr bool operator<(ExtReal a, ExtReal b) { return a.as_double() < b.as_double(); }
  friend constexpr bool operator<=(ExtReal a, ExtReal b) { return a.as_double() <= b.as_double(); }
  friend constexpr bool operator>(ExtReal a, ExtReal b) { return b < a; }
  friend constexpr bool operator>=(ExtReal a, ExtReal b) { return b <= a; }

 private:
  constexpr explicit ExtReal(Kind k) : kind_(k), v_(0.0) {}
  Kind kind_;
  double v_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Default numerical tolerances. Every routine that uses one also accepts an
// override through its own config struct.
namespace tol {
inline constexpr double closed_form = 1e-12;
inline constexpr double concavity = 1e-12;
inline constexpr double finite_difference = 1e-6;
inline constexpr double quadrature = 1e-9;
inline constexpr double normalized = 1e-8;
inline constexpr double s_concavity = 1e-9;
}  // namespace tol

}  // namespace scdens
