#pragma once

#include <cmath>
#include <stdexcept>

namespace conelab {

// Value of a one-dimensional minimization that may diverge to -infinity.
// The divergent case is a tagged state, never a floating-point infinity, so
// downstream arithmetic cannot silently absorb it.
class ExtReal {
 public:
  static ExtReal finite(double v) { return ExtReal(true, v); }
  static ExtReal neg_inf() { return ExtReal(false, 0.0); }

  bool is_finite() const { return finite_; }
  bool is_neg_inf() const { return !finite_; }
  double value() const {
    if (!finite_) throw std::logic_error("ExtReal: value() on -inf");
    return v_;
  }
  // Explicit boundary conversion for CSV/python layers.
  double to_double_or_neg_inf() const { return finite_ ? v_ : -HUGE_VAL; }

 private:
  ExtReal(bool f, double v) : finite_(f), v_(v) {}
  bool finite_;
  double v_;
};

}  // namespace conelab
