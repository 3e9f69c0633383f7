#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <string>
#include <vector>

#include "atprep/errors.hpp"

namespace atprep {

// Interpolation schedule f with f(0) = 0 and f(1) = 1. Polynomials
// f(s) = sum_m c_m s^m (m >= 1) keep f holomorphic on all of C; the
// coefficient sum must equal 1 so that f(1) = 1.
class schedule {
 public:
  static schedule linear() {
    schedule f;
    f.coeffs_ = {1.0};
    return f;
  }

  static schedule polynomial(std::vector<double> coeffs) {
    if (coeffs.empty()) throw config_error("schedule: polynomial needs at least one coefficient");
    double sum = 0;
    for (double c : coeffs) {
      if (!std::isfinite(c)) throw config_error("schedule: non-finite coefficient");
      sum += c;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw config_error("schedule: coefficients must sum to 1 (f(1) = 1), got " + std::to_string(sum));
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    schedule f;
    f.coeffs_ = std::move(coeffs);
    return f;
  }

  bool is_linear() const { return coeffs_.size() == 1; }  // then coeffs_[0] == 1
  const std::vector<double>& coefficients() const { return coeffs_; }

  // Real evaluation with exact endpoints.
  double operator()(double s) const {
    if (s == 0.0) return 0.0;
    if (s == 1.0) return 1.0;
    return eval(std::complex<double>(s, 0)).real();
  }

  // Raw holomorphic evaluation (no endpoint snapping); used by the rho machinery.
  std::complex<double> eval(std::complex<double> z) const {
    std::complex<double> acc(0, 0);
    for (std::size_t m = coeffs_.size(); m-- > 0;) acc = acc * z + coeffs_[m];
    return acc * z;
  }

  std::string kind_name() const { return is_linear() ? "linear" : "polynomial"; }

 private:
  schedule() = default;
  std::vector<double> coeffs_;  // powers s^1 .. s^n
};

}  // namespace atprep
