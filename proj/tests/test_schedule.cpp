#include <doctest.h>

#include <complex>
#include <vector>

#include "atprep/errors.hpp"
#include "atprep/schedule.hpp"

using namespace atprep;

TEST_CASE("linear schedule is the identity map") {
  const schedule f = schedule::linear();
  CHECK(f.is_linear());
  CHECK(f.kind_name() == "linear");
  CHECK(f(0.0) == 0.0);
  CHECK(f(1.0) == 1.0);
  CHECK(f(0.37) == doctest::Approx(0.37).epsilon(1e-16));
  CHECK(f.coefficients() == std::vector<double>{1.0});
}

TEST_CASE("polynomial evaluation via Horner matches direct powers") {
  const schedule f = schedule::polynomial({0.5, -1.0, 1.5});  // 0.5 s - s^2 + 1.5 s^3
  CHECK(!f.is_linear());
  CHECK(f.kind_name() == "polynomial");
  for (double s : {0.1, 0.25, 0.5, 0.8, 0.99}) {
    const double want = 0.5 * s - s * s + 1.5 * s * s * s;
    CHECK(f(s) == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("endpoints are exact even with roundoff-prone coefficients") {
  const schedule f = schedule::polynomial({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  CHECK(f(0.0) == 0.0);
  CHECK(f(1.0) == 1.0);  // exact despite sum(c) representing 1 inexactly
}

TEST_CASE("coefficients must sum to one") {
  CHECK_THROWS_AS((void)schedule::polynomial({0.5, 0.4}), config_error);
  CHECK_THROWS_AS((void)schedule::polynomial({}), config_error);
  CHECK_THROWS_AS((void)schedule::polynomial({std::nan("")}), config_error);
  CHECK_NOTHROW((void)schedule::polynomial({2.0, -1.0}));
}

TEST_CASE("trailing zero coefficients are stripped") {
  const schedule f = schedule::polynomial({1.0, 0.0, 0.0});
  CHECK(f.coefficients() == std::vector<double>{1.0});
  CHECK(f.is_linear());  // degenerates to the linear schedule
}

TEST_CASE("complex evaluation is the analytic continuation") {
  const schedule f = schedule::polynomial({0.0, 1.0});  // f(z) = z^2
  const std::complex<double> z(0.3, 0.4);
  const std::complex<double> got = f.eval(z);
  CHECK(std::abs(got - z * z) < 1e-15);
  // linear: f(z) = z everywhere
  const schedule lin = schedule::linear();
  CHECK(std::abs(lin.eval(z) - z) < 1e-16);
}

TEST_CASE("complex evaluation has no endpoint snapping") {
  const schedule f = schedule::polynomial({3.0, -2.0});  // 3s - 2s^2
  // real operator() snaps, eval() does not need to agree at machine scale 0/1
  CHECK(f(1.0) == 1.0);
  CHECK(std::abs(f.eval({1.0, 0.0}) - std::complex<double>(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(f.eval({0.5, 0.0}) - std::complex<double>(1.0, 0.0)) < 1e-15);
}
