#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "mobidecomp/ad.hpp"

using namespace mobi;
using Catch::Approx;

namespace {

double fd_gradient(const std::function<double(std::span<const double>)>& f,
                   std::vector<double> x, std::size_t i, double h) {
  x[i] += h;
  const double up = f(x);
  x[i] -= 2 * h;
  const double down = f(x);
  return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("monomial value and gradient") {
  ad::Tape tape;
  std::vector<double> x = {3.0};
  std::vector<double> g(1);
  const double v = ad::gradient(
      tape, [](std::span<const ad::Var> xs) { return xs[0] * xs[0]; }, x, g);
  CHECK(v == Approx(9.0));
  CHECK(g[0] == Approx(6.0));
}

TEST_CASE("product plus log") {
  ad::Tape tape;
  std::vector<double> x = {2.0, 1.0};
  std::vector<double> g(2);
  const double v = ad::gradient(
      tape,
      [](std::span<const ad::Var> xs) { return xs[0] * xs[1] + ad::log(xs[1]); }, x, g);
  CHECK(v == Approx(2.0));
  CHECK(g[0] == Approx(1.0));
  CHECK(g[1] == Approx(3.0));
}

TEST_CASE("every primitive matches finite differences") {
  // Composition touching every supported primitive away from singular points.
  auto compose = [](auto&& span_like) {
    using std::exp;
    using std::log;
    using std::log1p;
    using std::pow;
    using std::sqrt;
    using ad::exp;
    using ad::gamma_p;
    using ad::log;
    using ad::log1p;
    using ad::logistic;
    using ad::pow;
    using ad::softplus;
    using ad::sqrt;
    using math::gamma_p;
    using math::logistic;
    using math::softplus;
    auto a = span_like[0];
    auto b = span_like[1];
    auto c = span_like[2];
    auto r = exp(a * 0.3) + log(b + 2.5) - log1p(a * a) + sqrt(b + 3.0) +
             pow(b + 2.0, 1.7) + logistic(a - c) + softplus(c * 0.5) +
             gamma_p(b + 2.0, c + 1.5) + (a - b) / (c + 4.0) + a * b * c;
    return r;
  };
  auto f_double = [&](std::span<const double> x) { return ad::value_of(compose(x)); };

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  ad::Tape tape;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> x = {unif(rng), unif(rng), unif(rng)};
    std::vector<double> g(3);
    const double v = ad::gradient(
        tape, [&](std::span<const ad::Var> xs) { return compose(xs); }, x, g);
    CHECK(v == Approx(f_double(x)).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i) {
      const double fd = fd_gradient(f_double, x, i, 1e-6);
      CHECK(g[i] == Approx(fd).epsilon(1e-6).margin(1e-8));
    }
  }
}

TEST_CASE("gradient of a sum is the sum of gradients") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> unif(0.2, 2.0);
  ad::Tape tape;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x = {unif(rng), unif(rng)};
    std::vector<double> ga(2), gb(2), gsum(2);
    auto fa = [](std::span<const ad::Var> xs) { return ad::exp(xs[0]) * xs[1]; };
    auto fb = [](std::span<const ad::Var> xs) { return ad::log(xs[0]) - xs[1] * xs[1]; };
    ad::gradient(tape, fa, x, ga);
    ad::gradient(tape, fb, x, gb);
    ad::gradient(
        tape, [&](std::span<const ad::Var> xs) { return fa(xs) + fb(xs); }, x, gsum);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(gsum[i] == Approx(ga[i] + gb[i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("repeated evaluation is bit-identical") {
  ad::Tape tape;
  std::vector<double> x = {0.7, -0.3, 1.9};
  auto f = [](std::span<const ad::Var> xs) {
    return ad::softplus(xs[0] * xs[1]) + ad::gamma_p(xs[2] + 2.0, xs[2] * xs[2]);
  };
  std::vector<double> g1(3), g2(3);
  const double v1 = ad::gradient(tape, f, x, g1);
  const double v2 = ad::gradient(tape, f, x, g2);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("non-finite input rejected") {
  ad::Tape tape;
  std::vector<double> x = {std::numeric_limits<double>::infinity()};
  std::vector<double> g(1);
  try {
    ad::gradient(tape, [](std::span<const ad::Var> xs) { return xs[0] * 2.0; }, x, g);
    FAIL("expected evaluation-error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::evaluation_error);
  }
}

TEST_CASE("non-finite intermediate reports the node") {
  ad::Tape tape;
  std::vector<double> x = {1000.0};
  std::vector<double> g(1);
  try {
    // exp overflows to inf; the later multiply cannot hide it.
    ad::gradient(
        tape, [](std::span<const ad::Var> xs) { return ad::exp(xs[0]) * 0.0; }, x, g);
    FAIL("expected evaluation-error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::evaluation_error);
    CHECK(std::string(e.what()).find("node") != std::string::npos);
  }
}
