#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "kdilate/construct.hpp"
#include "kdilate/dilation.hpp"
#include "kdilate/error.hpp"
#include "kdilate/linalg.hpp"
#include "kdilate/sampling.hpp"

#include <cmath>
#include <random>

using namespace kdilate;

namespace {

std::vector<double> random_sorted(std::mt19937_64& rng, int d, double scale) {
  std::uniform_real_distribution<double> u(0.0, scale);
  std::vector<double> s(static_cast<std::size_t>(d));
  for (auto& x : s) x = u(rng);
  std::sort(s.rbegin(), s.rend());
  return s;
}

Mat random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g;
  Mat a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = g(rng);
  return a;
}

}  // namespace

TEST_CASE("jacobian examples") {
  DomainSampler s(Space::sphere(3), 1);
  for (int i = 0; i < 500; ++i) {
    const auto id = jacobian(rotation(Mat::Identity(4, 4)), s.point(i));
    for (double x : id.singular_values) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
    // hopf: (2, 2, 0) everywhere
    const auto h = jacobian(hopf(), s.point(i));
    REQUIRE(h.singular_values.size() == 3);
    CHECK(h.singular_values[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(h.singular_values[1] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(h.singular_values[2] < 1e-10);
  }
  Vec x(3);
  x << 0.1, 0.2, 0.3;
  const auto r = jacobian(rescale(Space::cube({1.0, 1.0, 1.0}), {0.5, 3.0, 2.0}), x);
  CHECK(r.singular_values[0] == doctest::Approx(3.0));
  CHECK(r.singular_values[1] == doctest::Approx(2.0));
  CHECK(r.singular_values[2] == doctest::Approx(0.5));
}

TEST_CASE("finite differences refuse to straddle a kink") {
  Vec x(2);
  x << 5e-6, 0.5;
  CHECK_THROWS_AS(jacobian(cube_collapse(2), x, JacobianMode::finite_difference), NumericalError);
  x << 0.3, 0.5;
  CHECK_NOTHROW(jacobian(cube_collapse(2), x, JacobianMode::finite_difference));
}

TEST_CASE("lambda_k_norm examples") {
  CHECK(lambda_k_norm({3, 2, 1}, 2) == 6.0);
  CHECK(lambda_k_norm({2, 2, 0}, 2) == 4.0);
  CHECK(lambda_k_norm({2, 2, 0}, 3) == 0.0);
  CHECK(lambda_k_norm({2, 2}, 3) == 0.0);
  CHECK_THROWS_AS(lambda_k_norm({1}, 0), DomainError);
}

TEST_CASE("lambda_k_norm matches exterior-power oracles") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 300; ++t) {
    const int r = 1 + static_cast<int>(rng() % 6), c = 1 + static_cast<int>(rng() % 6);
    const Mat a = random_matrix(rng, r, c);
    const auto s = jacobi_singular_values(a);
    for (int k = 1; k <= c; ++k) {
      const double lib = lambda_k_norm(s, k);
      const double comp = oracle::compound_norm(a, k);
      CHECK(std::abs(lib - comp) <= 1e-9 * std::max(1.0, comp));
      if (t < 60) {
        const double fr = oracle::frame_maximum(a, k, 200, rng);
        CHECK(std::abs(lib - fr) <= 1e-6 * std::max(1.0, fr));
      }
    }
  }
}

TEST_CASE("interpolation inequality holds on random tuples") {
  std::mt19937_64 rng(7);
  long violations = 0;
  for (int t = 0; t < 100000; ++t) {
    const int d = 1 + static_cast<int>(rng() % 8);
    const auto s = random_sorted(rng, d, t % 2 ? 1.0 : 10.0);
    if (!interpolation_check(s)) ++violations;
  }
  CHECK(violations == 0);
  CHECK(interpolation_check({1, 1, 1}));
  CHECK(interpolation_check({2, 2, 0}));
  CHECK_FALSE(interpolation_check({1, 2}));  // unsorted input is the only way to break it
}

TEST_CASE("lambda_k is log-concave in k, and monotone when s <= 1") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20000; ++t) {
    const int d = 2 + static_cast<int>(rng() % 7);
    const auto s = random_sorted(rng, d, 3.0);
    for (int k = 2; k < d; ++k) {
      const double a = lambda_k_norm(s, k - 1), b = lambda_k_norm(s, k), c = lambda_k_norm(s, k + 1);
      CHECK(b * b >= a * c * (1.0 - 1e-12));
    }
    const auto u = random_sorted(rng, d, 1.0);
    for (int k = 1; k < d; ++k) CHECK(lambda_k_norm(u, k + 1) <= lambda_k_norm(u, k));
  }
}

TEST_CASE("composition is sub-multiplicative") {
  const std::vector<std::pair<MapExpr, MapExpr>> pairs{{hopf(), degree_wrap(3)},
                                                       {hopf(), cube_collapse(3)},
                                                       {suspend(hopf()), suspend(degree_wrap(2))}};
  for (const auto& [g, f] : pairs) {
    const MapExpr gf = compose(g, f);
    DomainSampler s(f->domain(), 13);
    for (int i = 0; i < 500; ++i) {
      const Vec x = s.point(i);
      if (gf->kink_distance(x) < 1e-6) continue;
      const auto jgf = jacobian(gf, x), jf = jacobian(f, x), jg = jacobian(g, f->eval(x));
      for (int k = 1; k <= static_cast<int>(jf.singular_values.size()); ++k)
        CHECK(lambda_k_norm(jgf.singular_values, k) <=
              lambda_k_norm(jg.singular_values, k) * lambda_k_norm(jf.singular_values, k) * (1.0 + 1e-9) + 1e-12);
    }
  }
}

TEST_CASE("kdilation on closed forms") {
  CHECK(kdilation(constant(Space::sphere(3), Space::sphere(2)), 1, 2000).estimate == 0.0);
  CHECK(kdilation(constant(Space::sphere(4), Space::sphere(3)), 3, 2000).estimate == 0.0);

  const auto h = kdilation(hopf(), 2, 5000);
  CHECK(h.estimate >= 3.96);
  CHECK(h.estimate <= 4.0 * (1.0 + 1e-9));
  CHECK(kdilation(hopf(), 3, 2000).estimate < 1e-12);

  const auto id = kdilation(identity(3), 3, 5000);
  CHECK(id.estimate >= 0.99);
  CHECK(id.estimate <= 1.0 + 1e-9);
  CHECK(kdilation(compose(hopf(), degree_wrap(2)), 2, 5000).estimate <= 8.0 * (1.0 + 1e-9));
  CHECK_THROWS_AS(kdilation(hopf(), 0, 10), DomainError);
  CHECK_THROWS_AS(kdilation(hopf(), 1, 0), DomainError);
}

TEST_CASE("kdilation is monotone in budget and independent of thread count") {
  const SuspensionMap sm = rectangle_suspension({3, 2, 1}, hopf(), 0.25);
  DilationOptions one;
  one.threads = 1;
  DilationOptions three = one;
  three.threads = 3;
  double last = 0.0;
  for (std::uint64_t b : {500u, 1000u, 3000u}) {
    const auto r = kdilation(sm.map, 3, b, one);
    CHECK(r.estimate >= last);
    last = r.estimate;
  }
  const auto a = kdilation(sm.map, 3, 3000, one), c = kdilation(sm.map, 3, 3000, three);
  CHECK(a.estimate == c.estimate);
  CHECK(a.argmax_point == c.argmax_point);
  CHECK(a.evaluations == c.evaluations);
}

TEST_CASE("construction stays under its predicted bound") {
  for (double eps : {0.5, 0.25, 0.125}) {
    const SuspensionMap sm = rectangle_suspension({3, 2, 1}, hopf(), eps);
    for (int k : {2, 3}) {
      DilationOptions o;
      o.predicted_bound = sm.predicted_bound(k);
      const auto r = kdilation(sm.map, k, 2000, o);
      CHECK(r.within_prediction());
      CHECK(r.estimate <= *o.predicted_bound * 1.05);
    }
  }
}

TEST_CASE("sweep arguments") {
  const ledger::HomotopyClassDescriptor a{3, 2, 1};
  CHECK_THROWS_AS(scaling_sweep(a, hopf(), 3, {}, 100), DomainError);
  CHECK_THROWS_AS(scaling_sweep(a, hopf(), 3, {0.25, 0.5, 0.0625}, 100), DomainError);
  CHECK_THROWS_AS(scaling_sweep(a, hopf(), 3, {0.5, 0.25}, 100), DomainError);
  try {
    scaling_sweep(a, hopf(), 3, {0.25, std::ldexp(1.0, -10)}, 100);
    FAIL("expected a chart rejection");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("usable: 0.25") != std::string::npos);
  }
}

TEST_CASE("sweep flags a k above the rank") {
  const auto r = scaling_sweep({3, 2, 1}, hopf(), 4, {0.5, 0.25, 0.125, 0.0625}, 300);
  CHECK(r.degenerate);
  CHECK(std::isnan(r.slope));
  CHECK_FALSE(r.slope_within(0.5));
  CHECK(r.predicted_exponent == 4.0);
}

TEST_CASE("sweep output formats") {
  const auto r = scaling_sweep({3, 2, 1}, hopf(), 3, {0.5, 0.25, 0.125, 0.0625}, 300);
  const std::string csv = r.csv();
  CHECK(csv.rfind("epsilon,estimate,budget,ascent_steps,predicted_bound\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  const json j = r.summary();
  CHECK(j["predicted_exponent"].get<double>() == 1.0);
  CHECK(j["residuals"].size() == 4);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
}
