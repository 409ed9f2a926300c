#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kdilate/error.hpp"
#include "kdilate/hopf.hpp"
#include "kdilate/linalg.hpp"

#include <cmath>

using namespace kdilate;

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec v3(double a, double b, double c) {
  Vec y(3);
  y << a, b, c;
  return y.normalized();
}

// Hopf fiber over (1,0,0) is z2 = 0, over (-1,0,0) is z1 = 0.
Polyline circle(int i, int j, int n, double phase = 0.0) {
  Polyline out;
  for (int t = 0; t < n; ++t) {
    Vec x = Vec::Zero(4);
    const double a = 2.0 * kPi * t / n + phase;
    x(i) = std::cos(a);
    x(j) = std::sin(a);
    out.push_back(x);
  }
  return out;
}

Polyline reversed(Polyline p) {
  std::reverse(p.begin(), p.end());
  return p;
}

// Midpoint-rule Gauss double integral after stereographic projection from
// a pole away from both curves.
double gauss_sum(const Polyline& a, const Polyline& b) {
  Vec pole(4);
  pole << 0.5, -0.5, 0.5, 0.5;
  const Mat column = pole;
  Eigen::HouseholderQR<Mat> qr(column);
  Mat q = qr.householderQ();  // first column +-pole
  Mat r(4, 4);
  r.row(0) = q.col(1).transpose();
  r.row(1) = q.col(2).transpose();
  r.row(2) = q.col(3).transpose();
  r.row(3) = pole.transpose();
  if (r.determinant() < 0) r.row(0) *= -1.0;
  auto proj = [&](const Vec& x) -> Eigen::Vector3d {
    const Vec z = r * x;
    return Eigen::Vector3d(z(0), z(1), z(2)) / (1.0 - z(3));
  };
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Eigen::Vector3d a0 = proj(a[i]), a1 = proj(a[(i + 1) % a.size()]);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const Eigen::Vector3d b0 = proj(b[j]), b1 = proj(b[(j + 1) % b.size()]);
      const Eigen::Vector3d r = 0.5 * (a0 + a1) - 0.5 * (b0 + b1);
      s += r.dot((a1 - a0).cross(b1 - b0)) / std::pow(r.norm(), 3);
    }
  }
  return s / (4.0 * kPi);
}

double length(const Polyline& p) {
  double l = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) l += (p[(i + 1) % p.size()] - p[i]).norm();
  return l;
}

}  // namespace

TEST_CASE("traced hopf fibers are great circles") {
  for (const Vec& y : regular_value_candidates()) {
    const CurveTrace t = trace_preimage(hopf(), y);
    REQUIRE(t.components.size() == 1);
    CHECK(t.max_residual < 1e-10);
    CHECK(length(t.components[0]) == doctest::Approx(2.0 * kPi).epsilon(1e-4));
    for (const Vec& x : t.components[0]) CHECK(std::abs(x.norm() - 1.0) < 1e-12);
    CHECK(t.closure_gaps[0] < t.step);
  }
}

TEST_CASE("no fiber over a value outside the image") {
  const CurveTrace t = trace_preimage(constant(Space::sphere(3), Space::sphere(2)), v3(0.3, 0.4, 0.5));
  CHECK(t.components.empty());
}

TEST_CASE("linking of closed-form fibers") {
  const Polyline a = circle(0, 1, 400), b = circle(2, 3, 400, 0.3);
  const double l = linking_value(a, b);
  CHECK(std::abs(std::abs(l) - 1.0) < 1e-9);
  CHECK(linking_value(b, a) == doctest::Approx(l).epsilon(1e-9));
  CHECK(linking_value(reversed(a), b) == doctest::Approx(-l).epsilon(1e-9));
  CHECK(gauss_sum(a, b) == doctest::Approx(l).epsilon(1e-3));
  CHECK(linking_number(a, b) == static_cast<int>(std::round(l)));
  // unlinked: two fibers of the projection onto a plane are disjoint parallel circles
  Polyline c, d;
  for (int t = 0; t < 300; ++t) {
    const double s = 2.0 * kPi * t / 300;
    Vec x(4), y(4);
    x << 0.6 * std::cos(s), 0.6 * std::sin(s), 0.8, 0.0;
    y << 0.6 * std::cos(s), 0.6 * std::sin(s), -0.8, 0.0;
    c.push_back(x);
    d.push_back(y);
  }
  CHECK(std::abs(linking_value(c, d)) < 1e-9);
  CHECK(std::abs(gauss_sum(c, d)) < 1e-3);
}

TEST_CASE("linking agrees with the Gauss integral on traced fibers") {
  const MapExpr e = compose(hopf(), degree_wrap(2));
  const auto c = regular_value_candidates();
  const CurveTrace a = trace_preimage(e, c[0]), b = trace_preimage(e, c[1]);
  REQUIRE(a.components.size() == 1);
  REQUIRE(b.components.size() == 1);
  CHECK(linking_value(a, b) == doctest::Approx(gauss_sum(a.components[0], b.components[0])).epsilon(1e-3));
}

TEST_CASE("coarse or touching curves are refused") {
  const Polyline a = circle(0, 1, 400);
  Polyline b = circle(0, 1, 400, 0.001);
  for (Vec& x : b) {
    x(2) = 0.01;
    x.normalize();
  }
  CHECK_THROWS_AS(linking_number(a, b), NumericalError);
}

TEST_CASE("hopf invariant of the hopf family") {
  CHECK(hopf_invariant(hopf()).invariant == 1);
  CHECK(std::abs(hopf_invariant(hopf()).raw_linking - 1.0) < 0.1);
  for (int d = 1; d <= 3; ++d) CHECK(hopf_invariant(compose(hopf(), degree_wrap(d))).invariant == d);
  CHECK(hopf_invariant(compose(hopf(), degree_wrap(-2))).invariant == -2);
  CHECK(hopf_invariant(compose(hopf(), reflection(3))).invariant == -1);
  CHECK(hopf_invariant(compose(hopf(), degree_wrap(0))).invariant == 0);
  CHECK(hopf_invariant(constant(Space::sphere(3), Space::sphere(2))).invariant == 0);
  // precomposing with a rotation does not change it
  const Vec from = v3(1, 2, 3), to = v3(-1, 0, 2);
  Vec f4(4), t4(4);
  f4 << from, 0.0;
  t4 << to, 0.0;
  CHECK(hopf_invariant(compose(hopf(), rotation(rotation_taking(f4, t4)))).invariant == 1);
}

TEST_CASE("independent of the regular-value pair and of refinement") {
  const MapExpr e = compose(hopf(), degree_wrap(3));
  for (int pair = 0; pair < 5; ++pair) {
    HopfOptions o;
    o.pair = pair;
    const auto h = hopf_invariant(e, o);
    CHECK(h.invariant == 3);
    CHECK(std::abs(h.raw_linking - 3.0) < 0.1);
  }
  HopfOptions fine;
  fine.trace.step = 0.004;
  CHECK(hopf_invariant(e, fine).invariant == 3);
}

TEST_CASE("a value over a non-smooth locus is replaced") {
  // the fiber of hopf o wrap(2) over (-1,0,0) is the circle where wrap is not smooth
  const MapExpr e = compose(hopf(), degree_wrap(2));
  CHECK_THROWS_AS(trace_preimage(e, v3(-1, 0, 0)), NumericalError);
  const auto h = hopf_invariant_at(e, v3(-1, 0, 0), v3(0, 1, 0));
  CHECK(h.invariant == 2);
  CHECK(h.substitutions.size() >= 1);
}

TEST_CASE("argument checks") {
  CHECK_THROWS_AS(trace_preimage(suspend(hopf()), v3(1, 0, 0)), DomainError);
  CHECK_THROWS_AS(trace_preimage(hopf(), Vec::Ones(3)), DomainError);
  CHECK_THROWS_AS(hopf_invariant_at(hopf(), v3(1, 0, 0), v3(1, 0, 0.01)), DomainError);
}

TEST_CASE("gromov audit") {
  const double c = calibrate_gromov_constant(3000);
  CHECK(c > 0.0);
  for (int d = 1; d <= 3; ++d) {
    const auto a = gromov_audit(compose(hopf(), degree_wrap(d)), 3000, c);
    CHECK(a.hopf_invariant == d);
    CHECK(a.pass);
    CHECK(a.ratio == doctest::Approx(d / std::pow(a.dilation2.estimate, 2)));
  }
  const auto z = gromov_audit(constant(Space::sphere(3), Space::sphere(2)), 1000, c);
  CHECK(z.hopf_invariant == 0);
  CHECK(z.dilation2.estimate == 0.0);
  CHECK(z.ratio == 0.0);
  CHECK(z.pass);
  const json j = z.to_json();
  for (const char* key : {"hopf_invariant", "dilation2", "ratio", "fitted_C", "pass"}) CHECK(j.contains(key));
}
