#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kdilate/construct.hpp"
#include "kdilate/dilation.hpp"
#include "kdilate/error.hpp"
#include "kdilate/mapexpr.hpp"
#include "kdilate/sampling.hpp"

#include <cmath>
#include <random>

using namespace kdilate;

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

Mat random_rotation(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

// Max relative difference between analytic and finite-difference
// Jacobians over the first `want` points where both can be evaluated.
double chain_rule_error(const MapExpr& e, int want, int* used) {
  DomainSampler s(e->domain(), 99);
  double worst = 0.0;
  int n = 0;
  for (std::uint64_t i = 0; n < want && i < 200000; ++i) {
    const Vec x = s.point(i);
    if (e->kink_distance(x) < 1e-3 || e->domain().boundary_distance(x) < 1e-3) continue;
    JacobianSample a, f;
    try {
      a = jacobian(e, x);
      f = jacobian(e, x, JacobianMode::finite_difference);
    } catch (const NumericalError&) {
      continue;
    }
    const double scale = std::max(1.0, a.matrix.norm());
    worst = std::max(worst, (a.matrix - f.matrix).norm() / scale);
    ++n;
  }
  *used = n;
  return worst;
}

// Signed preimage count of y under a cube map [0,1]^m -> S^m: grid search
// for candidate cells, Newton refinement, sign of the Jacobian determinant.
int grid_degree(const MapExpr& f, const Vec& y, int cells) {
  const int m = f->domain().dim;
  const Mat basis = sphere_tangent_frame(y);
  const double h = 1.0 / cells;
  std::vector<Vec> roots;
  int degree = 0;
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  const double radius = f->lipschitz() * h * std::sqrt(static_cast<double>(m));
  while (true) {
    Vec x(m);
    for (int i = 0; i < m; ++i) x(i) = (idx[static_cast<std::size_t>(i)] + 0.5) * h;
    if ((f->eval(x) - y).norm() < radius) {
      Vec z = x;
      bool ok = false;
      for (int it = 0; it < 60; ++it) {
        Mat w;
        const Vec fz = f->eval_push(z, Mat::Identity(m, m), &w);
        const Vec r = basis.transpose() * fz.normalized();
        if (r.norm() < 1e-13 && fz.dot(y) > 0) {
          ok = true;
          break;
        }
        const Mat j = basis.transpose() * w;
        Vec step = j.fullPivLu().solve(r);
        if (!step.allFinite()) break;
        z -= step;
        for (int i = 0; i < m; ++i) z(i) = std::clamp(z(i), 1e-12, 1.0 - 1e-12);
      }
      if (ok) {
        bool seen = false;
        for (const Vec& r : roots) seen = seen || (r - z).norm() < 1e-7;
        if (!seen) {
          roots.push_back(z);
          const double det = jacobian(f, z).matrix.determinant();
          degree += det > 0 ? 1 : -1;
        }
      }
    }
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == cells) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  return degree;
}

}  // namespace

TEST_CASE("hopf and rotation examples") {
  const MapExpr h = hopf();
  CHECK((h->eval(v({1, 0, 0, 0})) - v({1, 0, 0})).norm() < 1e-15);
  CHECK((h->eval(v({0, 0, 1, 0})) - v({-1, 0, 0})).norm() < 1e-15);
  // z1 = z2 = 1/sqrt2: (0, 1, 0)
  const double r = 1.0 / std::sqrt(2.0);
  CHECK((h->eval(v({r, 0, r, 0})) - v({0, 1, 0})).norm() < 1e-15);
  const MapExpr id = rotation(Mat::Identity(4, 4));
  DomainSampler s(Space::sphere(3), 1);
  for (int i = 0; i < 50; ++i) CHECK((id->eval(s.point(i)) - s.point(i)).norm() < 1e-15);
  CHECK_THROWS_AS(h->eval(v({1, 1, 0, 0})), DomainError);
}

TEST_CASE("sphere outputs stay on the sphere") {
  std::mt19937_64 rng(5);
  const std::vector<MapExpr> maps{hopf(),
                                  compose(hopf(), degree_wrap(3)),
                                  suspend(suspend(hopf())),
                                  smash(2, 1),
                                  rotation(random_rotation(5, rng)),
                                  rectangle_suspension({3, 2, 1}, hopf(), 0.25).map};
  for (const auto& e : maps) {
    DomainSampler s(e->domain(), 3);
    for (int i = 0; i < 2000; ++i) CHECK(std::abs(e->eval(s.point(i)).norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("cube_collapse collapses the boundary and hits the antipode at the centre") {
  for (int m = 1; m <= 4; ++m) {
    const MapExpr c = cube_collapse(m);
    const Vec south = Space::sphere(m).basepoint();
    Vec north = Vec::Zero(m + 1);
    north(m) = 1.0;
    CHECK((c->eval(Vec::Constant(m, 0.5)) - north).norm() < 1e-15);
    std::mt19937_64 rng(m);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      Vec x(m);
      for (int i = 0; i < m; ++i) x(i) = u(rng);
      x(t % m) = (t / m) % 2 ? 1.0 : 0.0;
      CHECK((c->eval(x) - south).norm() < 1e-12);
    }
  }
}

TEST_CASE("cube_collapse has degree one") {
  CHECK(grid_degree(cube_collapse(1), v({0.6, 0.8}), 400) == 1);
  CHECK(grid_degree(cube_collapse(2), v({0.3, -0.5, 0.2}).normalized(), 120) == 1);
  CHECK(grid_degree(cube_collapse(3), v({0.3, -0.5, 0.2, 0.4}).normalized(), 40) == 1);
  // composing with a reflection flips it
  CHECK(grid_degree(compose(reflection(2), cube_collapse(2)), v({0.3, -0.5, 0.2}).normalized(), 120) == -1);
}

TEST_CASE("smash sends the wedge to the basepoint") {
  const MapExpr s = smash(2, 1);
  const Vec base = Space::sphere(3).basepoint();
  DomainSampler a(Space::sphere(2), 4), b(Space::sphere(1), 5);
  for (int i = 0; i < 100; ++i) {
    Vec x(5);
    x << a.point(i), Space::sphere(1).basepoint();
    CHECK((s->eval(x) - base).norm() < 1e-12);
    x << Space::sphere(2).basepoint(), b.point(i);
    CHECK((s->eval(x) - base).norm() < 1e-12);
  }
}

TEST_CASE("analytic Jacobians agree with finite differences") {
  std::mt19937_64 rng(11);
  const ChartPtr chart = rectangle_chart(3, 1, 0.25);
  const std::vector<std::pair<const char*, MapExpr>> maps{
      {"hopf", hopf()},
      {"rotation", rotation(random_rotation(4, rng))},
      {"wrap", degree_wrap(2)},
      {"reflection", reflection(3)},
      {"collapse1", cube_collapse(1)},
      {"collapse2", cube_collapse(2)},
      {"collapse3", cube_collapse(3)},
      {"rescale", rescale(Space::cube({0.5, 2.0}), {2.0, 0.5})},
      {"smash", smash(2, 1)},
      {"smash22", smash(2, 2)},
      {"suspend", suspend(hopf())},
      {"compose", compose(hopf(), degree_wrap(3))},
      {"product", product(compose(hopf(), cube_collapse(3)), cube_collapse(1))},
      {"chart", chart},
      {"suspension", rectangle_suspension({3, 2, 1}, hopf(), 0.25).map},
  };
  for (const auto& [name, e] : maps) {
    CAPTURE(name);
    int used = 0;
    const double err = chain_rule_error(e, 100, &used);
    CHECK(used == 100);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("suspend") {
  const MapExpr s = suspend(identity(2));
  DomainSampler p(Space::sphere(3), 8);
  for (int i = 0; i < 100; ++i) CHECK((s->eval(p.point(i)) - p.point(i)).norm() < 1e-13);

  const MapExpr sh = suspend(hopf());
  DomainSampler q(Space::sphere(3), 9);
  for (int i = 0; i < 100; ++i) {
    Vec x(5);
    x << q.point(i), 0.0;
    Vec want(4);
    want << hopf()->eval(q.point(i)), 0.0;
    CHECK((sh->eval(x) - want).norm() < 1e-13);
  }

  const MapExpr sc = suspend(constant(Space::sphere(3), Space::sphere(2)));
  DomainSampler r(Space::sphere(4), 10);
  for (int i = 0; i < 200; ++i) {
    const auto j = jacobian(sc, r.point(i));
    CHECK(j.singular_values.at(1) < 1e-9);
  }
  CHECK_THROWS_AS(suspend(cube_collapse(2)), DomainError);
}

TEST_CASE("compose checks spaces") {
  CHECK_THROWS_AS(compose(hopf(), hopf()), DomainError);
  CHECK_THROWS_AS(product(hopf(), cube_collapse(1)), DomainError);
}

TEST_CASE("expression JSON round trip") {
  const std::vector<MapExpr> maps{compose(hopf(), degree_wrap(-2)), suspend(reflection(3)),
                                  rectangle_suspension({3, 2, 1}, hopf(), 0.125).map,
                                  constant(Space::sphere(4), Space::sphere(3))};
  for (const auto& e : maps) {
    const json j = to_json(e);
    const MapExpr back = map_from_json(j);
    CHECK(to_json(back).dump() == j.dump());
    DomainSampler s(e->domain(), 12);
    for (int i = 0; i < 50; ++i) CHECK((back->eval(s.point(i)) - e->eval(s.point(i))).norm() == 0.0);
  }
}

TEST_CASE("rectangle chart at eps = 1 is within its declared distortion") {
  const ChartPtr c = rectangle_chart(3, 1, 1.0);
  const double q = c->distortion_bound();
  DomainSampler s(c->domain(), 21);
  for (int i = 0; i < 10000; ++i) {
    const Vec x = s.point(2 * i), y = s.point(2 * i + 1);
    const Vec X = c->eval(x), Y = c->eval(y);
    const double ds = 2.0 * std::asin(std::min(1.0, (X - Y).norm() / 2.0));
    const double ratio = ds / (x - y).norm();
    CHECK(ratio <= q);
    CHECK(ratio >= 1.0 / q);
  }
}

TEST_CASE("rectangle chart local distortion does not depend on eps") {
  for (auto [m, p, eps] : std::vector<std::tuple<int, int, double>>{
           {3, 1, 0.5}, {3, 1, 0.25}, {3, 1, 0.0625}, {2, 1, 0.1}, {2, 2, 0.5}, {1, 2, 0.25}}) {
    CAPTURE(m);
    CAPTURE(p);
    CAPTURE(eps);
    const ChartPtr c = rectangle_chart(m, p, eps);
    const double q = c->distortion_bound();
    DomainSampler s(c->domain(), 22);
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    int pairs = 0;
    for (int i = 0; pairs < 10000; ++i) {
      const Vec x = s.point(i);
      Vec d(m + p);
      for (int k = 0; k < m + p; ++k) d(k) = g(rng);
      // local pairs: separation below the slab thickness
      const Vec y = x + d.normalized() * (0.25 * eps * std::abs(g(rng)) + 1e-9);
      if (c->domain().boundary_distance(y) < 0.0 || (y.array() < 0.0).any()) continue;
      bool inside = true;
      for (int k = 0; k < m + p; ++k) inside = inside && y(k) <= c->domain().edges[static_cast<std::size_t>(k)];
      if (!inside) continue;
      const Vec X = c->eval(x), Y = c->eval(y);
      const double ds = 2.0 * std::asin(std::min(1.0, (X - Y).norm() / 2.0));
      const double ratio = ds / (x - y).norm();
      CHECK(ratio <= q);
      CHECK(ratio >= 1.0 / q);
      ++pairs;
    }
  }
}

TEST_CASE("rectangle chart is injective and inverts") {
  const ChartPtr c = rectangle_chart(3, 1, 0.125);
  DomainSampler s(c->domain(), 31);
  int misses = 0;
  for (int i = 0; i < 3000; ++i) {
    const Vec x = s.point(i);
    const auto back = c->inverse(c->eval(x));
    if (!back) {
      ++misses;
      continue;
    }
    CHECK((*back - x).norm() < 1e-9);
  }
  CHECK(misses == 0);
}

TEST_CASE("rectangle chart image volume") {
  // (m, p, eps) = (3, 1, 1/4): vol(R) = 1
  const ChartPtr c = rectangle_chart(3, 1, 0.25);
  const double q = c->distortion_bound();
  // Monte-Carlo over the sphere
  const double sphere_volume = 8.0 * kPi * kPi / 3.0;
  DomainSampler s(Space::sphere(4), 41);
  const int n = 400000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += c->inverse(s.point(i)) ? 1 : 0;
  const double mc = sphere_volume * hits / n;
  // Jacobian integration over R
  DomainSampler r(c->domain(), 42);
  double sum = 0.0;
  const int nr = 20000;
  for (int i = 0; i < nr; ++i) sum += lambda_k_norm(jacobian(c, r.point(i)).singular_values, 4);
  const double integral = sum / nr;
  CHECK(std::abs(mc - integral) / integral < 0.15);
  CHECK(mc >= std::pow(q, -4.0));
  CHECK(mc <= std::pow(q, 4.0));
}

TEST_CASE("rectangle chart rejects what it cannot hold") {
  CHECK_THROWS_AS(rectangle_chart(3, 1, 1.5), DomainError);
  CHECK_THROWS_AS(rectangle_chart(0, 1, 0.5), DomainError);
  // too thin to fold inside the capacity radius
  CHECK_THROWS_AS(rectangle_chart(3, 1, std::ldexp(1.0, -10)), DomainError);
  CHECK_THROWS_AS(rectangle_chart(2, 3, 1.0 / 16.0), DomainError);
}

TEST_CASE("suspension construction of the suspended Hopf map") {
  const ledger::HomotopyClassDescriptor a{3, 2, 1};
  const SuspensionMap sm = rectangle_suspension(a, hopf(), 0.25);
  CHECK(sm.map->domain() == Space::sphere(4));
  CHECK(sm.map->codomain() == Space::sphere(3));
  CHECK(sm.epsilon_exponent(3) == doctest::Approx(1.0));
  const Vec base = Space::sphere(3).basepoint();

  // complement of the embedded rectangle goes to the basepoint
  DomainSampler s(Space::sphere(4), 51);
  int outside = 0;
  for (int i = 0; outside < 1000; ++i) {
    const Vec x = s.point(i);
    if (sm.chart->inverse(x)) continue;
    CHECK((sm.map->eval(x) - base).norm() < 1e-12);
    ++outside;
  }
  // boundary of R goes to the basepoint
  DomainSampler b(sm.chart->domain(), 52);
  for (int i = 0; i < 400; ++i) {
    Vec y = b.point(i);
    const int axis = i % 4;
    y(axis) = (i / 4) % 2 ? sm.chart->domain().edges[static_cast<std::size_t>(axis)] : 0.0;
    CHECK((sm.map->eval(sm.chart->eval(y)) - base).norm() < 1e-9);
  }
  CHECK_THROWS_AS(rectangle_suspension(ledger::HomotopyClassDescriptor{3, 2, 1}, identity(3), 0.25), DomainError);
}
