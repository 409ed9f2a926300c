#include "kdilate/construct.hpp"

#include "kdilate/error.hpp"

#include <cmath>

namespace kdilate {

namespace {

// Value of f on the boundary of its unit-cube domain; throws when f is not
// constant there.
Vec boundary_value(const MapExpr& f) {
  const int d = f->domain().dim;
  std::vector<Vec> probes;
  for (int axis = 0; axis < d; ++axis) {
    for (double side : {0.0, 1.0}) {
      Vec x = Vec::Constant(d, 0.37);
      for (int i = 0; i < d; ++i) x(i) = 0.23 + 0.5 * std::fmod(0.618 * (i + 1) * (axis + 2), 1.0);
      x(axis) = side;
      probes.push_back(x);
    }
  }
  probes.push_back(Vec::Zero(d));
  probes.push_back(Vec::Ones(d));
  const Vec b = f->eval(probes.front());
  for (const Vec& x : probes) {
    if ((f->eval(x) - b).norm() > 1e-9) throw DomainError("cube map is not constant on the boundary of its domain");
  }
  return b;
}

MapExpr pointed(const MapExpr& f) {
  const Vec b = boundary_value(f);
  const Vec base = f->codomain().basepoint();
  if ((b - base).norm() <= 1e-12) return f;
  return compose(rotation(rotation_taking(b, base)), f);
}

}  // namespace

double SuspensionMap::epsilon_exponent(int k) const {
  return static_cast<double>(m) / p * (k - n - static_cast<double>(n) / m * p);
}

double SuspensionMap::predicted_bound(int k) const {
  if (k < 1) throw DomainError("predicted_bound: k must be >= 1");
  const double front = std::pow(smash_lipschitz * distortion, k);
  if (k <= n) return front * std::pow(lipschitz / epsilon, k);
  return front * std::pow(lipschitz / epsilon, n) *
         std::pow(lipschitz * std::pow(epsilon, static_cast<double>(m) / p), k - n);
}

SuspensionMap rectangle_suspension(const ledger::HomotopyClassDescriptor& a, MapExpr f1, MapExpr f2, double eps) {
  a.validate();
  if (a.p < 1) throw DomainError("rectangle construction needs p >= 1");
  if (!f1 || !f2) throw DomainError("rectangle construction: null cube map");
  if (f1->domain() != Space::unit_cube(a.m) || f1->codomain() != Space::sphere(a.n))
    throw DomainError("f1 must map [0,1]^" + std::to_string(a.m) + " to S^" + std::to_string(a.n));
  if (f2->domain() != Space::unit_cube(a.p) || f2->codomain() != Space::sphere(a.p))
    throw DomainError("f2 must map [0,1]^" + std::to_string(a.p) + " to S^" + std::to_string(a.p));

  SuspensionMap out;
  out.m = a.m;
  out.n = a.n;
  out.p = a.p;
  out.epsilon = eps;
  out.chart = rectangle_chart(a.m, a.p, eps);

  const MapExpr g1 = pointed(f1);
  const MapExpr g2 = pointed(f2);
  std::vector<double> factors(static_cast<std::size_t>(a.m), 1.0 / eps);
  factors.insert(factors.end(), static_cast<std::size_t>(a.p), std::pow(eps, static_cast<double>(a.m) / a.p));
  const MapExpr scale = rescale(out.chart->domain(), factors);
  const MapExpr sm = smash(a.n, a.p);
  out.inner = compose(sm, compose(product(g1, g2), scale));
  out.map = extend(out.chart, out.inner);
  out.lipschitz = std::max(f1->lipschitz(), f2->lipschitz());
  out.smash_lipschitz = sm->lipschitz();
  out.distortion = out.chart->distortion_bound();
  return out;
}

SuspensionMap rectangle_suspension(const ledger::HomotopyClassDescriptor& a, MapExpr base, double eps) {
  if (!base) throw DomainError("rectangle construction: null base map");
  if (base->domain() != Space::sphere(a.m) || base->codomain() != Space::sphere(a.n))
    throw DomainError("base map must go S^" + std::to_string(a.m) + " -> S^" + std::to_string(a.n));
  return rectangle_suspension(a, compose(base, cube_collapse(a.m)), cube_collapse(a.p), eps);
}

std::optional<MapExpr> realize_base(const ledger::HomotopyClassDescriptor& a) {
  if (a.m == a.n) return identity(a.n);
  if (a.n >= 2 && a.m == a.n + 1) {
    MapExpr e = hopf();
    for (int i = 2; i < a.n; ++i) e = suspend(e);
    return e;
  }
  return std::nullopt;
}

}  // namespace kdilate
