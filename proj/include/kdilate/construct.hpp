#pragma once

// Realizing the suspension Sigma^p a of a class a in pi_m(S^n) by a map
// S^(m+p) -> S^(n+p) with small k-dilation: fold a thin, long rectangle
// into the sphere, map it by a product of cube maps rescaled to unit size,
// and collapse everything else to the basepoint.

#include "kdilate/ledger.hpp"
#include "kdilate/mapexpr.hpp"

#include <optional>

namespace kdilate {

struct SuspensionMap {
  MapExpr map;      // S^(m+p) -> S^(n+p)
  ChartPtr chart;   // R -> S^(m+p)
  MapExpr inner;    // R -> S^(n+p)
  int m = 0, n = 0, p = 0;
  double epsilon = 1.0;
  double lipschitz = 0.0;        // L: bounds both cube maps
  double smash_lipschitz = 0.0;
  double distortion = 0.0;       // Q of the chart

  // (L_s Q)^k (L/eps)^n (L eps^(m/p))^(k-n) for k > n, (L_s Q L/eps)^k otherwise.
  double predicted_bound(int k) const;
  // (m/p)(k - n - (n/m)p)
  double epsilon_exponent(int k) const;
};

// f1: [0,1]^m -> S^n constant on the boundary, f2: [0,1]^p -> S^p constant
// on the boundary and of degree 1. Boundary values are rotated onto the
// basepoints when needed.
SuspensionMap rectangle_suspension(const ledger::HomotopyClassDescriptor& a, MapExpr f1, MapExpr f2, double eps);

// The standard inputs: f1 = base ∘ cube_collapse(m) for a base map
// S^m -> S^n, f2 = cube_collapse(p).
SuspensionMap rectangle_suspension(const ledger::HomotopyClassDescriptor& a, MapExpr base, double eps);

// Base map S^m -> S^n realizing the descriptor when one is constructible
// here (hopf and its suspensions, identities); nothing otherwise.
std::optional<MapExpr> realize_base(const ledger::HomotopyClassDescriptor& a);

}  // namespace kdilate
