#pragma once

// Hopf invariant of maps S^3 -> S^2 as the linking number of two regular
// fibers, and the empirical |H| <= C D^2 audit.

#include "kdilate/dilation.hpp"
#include "kdilate/mapexpr.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kdilate {

using Polyline = std::vector<Vec>;  // closed: last vertex joins the first

struct CurveTrace {
  std::vector<Polyline> components;
  Vec regular_value;
  double step = 0.0;
  std::vector<double> closure_gaps;
  double max_residual = 0.0;  // max |f(v) - y| over vertices
  double min_rank_margin = 0.0;  // smallest second singular value of the constraint at seeds

  json to_json() const;
};

struct TraceOptions {
  double step = 0.01;
  int max_halvings = 5;
  std::uint64_t seed_samples = 3000;
  std::uint64_t seed = 0x686f7066ULL;
  double newton_tol = 1e-12;
  std::size_t max_vertices = 400000;
  double rank_threshold = 1e-3;
};

// Throws NumericalError on a rank drop at a seed ("not regular"), when a
// component comes within one step of a non-smooth locus, or when the
// corrector fails after max_halvings step halvings.
CurveTrace trace_preimage(const MapExpr& e, const Vec& y, const TraceOptions& opt = {});

// Linking number before rounding: curves are stereographically projected
// from the first pole of a fixed list that is far from both, and the
// exact segment-pair solid-angle sum is evaluated.
double linking_value(const Polyline& a, const Polyline& b, unsigned threads = 0);
// Rounded; throws NumericalError("curves too coarse") when the value is
// more than 0.1 away from an integer, or when the curves come closer than
// ten edge lengths.
int linking_number(const Polyline& a, const Polyline& b, unsigned threads = 0);
// Sum over all component pairs.
double linking_value(const CurveTrace& a, const CurveTrace& b, unsigned threads = 0);

// The twelve icosahedron vertices, in a fixed order.
std::vector<Vec> regular_value_candidates();

struct HopfOptions {
  TraceOptions trace;
  int max_attempts = 20;
  int pair = 0;  // which admissible (y1, y2) pair to use
  unsigned threads = 0;
};

struct HopfComputation {
  int invariant = 0;
  double raw_linking = 0.0;
  Vec y1, y2;
  CurveTrace trace1, trace2;
  std::vector<std::string> substitutions;  // regular-value replacements made

  json to_json(bool with_vertices = false) const;
};

HopfComputation hopf_invariant(const MapExpr& e, const HopfOptions& opt = {});
HopfComputation hopf_invariant_at(const MapExpr& e, const Vec& y1, const Vec& y2, const HopfOptions& opt = {});

struct GromovAudit {
  int hopf_invariant = 0;
  DilationReport dilation2;
  double ratio = 0.0;  // |H| / D^2, 0 when H = 0
  double fitted_c = 0.0;
  bool pass = false;

  json to_json() const;
};

// 1.25 times the largest |H|/D^2 over hopf ∘ degree_wrap(d), d = 1..3.
double calibrate_gromov_constant(std::uint64_t budget, const HopfOptions& opt = {}, const DilationOptions& dopt = {});

GromovAudit gromov_audit(const MapExpr& e, std::uint64_t budget, double fitted_c, const HopfOptions& opt = {},
                         const DilationOptions& dopt = {});

}  // namespace kdilate
