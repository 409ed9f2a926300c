#pragma once

// Pointwise |Lambda^k df| from singular values and sampled estimates of the
// k-dilation sup |Lambda^k df| over the domain.

#include "kdilate/construct.hpp"
#include "kdilate/mapexpr.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kdilate {

enum class JacobianMode { analytic, finite_difference };

struct JacobianSample {
  Vec point;
  Mat matrix;                          // d_out x d_in in orthonormal tangent frames
  std::vector<double> singular_values; // non-increasing, d_in entries
  JacobianMode mode = JacobianMode::analytic;
  double h = 0.0;                      // finite-difference step, 0 when analytic
};

constexpr double kFdStep = 1e-5;

// Throws NumericalError when a finite-difference stencil would cross a
// non-smooth locus (or leave a cube).
JacobianSample jacobian(const MapExpr& e, const Vec& x, JacobianMode mode = JacobianMode::analytic,
                        double h = kFdStep);

// Product of the k largest singular values; zero when k exceeds the count.
double lambda_k_norm(const std::vector<double>& s, int k);

// |Lambda^(k+1)| <= |Lambda^k|^((k+1)/k) for every k, up to `slack`.
bool interpolation_check(const std::vector<double>& s, double slack = 1e-12);

struct DilationOptions {
  std::uint64_t seed = 0x6b64696c61746531ULL;
  unsigned threads = 0;           // 0: hardware concurrency
  std::uint64_t block = 100;      // one ascent start per block of samples
  double initial_step = 0.05;
  double min_step = 1e-9;
  long max_evals_per_ascent = 4000;
  JacobianMode mode = JacobianMode::analytic;
  std::optional<double> predicted_bound;
};

struct DilationReport {
  int k = 1;
  double estimate = 0.0;        // max of |Lambda^k df| over evaluated points: a lower bound for the sup
  std::uint64_t budget = 0;
  long ascent_steps = 0;        // accepted ascent moves
  long ascent_starts = 0;
  long evaluations = 0;
  long skipped = 0;             // points where the differential could not be evaluated
  long excluded_starts = 0;     // starts dropped for lying near a non-smooth locus
  Vec argmax_point;
  std::optional<double> predicted_bound;
  double sample_max = 0.0;      // best value before ascent

  bool within_prediction(double tol = 0.05) const;
  json to_json() const;
};

DilationReport kdilation(const MapExpr& e, int k, std::uint64_t budget, const DilationOptions& opt = {});

// |Lambda^k df(x)| at one point (analytic mode).
double pointwise_dilation(const MapExpr& e, const Vec& x, int k);

struct SweepRow {
  double epsilon = 0.0;
  DilationReport report;
};

struct SweepResult {
  int m = 0, n = 0, p = 0, k = 0;
  std::vector<SweepRow> rows;
  double slope = 0.0;               // NaN when any estimate is zero
  double intercept = 0.0;
  double predicted_exponent = 0.0;
  std::vector<double> residuals;
  bool degenerate = false;          // some estimate was zero up to rounding: no log-log fit
  std::string note;

  bool slope_within(double tol) const;
  std::string csv() const;
  json summary() const;
};

// Runs kdilation on the rectangle construction for each epsilon and fits
// log(estimate) against log(epsilon). Throws DomainError listing the usable
// part of the grid when the chart rejects some epsilon.
SweepResult scaling_sweep(const ledger::HomotopyClassDescriptor& a, const MapExpr& base, int k,
                          const std::vector<double>& eps_grid, std::uint64_t budget, const DilationOptions& opt = {});

// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace kdilate
