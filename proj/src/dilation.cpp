#include "kdilate/dilation.hpp"

#include "kdilate/error.hpp"
#include "kdilate/parallel.hpp"
#include "kdilate/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace kdilate {

namespace {

double value_at(const MapExpr& e, const Vec& x, int k, JacobianMode mode) {
  return lambda_k_norm(jacobian(e, x, mode).singular_values, k);
}

struct Ascent {
  double value = -1.0;
  Vec point;
  long steps = 0;
  long evals = 0;
};

Ascent ascend(const MapExpr& e, int k, Vec x, double v, const DilationOptions& opt) {
  Ascent out;
  const Space& dom = e->domain();
  double step = opt.initial_step;
  while (step >= opt.min_step && out.evals < opt.max_evals_per_ascent) {
    const Mat t = dom.tangent_frame(x);
    bool improved = false;
    for (Eigen::Index i = 0; i < t.cols() && !improved; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Vec y = dom.retract(x + sgn * step * t.col(i));
        if (dom.kind == Space::Kind::cube && dom.boundary_distance(y) < 0.0) continue;
        double val;
        try {
          ++out.evals;
          val = value_at(e, y, k, opt.mode);
        } catch (const std::exception&) {
          continue;
        }
        if (val > v) {
          x = std::move(y);
          v = val;
          ++out.steps;
          improved = true;
          break;
        }
        if (out.evals >= opt.max_evals_per_ascent) break;
      }
    }
    if (!improved) step *= 0.5;
  }
  out.value = v;
  out.point = std::move(x);
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

JacobianSample jacobian(const MapExpr& e, const Vec& x, JacobianMode mode, double h) {
  if (!e) throw DomainError("jacobian: null expression");
  const Space& dom = e->domain();
  const Space& cod = e->codomain();
  dom.check_point(x);
  JacobianSample s;
  s.point = x;
  s.mode = mode;
  const Mat tin = dom.tangent_frame(x);
  if (dom.kind != Space::Kind::cube && orthonormality_defect(tin) > 1e-10)
    throw NumericalError("jacobian: tangent frame lost orthonormality");
  if (mode == JacobianMode::analytic) {
    Mat w;
    const Vec y = cod.retract(e->eval_push(x, tin, &w));
    if (!y.allFinite() || !w.allFinite()) throw NumericalError(e->kind() + ": non-finite differential");
    s.matrix = cod.tangent_frame(y).transpose() * w;
  } else {
    if (!(h > 0.0)) throw DomainError("jacobian: finite-difference step must be positive");
    if (e->kink_distance(x) <= h || dom.boundary_distance(x) <= h)
      throw NumericalError("jacobian: point within one step of a non-smooth locus");
    s.h = h;
    const Vec y = e->eval(x);
    const Mat tout = cod.tangent_frame(y);
    s.matrix.resize(tout.cols(), tin.cols());
    for (Eigen::Index i = 0; i < tin.cols(); ++i) {
      const Vec fp = e->eval(dom.retract(x + h * tin.col(i)));
      const Vec fm = e->eval(dom.retract(x - h * tin.col(i)));
      s.matrix.col(i) = tout.transpose() * (fp - fm) / (2.0 * h);
    }
  }
  s.singular_values = jacobi_singular_values(s.matrix);
  return s;
}

double lambda_k_norm(const std::vector<double>& s, int k) {
  if (k < 1) throw DomainError("lambda_k_norm: k must be >= 1");
  if (static_cast<std::size_t>(k) > s.size()) return 0.0;
  double p = 1.0;
  for (int i = 0; i < k; ++i) p *= s[static_cast<std::size_t>(i)];
  return p;
}

bool interpolation_check(const std::vector<double>& s, double slack) {
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double lk = lambda_k_norm(s, static_cast<int>(k));
    const double lk1 = lambda_k_norm(s, static_cast<int>(k) + 1);
    if (lk1 > std::pow(lk, static_cast<double>(k + 1) / k) + slack) return false;
  }
  return true;
}

double pointwise_dilation(const MapExpr& e, const Vec& x, int k) {
  return value_at(e, x, k, JacobianMode::analytic);
}

bool DilationReport::within_prediction(double tol) const {
  return !predicted_bound || estimate <= *predicted_bound * (1.0 + tol);
}

json DilationReport::to_json() const {
  json j;
  j["k"] = k;
  j["estimate"] = estimate;
  j["semantics"] = "lower bound: maximum of |Lambda^k df| over evaluated points";
  j["budget"] = budget;
  j["sample_max"] = sample_max;
  j["ascent_starts"] = ascent_starts;
  j["ascent_steps"] = ascent_steps;
  j["evaluations"] = evaluations;
  j["skipped"] = skipped;
  j["excluded_starts"] = excluded_starts;
  j["argmax_point"] = std::vector<double>(argmax_point.data(), argmax_point.data() + argmax_point.size());
  if (predicted_bound) {
    j["predicted_bound"] = *predicted_bound;
    j["within_prediction"] = within_prediction();
  }
  j["provenance"] = "dilation-engine/kdilation";
  return j;
}

DilationReport kdilation(const MapExpr& e, int k, std::uint64_t budget, const DilationOptions& opt) {
  if (!e) throw DomainError("kdilation: null expression");
  if (k < 1) throw DomainError("kdilation: k must be >= 1");
  if (budget < 1) throw DomainError("kdilation: budget must be >= 1");
  const DomainSampler sampler(e->domain(), opt.seed);

  std::vector<double> values(budget, -1.0);
  parallel_for(budget, opt.threads, [&](std::size_t i) {
    try {
      values[i] = value_at(e, sampler.point(i), k, opt.mode);
    } catch (const std::exception&) {
      values[i] = -1.0;
    }
  });

  DilationReport r;
  r.k = k;
  r.budget = budget;
  r.predicted_bound = opt.predicted_bound;
  std::size_t best = 0;
  for (std::size_t i = 0; i < budget; ++i) {
    if (values[i] < 0.0) ++r.skipped;
    if (values[i] > values[best]) best = i;
  }
  r.estimate = std::max(0.0, values[best]);
  r.sample_max = r.estimate;
  r.argmax_point = sampler.point(best);
  r.evaluations = static_cast<long>(budget);

  // best sample of each block, if positive and away from kinks
  std::vector<std::size_t> starts;
  const std::uint64_t block = std::max<std::uint64_t>(1, opt.block);
  for (std::uint64_t lo = 0; lo < budget; lo += block) {
    const std::uint64_t hi = std::min(budget, lo + block);
    std::size_t b = lo;
    for (std::uint64_t i = lo; i < hi; ++i)
      if (values[i] > values[b]) b = i;
    if (values[b] <= 0.0) continue;
    if (e->kink_distance(sampler.point(b)) < 10.0 * kFdStep) {
      ++r.excluded_starts;
      continue;
    }
    starts.push_back(b);
  }

  std::vector<Ascent> ascents(starts.size());
  parallel_for(starts.size(), opt.threads, [&](std::size_t s) {
    ascents[s] = ascend(e, k, sampler.point(starts[s]), values[starts[s]], opt);
  });
  r.ascent_starts = static_cast<long>(starts.size());
  for (const Ascent& a : ascents) {
    r.ascent_steps += a.steps;
    r.evaluations += a.evals;
    if (a.value > r.estimate) {
      r.estimate = a.value;
      r.argmax_point = a.point;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Scaling sweep

bool SweepResult::slope_within(double tol) const {
  return !degenerate && std::abs(slope - predicted_exponent) <= tol;
}

std::string SweepResult::csv() const {
  std::ostringstream os;
  os << "epsilon,estimate,budget,ascent_steps,predicted_bound\n";
  for (const auto& row : rows) {
    os << format_double(row.epsilon) << ',' << format_double(row.report.estimate) << ',' << row.report.budget << ','
       << row.report.ascent_steps << ','
       << (row.report.predicted_bound ? format_double(*row.report.predicted_bound) : std::string()) << '\n';
  }
  return os.str();
}

json SweepResult::summary() const {
  json j;
  j["m"] = m;
  j["n"] = n;
  j["p"] = p;
  j["k"] = k;
  std::vector<double> grid;
  for (const auto& row : rows) grid.push_back(row.epsilon);
  j["epsilon_grid"] = grid;
  j["fitted_slope"] = degenerate ? json(nullptr) : json(slope);
  j["intercept"] = degenerate ? json(nullptr) : json(intercept);
  j["predicted_exponent"] = predicted_exponent;
  j["residuals"] = residuals;
  j["tolerance"] = 0.15;
  j["within_tolerance"] = slope_within(0.15);
  j["growth"] = !degenerate && slope < 0.0;
  j["degenerate"] = degenerate;
  if (!note.empty()) j["note"] = note;
  json reports = json::array();
  for (const auto& row : rows) {
    json r = row.report.to_json();
    r["epsilon"] = row.epsilon;
    reports.push_back(std::move(r));
  }
  j["reports"] = std::move(reports);
  j["provenance"] = "dilation-engine/scaling_sweep";
  return j;
}

SweepResult scaling_sweep(const ledger::HomotopyClassDescriptor& a, const MapExpr& base, int k,
                          const std::vector<double>& eps_grid, std::uint64_t budget, const DilationOptions& opt) {
  if (eps_grid.empty()) throw DomainError("scaling_sweep: empty epsilon grid");
  if (k < 1) throw DomainError("scaling_sweep: k must be >= 1");
  for (std::size_t i = 1; i < eps_grid.size(); ++i)
    if (!(eps_grid[i] < eps_grid[i - 1])) throw DomainError("scaling_sweep: epsilon grid must be strictly decreasing");
  if (eps_grid.front() / eps_grid.back() < 8.0 * (1.0 - 1e-12))
    throw DomainError("scaling_sweep: epsilon grid must span at least a factor of 8");

  std::vector<double> usable, rejected;
  for (double eps : eps_grid) {
    try {
      rectangle_chart(a.m, a.p, eps);
      usable.push_back(eps);
    } catch (const DomainError&) {
      rejected.push_back(eps);
    }
  }
  if (!rejected.empty()) {
    std::ostringstream os;
    os << "scaling_sweep: rectangle chart rejects epsilon =";
    for (double e : rejected) os << ' ' << format_double(e);
    os << "; usable:";
    for (double e : usable) os << ' ' << format_double(e);
    throw DomainError(os.str());
  }

  SweepResult out;
  out.m = a.m;
  out.n = a.n;
  out.p = a.p;
  out.k = k;
  out.predicted_exponent = boost::rational_cast<double>(ledger::suspension_epsilon_exponent(a.m, a.n, a.p, k));
  // Below this fraction of L^k an estimate is rounding noise from singular
  // values that are exactly zero (rank of df smaller than k).
  constexpr double kZeroFraction = 1e-12;
  std::vector<double> floors;
  for (double eps : eps_grid) {
    const SuspensionMap sm = rectangle_suspension(a, base, eps);
    DilationOptions o = opt;
    o.predicted_bound = sm.predicted_bound(k);
    out.rows.push_back({eps, kdilation(sm.map, k, budget, o)});
    floors.push_back(kZeroFraction * std::pow(sm.map->lipschitz(), k));
  }

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    const auto& row = out.rows[i];
    if (!(row.report.estimate > floors[i])) {
      out.degenerate = true;
      break;
    }
    xs.push_back(std::log(row.epsilon));
    ys.push_back(std::log(row.report.estimate));
  }
  if (out.degenerate) {
    out.slope = std::numeric_limits<double>::quiet_NaN();
    out.intercept = std::numeric_limits<double>::quiet_NaN();
    out.note = "measured k-dilation is zero (below 1e-12 L^k) at some epsilon; log-log slope undefined";
    return out;
  }
  const double nn = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= nn;
  my /= nn;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  for (std::size_t i = 0; i < xs.size(); ++i) out.residuals.push_back(ys[i] - (out.intercept + out.slope * xs[i]));
  return out;
}

}  // namespace kdilate
