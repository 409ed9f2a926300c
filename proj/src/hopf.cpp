#include "kdilate/hopf.hpp"

#include "kdilate/error.hpp"
#include "kdilate/parallel.hpp"
#include "kdilate/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kdilate {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec unit3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v.normalized();
}

// Level-set geometry of c(x) = E^T f(x) for a regular value y.
struct Level {
  const MapExpr& e;
  Mat basis;  // 3 x 2, e1 x e2 = y
  Vec y;

  Level(const MapExpr& map, const Vec& value) : e(map), basis(sphere_tangent_frame(value)), y(value) {}

  // c, its 2x3 Jacobian in the positive tangent frame t, and f(x).
  void eval(const Vec& x, Vec& c, Mat& jc, Mat& t, Vec& f) const {
    t = sphere_tangent_frame(x);
    Mat w;
    f = e->eval_push(x, t, &w);
    f.normalize();
    c = basis.transpose() * f;
    jc = basis.transpose() * w;
  }

  Vec kernel(const Mat& jc, const Mat& t) const {
    const Eigen::Vector3d r1 = jc.row(0).transpose(), r2 = jc.row(1).transpose();
    const Eigen::Vector3d k = r1.cross(r2);
    return (t * Vec(k)).normalized();
  }

  double rank_margin(const Mat& jc) const {
    const auto s = jacobi_singular_values(jc.transpose());
    return s.size() >= 2 ? s[1] : 0.0;
  }

  bool newton(Vec& x, double tol, int max_iter = 40) const {
    Vec c, f;
    Mat jc, t;
    for (int it = 0; it < max_iter; ++it) {
      eval(x, c, jc, t, f);
      if (!c.allFinite()) return false;
      if (c.norm() < tol) return f.dot(y) > 0.0;
      const Mat g = jc * jc.transpose();
      if (std::abs(g.determinant()) < 1e-24) return false;
      Vec delta = jc.transpose() * g.inverse() * c;
      const double nd = delta.norm();
      if (nd > 0.25) delta *= 0.25 / nd;
      x = (x - t * delta).normalized();
    }
    return false;
  }
};

double min_distance(const Polyline& a, const Polyline& b) {
  double d = std::numeric_limits<double>::infinity();
  for (const Vec& p : a)
    for (const Vec& q : b) d = std::min(d, (p - q).norm());
  return d;
}

double max_edge(const Polyline& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[(i + 1) % a.size()] - a[i]).norm());
  return m;
}

double hausdorff(const Polyline& a, const Polyline& b) {
  auto one = [](const Polyline& p, const Polyline& q) {
    double h = 0.0;
    for (const Vec& x : p) {
      double d = std::numeric_limits<double>::infinity();
      for (const Vec& z : q) d = std::min(d, (x - z).norm());
      h = std::max(h, d);
    }
    return h;
  };
  return std::max(one(a, b), one(b, a));
}

Polyline trace_component(const Level& lv, Vec x0, const TraceOptions& opt) {
  Polyline pts{x0};
  Vec c, f;
  Mat jc, t;
  lv.eval(x0, c, jc, t, f);
  Vec v = lv.kernel(jc, t);
  Vec x = x0;
  double travelled = 0.0, far = 0.0;
  const double h = opt.step;
  while (true) {
    if (pts.size() > opt.max_vertices) throw NumericalError("trace_preimage: component did not close");
    double hh = h;
    Vec xn, vn;
    double dist = 0.0;
    for (int attempt = 0;; ++attempt) {
      xn = (x + hh * v).normalized();
      if (lv.newton(xn, opt.newton_tol)) {
        lv.eval(xn, c, jc, t, f);
        vn = lv.kernel(jc, t);
        dist = (xn - x).norm();
        if (vn.dot(v) > 0.5 && dist > 0.3 * hh && dist < 1.7 * hh) break;
      }
      if (attempt >= opt.max_halvings)
        throw NumericalError("trace_preimage: corrector failed after " + std::to_string(opt.max_halvings) +
                             " step halvings");
      hh *= 0.5;
    }
    travelled += dist;
    far = std::max(far, (xn - x0).norm());
    if (travelled > 3.0 * h && far > 2.0 * h && (xn - x0).norm() < h) {
      if ((xn - x0).norm() > 0.3 * h) pts.push_back(xn);
      return pts;
    }
    pts.push_back(xn);
    x = xn;
    v = vn;
  }
}

const std::vector<Vec>& pole_list() {
  static const std::vector<Vec> poles = [] {
    std::vector<Vec> out;
    for (int i = 0; i < 4; ++i)
      for (double s : {1.0, -1.0}) {
        Vec p = Vec::Zero(4);
        p(i) = s;
        out.push_back(p);
      }
    for (int mask = 0; mask < 16; ++mask) {
      Vec p(4);
      for (int i = 0; i < 4; ++i) p(i) = (mask >> i) & 1 ? -0.5 : 0.5;
      out.push_back(p);
    }
    return out;
  }();
  return poles;
}

// Signed solid angle subtended between segments (p1,p2) and (p3,p4), as in
// Klenin & Langowski; sums to 4 pi times the linking number.
double segment_pair(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2, const Eigen::Vector3d& p3,
                    const Eigen::Vector3d& p4) {
  const Eigen::Vector3d r13 = p3 - p1, r14 = p4 - p1, r23 = p3 - p2, r24 = p4 - p2;
  Eigen::Vector3d n[4] = {r13.cross(r14), r14.cross(r24), r24.cross(r23), r23.cross(r13)};
  for (auto& v : n) {
    const double l = v.norm();
    if (l < 1e-300) return 0.0;
    v /= l;
  }
  auto as = [](double v) { return std::asin(std::clamp(v, -1.0, 1.0)); };
  const double omega = as(n[0].dot(n[1])) + as(n[1].dot(n[2])) + as(n[2].dot(n[3])) + as(n[3].dot(n[0]));
  const double sign = (p4 - p3).cross(p2 - p1).dot(r13);
  return sign > 0 ? omega : (sign < 0 ? -omega : 0.0);
}

std::vector<Eigen::Vector3d> project(const Polyline& a, const Mat& rot) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(a.size());
  for (const Vec& x : a) {
    const Vec z = rot * x;
    out.emplace_back(z(0) / (1.0 - z(3)), z(1) / (1.0 - z(3)), z(2) / (1.0 - z(3)));
  }
  return out;
}

}  // namespace

json CurveTrace::to_json() const {
  json j;
  j["regular_value"] = std::vector<double>(regular_value.data(), regular_value.data() + regular_value.size());
  j["step"] = step;
  j["max_residual"] = max_residual;
  json comps = json::array();
  for (std::size_t i = 0; i < components.size(); ++i) {
    json verts = json::array();
    for (const Vec& v : components[i]) verts.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    comps.push_back(json{{"closure_gap", closure_gaps[i]}, {"vertices", verts}});
  }
  j["components"] = comps;
  return j;
}

CurveTrace trace_preimage(const MapExpr& e, const Vec& y, const TraceOptions& opt) {
  if (!e || e->domain() != Space::sphere(3) || e->codomain() != Space::sphere(2))
    throw DomainError("trace_preimage: needs a map S^3 -> S^2");
  if (y.size() != 3 || std::abs(y.norm() - 1.0) > 1e-9) throw DomainError("trace_preimage: y must be a unit 3-vector");
  if (!(opt.step > 0.0)) throw DomainError("trace_preimage: step must be positive");
  const Level lv(e, y);
  CurveTrace out;
  out.regular_value = y;
  out.step = opt.step;
  out.min_rank_margin = std::numeric_limits<double>::infinity();

  const DomainSampler sampler(Space::sphere(3), opt.seed);
  for (std::uint64_t i = 0; i < opt.seed_samples; ++i) {
    Vec x = sampler.point(i);
    if (e->eval(x).dot(y) < 0.5) continue;
    bool covered = false;
    for (const auto& comp : out.components) {
      for (const Vec& p : comp)
        if ((p - x).norm() < 2.0 * opt.step) {
          covered = true;
          break;
        }
      if (covered) break;
    }
    if (covered) continue;
    if (!lv.newton(x, opt.newton_tol)) continue;
    bool near = false;
    for (const auto& comp : out.components) {
      for (const Vec& p : comp)
        if ((p - x).norm() < 2.0 * opt.step) {
          near = true;
          break;
        }
      if (near) break;
    }
    if (near) continue;
    Vec c, f;
    Mat jc, t;
    lv.eval(x, c, jc, t, f);
    const double margin = lv.rank_margin(jc);
    out.min_rank_margin = std::min(out.min_rank_margin, margin);
    if (margin <= opt.rank_threshold) {
      std::ostringstream os;
      os << "trace_preimage: value is not regular (rank margin " << margin << " at a seed)";
      throw NumericalError(os.str());
    }
    Polyline comp = trace_component(lv, x, opt);
    for (const Vec& p : comp)
      if (e->kink_distance(p) < opt.step)
        throw NumericalError("trace_preimage: preimage runs along a non-smooth locus of the map");
    bool dup = false;
    for (const auto& other : out.components)
      if (hausdorff(comp, other) < 3.0 * opt.step) dup = true;
    if (dup) continue;
    out.closure_gaps.push_back((comp.back() - comp.front()).norm());
    out.components.push_back(std::move(comp));
  }
  for (const auto& comp : out.components)
    for (const Vec& p : comp) out.max_residual = std::max(out.max_residual, (e->eval(p) - y).norm());
  if (out.components.empty()) out.min_rank_margin = 0.0;
  return out;
}

double linking_value(const Polyline& a, const Polyline& b, unsigned threads) {
  if (a.size() < 3 || b.size() < 3) return 0.0;
  const Vec* pole = nullptr;
  double best = -1.0;
  for (const Vec& p : pole_list()) {
    double d = std::numeric_limits<double>::infinity();
    for (const Vec& x : a) d = std::min(d, (x - p).norm());
    for (const Vec& x : b) d = std::min(d, (x - p).norm());
    if (d >= 0.5) {
      pole = &p;
      break;
    }
    if (d > best) {
      best = d;
      pole = &p;
    }
  }
  Vec north = Vec::Zero(4);
  north(3) = 1.0;
  const Mat rot = rotation_taking(*pole, north);
  const auto pa = project(a, rot), pb = project(b, rot);
  std::vector<double> rows(pa.size());
  parallel_for(pa.size(), threads, [&](std::size_t i) {
    const auto& p1 = pa[i];
    const auto& p2 = pa[(i + 1) % pa.size()];
    double s = 0.0;
    for (std::size_t j = 0; j < pb.size(); ++j) s += segment_pair(p1, p2, pb[j], pb[(j + 1) % pb.size()]);
    rows[i] = s;
  });
  return pairwise_sum(rows.data(), rows.size()) / (4.0 * kPi);
}

int linking_number(const Polyline& a, const Polyline& b, unsigned threads) {
  const double edge = std::max(max_edge(a), max_edge(b));
  if (min_distance(a, b) <= 10.0 * edge) throw NumericalError("linking_number: curves closer than ten edge lengths");
  const double v = linking_value(a, b, threads);
  const double r = std::round(v);
  if (std::abs(v - r) > 0.1) {
    std::ostringstream os;
    os << "linking_number: curves too coarse (value " << v << ")";
    throw NumericalError(os.str());
  }
  return static_cast<int>(r);
}

double linking_value(const CurveTrace& a, const CurveTrace& b, unsigned threads) {
  double s = 0.0;
  for (const auto& ca : a.components)
    for (const auto& cb : b.components) s += linking_value(ca, cb, threads);
  return s;
}

std::vector<Vec> regular_value_candidates() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec> out;
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0}) out.push_back(unit3(0.0, s2, s1 * phi));
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0}) out.push_back(unit3(s2, s1 * phi, 0.0));
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0}) out.push_back(unit3(s2 * phi, 0.0, s1));
  return out;
}

json HopfComputation::to_json(bool with_vertices) const {
  json j;
  j["hopf_invariant"] = invariant;
  j["raw_linking"] = raw_linking;
  j["y1"] = std::vector<double>(y1.data(), y1.data() + y1.size());
  j["y2"] = std::vector<double>(y2.data(), y2.data() + y2.size());
  auto summary = [&](const CurveTrace& t) {
    json s;
    s["components"] = t.components.size();
    std::vector<std::size_t> sizes;
    for (const auto& c : t.components) sizes.push_back(c.size());
    s["vertices"] = sizes;
    s["closure_gaps"] = t.closure_gaps;
    s["max_residual"] = t.max_residual;
    s["step"] = t.step;
    return s;
  };
  j["trace1"] = with_vertices ? trace1.to_json() : summary(trace1);
  j["trace2"] = with_vertices ? trace2.to_json() : summary(trace2);
  j["substitutions"] = substitutions;
  j["provenance"] = "hopf-meter/linking";
  return j;
}

namespace {

CurveTrace trace_with_retries(const MapExpr& e, Vec& y, const HopfOptions& opt, int& attempts,
                              std::vector<std::string>& subs) {
  const auto cands = regular_value_candidates();
  while (true) {
    try {
      return trace_preimage(e, y, opt.trace);
    } catch (const NumericalError& err) {
      if (++attempts >= opt.max_attempts) throw;
      const Vec nudge = cands[static_cast<std::size_t>(attempts) % cands.size()];
      const Vec old = y;
      y = (y + 0.05 * (nudge - nudge.dot(y) * y)).normalized();
      std::ostringstream os;
      os << "replaced (" << old(0) << "," << old(1) << "," << old(2) << ") by (" << y(0) << "," << y(1) << ","
         << y(2) << "): " << err.what();
      subs.push_back(os.str());
    }
  }
}

}  // namespace

HopfComputation hopf_invariant_at(const MapExpr& e, const Vec& y1, const Vec& y2, const HopfOptions& opt) {
  const double sep = std::acos(std::clamp(y1.normalized().dot(y2.normalized()), -1.0, 1.0));
  if (sep < 0.1) throw DomainError("hopf_invariant: regular values must be at least 0.1 apart");
  HopfComputation out;
  out.y1 = y1.normalized();
  out.y2 = y2.normalized();
  int attempts = 0;
  HopfOptions o = opt;
  for (int shrink = 0;; ++shrink) {
    out.substitutions.clear();
    out.trace1 = trace_with_retries(e, out.y1, o, attempts, out.substitutions);
    out.trace2 = trace_with_retries(e, out.y2, o, attempts, out.substitutions);
    double total = 0.0;
    bool too_close = false;
    for (const auto& a : out.trace1.components)
      for (const auto& b : out.trace2.components)
        if (min_distance(a, b) <= 10.0 * std::max(max_edge(a), max_edge(b))) too_close = true;
    if (too_close && shrink < 3) {
      o.trace.step *= 0.5;
      continue;
    }
    if (too_close) throw NumericalError("hopf_invariant: fibers closer than ten edge lengths even after refinement");
    total = linking_value(out.trace1, out.trace2, opt.threads);
    out.raw_linking = total;
    const double r = std::round(total);
    if (std::abs(total - r) > 0.1) {
      if (shrink < 3) {
        o.trace.step *= 0.5;
        continue;
      }
      std::ostringstream os;
      os << "hopf_invariant: curves too coarse (linking " << total << ")";
      throw NumericalError(os.str());
    }
    out.invariant = static_cast<int>(r);
    return out;
  }
}

HopfComputation hopf_invariant(const MapExpr& e, const HopfOptions& opt) {
  const auto c = regular_value_candidates();
  const std::size_t n = c.size();
  const std::size_t i = (2 * static_cast<std::size_t>(opt.pair)) % n;
  const std::size_t j = (i + 1 + static_cast<std::size_t>(opt.pair) / (n / 2)) % n;
  return hopf_invariant_at(e, c[i], c[j], opt);
}

json GromovAudit::to_json() const {
  json j;
  j["hopf_invariant"] = hopf_invariant;
  j["dilation2"] = dilation2.to_json();
  j["ratio"] = ratio;
  j["fitted_C"] = fitted_c;
  j["pass"] = pass;
  j["provenance"] = "hopf-meter/gromov_audit";
  return j;
}

GromovAudit gromov_audit(const MapExpr& e, std::uint64_t budget, double fitted_c, const HopfOptions& opt,
                         const DilationOptions& dopt) {
  GromovAudit a;
  a.hopf_invariant = hopf_invariant(e, opt).invariant;
  a.dilation2 = kdilation(e, 2, budget, dopt);
  a.fitted_c = fitted_c;
  const double d2 = a.dilation2.estimate * a.dilation2.estimate;
  const double h = std::abs(static_cast<double>(a.hopf_invariant));
  a.ratio = h == 0.0 ? 0.0 : (d2 > 0.0 ? h / d2 : std::numeric_limits<double>::infinity());
  a.pass = h <= fitted_c * d2 * (1.0 + 1e-12);
  return a;
}

double calibrate_gromov_constant(std::uint64_t budget, const HopfOptions& opt, const DilationOptions& dopt) {
  double best = 0.0;
  for (int d = 1; d <= 3; ++d) {
    const MapExpr e = compose(hopf(), degree_wrap(d));
    const int h = hopf_invariant(e, opt).invariant;
    const double dil = kdilation(e, 2, budget, dopt).estimate;
    if (dil <= 0.0) throw NumericalError("calibrate_gromov_constant: zero 2-dilation on the calibration family");
    best = std::max(best, std::abs(h) / (dil * dil));
  }
  return 1.25 * best;
}

}  // namespace kdilate
