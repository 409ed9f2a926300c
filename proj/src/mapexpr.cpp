#include "kdilate/mapexpr.hpp"

#include "kdilate/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kdilate {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace

// ---------------------------------------------------------------------------
// Space

Space Space::sphere(int d) {
  if (d < 0) throw DomainError("sphere dimension must be >= 0");
  Space s;
  s.kind = Kind::sphere;
  s.dim = d;
  return s;
}

Space Space::cube(std::vector<double> edges) {
  if (edges.empty()) throw DomainError("cube needs at least one edge");
  for (double e : edges)
    if (!(e > 0.0) || !std::isfinite(e)) throw DomainError("cube edge lengths must be positive and finite");
  Space s;
  s.kind = Kind::cube;
  s.dim = static_cast<int>(edges.size());
  s.edges = std::move(edges);
  return s;
}

Space Space::unit_cube(int d) {
  if (d < 1) throw DomainError("cube dimension must be >= 1");
  return cube(std::vector<double>(static_cast<std::size_t>(d), 1.0));
}

Space Space::sphere_product(int a, int b) {
  if (a < 1 || b < 1) throw DomainError("sphere product factors must have dimension >= 1");
  Space s;
  s.kind = Kind::sphere_product;
  s.dim = a + b;
  s.a = a;
  s.b = b;
  return s;
}

int Space::ambient() const {
  switch (kind) {
    case Kind::sphere: return dim + 1;
    case Kind::cube: return dim;
    case Kind::sphere_product: return a + b + 2;
  }
  return dim;
}

Vec Space::basepoint() const {
  Vec x = Vec::Zero(ambient());
  switch (kind) {
    case Kind::sphere: x(dim) = -1.0; break;
    case Kind::cube: break;
    case Kind::sphere_product:
      x(a) = -1.0;
      x(a + b + 1) = -1.0;
      break;
  }
  return x;
}

Mat Space::tangent_frame(const Vec& x) const {
  switch (kind) {
    case Kind::sphere: return sphere_tangent_frame(x);
    case Kind::cube: return Mat::Identity(dim, dim);
    case Kind::sphere_product: {
      Mat t = Mat::Zero(ambient(), dim);
      t.block(0, 0, a + 1, a) = sphere_tangent_frame(x.head(a + 1));
      t.block(a + 1, a, b + 1, b) = sphere_tangent_frame(x.tail(b + 1));
      return t;
    }
  }
  return Mat();
}

void Space::check_point(const Vec& x, double tol) const {
  if (x.size() != ambient()) {
    throw DomainError("point has " + std::to_string(x.size()) + " coordinates, " + describe() + " needs " +
                      std::to_string(ambient()));
  }
  if (!x.allFinite()) throw DomainError("point has non-finite coordinates");
  auto unit = [&](const Vec& v) {
    if (std::abs(v.norm() - 1.0) > tol) {
      std::ostringstream os;
      os << "point is off the unit sphere (norm " << v.norm() << ")";
      throw DomainError(os.str());
    }
  };
  switch (kind) {
    case Kind::sphere: unit(x); break;
    case Kind::cube:
      for (int i = 0; i < dim; ++i)
        if (x(i) < -tol || x(i) > edges[static_cast<std::size_t>(i)] + tol)
          throw DomainError("point is outside the cube " + describe());
      break;
    case Kind::sphere_product:
      unit(x.head(a + 1));
      unit(x.tail(b + 1));
      break;
  }
}

Vec Space::retract(const Vec& x) const {
  switch (kind) {
    case Kind::sphere: return x.normalized();
    case Kind::cube: return x;
    case Kind::sphere_product: {
      Vec y(x.size());
      y.head(a + 1) = x.head(a + 1).normalized();
      y.tail(b + 1) = x.tail(b + 1).normalized();
      return y;
    }
  }
  return x;
}

double Space::boundary_distance(const Vec& x) const {
  if (kind != Kind::cube) return kInf;
  double d = kInf;
  for (int i = 0; i < dim; ++i) d = std::min({d, x(i), edges[static_cast<std::size_t>(i)] - x(i)});
  return d;
}

bool Space::operator==(const Space& o) const {
  return kind == o.kind && dim == o.dim && edges == o.edges && a == o.a && b == o.b;
}

std::string Space::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::sphere: os << "S^" << dim; break;
    case Kind::cube:
      os << "cube[";
      for (std::size_t i = 0; i < edges.size(); ++i) os << (i ? "," : "") << edges[i];
      os << "]";
      break;
    case Kind::sphere_product: os << "S^" << a << " x S^" << b; break;
  }
  return os.str();
}

json Space::to_json() const {
  json j;
  switch (kind) {
    case Kind::sphere:
      j["type"] = "sphere";
      j["dim"] = dim;
      break;
    case Kind::cube:
      j["type"] = "cube";
      j["edges"] = edges;
      break;
    case Kind::sphere_product:
      j["type"] = "sphere_product";
      j["a"] = a;
      j["b"] = b;
      break;
  }
  return j;
}

Space Space::from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "sphere") return sphere(j.at("dim").get<int>());
  if (type == "cube") return cube(j.at("edges").get<std::vector<double>>());
  if (type == "sphere_product") return sphere_product(j.at("a").get<int>(), j.at("b").get<int>());
  throw DomainError("unknown space type '" + type + "'");
}

// ---------------------------------------------------------------------------
// MapNode

Vec MapNode::eval(const Vec& x) const {
  dom_.check_point(x);
  Vec y = eval_push(x, Mat(x.size(), 0), nullptr);
  if (!all_finite(y)) throw NumericalError(kind() + ": non-finite value");
  return cod_.retract(y);
}

Mat MapNode::push(const Vec& x, const Mat& v) const {
  dom_.check_point(x);
  Mat w;
  eval_push(x, v, &w);
  if (!w.allFinite()) throw NumericalError(kind() + ": non-finite differential");
  return w;
}

namespace {

// ---------------------------------------------------------------------------
// hopf

class HopfNode : public MapNode {
 public:
  HopfNode() {
    dom_ = Space::sphere(3);
    cod_ = Space::sphere(2);
  }
  std::string kind() const override { return "hopf"; }
  double lipschitz() const override { return 2.0; }
  json to_json() const override { return json{{"kind", "hopf"}}; }

  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override {
    Vec h(3);
    h << x(0) * x(0) + x(1) * x(1) - x(2) * x(2) - x(3) * x(3), 2.0 * (x(0) * x(2) + x(1) * x(3)),
        2.0 * (x(1) * x(2) - x(0) * x(3));
    const double nh = h.norm();
    const Vec u = h / nh;
    if (pushed) {
      Mat dh(3, 4);
      dh << 2 * x(0), 2 * x(1), -2 * x(2), -2 * x(3),
            2 * x(2), 2 * x(3), 2 * x(0), 2 * x(1),
           -2 * x(3), 2 * x(2), 2 * x(1), -2 * x(0);
      const Mat proj = (Mat::Identity(3, 3) - u * u.transpose()) / nh;
      *pushed = proj * dh * v;
    }
    return u;
  }
};

// ---------------------------------------------------------------------------
// rotation

class RotationNode : public MapNode {
 public:
  explicit RotationNode(Mat q) : q_(std::move(q)) {
    if (q_.rows() != q_.cols() || q_.rows() < 2) throw DomainError("rotation: needs a square matrix of size >= 2");
    if (orthonormality_defect(q_) > 1e-10) throw DomainError("rotation: matrix is not orthogonal");
    dom_ = cod_ = Space::sphere(static_cast<int>(q_.rows()) - 1);
  }
  std::string kind() const override { return "rotation"; }
  double lipschitz() const override { return 1.0; }
  json to_json() const override {
    json rows = json::array();
    for (Eigen::Index r = 0; r < q_.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(q_.cols()));
      for (Eigen::Index c = 0; c < q_.cols(); ++c) row[static_cast<std::size_t>(c)] = q_(r, c);
      rows.push_back(row);
    }
    return json{{"kind", "rotation"}, {"matrix", rows}};
  }
  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override {
    if (pushed) *pushed = q_ * v;
    return q_ * x;
  }

 private:
  Mat q_;
};

// ---------------------------------------------------------------------------
// degree_wrap

class DegreeWrapNode : public MapNode {
 public:
  DegreeWrapNode(int d, int i, int j, int dim) : d_(d), i_(i), j_(j) {
    if (dim < 1) throw DomainError("degree_wrap: dimension must be >= 1");
    if (i < 0 || j < 0 || i > dim || j > dim || i == j) throw DomainError("degree_wrap: bad axis pair");
    dom_ = cod_ = Space::sphere(dim);
  }
  std::string kind() const override { return "degree_wrap"; }
  double lipschitz() const override { return std::max(1.0, std::abs(static_cast<double>(d_))); }
  json to_json() const override {
    return json{{"kind", "degree_wrap"}, {"degree", d_}, {"i", i_}, {"j", j_}, {"dim", dom_.dim}};
  }
  double kink_distance(const Vec& x) const override {
    if (d_ == 1) return kInf;
    return std::hypot(x(i_), x(j_));
  }
  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override {
    const double xi = x(i_), xj = x(j_);
    const double r = std::hypot(xi, xj);
    Vec y = x;
    if (r == 0.0) {
      y(i_) = y(j_) = 0.0;
      if (pushed) {
        *pushed = v;
        if (d_ != 1) pushed->row(i_).setZero(), pushed->row(j_).setZero();
      }
      return y;
    }
    const double theta = std::atan2(xj, xi);
    const double c = std::cos(d_ * theta), s = std::sin(d_ * theta);
    y(i_) = r * c;
    y(j_) = r * s;
    if (pushed) {
      *pushed = v;
      for (Eigen::Index col = 0; col < v.cols(); ++col) {
        const double dxi = v(i_, col), dxj = v(j_, col);
        const double dr = (xi * dxi + xj * dxj) / r;
        const double rdt = (xi * dxj - xj * dxi) / r;
        (*pushed)(i_, col) = c * dr - s * d_ * rdt;
        (*pushed)(j_, col) = s * dr + c * d_ * rdt;
      }
    }
    return y;
  }

 private:
  int d_, i_, j_;
};

// ---------------------------------------------------------------------------
// cube_collapse: [0,1]^m -> S^m, boundary to the south pole, centre to the
// north pole. The first direction coordinate is reflected for odd m so the
// degree is +1 with outward-normal-first orientation.

class CubeCollapseNode : public MapNode {
 public:
  explicit CubeCollapseNode(int m) : m_(m) {
    if (m < 1) throw DomainError("cube_collapse: m must be >= 1");
    dom_ = Space::unit_cube(m);
    cod_ = Space::sphere(m);
  }
  std::string kind() const override { return "cube_collapse"; }
  double lipschitz() const override { return (m_ == 1 ? 2.0 : 2.0 * std::sqrt(2.0)) * kPi; }
  json to_json() const override { return json{{"kind", "cube_collapse"}, {"m", m_}}; }

  double kink_distance(const Vec& x) const override {
    const Vec c = (2.0 * x.array() - 1.0).matrix();
    std::vector<double> a(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) a[static_cast<std::size_t>(i)] = std::abs(c(i));
    std::sort(a.begin(), a.end(), std::greater<>());
    double d = std::min(c.norm(), 1.0 - a[0]) / 2.0;
    if (m_ > 1) d = std::min(d, (a[0] - a[1]) / 2.0);
    return d;
  }

  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override {
    const Vec c = (2.0 * x.array() - 1.0).matrix();
    Eigen::Index k = 0;
    const double rho = std::min(1.0, c.cwiseAbs().maxCoeff(&k));
    const double nc = c.norm();
    const double flip = (m_ % 2 == 1) ? -1.0 : 1.0;
    Vec out(m_ + 1);
    const double sr = std::sin(kPi * rho), cr = std::cos(kPi * rho);
    if (nc == 0.0) {
      out.setZero();
      out(m_) = 1.0;
      if (pushed) {
        *pushed = Mat::Zero(m_ + 1, v.cols());
        pushed->topRows(m_) = 2.0 * kPi * v;
        pushed->row(0) *= flip;
      }
      return out;
    }
    Vec w = c / nc;
    out.head(m_) = sr * w;
    out(0) *= flip;
    out(m_) = cr;
    if (pushed) {
      const Mat dc = 2.0 * v;
      const double sk = c(k) >= 0.0 ? 1.0 : -1.0;
      const Eigen::RowVectorXd drho = sk * dc.row(k);
      const Mat dw = (Mat::Identity(m_, m_) - w * w.transpose()) * dc / nc;
      Mat out_d(m_ + 1, v.cols());
      out_d.topRows(m_) = kPi * cr * w * drho + sr * dw;
      out_d.row(0) *= flip;
      out_d.row(m_) = -kPi * sr * drho;
      *pushed = out_d;
    }
    return out;
  }

 private:
  int m_;
};

// ---------------------------------------------------------------------------
// rescale

class RescaleNode : public MapNode {
 public:
  RescaleNode(const Space& cube, std::vector<double> factors) : f_(std::move(factors)) {
    if (cube.kind != Space::Kind::cube) throw DomainError("rescale: domain must be a cube");
    if (f_.size() != cube.edges.size()) throw DomainError("rescale: one factor per axis");
    std::vector<double> out(f_.size());
    for (std::size_t i = 0; i < f_.size(); ++i) {
      if (!(f_[i] > 0.0) || !std::isfinite(f_[i])) throw DomainError("rescale: factors must be positive");
      out[i] = cube.edges[i] * f_[i];
    }
    dom_ = cube;
    cod_ = Space::cube(out);
  }
  std::string kind() const override { return "rescale"; }
  double lipschitz() const override { return *std::max_element(f_.begin(), f_.end()); }
  json to_json() const override { return json{{"kind", "rescale"}, {"edges", dom_.edges}, {"factors", f_}}; }
  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override {
    const Vec f = Eigen::Map<const Vec>(f_.data(), static_cast<Eigen::Index>(f_.size()));
    if (pushed) *pushed = f.asDiagonal() * v;
    return x.cwiseProduct(f);
  }

 private:
  std::vector<double> f_;
};

// ---------------------------------------------------------------------------
// smash: S^n x S^p -> S^(n+p). Each factor goes to the ball of radius 1 by
// the normalized log map at the north pole (south pole to the boundary);
// the pair is then collapsed by the max-norm radial model.

struct LogPart {
  double r = 0.0;  // geodesic distance from the north pole, divided by pi
  Vec a;           // r times the unit direction
  Mat da;
  Eigen::RowVectorXd dr;
};

LogPart log_part(const Vec& u, const Mat& du, bool want_d) {
  const Eigen::Index n = u.size() - 1;
  LogPart out;
  const Vec head = u.head(n);
  const double s = head.norm();
  const double un = u(n);
  const double theta = std::atan2(s, un);
  out.r = theta / kPi;
  if (s > 0.0) {
    const Vec e = head / s;
    out.a = out.r * e;
    if (want_d) {
      const Mat dhead = du.topRows(n);
      const Eigen::RowVectorXd ds = e.transpose() * dhead;
      const Eigen::RowVectorXd dtheta = (un * ds - s * du.row(n)) / (s * s + un * un);
      out.dr = dtheta / kPi;
      const Mat de = (Mat::Identity(n, n) - e * e.transpose()) * dhead / s;
      out.da = e * out.dr + out.r * de;
    }
  } else {
    out.a = Vec::Zero(n);
    if (want_d) {
      out.dr = Eigen::RowVectorXd::Zero(du.cols());
      out.da = un > 0.0 ? Mat(du.topRows(n) / kPi) : Mat(Mat::Zero(n, du.cols()));
    }
  }
  return out;
}

class SmashNode : public MapNode {
 public:
  SmashNode(int n, int p) : n_(n), p_(p) {
    dom_ = Space::sphere_product(n, p);
    cod_ = Space::sphere(n + p);
  }
  std::string kind() const override { return "smash"; }
  double lipschitz() const override { return std::sqrt(2.0); }
  json to_json() const override { return json{{"kind", "smash"}, {"n", n_}, {"p", p_}}; }

  double kink_distance(const Vec& x) const override {
    const double tx = std::atan2(x.head(n_).norm(), x(n_));
    const double ty = std::atan2(x.segment(n_ + 1, p_).norm(), x(n_ + p_ + 1));
    const double z = std::hypot(tx, ty);
    return std::min({std::abs(tx - ty) / 2.0, kPi - tx, kPi - ty, z});
  }

  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override {
    const bool want = pushed != nullptr;
    const int d = n_ + p_;
    const LogPart px = log_part(x.head(n_ + 1), want ? Mat(v.topRows(n_ + 1)) : Mat(), want);
    const LogPart py = log_part(x.tail(p_ + 1), want ? Mat(v.bottomRows(p_ + 1)) : Mat(), want);
    Vec z(d);
    z << px.a, py.a;
    const bool first = px.r >= py.r;
    const double rho = std::min(1.0, first ? px.r : py.r);
    const double nz = z.norm();
    Vec out = Vec::Zero(d + 1);
    const double sr = std::sin(kPi * rho), cr = std::cos(kPi * rho);
    if (nz == 0.0 || rho >= 1.0) {
      out(d) = rho >= 1.0 ? -1.0 : 1.0;
      if (want) {
        *pushed = Mat::Zero(d + 1, v.cols());
        if (rho < 1.0) {
          pushed->topRows(n_) = kPi * px.da;
          pushed->middleRows(n_, p_) = kPi * py.da;
        }
      }
      return out;
    }
    const Vec w = z / nz;
    out.head(d) = sr * w;
    out(d) = cr;
    if (want) {
      Mat dz(d, v.cols());
      dz << px.da, py.da;
      const Eigen::RowVectorXd drho = first ? px.dr : py.dr;
      const Mat dw = (Mat::Identity(d, d) - w * w.transpose()) * dz / nz;
      Mat o(d + 1, v.cols());
      o.topRows(d) = kPi * cr * w * drho + sr * dw;
      o.row(d) = -kPi * sr * drho;
      *pushed = o;
    }
    return out;
  }

 private:
  int n_, p_;
};

// ---------------------------------------------------------------------------
// constant

class ConstantNode : public MapNode {
 public:
  ConstantNode(const Space& d, const Space& c) {
    dom_ = d;
    cod_ = c;
  }
  std::string kind() const override { return "constant"; }
  double lipschitz() const override { return 0.0; }
  json to_json() const override {
    return json{{"kind", "constant"}, {"domain", dom_.to_json()}, {"codomain", cod_.to_json()}};
  }
  Vec eval_push(const Vec&, const Mat& v, Mat* pushed) const override {
    if (pushed) *pushed = Mat::Zero(cod_.ambient(), v.cols());
    return cod_.basepoint();
  }
};

// ---------------------------------------------------------------------------
// suspend: (x cos t, sin t) -> (e(x) cos t, sin t)

class SuspendNode : public MapNode {
 public:
  explicit SuspendNode(MapExpr e) : e_(std::move(e)) {
    if (!e_) throw DomainError("suspend: null expression");
    if (e_->domain().kind != Space::Kind::sphere || e_->codomain().kind != Space::Kind::sphere)
      throw DomainError("suspend: needs a map between spheres");
    dom_ = Space::sphere(e_->domain().dim + 1);
    cod_ = Space::sphere(e_->codomain().dim + 1);
  }
  std::string kind() const override { return "suspend"; }
  double lipschitz() const override { return std::max(1.0, e_->lipschitz()); }
  json to_json() const override { return json{{"kind", "suspend"}, {"children", json::array({kdilate::to_json(e_)})}}; }
  std::vector<MapExpr> children() const override { return {e_}; }

  double kink_distance(const Vec& x) const override {
    const Eigen::Index a = x.size() - 1;
    const double c = x.head(a).norm();
    if (c == 0.0) return 0.0;
    return std::min(c, e_->kink_distance(x.head(a) / c) * c);
  }

  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override {
    const Eigen::Index a = x.size() - 1;
    const Eigen::Index b = cod_.ambient() - 1;
    const Vec P = x.head(a);
    const double c = P.norm();
    Vec out(b + 1);
    if (c == 0.0) {
      out.setZero();
      out(b) = x(a) >= 0.0 ? 1.0 : -1.0;
      if (pushed) *pushed = Mat::Zero(b + 1, v.cols());
      return out;
    }
    const Vec xs = P / c;
    if (!pushed) {
      const Vec y = e_->eval_push(xs, Mat(a, 0), nullptr);
      out.head(b) = c * y;
      out(b) = x(a);
      return out;
    }
    const Mat dP = v.topRows(a);
    const Mat dPt = dP - xs * (xs.transpose() * dP);
    Mat w;
    const Vec y = e_->eval_push(xs, dPt, &w);
    out.head(b) = c * y;
    out(b) = x(a);
    Mat o(b + 1, v.cols());
    o.topRows(b) = w + y * (xs.transpose() * dP);
    o.row(b) = v.row(a);
    *pushed = o;
    return out;
  }

 private:
  MapExpr e_;
};

// ---------------------------------------------------------------------------
// compose, product

class ComposeNode : public MapNode {
 public:
  ComposeNode(MapExpr g, MapExpr f) : g_(std::move(g)), f_(std::move(f)) {
    if (!g_ || !f_) throw DomainError("compose: null expression");
    if (f_->codomain() != g_->domain()) {
      throw DomainError("compose: codomain " + f_->codomain().describe() + " does not match domain " +
                        g_->domain().describe());
    }
    dom_ = f_->domain();
    cod_ = g_->codomain();
  }
  std::string kind() const override { return "compose"; }
  double lipschitz() const override { return g_->lipschitz() * f_->lipschitz(); }
  bool analytic() const override { return g_->analytic() && f_->analytic(); }
  json to_json() const override {
    return json{{"kind", "compose"}, {"children", json::array({kdilate::to_json(g_), kdilate::to_json(f_)})}};
  }
  std::vector<MapExpr> children() const override { return {g_, f_}; }

  double kink_distance(const Vec& x) const override {
    const double df = f_->kink_distance(x);
    const double lf = f_->lipschitz();
    if (lf == 0.0) return df;
    const Vec y = f_->eval_push(x, Mat(x.size(), 0), nullptr);
    return std::min(df, g_->kink_distance(y) / lf);
  }

  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override {
    if (!pushed) return g_->eval_push(f_->eval_push(x, v, nullptr), Mat(f_->codomain().ambient(), 0), nullptr);
    Mat w;
    const Vec y = f_->eval_push(x, v, &w);
    return g_->eval_push(y, w, pushed);
  }

 private:
  MapExpr g_, f_;
};

class ProductNode : public MapNode {
 public:
  ProductNode(MapExpr f1, MapExpr f2) : f1_(std::move(f1)), f2_(std::move(f2)) {
    if (!f1_ || !f2_) throw DomainError("product: null expression");
    if (f1_->domain().kind != Space::Kind::cube || f2_->domain().kind != Space::Kind::cube)
      throw DomainError("product: factors must have cube domains");
    if (f1_->codomain().kind != Space::Kind::sphere || f2_->codomain().kind != Space::Kind::sphere)
      throw DomainError("product: factors must map to spheres");
    std::vector<double> edges = f1_->domain().edges;
    edges.insert(edges.end(), f2_->domain().edges.begin(), f2_->domain().edges.end());
    dom_ = Space::cube(edges);
    cod_ = Space::sphere_product(f1_->codomain().dim, f2_->codomain().dim);
  }
  std::string kind() const override { return "product"; }
  double lipschitz() const override { return std::max(f1_->lipschitz(), f2_->lipschitz()); }
  bool analytic() const override { return f1_->analytic() && f2_->analytic(); }
  json to_json() const override {
    return json{{"kind", "product"}, {"children", json::array({kdilate::to_json(f1_), kdilate::to_json(f2_)})}};
  }
  std::vector<MapExpr> children() const override { return {f1_, f2_}; }

  double kink_distance(const Vec& x) const override {
    const int d1 = f1_->domain().dim;
    return std::min(f1_->kink_distance(x.head(d1)), f2_->kink_distance(x.tail(x.size() - d1)));
  }

  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override {
    const int d1 = f1_->domain().dim;
    const int d2 = f2_->domain().dim;
    const int a1 = f1_->codomain().ambient();
    const int a2 = f2_->codomain().ambient();
    Vec out(a1 + a2);
    if (!pushed) {
      out << f1_->eval_push(x.head(d1), Mat(d1, 0), nullptr), f2_->eval_push(x.tail(d2), Mat(d2, 0), nullptr);
      return out;
    }
    Mat w1, w2;
    out << f1_->eval_push(x.head(d1), v.topRows(d1), &w1), f2_->eval_push(x.tail(d2), v.bottomRows(d2), &w2);
    Mat o(a1 + a2, v.cols());
    o << w1, w2;
    *pushed = o;
    return out;
  }

 private:
  MapExpr f1_, f2_;
};

// ---------------------------------------------------------------------------
// extend: inner on the chart image, basepoint elsewhere

class ExtendNode : public MapNode {
 public:
  ExtendNode(ChartPtr chart, MapExpr inner) : chart_(std::move(chart)), inner_(std::move(inner)) {
    if (!chart_ || !inner_) throw DomainError("extend: null expression");
    if (inner_->domain() != chart_->domain())
      throw DomainError("extend: inner map must be defined on the chart's rectangle");
    dom_ = chart_->codomain();
    cod_ = inner_->codomain();
  }
  std::string kind() const override { return "extend"; }
  double lipschitz() const override { return inner_->lipschitz() * chart_->distortion_bound(); }
  json to_json() const override {
    return json{{"kind", "extend"},
                {"children", json::array({chart_->to_json(), kdilate::to_json(inner_)})}};
  }
  std::vector<MapExpr> children() const override { return {chart_, inner_}; }

  double kink_distance(const Vec& x) const override {
    const auto y = chart_->inverse(x);
    if (!y) return kInf;
    const double inner = std::min(chart_->domain().boundary_distance(*y), inner_->kink_distance(*y));
    return inner / chart_->distortion_bound();
  }

  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override {
    const auto y = chart_->inverse(x);
    if (!y) {
      if (pushed) *pushed = Mat::Zero(cod_.ambient(), v.cols());
      return cod_.basepoint();
    }
    if (!pushed) return inner_->eval_push(*y, Mat(y->size(), 0), nullptr);
    const int d = dom_.dim;
    Mat jc;
    chart_->eval_push(*y, Mat::Identity(d, d), &jc);
    const Mat t = dom_.tangent_frame(x);
    const Mat a = t.transpose() * jc;
    const Mat u = a.partialPivLu().solve(t.transpose() * v);
    return inner_->eval_push(*y, u, pushed);
  }

 private:
  ChartPtr chart_;
  MapExpr inner_;
};

}  // namespace

MapExpr hopf() { return std::make_shared<HopfNode>(); }
MapExpr rotation(const Mat& q) { return std::make_shared<RotationNode>(q); }
MapExpr identity(int d) {
  if (d < 1) throw DomainError("identity: dimension must be >= 1");
  return rotation(Mat::Identity(d + 1, d + 1));
}
MapExpr reflection(int d) {
  if (d < 1) throw DomainError("reflection: dimension must be >= 1");
  Mat q = Mat::Identity(d + 1, d + 1);
  q(0, 0) = -1.0;
  return rotation(q);
}
MapExpr degree_wrap(int d, int i, int j, int dim) { return std::make_shared<DegreeWrapNode>(d, i, j, dim); }
MapExpr cube_collapse(int m) { return std::make_shared<CubeCollapseNode>(m); }
MapExpr rescale(const Space& cube, std::vector<double> factors) {
  return std::make_shared<RescaleNode>(cube, std::move(factors));
}
MapExpr smash(int n, int p) { return std::make_shared<SmashNode>(n, p); }
MapExpr constant(const Space& domain, const Space& codomain) {
  return std::make_shared<ConstantNode>(domain, codomain);
}
MapExpr suspend(MapExpr e) { return std::make_shared<SuspendNode>(std::move(e)); }
MapExpr compose(MapExpr g, MapExpr f) { return std::make_shared<ComposeNode>(std::move(g), std::move(f)); }
MapExpr product(MapExpr f1, MapExpr f2) { return std::make_shared<ProductNode>(std::move(f1), std::move(f2)); }
MapExpr extend(ChartPtr chart, MapExpr inner) {
  return std::make_shared<ExtendNode>(std::move(chart), std::move(inner));
}

json to_json(const MapExpr& e) {
  if (!e) throw DomainError("to_json: null expression");
  return e->to_json();
}

MapExpr map_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    auto child = [&](std::size_t i) { return map_from_json(j.at("children").at(i)); };
    if (kind == "hopf") return hopf();
    if (kind == "rotation") {
      const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
      Mat q(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.empty() ? 0 : rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw DomainError("rotation: ragged matrix");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
      return rotation(q);
    }
    if (kind == "degree_wrap")
      return degree_wrap(j.at("degree").get<int>(), j.at("i").get<int>(), j.at("j").get<int>(), j.at("dim").get<int>());
    if (kind == "cube_collapse") return cube_collapse(j.at("m").get<int>());
    if (kind == "rescale")
      return rescale(Space::cube(j.at("edges").get<std::vector<double>>()), j.at("factors").get<std::vector<double>>());
    if (kind == "smash") return smash(j.at("n").get<int>(), j.at("p").get<int>());
    if (kind == "constant")
      return constant(Space::from_json(j.at("domain")), Space::from_json(j.at("codomain")));
    if (kind == "suspend") return suspend(child(0));
    if (kind == "compose") return compose(child(0), child(1));
    if (kind == "product") return product(child(0), child(1));
    if (kind == "rectangle_chart")
      return rectangle_chart(j.at("m").get<int>(), j.at("p").get<int>(), j.at("epsilon").get<double>());
    if (kind == "extend") {
      auto c = std::dynamic_pointer_cast<const RectangleChart>(child(0));
      if (!c) throw DomainError("extend: first child must be a rectangle_chart");
      return extend(c, child(1));
    }
    throw DomainError("unknown map kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed map expression: ") + e.what());
  }
}

}  // namespace kdilate
