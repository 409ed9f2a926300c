#include "kdilate/error.hpp"
#include "kdilate/mapexpr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace kdilate {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTol = 1e-12;
}  // namespace

// One boustrophedon fold: the long axis is cut into strands of height H laid
// out on a grid of cells in the cell axes (pitch 2w, so neighbouring strands
// are a full slab thickness apart) and joined by half-turns in the plane of
// the axis being stepped. Other axes pass through.
struct RectangleChart::Fold {
  int long_axis = 0;
  std::vector<int> cell_axes;
  std::vector<double> width;  // input extent along each cell axis
  std::vector<int> count;     // cells per cell axis
  double length = 0.0;        // input extent along the long axis
  double height = 0.0;        // strand height H
  double shift = 0.0;         // long-axis offset so outputs start at 0
  std::vector<double> start;  // long-axis parameter where strand k begins
  int cells = 1;

  std::vector<int> digits(int k) const {
    const std::size_t q = cell_axes.size();
    std::vector<int> out(q);
    long block = 1;
    for (std::size_t j = 0; j < q; ++j) {
      const long d = (k / block) % count[j];
      const long higher = k / (block * count[j]);
      out[j] = static_cast<int>(higher % 2 == 0 ? d : count[j] - 1 - d);
      block *= count[j];
    }
    return out;
  }

  int index(const std::vector<int>& dig) const {
    long higher = 0;
    for (std::size_t jj = cell_axes.size(); jj-- > 0;) {
      const int d = higher % 2 == 0 ? dig[jj] : count[jj] - 1 - dig[jj];
      higher = higher * count[jj] + d;
    }
    return static_cast<int>(higher);
  }

  // axis position (into cell_axes) and direction of the step k -> k+1
  std::pair<std::size_t, int> step(int k) const {
    const auto a = digits(k), b = digits(k + 1);
    for (std::size_t j = 0; j < a.size(); ++j)
      if (a[j] != b[j]) return {j, b[j] - a[j]};
    throw NumericalError("fold: consecutive cells coincide");
  }

  double turn_length(int k) const { return kPi * width[step(k).first]; }

  std::vector<double> out_extent(const std::vector<double>& in) const {
    std::vector<double> ext = in;
    for (std::size_t j = 0; j < cell_axes.size(); ++j)
      ext[static_cast<std::size_t>(cell_axes[j])] = (count[j] - 1) * 2.0 * width[j] + width[j];
    ext[static_cast<std::size_t>(long_axis)] = height + 2.0 * shift;
    return ext;
  }

  void forward(const Vec& y, const Mat& v, Vec& z, Mat* w) const {
    z = y;
    if (w) *w = v;
    const double t = std::clamp(y(long_axis), 0.0, length);
    int k = static_cast<int>(std::upper_bound(start.begin(), start.end(), t) - start.begin()) - 1;
    k = std::clamp(k, 0, cells - 1);
    const double tl = t - start[static_cast<std::size_t>(k)];
    const auto dig = digits(k);
    for (std::size_t j = 0; j < cell_axes.size(); ++j) {
      const int ax = cell_axes[j];
      const bool even = dig[j] % 2 == 0;
      z(ax) = dig[j] * 2.0 * width[j] + (even ? y(ax) : width[j] - y(ax));
      if (w && !even) w->row(ax) *= -1.0;
    }
    if (tl <= height || k == cells - 1) {
      const bool up = k % 2 == 0;
      z(long_axis) = shift + (up ? tl : height - tl);
      if (w && !up) w->row(long_axis) *= -1.0;
      return;
    }
    const auto [a, s] = step(k);
    const int ax = cell_axes[a];
    const double wa = width[a];
    const bool even = dig[a] % 2 == 0;
    const double sigma = even ? 1.0 : -1.0;
    const double g = even ? y(ax) : wa - y(ax);
    const double r = s > 0 ? 1.5 * wa - g : g + 0.5 * wa;
    const double centre = dig[a] * 2.0 * wa + (s > 0 ? 1.5 * wa : -0.5 * wa);
    const double phi = (tl - height) / wa;
    const bool top = k % 2 == 0;
    const double vv = top ? 1.0 : -1.0;
    z(ax) = centre - s * r * std::cos(phi);
    z(long_axis) = shift + (top ? height : 0.0) + vv * r * std::sin(phi);
    if (w) {
      const Eigen::RowVectorXd dr = -s * sigma * v.row(ax);
      const Eigen::RowVectorXd dphi = v.row(long_axis) / wa;
      w->row(ax) = -s * std::cos(phi) * dr + s * r * std::sin(phi) * dphi;
      w->row(long_axis) = vv * std::sin(phi) * dr + vv * r * std::cos(phi) * dphi;
    }
  }

  std::optional<Vec> inverse(const Vec& z) const {
    const double hz = z(long_axis) - shift;
    std::vector<int> dig(cell_axes.size());
    std::vector<double> off(cell_axes.size());
    auto locate = [&](std::size_t j) {
      const double x = z(cell_axes[j]);
      int i = static_cast<int>(std::floor(x / (2.0 * width[j])));
      i = std::clamp(i, 0, count[j] - 1);
      const double g = x - i * 2.0 * width[j];
      if (g < -kTol * width[j] || g > width[j] * (1.0 + kTol)) return false;
      dig[j] = i;
      off[j] = std::clamp(g, 0.0, width[j]);
      return true;
    };
    auto from_offset = [&](std::size_t j, double g) { return dig[j] % 2 == 0 ? g : width[j] - g; };

    if (hz >= -kTol * height && hz <= height * (1.0 + kTol)) {
      bool inside = true;
      for (std::size_t j = 0; j < cell_axes.size() && inside; ++j) inside = locate(j);
      if (inside) {
        const int k = index(dig);
        const double h = std::clamp(hz, 0.0, height);
        Vec y = z;
        for (std::size_t j = 0; j < cell_axes.size(); ++j) y(cell_axes[j]) = from_offset(j, off[j]);
        y(long_axis) = start[static_cast<std::size_t>(k)] + (k % 2 == 0 ? h : height - h);
        return y;
      }
    }
    const bool top = hz > height;
    const double delta = top ? hz - height : -hz;
    if (delta < 0.0) return std::nullopt;
    for (std::size_t a = 0; a < cell_axes.size(); ++a) {
      const double wa = width[a];
      const double x = z(cell_axes[a]);
      const int q0 = static_cast<int>(std::floor((x - 1.5 * wa) / (2.0 * wa)));
      for (int q = q0; q <= q0 + 1; ++q) {
        if (q < 0 || q > count[a] - 2) continue;
        const double centre = q * 2.0 * wa + 1.5 * wa;
        const double dx = x - centre;
        const double r = std::hypot(dx, delta);
        if (r < 0.5 * wa * (1.0 - kTol) || r > 1.5 * wa * (1.0 + kTol)) continue;
        bool inside = true;
        for (std::size_t j = 0; j < cell_axes.size() && inside; ++j)
          if (j != a) inside = locate(j);
        if (!inside) continue;
        dig[a] = q;
        const int ka = index(dig);
        dig[a] = q + 1;
        const int kb = index(dig);
        if (std::abs(ka - kb) != 1) continue;
        const int k = std::min(ka, kb);
        if (top != (k % 2 == 0)) continue;
        const int s = k == ka ? 1 : -1;
        dig[a] = s > 0 ? q : q + 1;
        const double phi = std::atan2(delta, -s * dx);
        const double g = std::clamp(s > 0 ? 1.5 * wa - r : r - 0.5 * wa, 0.0, wa);
        Vec y = z;
        for (std::size_t j = 0; j < cell_axes.size(); ++j)
          y(cell_axes[j]) = j == a ? from_offset(j, g) : from_offset(j, off[j]);
        y(long_axis) = start[static_cast<std::size_t>(k)] + height + phi * wa;
        return y;
      }
    }
    return std::nullopt;
  }
};

namespace {

using Fold = RectangleChart::Fold;

double half_diagonal(const std::vector<double>& ext) {
  double s = 0.0;
  for (double e : ext) s += e * e;
  return 0.5 * std::sqrt(s);
}

// Chooses the cell counts minimizing the folded half-diagonal; returns
// nullptr when folding does not shorten the box.
std::shared_ptr<Fold> plan_fold(int long_axis, const std::vector<int>& cell_axes, const std::vector<double>& ext) {
  const double T = ext[static_cast<std::size_t>(long_axis)];
  std::vector<double> w;
  double vol = T;
  double wmax = 0.0;
  for (int ax : cell_axes) {
    w.push_back(ext[static_cast<std::size_t>(ax)]);
    vol *= 2.0 * w.back();
    wmax = std::max(wmax, w.back());
  }
  const double side = std::pow(vol, 1.0 / static_cast<double>(cell_axes.size() + 1));
  if (T <= side * (1.0 + 1e-12)) return nullptr;

  const std::size_t q = cell_axes.size();
  std::vector<int> lo(q), hi(q);
  for (std::size_t j = 0; j < q; ++j) {
    const double target = side / (2.0 * w[j]);
    lo[j] = std::max(1, static_cast<int>(std::floor(target)) - 2);
    hi[j] = std::max(lo[j], static_cast<int>(std::ceil(target)) + 2);
  }
  std::vector<int> cur = lo;
  std::shared_ptr<Fold> best;
  double best_diag = std::numeric_limits<double>::infinity();
  while (true) {
    long cells = 1;
    for (int c : cur) cells *= c;
    if (cells >= 2 && cells < 50'000'000) {
      // turns along axis j: (N_j - 1) * prod_{l > j} N_l
      double turns = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        long after = 1;
        for (std::size_t l = j + 1; l < q; ++l) after *= cur[l];
        turns += static_cast<double>((cur[j] - 1) * after) * kPi * w[j];
      }
      const double H = (T - turns) / static_cast<double>(cells);
      if (H >= 2.0 * wmax) {
        std::vector<double> out = ext;
        for (std::size_t j = 0; j < q; ++j) out[static_cast<std::size_t>(cell_axes[j])] = (cur[j] - 1) * 2.0 * w[j] + w[j];
        out[static_cast<std::size_t>(long_axis)] = H + 3.0 * wmax;
        const double diag = half_diagonal(out);
        if (diag < best_diag) {
          best_diag = diag;
          best = std::make_shared<Fold>();
          best->count = cur;
          best->height = H;
        }
      }
    }
    std::size_t j = 0;
    for (; j < q; ++j) {
      if (++cur[j] <= hi[j]) break;
      cur[j] = lo[j];
    }
    if (j == q) break;
  }
  if (!best) return nullptr;
  best->long_axis = long_axis;
  best->cell_axes = cell_axes;
  best->width = w;
  best->length = T;
  best->shift = 1.5 * wmax;
  best->cells = 1;
  for (int c : best->count) best->cells *= c;
  best->start.resize(static_cast<std::size_t>(best->cells));
  double t = 0.0;
  for (int k = 0; k < best->cells; ++k) {
    best->start[static_cast<std::size_t>(k)] = t;
    t += best->height;
    if (k + 1 < best->cells) t += best->turn_length(k);
  }
  return best;
}

}  // namespace

RectangleChart::RectangleChart(int m, int p, double eps) : m_(m), p_(p), eps_(eps), scale_(kChartScale) {
  if (m < 1 || p < 1) throw DomainError("rectangle_chart: m and p must be >= 1");
  if (m + p < 2) throw DomainError("rectangle_chart: m + p must be >= 2");
  if (!(eps > 0.0) || eps > 1.0) throw DomainError("rectangle_chart: epsilon must lie in (0, 1]");
  const double T = std::pow(eps, -static_cast<double>(m) / p);
  if (!std::isfinite(T)) throw DomainError("rectangle_chart: eps^(-m/p) is not finite");

  std::vector<double> edges(static_cast<std::size_t>(m), eps);
  edges.insert(edges.end(), static_cast<std::size_t>(p), T);
  dom_ = Space::cube(edges);
  cod_ = Space::sphere(m + p);

  std::vector<double> ext = edges;
  std::vector<int> cells;
  for (int i = 0; i < m; ++i) cells.push_back(i);
  for (int l = 0; l < p; ++l) {
    const int axis = m + l;
    auto f = plan_fold(axis, cells, ext);
    if (f) {
      ext = f->out_extent(ext);
      folds_.push_back(f);
    }
    cells.push_back(axis);
  }
  centre_ = Vec(m + p);
  for (int i = 0; i < m + p; ++i) centre_(i) = 0.5 * ext[static_cast<std::size_t>(i)];
  radius_ = half_diagonal(ext);
  if (radius_ * scale_ > kChartCapacity) {
    std::ostringstream os;
    os << "rectangle_chart: folded slab for (m,p,eps) = (" << m << "," << p << "," << eps
       << ") has geodesic radius " << radius_ * scale_ << " > chart capacity " << kChartCapacity;
    throw DomainError(os.str());
  }
  q_ = std::max(std::pow(1.5, p) * scale_, std::pow(2.0, p) * kChartCapacity / (scale_ * std::sin(kChartCapacity)));
}

std::size_t RectangleChart::fold_count() const { return folds_.size(); }
double RectangleChart::folded_radius() const { return radius_; }
double RectangleChart::lipschitz() const { return std::pow(1.5, p_) * scale_; }

json RectangleChart::to_json() const {
  return json{{"kind", "rectangle_chart"}, {"m", m_}, {"p", p_}, {"epsilon", eps_}};
}

Vec RectangleChart::eval_push(const Vec& y, const Mat& v, Mat* pushed) const {
  const int d = m_ + p_;
  Vec z = y;
  Mat w = v;
  for (const auto& f : folds_) {
    Vec nz;
    Mat nw;
    f->forward(z, w, nz, pushed ? &nw : nullptr);
    z = std::move(nz);
    if (pushed) w = std::move(nw);
  }
  Vec u = scale_ * (z - centre_);
  if (pushed) w *= scale_;
  if (d % 2 == 1) {
    u(0) = -u(0);
    if (pushed) w.row(0) *= -1.0;
  }
  const double rho = u.norm();
  Vec out(d + 1);
  if (rho == 0.0) {
    out.setZero();
    out(d) = 1.0;
    if (pushed) {
      *pushed = Mat::Zero(d + 1, v.cols());
      pushed->topRows(d) = w;
    }
    return out;
  }
  const Vec e = u / rho;
  out.head(d) = std::sin(rho) * e;
  out(d) = std::cos(rho);
  if (pushed) {
    const Eigen::RowVectorXd drho = e.transpose() * w;
    const Mat de = (w - e * drho) / rho;
    Mat o(d + 1, v.cols());
    o.topRows(d) = std::cos(rho) * e * drho + std::sin(rho) * de;
    o.row(d) = -std::sin(rho) * drho;
    *pushed = o;
  }
  return out;
}

std::optional<Vec> RectangleChart::inverse(const Vec& X) const {
  const int d = m_ + p_;
  const double s = X.head(d).norm();
  const double rho = std::atan2(s, X(d));
  if (rho > radius_ * scale_ * (1.0 + 1e-9) + 1e-12) return std::nullopt;
  Vec u = s > 0.0 ? Vec(rho * X.head(d) / s) : Vec(Vec::Zero(d));
  if (d % 2 == 1) u(0) = -u(0);
  Vec z = u / scale_ + centre_;
  for (int i = 0; i < d; ++i) {
    const double ext = 2.0 * centre_(i);
    if (z(i) < -kTol * ext || z(i) > ext * (1.0 + kTol)) return std::nullopt;
    z(i) = std::clamp(z(i), 0.0, ext);
  }
  for (auto it = folds_.rbegin(); it != folds_.rend(); ++it) {
    auto prev = (*it)->inverse(z);
    if (!prev) return std::nullopt;
    z = *prev;
  }
  for (int i = 0; i < d; ++i) z(i) = std::clamp(z(i), 0.0, dom_.edges[static_cast<std::size_t>(i)]);
  return z;
}

ChartPtr rectangle_chart(int m, int p, double eps) { return std::make_shared<RectangleChart>(m, p, eps); }

}  // namespace kdilate
