#include "kdilate/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kdilate {

namespace {

constexpr int kMaxSweeps = 60;
constexpr double kRotationTol = 1e-15;

// Orthogonalizes the columns of u in place; accumulates rotations into v
// when requested. Converges when every column pair is orthogonal to
// working precision relative to its norms.
void hestenes_sweeps(Mat& u, Mat* v) {
  const Eigen::Index cols = u.cols();
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index i = 0; i + 1 < cols; ++i) {
      for (Eigen::Index j = i + 1; j < cols; ++j) {
        const double alpha = u.col(i).squaredNorm();
        const double beta = u.col(j).squaredNorm();
        const double gamma = u.col(i).dot(u.col(j));
        if (std::abs(gamma) <= kRotationTol * std::sqrt(alpha * beta) || gamma == 0.0) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index r = 0; r < u.rows(); ++r) {
          const double ui = u(r, i);
          const double uj = u(r, j);
          u(r, i) = c * ui - s * uj;
          u(r, j) = s * ui + c * uj;
        }
        if (v != nullptr) {
          for (Eigen::Index r = 0; r < v->rows(); ++r) {
            const double vi = (*v)(r, i);
            const double vj = (*v)(r, j);
            (*v)(r, i) = c * vi - s * vj;
            (*v)(r, j) = s * vi + c * vj;
          }
        }
      }
    }
    if (!rotated) return;
  }
}

}  // namespace

std::vector<double> jacobi_singular_values(const Mat& a) {
  Mat u = a;
  hestenes_sweeps(u, nullptr);
  std::vector<double> s(static_cast<std::size_t>(u.cols()));
  for (Eigen::Index j = 0; j < u.cols(); ++j) s[static_cast<std::size_t>(j)] = u.col(j).norm();
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

JacobiSvd jacobi_svd(const Mat& a) {
  Mat u = a;
  Mat v = Mat::Identity(a.cols(), a.cols());
  hestenes_sweeps(u, &v);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(u.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> norms(order.size());
  for (Eigen::Index j = 0; j < u.cols(); ++j) norms[static_cast<std::size_t>(j)] = u.col(j).norm();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index l, Eigen::Index r) {
    return norms[static_cast<std::size_t>(l)] > norms[static_cast<std::size_t>(r)];
  });
  JacobiSvd out;
  out.v.resize(v.rows(), v.cols());
  for (std::size_t j = 0; j < order.size(); ++j) {
    out.values.push_back(norms[static_cast<std::size_t>(order[j])]);
    out.v.col(static_cast<Eigen::Index>(j)) = v.col(order[j]);
  }
  return out;
}

Mat sphere_tangent_frame(const Vec& x) {
  const Eigen::Index n = x.size();
  if (n < 2) throw std::invalid_argument("sphere_tangent_frame: ambient dimension must be >= 2");
  // Householder reflection sending x to +-e_k, k = argmax |x_k|; its other
  // columns span x^perp and the reflection is well conditioned everywhere.
  Eigen::Index k = 0;
  x.cwiseAbs().maxCoeff(&k);
  const double sign = x(k) >= 0.0 ? 1.0 : -1.0;
  Vec w = x;
  w(k) -= sign;
  Mat h = Mat::Identity(n, n);
  const double wn = w.squaredNorm();
  if (wn > 0.0) h -= 2.0 * w * w.transpose() / wn;
  Mat frame(n, n - 1);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == k) continue;
    frame.col(c++) = h.col(j);
  }
  for (Eigen::Index j = 0; j < frame.cols(); ++j) {
    frame.col(j) -= x.dot(frame.col(j)) * x;
    frame.col(j).normalize();
  }
  Mat oriented(n, n);
  oriented.col(0) = x;
  oriented.rightCols(n - 1) = frame;
  if (oriented.determinant() < 0.0) frame.col(0) = -frame.col(0);
  return frame;
}

double orthonormality_defect(const Mat& frame) {
  const Mat g = frame.transpose() * frame;
  return (g - Mat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

Mat rotation_taking(const Vec& from, const Vec& to) {
  const Eigen::Index n = from.size();
  const Vec a = from.normalized();
  const Vec b = to.normalized();
  // Rotation in the plane span(a, b), identity on its complement.
  Vec perp = b - a.dot(b) * a;
  const double sin_t = perp.norm();
  const double cos_t = a.dot(b);
  Mat r = Mat::Identity(n, n);
  if (sin_t < 1e-14) {
    if (cos_t > 0.0) return r;
    // Antipodal: rotate by pi in a plane through a and any orthogonal axis.
    const Mat frame = sphere_tangent_frame(a);
    perp = frame.col(0);
    r -= 2.0 * (a * a.transpose() + perp * perp.transpose());
    return r;
  }
  perp /= sin_t;
  r += (cos_t - 1.0) * (a * a.transpose() + perp * perp.transpose()) +
       sin_t * (perp * a.transpose() - a * perp.transpose());
  return r;
}

}  // namespace kdilate
