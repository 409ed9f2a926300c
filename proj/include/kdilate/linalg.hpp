#pragma once

#include <Eigen/Dense>

#include <vector>

namespace kdilate {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One-sided (Hestenes) Jacobi singular values of a small dense matrix.
// Returns one value per column of `a`, sorted non-increasing; a wide matrix
// therefore yields trailing zeros, which is the padding convention used for
// Jacobians d_out x d_in with d_out < d_in.
std::vector<double> jacobi_singular_values(const Mat& a);

// Same rotation sweep, also returning right singular vectors (columns of v,
// ordered like the values).
struct JacobiSvd {
  std::vector<double> values;
  Mat v;
};
JacobiSvd jacobi_svd(const Mat& a);

// Orthonormal basis of the tangent space x^perp of the unit sphere, as the
// columns of a (d+1) x d matrix. Oriented so that det[x | T] > 0, i.e. the
// sphere is oriented as the boundary of the ball (outward normal first).
Mat sphere_tangent_frame(const Vec& x);

// Max |G - I| entry of the Gram matrix of the columns.
double orthonormality_defect(const Mat& frame);

// A rotation (det +1) taking the unit vector `from` to the unit vector `to`.
Mat rotation_taking(const Vec& from, const Vec& to);

}  // namespace kdilate
