#pragma once

// Piecewise-smooth maps between spheres, cubes and products of two spheres,
// built as immutable expression trees.

#include "kdilate/linalg.hpp"

#include <json.hpp>

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kdilate {

using json = nlohmann::ordered_json;

struct Space {
  enum class Kind { sphere, cube, sphere_product };
  Kind kind = Kind::sphere;
  int dim = 0;                 // manifold dimension
  std::vector<double> edges;   // cube only
  int a = 0, b = 0;            // sphere_product only: S^a x S^b

  static Space sphere(int d);
  static Space cube(std::vector<double> edges);
  static Space unit_cube(int d);
  static Space sphere_product(int a, int b);

  int ambient() const;  // length of the coordinate vector
  // South pole for spheres (last coordinate -1), the origin corner for
  // cubes, the pair of south poles for products.
  Vec basepoint() const;
  // Orthonormal tangent frame, ambient() x dim.
  Mat tangent_frame(const Vec& x) const;
  // Throws DomainError unless x lies in the space (sphere norm within tol).
  void check_point(const Vec& x, double tol = 1e-9) const;
  // Normalizes sphere (factor) coordinates.
  Vec retract(const Vec& x) const;
  // Distance from x to the boundary of a cube; infinity otherwise.
  double boundary_distance(const Vec& x) const;

  bool operator==(const Space& o) const;
  bool operator!=(const Space& o) const { return !(*this == o); }
  std::string describe() const;
  json to_json() const;
  static Space from_json(const json& j);
};

class MapNode;
using MapExpr = std::shared_ptr<const MapNode>;

class MapNode {
 public:
  virtual ~MapNode() = default;

  const Space& domain() const { return dom_; }
  const Space& codomain() const { return cod_; }

  virtual std::string kind() const = 0;
  // Value at x; when `pushed` is non-null also the image of the ambient
  // tangent vectors in the columns of v (forward-mode differential).
  virtual Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const = 0;
  // Distance from x to the locus where the map fails to be smooth.
  virtual double kink_distance(const Vec&) const { return std::numeric_limits<double>::infinity(); }
  // An upper bound for the Lipschitz constant (intrinsic metrics).
  virtual double lipschitz() const = 0;
  virtual bool analytic() const { return true; }
  virtual json to_json() const = 0;
  virtual std::vector<MapExpr> children() const { return {}; }

  // Checked evaluation: domain membership, finiteness, unit-norm output.
  Vec eval(const Vec& x) const;
  Mat push(const Vec& x, const Mat& v) const;

 protected:
  Space dom_;
  Space cod_;
};

// --- primitives
MapExpr hopf();
MapExpr rotation(const Mat& q);
MapExpr identity(int d);
MapExpr reflection(int d);  // x_0 -> -x_0 on S^d
// Multiplies the polar angle in the (x_i, x_j) plane of S^dim by d.
MapExpr degree_wrap(int d, int i = 0, int j = 1, int dim = 3);
MapExpr cube_collapse(int m);
MapExpr rescale(const Space& cube, std::vector<double> factors);
MapExpr smash(int n, int p);
MapExpr constant(const Space& domain, const Space& codomain);

// --- combinators
MapExpr suspend(MapExpr e);
MapExpr compose(MapExpr g, MapExpr f);  // g after f
MapExpr product(MapExpr f1, MapExpr f2);

// The folded-slab embedding of R = [0,eps]^m x [0,eps^(-m/p)]^p into S^(m+p).
class RectangleChart : public MapNode {
 public:
  RectangleChart(int m, int p, double eps);

  std::string kind() const override { return "rectangle_chart"; }
  Vec eval_push(const Vec& x, const Mat& v, Mat* pushed) const override;
  double lipschitz() const override;
  json to_json() const override;

  // Preimage of a sphere point, or nothing when it lies off the image.
  std::optional<Vec> inverse(const Vec& X) const;
  // Declared bi-Lipschitz constant (local distortion), independent of eps.
  double distortion_bound() const { return q_; }
  double scale() const { return scale_; }
  int m() const { return m_; }
  int p() const { return p_; }
  double epsilon() const { return eps_; }
  std::size_t fold_count() const;
  double folded_radius() const;  // half-diagonal of the folded box, before scaling

  struct Fold;

 private:
  int m_, p_;
  double eps_;
  double scale_;
  double q_;
  std::vector<std::shared_ptr<const Fold>> folds_;
  Vec centre_;
  double radius_ = 0.0;
};

using ChartPtr = std::shared_ptr<const RectangleChart>;
ChartPtr rectangle_chart(int m, int p, double eps);

// inner on the chart's image, basepoint elsewhere.
MapExpr extend(ChartPtr chart, MapExpr inner);

json to_json(const MapExpr& e);
MapExpr map_from_json(const json& j);

// Chart capacity: largest allowed geodesic radius of the image around the
// north pole, and the fixed scale applied before the exponential map.
constexpr double kChartCapacity = 1.5;
constexpr double kChartScale = 0.5;

}  // namespace kdilate
