#pragma once
#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsd/rng.hpp"

namespace rsd {

using IMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// State of either model. Torus: x holds 4 lattice coordinates in [0,1).
// Wehler: x[0..2] hold per-axis chart values with |value| <= 1; inv[i] set
// means the stored value is the reciprocal projective coordinate.
struct Point {
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  std::array<bool, 3> inv{{false, false, false}};
};

// Derivative of one automorphism step. matrix is the cocycle block acting on
// tangent coordinates: 4x4 for the torus, 2x2 for the Wehler real locus
// (orthonormal surface frames at base and image).
struct TangentMap {
  Eigen::MatrixXd matrix;
  Point base;
  Point image;
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class SurfaceModel {
 public:
  virtual ~SurfaceModel() = default;
  virtual std::string type() const = 0;

  virtual int n_autos() const = 0;
  virtual const std::string& auto_name(int id) const = 0;
  int auto_index(const std::string& name) const;

  // Dimension of the cocycle blocks produced by tangent().
  virtual int cocycle_dim() const = 0;

  virtual Point apply(int id, const Point& p) const = 0;
  virtual Point apply_inverse(int id, const Point& p) const = 0;
  virtual TangentMap tangent(int id, const Point& p) const = 0;
  virtual TangentMap tangent_inverse(int id, const Point& p) const = 0;

  virtual bool on_model(const Point& p, double tol = 1e-9) const = 0;
  virtual double distance(const Point& a, const Point& b) const = 0;
  virtual Point random_point(MixStream& rs) const = 0;

  // Tangent coordinates (same basis the cocycle blocks act on) of the
  // displacement from `from` to a nearby `to`, and its approximate inverse.
  // Exact on the torus; on curved models displace() lifts back to the surface
  // with a Newton step, so the pair is inverse to first order.
  virtual Eigen::VectorXd displacement(const Point& from, const Point& to) const = 0;
  virtual Point displace(const Point& from, const Eigen::VectorXd& v) const = 0;

  // Pullback action on the model's integer cohomology lattice, with its Gram
  // matrix of the intersection form. Exact integers.
  virtual IMat cohomology_matrix(int id) const = 0;
  virtual IMat cohomology_gram() const = 0;
};

// Flat torus R^4 / Z^4 with integer linear automorphisms. Generators may be
// given as real 4x4 integer matrices or 2x2 integer matrices over C embedded
// as 4x4 blocks in coordinates (Re z1, Im z1, Re z2, Im z2).
class TorusModel : public SurfaceModel {
 public:
  struct Generator {
    std::string name;
    IMat m;     // 4x4, |det| = 1
    IMat minv;  // exact integer inverse
    int det;    // +1 or -1
  };

  TorusModel() = default;
  void add_generator(const std::string& name, const IMat& m4);
  void add_generator_complex(const std::string& name, const Eigen::Matrix2i& mc);

  std::string type() const override { return "torus"; }
  int n_autos() const override { return static_cast<int>(gens_.size()); }
  const std::string& auto_name(int id) const override { return gens_.at(id).name; }
  int cocycle_dim() const override { return 4; }

  Point apply(int id, const Point& p) const override;
  Point apply_inverse(int id, const Point& p) const override;
  TangentMap tangent(int id, const Point& p) const override;
  TangentMap tangent_inverse(int id, const Point& p) const override;

  bool on_model(const Point& p, double tol = 1e-9) const override;
  double distance(const Point& a, const Point& b) const override;
  Point random_point(MixStream& rs) const override;

  Eigen::VectorXd displacement(const Point& from, const Point& to) const override;
  Point displace(const Point& from, const Eigen::VectorXd& v) const override;

  IMat cohomology_matrix(int id) const override;  // wedge-square action on H^2
  IMat cohomology_gram() const override;          // wedge pairing, signature (3,3)

  const Generator& generator(int id) const { return gens_.at(id); }

 private:
  std::vector<Generator> gens_;
};

// Real (2,2,2) surface in (P^1)^3: zero locus of a polynomial of degree <= 2
// in each of three variables, with the three Vieta involutions that swap the
// two sheets of each coordinate projection. Generators are words in the
// involutions, applied right to left.
class WehlerModel : public SurfaceModel {
 public:
  struct Generator {
    std::string name;
    std::vector<int> word;  // involution indices 0..2, composition right-to-left
  };

  // coefficients[i][j][k] multiplies x^i y^j z^k.
  explicit WehlerModel(const std::array<std::array<std::array<double, 3>, 3>, 3>& coeffs,
                       double sample_box = 2.0);
  // x^2 + y^2 + z^2 - xyz - k = 0; for 0 < k < 4 the component inside
  // [-2,2]^3 is compact and invariant, so orbits never leave the charts.
  static WehlerModel markov(double k);

  void add_generator(const std::string& name, std::vector<int> word);

  std::string type() const override { return "wehler"; }
  int n_autos() const override { return static_cast<int>(gens_.size()); }
  const std::string& auto_name(int id) const override { return gens_.at(id).name; }
  int cocycle_dim() const override { return 2; }

  Point apply(int id, const Point& p) const override;
  Point apply_inverse(int id, const Point& p) const override;
  TangentMap tangent(int id, const Point& p) const override;
  TangentMap tangent_inverse(int id, const Point& p) const override;

  bool on_model(const Point& p, double tol = 1e-9) const override;
  double distance(const Point& a, const Point& b) const override;
  Point random_point(MixStream& rs) const override;

  Eigen::VectorXd displacement(const Point& from, const Point& to) const override;
  Point displace(const Point& from, const Eigen::VectorXd& v) const override;

  IMat cohomology_matrix(int id) const override;  // action on Z h1 + Z h2 + Z h3
  IMat cohomology_gram() const override;          // [[0,2,2],[2,0,2],[2,2,0]]

  // One Vieta involution in stored chart coordinates, with chart flips and a
  // Newton polish of the active coordinate. Throws ModelError on degenerate
  // fibers (both leading quadratic coefficients below 1e-12).
  Point involution(int axis, const Point& p) const;
  // Involution without chart flips or polish; smooth extension off the
  // surface used by tangent() and by finite-difference validation.
  Point involution_frozen(int axis, const Point& p) const;
  // Ambient 3x3 Jacobian of involution_frozen at p (stored coordinates).
  Eigen::Matrix3d ambient_jacobian(int axis, const Point& p) const;
  // Value of the defining polynomial in the stored charts of p.
  double form_value(const Point& p) const;
  Eigen::Vector3d form_gradient(const Point& p) const;
  // Orthonormal 3x2 basis of the surface tangent plane at p (stored charts).
  Eigen::Matrix<double, 3, 2> tangent_frame(const Point& p) const;
  const Generator& generator(int id) const { return gens_.at(id); }

 private:
  std::array<std::array<std::array<double, 3>, 3>, 3> c_;
  double sample_box_;
  std::vector<Generator> gens_;

  // Coefficient tensor with axes flipped according to chart flags.
  std::array<std::array<std::array<double, 3>, 3>, 3> charted(const std::array<bool, 3>& inv) const;
  // Quadratic q2 t^2 + q1 t + q0 in stored coordinate `axis` through p.
  void axis_quadratic(int axis, const Point& p, double& q2, double& q1, double& q0) const;
  TangentMap word_tangent(const std::vector<int>& word, const Point& p) const;
};

// Model definition files (JSON; schema documented in README.md).
std::unique_ptr<SurfaceModel> load_model_file(const std::string& path);
std::unique_ptr<SurfaceModel> load_model_json_text(const std::string& text);

}  // namespace rsd
