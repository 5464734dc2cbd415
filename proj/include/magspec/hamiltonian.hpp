#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <memory>
#include <string>

#include "magspec/field.hpp"
#include "magspec/grid.hpp"

namespace magspec {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using DenseMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Everything that fixes the operator family b ↦ H_b.
struct Model {
  Grid grid;
  FieldProfile profile;
  BackgroundPotential background;
  int quad_order = kDefaultQuadOrder;

  Model(Grid g, FieldProfile p, BackgroundPotential bg = {}, int order = kDefaultQuadOrder)
      : grid(std::move(g)), profile(std::move(p)), background(std::move(bg)), quad_order(order) {}
};

using ModelPtr = std::shared_ptr<const Model>;

ModelPtr make_model(const GridSpec& spec, FieldProfile profile, BackgroundPotential background = {},
                    int quad_order = kDefaultQuadOrder);

// Boundary twist angles applied to torus seam bonds.
struct Twist {
  double theta1 = 0.0;
  double theta2 = 0.0;
};

// Five-point magnetic Schrödinger operator in matrix form. The matrix acts on
// site values; as an integral kernel on the grid its entries are matrix / h².
class DiscreteHamiltonian {
 public:
  DiscreteHamiltonian(ModelPtr model, double b, SparseMatrix matrix, Twist twist = {})
      : model_(std::move(model)), b_(b), twist_(twist), matrix_(std::move(matrix)) {}

  const ModelPtr& model() const { return model_; }
  const Grid& grid() const { return model_->grid; }
  double b() const { return b_; }
  Twist twist() const { return twist_; }
  const SparseMatrix& matrix() const { return matrix_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }
  DenseMatrix dense() const { return DenseMatrix(matrix_); }
  // Gershgorin bound on the operator norm.
  double norm_bound() const;
  double hermiticity_defect() const;

 private:
  ModelPtr model_;
  double b_;
  Twist twist_;
  SparseMatrix matrix_;
};

DiscreteHamiltonian assemble(const ModelPtr& model, double b, Twist twist = {});
// Assembly with every link multiplied by e^{i(θ(x) - θ(y))}.
DiscreteHamiltonian assemble_gauged(const ModelPtr& model, double b, const Eigen::VectorXd& gauge);

// U_θ H U_θ^{-1} with U_θ = diag(e^{iθ(x)}).
DiscreteHamiltonian gauge_transform(const DiscreteHamiltonian& h, const Eigen::VectorXd& gauge);

// W_ε = H_b - H_{b0}. Both operators must come from the same model.
SparseMatrix perturbation_operator(const DiscreteHamiltonian& hb, const DiscreteHamiltonian& hb0);

// Raw dump: 16-byte header "MAGSPEC-H v1" padded with NULs, then row-major
// (re, im) float64 little-endian pairs.
void write_matrix_dump(const std::string& path, const DenseMatrix& m);
DenseMatrix read_matrix_dump(const std::string& path);

}  // namespace magspec
