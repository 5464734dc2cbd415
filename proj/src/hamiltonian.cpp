#include "magspec/hamiltonian.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "magspec/error.hpp"

namespace magspec {

namespace {

constexpr char kDumpMagic[16] = {'M', 'A', 'G', 'S', 'P', 'E', 'C', '-', 'H', ' ', 'v', '1', 0, 0, 0, 0};

SparseMatrix build(const Model& model, double b, Twist twist, const Eigen::VectorXd* gauge) {
  const Grid& grid = model.grid;
  if (grid.geometry() == Geometry::torus && b != 0.0) check_torus_flux(grid, model.profile, b);
  const int n = grid.size();
  const double inv_h2 = 1.0 / grid.cell_area();
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(5 * static_cast<std::size_t>(n));
  const auto& bg = model.background;
  for (int i = 0; i < n; ++i) {
    const Point x = grid.coordinate(i);
    const double potential = bg.has_scalar() ? bg.scalar(x) : 0.0;
    triplets.emplace_back(i, i, cplx(4.0 * inv_h2 + potential, 0.0));
    for (const auto& nb : grid.neighbors(i)) {
      double angle = 0.0;
      if (b != 0.0) angle += std::arg(link_phase(grid, model.profile, b, i, nb.site, model.quad_order));
      const Point image = grid.coordinate(nb.site) + Point{nb.wrap1 * grid.length1(), nb.wrap2 * grid.length2()};
      angle -= background_line_integral(bg, x, image, model.quad_order);
      angle += nb.wrap1 * twist.theta1 + nb.wrap2 * twist.theta2;
      if (gauge) angle += (*gauge)(i) - (*gauge)(nb.site);
      triplets.emplace_back(i, nb.site, -inv_h2 * std::polar(1.0, angle));
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

ModelPtr make_model(const GridSpec& spec, FieldProfile profile, BackgroundPotential background, int quad_order) {
  if (quad_order < 2) throw ConfigError("quadrature order must be at least 2");
  return std::make_shared<const Model>(Grid(spec), std::move(profile), std::move(background), quad_order);
}

double DiscreteHamiltonian::norm_bound() const {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(dim());
  for (int k = 0; k < matrix_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) rows(it.row()) += std::abs(it.value());
  return rows.maxCoeff();
}

double DiscreteHamiltonian::hermiticity_defect() const {
  const SparseMatrix diff = matrix_ - SparseMatrix(matrix_.adjoint());
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

DiscreteHamiltonian assemble(const ModelPtr& model, double b, Twist twist) {
  return DiscreteHamiltonian(model, b, build(*model, b, twist, nullptr), twist);
}

DiscreteHamiltonian assemble_gauged(const ModelPtr& model, double b, const Eigen::VectorXd& gauge) {
  if (gauge.size() != model->grid.size()) throw ConfigError("gauge function has wrong length");
  return DiscreteHamiltonian(model, b, build(*model, b, {}, &gauge));
}

DiscreteHamiltonian gauge_transform(const DiscreteHamiltonian& h, const Eigen::VectorXd& gauge) {
  if (gauge.size() != h.dim()) throw ConfigError("gauge function has wrong length");
  SparseMatrix m = h.matrix();
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      it.valueRef() *= std::polar(1.0, gauge(it.row()) - gauge(it.col()));
  return DiscreteHamiltonian(h.model(), h.b(), std::move(m), h.twist());
}

SparseMatrix perturbation_operator(const DiscreteHamiltonian& hb, const DiscreteHamiltonian& hb0) {
  if (hb.model() != hb0.model())
    throw ConfigError("perturbation_operator: operators belong to different models");
  if (hb.twist().theta1 != hb0.twist().theta1 || hb.twist().theta2 != hb0.twist().theta2)
    throw ConfigError("perturbation_operator: operators use different boundary twists");
  SparseMatrix w = hb.matrix() - hb0.matrix();
  w.prune(cplx(0.0, 0.0), 0.0);
  return w;
}

void write_matrix_dump(const std::string& path, const DenseMatrix& m) {
  static_assert(std::endian::native == std::endian::little, "matrix dump assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out.write(kDumpMagic, sizeof kDumpMagic);
  std::vector<double> row(2 * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row[2 * c] = m(r, c).real();
      row[2 * c + 1] = m(r, c).imag();
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw NumericalError("failed writing " + path);
}

DenseMatrix read_matrix_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw ConfigError("cannot open " + path);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  char magic[16];
  if (size < sizeof magic || !in.read(magic, sizeof magic) || std::memcmp(magic, kDumpMagic, sizeof magic) != 0)
    throw ConfigError(path + " is not a matrix dump");
  const std::size_t entries = (size - sizeof magic) / (2 * sizeof(double));
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(entries))));
  if (static_cast<std::size_t>(n * n) != entries || (size - sizeof magic) % (2 * sizeof(double)) != 0)
    throw ConfigError(path + " does not hold a square matrix");
  DenseMatrix m(n, n);
  std::vector<double> row(2 * n);
  for (Eigen::Index r = 0; r < n; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = cplx(row[2 * c], row[2 * c + 1]);
  }
  return m;
}

}  // namespace magspec
