#include "mcsle/harmonic_kernels.hpp"

#include <algorithm>
#include <cmath>

#include "mcsle/errors.hpp"
#include "mcsle/rng.hpp"

namespace mcsle {

namespace {

// Unit vector sum over interior neighbours of a site (one step in or out).
void add_neighbours(const LatticeDomain& d, Site s, Eigen::VectorXd& v, double w = 1.0) {
  for (Site st : kSteps4) {
    int k = d.interior_index(s + st);
    if (k >= 0) v[k] += w;
  }
}

double neighbour_sum(const LatticeDomain& d, Site s, const Eigen::VectorXd& v) {
  double acc = 0.0;
  for (Site st : kSteps4) {
    int k = d.interior_index(s + st);
    if (k >= 0) acc += v[k];
  }
  return acc;
}

std::vector<int> interior_indices(const LatticeDomain& d, std::span<const Site> sites) {
  std::vector<int> out;
  out.reserve(sites.size());
  for (Site s : sites) {
    int k = d.interior_index(s);
    if (k < 0) throw Error(ErrorKind::InvalidArgument, "site is not interior");
    out.push_back(k);
  }
  return out;
}

std::vector<Site> unique_sites(std::span<const Site> sites) {
  std::vector<Site> out(sites.begin(), sites.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

LaplaceSolver::LaplaceSolver(const LatticeDomain& domain)
    : domain_(std::make_shared<const LatticeDomain>(domain)) {
  const int n = domain.n_interior();
  if (n == 0) throw Error(ErrorKind::SingularSystem, "empty interior");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * 5);
  for (int k = 0; k < n; ++k) {
    Site s = domain.interior()[k];
    trips.emplace_back(k, k, 4.0);
    for (Site st : kSteps4) {
      int m = domain.interior_index(s + st);
      if (m >= 0) trips.emplace_back(k, m, -1.0);
    }
  }
  lap_.resize(n, n);
  lap_.setFromTriplets(trips.begin(), trips.end());
  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(lap_);
  if (ldlt_->info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "Laplacian factorization failed");
  const auto& dvec = ldlt_->vectorD();
  for (int k = 0; k < n; ++k) {
    if (!(dvec[k] > 0.0)) throw Error(ErrorKind::SingularSystem, "Laplacian not positive definite");
    log_det_ += std::log(dvec[k]);
  }
}

Eigen::VectorXd LaplaceSolver::solve(const Eigen::VectorXd& rhs) const { return ldlt_->solve(rhs); }

Eigen::MatrixXd LaplaceSolver::solve(const Eigen::MatrixXd& rhs) const { return ldlt_->solve(rhs); }

Eigen::VectorXd LaplaceSolver::extend(std::span<const double> boundary_values) const {
  const LatticeDomain& d = *domain_;
  if (boundary_values.size() != d.boundary().size())
    throw Error(ErrorKind::InvalidArgument, "boundary data size mismatch");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim());
  for (std::size_t b = 0; b < boundary_values.size(); ++b)
    add_neighbours(d, d.boundary()[b], rhs, boundary_values[b]);
  return solve(rhs);
}

Eigen::VectorXd LaplaceSolver::correlate(const Eigen::VectorXd& z) const {
  Eigen::VectorXd y = z.cwiseQuotient(ldlt_->vectorD().cwiseSqrt());
  Eigen::VectorXd x = ldlt_->matrixU().solve(y);
  return ldlt_->permutationPinv() * x;
}

Eigen::VectorXd solve_dirichlet(const LatticeDomain& domain, const BoundaryTrace& values) {
  if (values.sites.size() != values.values.size())
    throw Error(ErrorKind::InvalidArgument, "boundary trace length mismatch");
  std::vector<double> data(domain.boundary().size(), 0.0);
  for (std::size_t k = 0; k < values.sites.size(); ++k) {
    if (!std::isfinite(values.values[k])) throw Error(ErrorKind::InvalidArgument, "non-finite boundary value");
    int b = domain.boundary_index(values.sites[k]);
    if (b >= 0) data[b] = values.values[k];
  }
  return LaplaceSolver(domain).extend(data);
}

KernelMatrix green_matrix(const LaplaceSolver& solver, std::span<const Site> rows,
                          std::span<const Site> cols) {
  const LatticeDomain& d = solver.domain();
  auto ri = interior_indices(d, rows);
  auto ci = interior_indices(d, cols);
  KernelMatrix out{{rows.begin(), rows.end()}, {cols.begin(), cols.end()},
                   Eigen::MatrixXd(ri.size(), ci.size()), KernelKind::Green};
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(solver.dim(), static_cast<Eigen::Index>(ci.size()));
  for (std::size_t c = 0; c < ci.size(); ++c) rhs(ci[c], c) = 1.0;
  Eigen::MatrixXd sol = solver.solve(rhs);
  for (std::size_t r = 0; r < ri.size(); ++r) out.entries.row(r) = sol.row(ri[r]);
  return out;
}

KernelMatrix green_matrix(const LatticeDomain& domain, std::span<const Site> rows,
                          std::span<const Site> cols) {
  return green_matrix(LaplaceSolver(domain), rows, cols);
}

KernelMatrix poisson_matrix(const LatticeDomain& domain, std::span<const Site> rows,
                            std::span<const Site> cols) {
  LaplaceSolver solver(domain);
  auto ri = interior_indices(domain, rows);
  KernelMatrix out{{rows.begin(), rows.end()}, {cols.begin(), cols.end()},
                   Eigen::MatrixXd(ri.size(), cols.size()), KernelKind::Poisson};
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(solver.dim(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (domain.boundary_index(cols[c]) < 0) throw Error(ErrorKind::InvalidArgument, "column is not a boundary site");
    Eigen::VectorXd col = Eigen::VectorXd::Zero(solver.dim());
    add_neighbours(domain, cols[c], col);
    rhs.col(c) = col;
  }
  Eigen::MatrixXd sol = solver.solve(rhs);
  for (std::size_t r = 0; r < ri.size(); ++r) out.entries.row(r) = sol.row(ri[r]);
  return out;
}

KernelMatrix boundary_poisson_matrix(const LaplaceSolver& solver, std::span<const Site> rows,
                                     std::span<const Site> cols) {
  const LatticeDomain& d = solver.domain();
  KernelMatrix out{{rows.begin(), rows.end()}, {cols.begin(), cols.end()},
                   Eigen::MatrixXd(rows.size(), cols.size()), KernelKind::BoundaryPoisson};
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(solver.dim(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(solver.dim());
    add_neighbours(d, cols[c], col);
    rhs.col(c) = col;
  }
  Eigen::MatrixXd sol = solver.solve(rhs);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    Eigen::VectorXd col = sol.col(c);
    for (std::size_t r = 0; r < rows.size(); ++r) out.entries(r, c) = neighbour_sum(d, rows[r], col);
  }
  return out;
}

KernelMatrix boundary_poisson_matrix(const LatticeDomain& domain, std::span<const Site> rows,
                                     std::span<const Site> cols) {
  return boundary_poisson_matrix(LaplaceSolver(domain), rows, cols);
}

KernelMatrix hitting_matrix(const LatticeDomain& domain, std::span<const Site> starts,
                            std::span<const Site> targets) {
  LatticeDomain cut = domain.subtract(unique_sites(targets));
  LaplaceSolver solver(cut);
  auto ri = interior_indices(cut, starts);
  KernelMatrix out{{starts.begin(), starts.end()}, {targets.begin(), targets.end()},
                   Eigen::MatrixXd(ri.size(), targets.size()), KernelKind::Poisson};
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(solver.dim(), static_cast<Eigen::Index>(targets.size()));
  for (std::size_t c = 0; c < targets.size(); ++c) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(solver.dim());
    add_neighbours(cut, targets[c], col);
    rhs.col(c) = col;
  }
  Eigen::MatrixXd sol = solver.solve(rhs);
  for (std::size_t r = 0; r < ri.size(); ++r) out.entries.row(r) = sol.row(ri[r]);
  return out;
}

CrosscutKernels crosscut_kernels(const LatticeDomain& domain, std::span<const Site> b1_in,
                                 std::span<const Site> b2_in) {
  auto b1 = unique_sites(b1_in);
  auto b2 = unique_sites(b2_in);
  for (Site a : b1)
    for (Site b : b2)
      if (std::max(std::abs(a.i - b.i), std::abs(a.j - b.j)) < 2)
        throw Error(ErrorKind::CrosscutsIntersect, "crosscuts closer than 2 cells");
  CrosscutKernels k;
  LaplaceSolver full(domain);
  k.green_d = green_matrix(full, b1, b1).entries;
  if (b2.empty()) {
    k.green_d2 = k.green_d;
    k.hit_12 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b1.size()), 0);
    k.hit_21 = Eigen::MatrixXd::Zero(0, static_cast<Eigen::Index>(b1.size()));
    k.boundary_diff = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b1.size()), static_cast<Eigen::Index>(b1.size()));
    return k;
  }
  LatticeDomain d2 = domain.subtract(b2);
  LatticeDomain d1 = domain.subtract(b1);
  std::vector<Site> both = b1;
  both.insert(both.end(), b2.begin(), b2.end());
  LatticeDomain d12 = domain.subtract(both);
  LaplaceSolver s2(d2), s1(d1), s12(d12);
  k.green_d2 = green_matrix(s2, b1, b1).entries;
  k.hit_12 = hitting_matrix(domain, b1, b2).entries;
  k.hit_21 = hitting_matrix(domain, b2, b1).entries;
  k.boundary_diff = boundary_poisson_matrix(s1, b1, b1).entries - boundary_poisson_matrix(s12, b1, b1).entries;
  return k;
}

double LoopIdentityReport::max() const {
  return std::max({green_residual, poisson_residual, no_assumption_residual});
}

LoopIdentityReport verify_loop_identities(const LatticeDomain& domain, const LatticePath& b1,
                                          const LatticePath& b2) {
  CrosscutKernels k = crosscut_kernels(domain, b1.vertices, b2.vertices);
  LoopIdentityReport rep;
  rep.b1_size = static_cast<int>(k.green_d.rows());
  rep.b2_size = static_cast<int>(k.hit_12.cols());
  Eigen::MatrixXd hh = k.hit_12 * k.hit_21;
  Eigen::MatrixXd lhs = k.green_d - k.green_d2;
  rep.green_residual = (lhs - hh * k.green_d).cwiseAbs().maxCoeff();
  rep.poisson_residual = (hh - k.green_d2 * k.boundary_diff).cwiseAbs().maxCoeff();
  rep.no_assumption_residual = (lhs - k.green_d2 * k.boundary_diff * k.green_d).cwiseAbs().maxCoeff();
  return rep;
}

QuadraticExpectation gaussian_quadratic_expectation(const Eigen::MatrixXd& Q,
                                                    const Eigen::MatrixXd& M,
                                                    const Eigen::VectorXd& m,
                                                    std::int64_t n_samples, std::uint64_t seed) {
  const Eigen::Index n = Q.rows();
  if (Q.cols() != n || M.rows() != n || M.cols() != n || m.size() != n)
    throw Error(ErrorKind::InvalidArgument, "dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qe(Q);
  if (qe.eigenvalues().minCoeff() <= 0.0) throw Error(ErrorKind::InvalidArgument, "covariance is not positive definite");
  Eigen::MatrixXd root = qe.eigenvectors() * qe.eigenvalues().cwiseSqrt().asDiagonal() * qe.eigenvectors().transpose();
  Eigen::MatrixXd S = root * (0.5 * (M + M.transpose())) * root;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(S);
  QuadraticExpectation out;
  out.spectral_radius = n ? se.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
  if (out.spectral_radius >= 1.0 - 1e-6)
    throw Error(ErrorKind::ContractionViolated, "spectral radius of Q^1/2 M Q^1/2 is not below 1");

  double log_det = 0.0;
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double one_minus = 1.0 - se.eigenvalues()[i];
    log_det += std::log(one_minus);
    inv_sqrt[i] = 1.0 / std::sqrt(one_minus);
  }
  Eigen::VectorXd v = se.eigenvectors() * inv_sqrt.asDiagonal() * se.eigenvectors().transpose() * (root * m);
  out.closed_form = std::exp(-0.5 * log_det + 0.5 * v.squaredNorm());

  Rng rng(seed);
  double sum = 0.0, sum2 = 0.0;
  Eigen::VectorXd z(n);
  for (std::int64_t s = 0; s < n_samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
    Eigen::VectorXd h = root * z;
    double val = std::exp(0.5 * h.dot(M * h) + m.dot(h));
    sum += val;
    sum2 += val * val;
  }
  if (n_samples > 0) {
    double N = static_cast<double>(n_samples);
    out.mc_estimate = sum / N;
    double var = std::max(0.0, sum2 / N - out.mc_estimate * out.mc_estimate);
    out.mc_stderr = std::sqrt(var / N);
  }
  return out;
}

}  // namespace mcsle
