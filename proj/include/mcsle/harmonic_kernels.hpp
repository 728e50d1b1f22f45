#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mcsle/lattice_domain.hpp"

namespace mcsle {

enum class KernelKind { Green, Poisson, BoundaryPoisson, Difference, Composite };

struct KernelMatrix {
  std::vector<Site> rows;
  std::vector<Site> cols;
  Eigen::MatrixXd entries;
  KernelKind kind = KernelKind::Green;
};

struct BoundaryTrace {
  std::vector<Site> sites;
  std::vector<double> values;
};

// Sparse factorization of L = 4I - A on the interior of a domain.
// G = L^{-1} is the occupation time of the walk with unit jump rate per edge.
class LaplaceSolver {
 public:
  explicit LaplaceSolver(const LatticeDomain& domain);

  const LatticeDomain& domain() const { return *domain_; }
  std::shared_ptr<const LatticeDomain> domain_ptr() const { return domain_; }
  int dim() const { return domain_->n_interior(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  // Harmonic extension of values given on domain().boundary() (same order).
  Eigen::VectorXd extend(std::span<const double> boundary_values) const;
  double log_det() const { return log_det_; }
  // One draw with covariance L^{-1}, from standard normals z.
  Eigen::VectorXd correlate(const Eigen::VectorXd& z) const;

  const Eigen::SparseMatrix<double>& laplacian() const { return lap_; }

 private:
  std::shared_ptr<const LatticeDomain> domain_;
  Eigen::SparseMatrix<double> lap_;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
  double log_det_ = 0.0;
};

Eigen::VectorXd solve_dirichlet(const LatticeDomain& domain, const BoundaryTrace& values);

KernelMatrix green_matrix(const LatticeDomain& domain, std::span<const Site> rows,
                          std::span<const Site> cols);
KernelMatrix green_matrix(const LaplaceSolver& solver, std::span<const Site> rows,
                          std::span<const Site> cols);
KernelMatrix poisson_matrix(const LatticeDomain& domain, std::span<const Site> rows,
                            std::span<const Site> cols);
// Excursion kernel: one step in at w, occupation density, one step out at t.
KernelMatrix boundary_poisson_matrix(const LatticeDomain& domain, std::span<const Site> rows,
                                     std::span<const Site> cols);
KernelMatrix boundary_poisson_matrix(const LaplaceSolver& solver, std::span<const Site> rows,
                                     std::span<const Site> cols);

// Hitting distribution of `targets` (removed from the domain) for the walk
// started at `starts` inside domain minus targets.
KernelMatrix hitting_matrix(const LatticeDomain& domain, std::span<const Site> starts,
                            std::span<const Site> targets);

struct CrosscutKernels {
  Eigen::MatrixXd green_d;        // G_D on B1 x B1
  Eigen::MatrixXd green_d2;       // G_{D\B2} on B1 x B1
  Eigen::MatrixXd hit_12;         // B1 -> B2 in D\B2
  Eigen::MatrixXd hit_21;         // B2 -> B1 in D\B1
  Eigen::MatrixXd boundary_diff;  // H_d(D\B1) - H_d(D\(B1 u B2)) on B1 x B1
};

// Requires disjoint crosscuts at Chebyshev distance >= 2.
CrosscutKernels crosscut_kernels(const LatticeDomain& domain, std::span<const Site> b1,
                                 std::span<const Site> b2);

struct LoopIdentityReport {
  double green_residual = 0.0;
  double poisson_residual = 0.0;
  double no_assumption_residual = 0.0;
  int b1_size = 0;
  int b2_size = 0;
  double max() const;
};

LoopIdentityReport verify_loop_identities(const LatticeDomain& domain, const LatticePath& b1,
                                          const LatticePath& b2);

struct QuadraticExpectation {
  double mc_estimate = 0.0;
  double mc_stderr = 0.0;
  double closed_form = 0.0;
  double spectral_radius = 0.0;
};

// E[exp(1/2 <Mh,h> + <m,h>)] for h ~ N(0, Q).
QuadraticExpectation gaussian_quadratic_expectation(const Eigen::MatrixXd& Q,
                                                    const Eigen::MatrixXd& M,
                                                    const Eigen::VectorXd& m,
                                                    std::int64_t n_samples, std::uint64_t seed);

}  // namespace mcsle
