#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <numbers>
#include <span>
#include <vector>

#include "mcsle/harmonic_kernels.hpp"
#include "mcsle/lattice_domain.hpp"

namespace mcsle {

inline const double kLambda = std::sqrt(std::numbers::pi / 8.0);

// Restriction exponent h = (6 - kappa) / (2 kappa).
double restriction_exponent(double kappa);
// Central charge c = (3 kappa - 8)(6 - kappa) / (2 kappa).
double central_charge(double kappa);
// Throws InvalidArgument unless kappa is in (8/3, 4].
void check_kappa(double kappa);

// Sign of every boundary site of `domain` (order of domain.boundary()):
// -1 on (yx) and on holes with b_j = -1, +1 elsewhere, 0 at the marks.
// Carved sites take the sign of the original components their 8-connected
// cluster touches; a cluster touching both signs throws IncompatibleReference.
std::vector<double> signature_boundary_signs(const LatticeDomain& domain, std::span<const int> signs);
// Same signs for every non-interior grid site, flat index j * size + i; 0 on
// interior sites and marks.
std::vector<int> grid_signs(const LatticeDomain& domain, std::span<const int> signs);

// Sum over edges with an interior endpoint of the squared increment of the
// harmonic extension of the given boundary values.
double dirichlet_energy(const LaplaceSolver& solver, std::span<const double> boundary_values);

struct EnergyDifference {
  double kernel_form = 0.0;     // 4 (g, (H_dD - H_dD') g) over the minus set
  double flux_form = 0.0;       // 2 sum over the minus set of d_nu (u' - u)
  double dirichlet_form = 0.0;  // E_D'(u') - E_D(u)
};

// Energy increase of u = +-1 data (minus on `minus_sites`) when passing from
// D to the carved D'. Marks carry weight 1/2 in the kernel form.
EnergyDifference energy_difference(const LatticeDomain& D, const LatticeDomain& Dp,
                                   std::span<const Site> minus_sites);

// Minus set of a signature: the (yx) arc and the holes with b_j = -1.
std::vector<Site> minus_sites(const LatticeDomain& domain, std::span<const int> signs);

struct SignatureWeight {
  TopologySignature signature;
  double log_weight = 0.0;
  double energy_diff = 0.0;
  double reference_H = 0.0;
};

// Simply connected test domain compatible with the signature: each hole is
// joined to (yx) (b_j = -1) or (xy) (b_j = +1) by a straight channel.
// `variant` selects a different family of channel directions.
LatticeDomain reference_domain(const LatticeDomain& domain, std::span<const int> signs, int variant = 0);

SignatureWeight z_weight_noncrossing(const LatticeDomain& domain, const TopologySignature& signature,
                                     const LatticeDomain& reference, double kappa);

struct WindingLaw {
  double p = 1.0;
  double alpha = 0.0;
  std::map<int, double> probs;
  int truncation_k = 0;
  double theta_value = 0.0;
};

// theta_3(z | tau) = sum_n exp(i pi n^2 tau + 2 pi i n z), Im tau > 0.
std::complex<double> jacobi_theta3(std::complex<double> z, std::complex<double> tau);

WindingLaw winding_distribution(double p, double alpha, int k_max);
double crossing_weight_annulus(double p, double alpha, int k);

// Annulus crossing: the seam is the ray from the centre of hole 0 through x.
// Offset of the edge s -> t in sheets (+1 when crossing the seam counterclockwise).
int seam_offset(const LatticeDomain& domain, Site s, Site t);

struct AnnulusBranch {
  int k = 0;
  std::vector<double> boundary;  // sheet-0 values on domain.boundary()
  Eigen::VectorXd mean;          // sheet-0 harmonic mean on the interior
};

// Multivalued harmonic mean with height 2 lambda per turn and winding class k.
AnnulusBranch annulus_branch_mean(const LaplaceSolver& solver, int k);
// Dirichlet energy of the lifted branch mean; affine plus (pi^2/p) k^2 asymptotically.
double annulus_branch_energy(const LaplaceSolver& solver, const AnnulusBranch& branch);

}  // namespace mcsle
