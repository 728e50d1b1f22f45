#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "mcsle/gff_levelline.hpp"
#include "mcsle/harmonic_kernels.hpp"
#include "mcsle/lattice_domain.hpp"
#include "mcsle/rng.hpp"

namespace mcsle {

struct LoopMassReport {
  double m_hit_both = 0.0;
  // log det L on D, D\K1, D\K2, D\(K1 u K2).
  std::array<double, 4> per_subdomain_logdets{};
  double log_det_fredholm = 0.0;            // log det(I - H12 H21)
  double log_det_composite = 0.0;           // log det(I - G_{D\B2} dH)
  double det_identity_residual = 0.0;       // |log det(I - H12 H21) + m|
  double composite_identity_residual = 0.0;
  double spectral_radius = 0.0;
};

// Mass of random-walk loops in D visiting both K1 and K2.
LoopMassReport loop_mass(const LatticeDomain& domain, std::span<const Site> k1, std::span<const Site> k2);

LoopMassReport fredholm_identity_check(const LatticeDomain& domain, const LatticePath& b1,
                                       const LatticePath& b2);

// m_D(eta, A) for a fixed set A and many eta, through the dense Green matrix on D.
class LoopMassOracle {
 public:
  LoopMassOracle(const LatticeDomain& domain, std::span<const Site> fixed);
  double mass(std::span<const Site> eta) const;
  const std::vector<Site>& fixed() const { return fixed_; }

 private:
  std::shared_ptr<const LatticeDomain> domain_;
  std::vector<Site> fixed_;
  std::vector<int> fixed_index_;
  Eigen::MatrixXd green_;  // all interior sites x fixed sites
  double log_det_fixed_ = 0.0;
  std::shared_ptr<const LaplaceSolver> solver_;
};

struct ExcursionEnsemble {
  std::vector<LatticePath> excursions;  // boundary site, interior sites..., boundary site
  double intensity_constant = 0.0;      // h * pi
  double total_mass = 0.0;              // (g, H_dD g) over the arcs
  std::uint64_t seed = 0;
};

// Endpoint weights of excursions: 1 on the arc sites, 1/2 at the marks.
std::vector<double> excursion_endpoint_weights(const LatticeDomain& domain, std::span<const Site> arcs);

class ExcursionSampler {
 public:
  ExcursionSampler(const LatticeDomain& domain, std::span<const Site> arcs, double kappa);
  ExcursionSampler(std::shared_ptr<const LaplaceSolver> solver, std::span<const Site> arcs, double kappa);

  ExcursionEnsemble sample(Rng& rng) const;
  double total_mass() const { return total_mass_; }
  double mean_count() const { return intensity_ * total_mass_; }
  // Occupation the excursions leave at each boundary site when the walk runs on
  // the metric graph: intensity times the squared endpoint weight.
  std::vector<double> boundary_occupation() const;

 private:
  void init(std::span<const Site> arcs);
  std::shared_ptr<const LaplaceSolver> solver_;
  double intensity_ = 0.0;
  std::vector<double> g_;  // on domain boundary
  Eigen::VectorXd v_;      // harmonic extension of g
  std::vector<std::pair<int, int>> starts_;  // (boundary index, interior index)
  std::vector<double> start_cdf_;
  double total_mass_ = 0.0;
};

ExcursionEnsemble sample_excursion_ppp(const LatticeDomain& domain, std::span<const Site> arcs, double kappa,
                                       std::uint64_t seed);

struct HullSample {
  std::vector<Site> filled_sites;
  LatticePath right_boundary;
};

// Filling of the (yx) arc together with generator paths: everything not in a
// component of the remaining interior that reaches (xy).
HullSample fill_hull(const LatticeDomain& domain, std::span<const LatticePath> generators);

struct Loop {
  std::vector<int> sites;  // interior indices, cyclic
};

// Le Jan decomposition over vertices in raster order: pivots of the ordered
// factorization give the per-vertex masses.
class LoopSoupSampler {
 public:
  explicit LoopSoupSampler(const LatticeDomain& domain);
  std::vector<Loop> sample(double intensity, Rng& rng) const;
  // Total loop mass -log det(I - P) of the domain.
  double total_mass() const { return total_mass_; }
  const LatticeDomain& domain() const { return *domain_; }

 private:
  std::shared_ptr<const LatticeDomain> domain_;
  std::vector<double> return_prob_;  // q_k
  std::vector<std::array<int, 4>> nbr_;
  double total_mass_ = 0.0;
};

std::vector<Loop> sample_loop_soup(const LatticeDomain& domain, double intensity, std::uint64_t seed);

struct Cluster {
  std::vector<int> loops;
  std::vector<Site> sites;
  LatticePath outer_boundary;  // closed, doubled coordinates
};

std::vector<Cluster> cle_clusters(const LatticeDomain& domain, std::span<const Loop> loops);

// Sites: loops join when they share a site. Cable: the soup lives on the metric
// graph, so an edge no loop walks along may still be covered from both ends.
enum class ClusterRule { Sites, Cable };

// Probability that an edge not crossed by any loop is still covered, given the
// occupation times at its ends. At intensity 1/2 this is 1 - exp(-2 sqrt(lx ly)).
double cable_edge_open_probability(double intensity, double lx, double ly);

struct CableClusters {
  std::vector<double> occupation;  // interior sites then boundary sites
  std::vector<int> label;          // same indexing; labels 0..n_clusters-1
  int n_clusters = 0;
};

// Clusters of a soup (plus boundary excursions, if given) on the metric graph.
// Occupation at an interior site is the holding time of every visit plus the
// loops that never leave it; boundary sites carry the given occupation.
CableClusters cable_clusters(const LatticeDomain& domain, std::span<const Loop> loops, double intensity, Rng& rng,
                             std::span<const LatticePath> excursions = {},
                             std::span<const double> boundary_occupation = {});

// Closed interface around a set of sites (with enclosed pockets filled).
LatticePath outer_contour(const LatticeDomain& domain, std::span<const Site> sites);

class KappaCurveSampler {
 public:
  KappaCurveSampler(const LatticeDomain& domain, const TopologySignature& signature, double kappa,
                    ClusterRule rule = ClusterRule::Cable);
  LevelLineSample sample(Rng& rng) const;
  const LatticeDomain& domain() const { return soup_.domain(); }

 private:
  TopologySignature signature_;
  double kappa_;
  ClusterRule rule_;
  LoopSoupSampler soup_;
  std::shared_ptr<const ExcursionSampler> excursions_;
  std::vector<double> boundary_occupation_;
};

// Right boundary of the cluster of {field < lambda} attached to the minus
// boundary on the metric graph. With kappa = 4 this has the law of the cable
// construction above.
LevelLineSample first_passage_curve(const FieldSample& field, Rng& rng);

LevelLineSample construct_kappa_curve(const LatticeDomain& domain, const TopologySignature& signature,
                                      double kappa, std::uint64_t seed);

}  // namespace mcsle
