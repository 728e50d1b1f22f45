#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "mcsle/energy_weights.hpp"
#include "mcsle/harmonic_kernels.hpp"
#include "mcsle/lattice_domain.hpp"
#include "mcsle/rng.hpp"

namespace mcsle {

// Boundary data of the field: +-lambda by signature (non-crossing) or the
// branch of the multivalued annulus mean with winding class `branch`.
struct MeanSpec {
  Mode mode = Mode::NonCrossing;
  std::vector<int> signs;
  int branch = 0;
  bool zero = false;  // all-zero boundary data
};

struct FieldSample {
  std::shared_ptr<const LatticeDomain> domain;
  MeanSpec mean_spec;
  Eigen::VectorXd values;  // centred part, covariance L^{-1}
  std::shared_ptr<const Eigen::VectorXd> mean;
  std::shared_ptr<const std::vector<double>> boundary;  // data on domain->boundary()
  std::uint64_t seed = 0;
};

struct LevelLineSample {
  LatticePath path;  // doubled coordinates: midpoints of crossed edges
  TopologySignature signature;
  bool accepted = true;
  int attempts = 1;
};

// Shares one factorization and mean across draws.
class FieldSampler {
 public:
  FieldSampler(const LatticeDomain& domain, MeanSpec spec);
  FieldSampler(std::shared_ptr<const LaplaceSolver> solver, MeanSpec spec);

  FieldSample sample(Rng& rng) const;
  FieldSample sample(std::uint64_t seed) const;

  const LatticeDomain& domain() const { return solver_->domain(); }
  const LaplaceSolver& solver() const { return *solver_; }
  const Eigen::VectorXd& mean() const { return *mean_; }
  const MeanSpec& spec() const { return spec_; }

 private:
  std::shared_ptr<const LaplaceSolver> solver_;
  MeanSpec spec_;
  std::shared_ptr<const Eigen::VectorXd> mean_;
  std::shared_ptr<const std::vector<double>> boundary_;
};

FieldSample sample_dgff(const LatticeDomain& domain, const MeanSpec& spec, std::uint64_t seed);

// Interface between minus and plus sites of a full-grid sign array (flat
// index j * size + i), started from the frame at the x wedge. Negative sites
// stay on the left. A saddle face joins the diagonal whose sign matches the
// mean of its four corner values; without values the negative diagonal wins.
LatticePath trace_interface(const LatticeDomain& domain, const std::vector<int>& signs,
                            const std::vector<double>* values = nullptr);

LevelLineSample trace_level_line(const FieldSample& field);

// Interior sites on either side of the edges crossed by a traced path.
std::vector<Site> path_sites(const LatticeDomain& domain, const LatticePath& path);

struct ClassEstimate {
  double p_hat = 0.0;
  double stderr_ = 0.0;
  std::int64_t n_samples = 0;
  std::int64_t hits = 0;
};

ClassEstimate estimate_class_probability(const LatticeDomain& domain, const TopologySignature& target,
                                         std::int64_t n_samples, std::uint64_t seed, int workers = 1);

LevelLineSample sample_conditioned_level_line(const FieldSampler& sampler, const TopologySignature& target,
                                              int max_attempts, std::uint64_t seed);
LevelLineSample sample_conditioned_level_line(const LatticeDomain& domain, const TopologySignature& target,
                                              int max_attempts, std::uint64_t seed);

}  // namespace mcsle
