#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcsle/energy_weights.hpp"
#include "mcsle/gff_levelline.hpp"
#include "mcsle/lattice_domain.hpp"
#include "mcsle/stats.hpp"

namespace mcsle {

enum class Construction { GFF4, CLEKappa, AnnulusCrossing4 };
std::string_view to_string(Construction c);

struct SignatureTerm {
  SignatureWeight weight;
  double p_hat = 0.0;
  double stderr_ = 0.0;
  std::int64_t n_samples = 0;
  std::int64_t hits = 0;
  std::int64_t discarded = 0;  // fillings that swallowed (xy), resampled
};

struct MixtureReport {
  Construction construction = Construction::GFF4;
  double kappa = 4.0;
  std::vector<SignatureTerm> per_signature;
  double partition_function = 0.0;
  double partition_stderr = 0.0;
  std::vector<std::string> notes;
};

// Macroscopic summaries of a non-crossing curve: signed position of its first
// crossing of the perpendicular bisector of [x, y], largest distance from the
// (yx) arc, and the area it cuts off together with (yx).
struct CurveStats {
  double chord_crossing = 0.0;
  double max_distance = 0.0;
  double left_area = 0.0;
  std::array<double, 3> as_array() const { return {chord_crossing, max_distance, left_area}; }
};
inline constexpr std::array<std::string_view, 3> kCurveStatNames = {"chord_crossing", "max_distance",
                                                                      "left_area"};
CurveStats curve_statistics(const LatticeDomain& domain, const LatticePath& path);
// Same summaries for a polyline in the plane, e.g. a continuum curve.
CurveStats curve_statistics(const DomainSpec& spec, std::span<const Point> pts);

struct MixtureSample {
  LatticePath path;
  int signature_index = 0;
  CurveStats stats;
  double weight = 0.0;  // contribution to the partition function estimate
};

struct MixtureRun {
  MixtureReport report;
  std::vector<MixtureSample> samples;  // accepted draws only
};

// All 2^n signatures of a non-crossing domain, n <= 6.
std::vector<TopologySignature> enumerate_signatures(const LatticeDomain& domain);

// n_samples unconditioned draws per signature; accepted draws of signature b
// carry weight Z_b / n_samples.
MixtureRun run_noncrossing_mixture(const LatticeDomain& domain, double kappa, Construction construction,
                                   std::int64_t n_samples, std::uint64_t seed, int workers = 1,
                                   bool keep_samples = true);

MixtureReport assemble_noncrossing(const LatticeDomain& domain, double kappa, std::int64_t n_samples,
                                   std::uint64_t seed, int workers = 1);
MixtureReport assemble_noncrossing(const LatticeDomain& domain, double kappa, Construction construction,
                                   std::int64_t n_samples, std::uint64_t seed, int workers = 1);

// Annulus {e^-p < |z| < 1} with x = 1 and y = e^-p e^{2 pi i alpha}.
DomainSpec annulus_spec(double p, double alpha, double mesh, Mode mode = Mode::Crossing);

struct CrossingReport {
  MixtureReport mixture;
  WindingLaw theory;
  std::map<int, double> branch_log_weight;  // -E(g_k)/2 relative to k = 0
  std::map<int, double> lattice_probs;
  std::map<int, ClassEstimate> empirical;   // winding frequencies of the mixture
  double off_branch_fraction = 0.0;
  std::int64_t n_samples = 0;
};

CrossingReport assemble_crossing_annulus(double p, double alpha, std::int64_t n_samples, int k_max,
                                         std::uint64_t seed, double mesh = 1.0 / 64.0, int workers = 1);

struct RestrictionReport {
  std::int64_t n_mixture = 0;
  std::int64_t n_restricted = 0;
  std::int64_t n_direct = 0;
  double restricted_ess = 0.0;
  double z_restricted = 0.0;        // estimate of Z_D'' from reweighted D samples
  double z_restricted_stderr = 0.0;
  double z_exact = 0.0;             // H_dD''(x, y)^h
  double z_domain = 0.0;            // mixture estimate of Z_D
  double mass_ratio = 0.0;          // z_restricted / z_domain
  double mass_ratio_stderr = 0.0;
  double expected_ratio = 0.0;      // z_exact / z_domain
  std::vector<std::pair<std::string, TestResult>> tests;
  bool ratio_ok() const;
  bool tests_ok(double level = 0.01) const;
};

// Restricted mixture samples (eta inside D'') reweighted by
// exp((c/2) m_D(eta, D \ D'')) against direct samples in D''.
RestrictionReport verify_restriction(const LatticeDomain& domain, const LatticeDomain& restricted, double kappa,
                                     std::int64_t n_samples, std::uint64_t seed, int workers = 1);

struct BridgeExit {
  double exit_0 = 0.0;
  double exit_2pi = 0.0;
  double no_exit = 0.0;
  int terms = 0;
  double stderr_ = 0.0;  // Monte Carlo only
};

// Brownian bridge with variance `speed` per unit time, from `start` to `end`
// in time p, killed on leaving [0, 2 pi]. Image series, tail below 1e-15.
BridgeExit bridge_exit_probabilities(double p, double start, double end, double speed = 4.0);
BridgeExit bridge_exit_monte_carlo(double p, double start, double end, std::int64_t n_bridges, double dt,
                                   std::uint64_t seed, double speed = 4.0, int workers = 1);

}  // namespace mcsle
