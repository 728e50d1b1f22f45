// Acceptance battery: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: mcsle_acceptance [criterion numbers...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mcsle/energy_weights.hpp"
#include "mcsle/errors.hpp"
#include "mcsle/harmonic_kernels.hpp"
#include "mcsle/io.hpp"
#include "mcsle/lattice_domain.hpp"
#include "mcsle/loop_excursion.hpp"
#include "mcsle/sle_assembly.hpp"
#include "mcsle/stats.hpp"

using namespace mcsle;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

DomainSpec spec_of(double mesh, std::vector<Hole> holes = {}, Mode mode = Mode::NonCrossing) {
  DomainSpec s;
  s.mesh = mesh;
  s.holes = std::move(holes);
  s.mode = mode;
  return s;
}

// Interior sites of a polyline through jittered waypoints.
std::vector<Site> rough_path(const LatticeDomain& d, Point a, Point b, int waypoints, double jitter,
                             std::mt19937_64& gen) {
  std::uniform_real_distribution<double> U(-jitter, jitter);
  std::vector<Point> pts{a};
  for (int k = 1; k < waypoints; ++k) {
    double t = static_cast<double>(k) / waypoints;
    pts.push_back({a.x + t * (b.x - a.x) + U(gen), a.y + t * (b.y - a.y) + U(gen)});
  }
  pts.push_back(b);
  std::vector<Site> out;
  std::set<Site> seen;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k)
    for (Site s : digital_segment(d, pts[k], pts[k + 1]).vertices)
      if (d.is_interior(s) && seen.insert(s).second) out.push_back(s);
  return out;
}

// 1. Operator identities on an annulus with two radial crosscuts.
Outcome operator_identities() {
  Stopwatch sw;
  auto d = LatticeDomain::build_circle(spec_of(1.0 / 32, {Hole{{0, 0}, std::exp(-1.0)}}));
  auto b1 = radial_crosscut(d, 0.5 * kPi, 0);
  auto b2 = radial_crosscut(d, 1.5 * kPi, 0);
  LoopIdentityReport r = verify_loop_identities(d, b1, b2);
  const double t = sw.seconds();
  return {r.max() < 1e-9 && t < 30.0, "grid " + std::to_string(d.size()) + "x" + std::to_string(d.size()) +
                                          ", max residual " + num(r.max()) + " (green " + num(r.green_residual) +
                                          ", poisson " + num(r.poisson_residual) + ", composite " +
                                          num(r.no_assumption_residual) + "), " + num(t) + " s"};
}

// 2. Fredholm determinant identity on several configurations.
Outcome fredholm_identity() {
  struct Config {
    std::string name;
    LatticeDomain domain;
    LatticePath b1, b2;
  };
  std::vector<Config> configs;
  auto add_radial = [&](std::string name, DomainSpec spec, double a1, double a2, int hole) {
    auto d = LatticeDomain::build_circle(spec);
    configs.push_back({std::move(name), d, radial_crosscut(d, a1, hole), radial_crosscut(d, a2, hole)});
  };
  // crosscuts far apart along a narrow channel see almost no loops, so keep them within reach
  add_radial("centred annulus", spec_of(1.0 / 32, {Hole{{0, 0}, std::exp(-1.0)}}), 0.5 * kPi, 0.9 * kPi, 0);
  add_radial("thin annulus", spec_of(1.0 / 32, {Hole{{0, 0}, std::exp(-0.3)}}), 0.3 * kPi, 0.45 * kPi, 0);
  add_radial("off-centre hole", spec_of(1.0 / 32, {Hole{{0.25, -0.2}, 0.25}}), 0.2 * kPi, 0.7 * kPi, 0);
  add_radial("two holes", spec_of(1.0 / 32, {Hole{{-0.4, 0.0}, 0.2}, Hole{{0.4, 0.1}, 0.15}}), 0.3 * kPi,
             0.7 * kPi, 0);
  {
    auto d = LatticeDomain::build_circle(spec_of(1.0 / 32));
    std::mt19937_64 gen(1);
    LatticePath b1, b2;
    b1.vertices = rough_path(d, {-0.6, -0.5}, {-0.6, 0.5}, 1, 0.0, gen);
    b2.vertices = rough_path(d, {0.5, -0.5}, {0.5, 0.5}, 1, 0.0, gen);
    configs.push_back({"disk, two segments", d, b1, b2});
  }
  {
    // B2 jagged at the mesh scale: 40 jittered waypoints from the hole to the outer circle
    auto d = LatticeDomain::build_circle(spec_of(1.0 / 32, {Hole{{0, 0}, std::exp(-1.0)}}));
    std::mt19937_64 gen(2024);
    LatticePath b1 = radial_crosscut(d, 0.5 * kPi, 0), b2;
    b2.vertices = rough_path(d, {-0.27, 0.27}, {-0.69, 0.69}, 40, 0.06, gen);
    configs.push_back({"rough B2", d, b1, b2});
  }
  bool ok = true;
  std::string detail;
  for (const Config& c : configs) {
    Stopwatch sw;
    LoopMassReport r = fredholm_identity_check(c.domain, c.b1, c.b2);
    const double t = sw.seconds();
    const bool pass = r.det_identity_residual < 1e-8 && t < 120.0;
    ok = ok && pass;
    detail += (detail.empty() ? "" : "; ") + c.name + ": m " + num(r.m_hit_both) + ", residual " +
              num(r.det_identity_residual) + ", " + num(t) + " s";
  }
  return {ok && configs.size() >= 5, std::to_string(configs.size()) + " configurations; " + detail};
}

// 3. Gaussian quadratic-form expectation.
Outcome gaussian_quadratic() {
  std::mt19937_64 gen(33);
  std::normal_distribution<double> N;
  const int n = 8;
  Eigen::MatrixXd B(n, n), C(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      B(i, j) = N(gen);
      C(i, j) = N(gen);
    }
  Eigen::MatrixXd Q = B * B.transpose() / n + 0.3 * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd M = (C + C.transpose()) / 2.0;
  Eigen::MatrixXd Qh = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).operatorSqrt();
  M *= 0.25 / Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Qh * M * Qh).eigenvalues().cwiseAbs().maxCoeff();
  Eigen::VectorXd m(n);
  for (int i = 0; i < n; ++i) m[i] = 0.1 * N(gen);
  QuadraticExpectation r = gaussian_quadratic_expectation(Q, M, m, 1'000'000, 34);
  const double rel = std::abs(r.mc_estimate - r.closed_form) / r.closed_form;
  return {rel < 0.02, "dimension 8, 1e6 samples, spectral radius " + num(r.spectral_radius) + ", closed form " +
                          num(r.closed_form) + ", Monte Carlo " + num(r.mc_estimate) + " +- " + num(r.mc_stderr) +
                          ", relative error " + num(rel)};
}

// 4. Winding law on the crossing annulus.
Outcome winding_law() {
  bool ok = true;
  std::string detail;
  Stopwatch total;
  for (double p : {1.0, 2.0})
    for (double alpha : {0.0, 0.3}) {
      CrossingReport r = assemble_crossing_annulus(p, alpha, 5000, 3, 400 + static_cast<std::uint64_t>(10 * p + alpha * 10),
                                                   1.0 / 64);
      double worst = 0.0;
      for (int k = -1; k <= 1; ++k) {
        const double theory = r.theory.probs.at(k);
        const double emp = r.empirical.at(k).p_hat;
        const double allowed = 3.0 * binomial_stderr(theory, r.n_samples) + 0.03;
        worst = std::max(worst, std::abs(emp - theory) / allowed);
        ok = ok && std::abs(emp - theory) <= allowed;
      }
      detail += (detail.empty() ? "" : "; ") + std::string("p=") + num(p) + " alpha=" + num(alpha) + ": P(0) " +
                num(r.empirical.at(0).p_hat) + " vs " + num(r.theory.probs.at(0)) + ", P(-1) " +
                num(r.empirical.at(-1).p_hat) + " vs " + num(r.theory.probs.at(-1)) + ", worst/allowed " +
                num(worst);
    }
  const double t = total.seconds();
  return {ok && t < 1800.0, "mesh 1/64, 5000 samples each; " + detail + "; " + num(t) + " s"};
}

// Random non-crossing domain with a random carving away from the minus set.
struct GeneratedPair {
  LatticeDomain d, e;
  std::vector<Site> minus;
};

std::vector<GeneratedPair> generate_pairs(int count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<GeneratedPair> out;
  while (static_cast<int>(out.size()) < count) {
    std::vector<Hole> holes;
    const int nh = static_cast<int>(gen() % 3);
    for (int k = 0; k < nh; ++k) {
      Point c{0.55 * U(gen), 0.55 * U(gen)};
      bool clash = false;
      for (const Hole& h : holes) clash = clash || std::hypot(c.x - h.center.x, c.y - h.center.y) < 0.4;
      if (!clash) holes.push_back({c, 0.1 + 0.05 * (U(gen) + 1.0)});
    }
    try {
      auto d = LatticeDomain::build_circle(spec_of(1.0 / 24, holes));
      std::vector<int> signs;
      for (int k = 0; k < d.n_holes(); ++k) signs.push_back(gen() % 2 ? 1 : -1);
      auto minus = minus_sites(d, signs);
      // blob of interior sites at least three cells from every minus site
      Point c{0.7 * U(gen), 0.7 * U(gen)};
      const double r = 0.05 + 0.1 * (U(gen) + 1.0);
      std::vector<Site> blob;
      for (Site s : d.interior()) {
        Point p = d.point(s);
        if (std::hypot(p.x - c.x, p.y - c.y) > r) continue;
        bool near = false;
        for (Site m : minus) near = near || (std::abs(m.i - s.i) <= 3 && std::abs(m.j - s.j) <= 3);
        if (!near) blob.push_back(s);
      }
      if (blob.empty()) continue;
      out.push_back({d, d.carve(blob), minus});
    } catch (const Error&) {
      continue;
    }
  }
  return out;
}

// 5. Kernel and flux forms of the energy difference.
Outcome energy_dual() {
  auto pairs = generate_pairs(25, 55);
  double worst = 0.0;
  for (const auto& p : pairs) {
    EnergyDifference e = energy_difference(p.d, p.e, p.minus);
    worst = std::max(worst, std::abs(e.kernel_form - e.flux_form));
  }
  return {worst < 1e-8, std::to_string(pairs.size()) + " random domain pairs (0-2 holes, mesh 1/24), max |kernel - flux| " +
                            num(worst)};
}

// 6. Simply connected reduction and independence of the reference domain.
Outcome simply_connected_reduction() {
  bool exact = true;
  std::string detail;
  for (double mesh : {1.0 / 16, 1.0 / 32}) {
    auto d = LatticeDomain::build_circle(spec_of(mesh));
    const double H = boundary_poisson_matrix(d, std::vector<Site>{d.marked_x()}, std::vector<Site>{d.marked_y()})
                         .entries(0, 0);
    for (double kappa : {3.0, 3.5, 4.0}) {
      SignatureWeight w = z_weight_noncrossing(d, TopologySignature{}, d, kappa);
      // exact in log form; exp and pow may round differently in the last place
      const double hpow = std::pow(H, restriction_exponent(kappa));
      exact = exact && w.log_weight == restriction_exponent(kappa) * std::log(H) &&
              std::abs(std::exp(w.log_weight) - hpow) <= 4 * std::numeric_limits<double>::epsilon() * hpow;
    }
  }
  detail = std::string("n=0 weights equal H^h exactly: ") + (exact ? "yes" : "no");
  double worst = 0.0;
  auto d = LatticeDomain::build_circle(spec_of(1.0 / 32, {Hole{{0.0, 0.35}, 0.2}}));
  for (int s : {-1, 1}) {
    TopologySignature sig;
    sig.signs = {s};
    double a = z_weight_noncrossing(d, sig, reference_domain(d, sig.signs, 0), 4.0).log_weight;
    double b = z_weight_noncrossing(d, sig, reference_domain(d, sig.signs, 1), 4.0).log_weight;
    worst = std::max(worst, std::abs(a - b));
    detail += "; b=" + std::to_string(s) + " |dlogZ| " + num(std::abs(a - b));
  }
  return {exact && worst < 1e-6, detail + " (target 1e-6)"};
}

// 7. No-exit law of the excursion ensemble.
Outcome excursion_no_exit() {
  auto d = LatticeDomain::build_circle(spec_of(1.0 / 16));
  auto minus = minus_sites(d, std::vector<int>{});
  std::vector<Site> block;
  for (Site s : d.interior()) {
    Point p = d.point(s);
    if (std::abs(p.x) <= 0.2 && p.y >= -0.6 && p.y <= -0.45) block.push_back(s);
  }
  auto e = d.carve(block);
  std::set<Site> blocked(block.begin(), block.end());
  const double ed = energy_difference(d, e, minus).kernel_form;
  bool ok = true;
  std::string detail;
  const int draws = 100000;
  for (double kappa : {3.0, 4.0}) {
    const double expected = std::exp(-restriction_exponent(kappa) * kPi / 4.0 * ed);
    ExcursionSampler sampler(d, minus, kappa);
    std::int64_t clean = 0;
    for (int r = 0; r < draws; ++r) {
      Rng rng(77, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(kappa));
      ExcursionEnsemble ens = sampler.sample(rng);
      bool hit = false;
      for (const auto& x : ens.excursions) {
        for (Site s : x.vertices)
          if (blocked.count(s)) {
            hit = true;
            break;
          }
        if (hit) break;
      }
      clean += !hit;
    }
    const double f = static_cast<double>(clean) / draws;
    const double sigma = std::sqrt(expected * (1 - expected) / draws);
    ok = ok && std::abs(f - expected) <= 3 * sigma;
    detail += (detail.empty() ? "" : "; ") + std::string("kappa=") + num(kappa) + ": " + num(f) + " vs " +
              num(expected) + " (" + num((f - expected) / sigma) + " sigma)";
  }
  return {ok, "1e5 draws each, energy difference " + num(ed) + "; " + detail};
}

// 8. Additivity of the loop mass along nested domains.
Outcome loop_mass_additivity() {
  std::mt19937_64 gen(88);
  double worst = 0.0;
  double smallest = 1e300;
  int triples = 0;
  for (int t = 0; t < 6; ++t) {
    auto d = LatticeDomain::build_circle(spec_of(1.0 / 24, t % 2 ? std::vector<Hole>{Hole{{0.0, 0.45}, 0.15}}
                                                              : std::vector<Hole>{}));
    // eta: a rough path through the lower half; D' and D'' remove nested blocks on the right
    std::vector<Site> eta = rough_path(d, {-0.7, -0.3}, {0.1, -0.2}, 12, 0.05, gen);
    const double x0 = 0.35 + 0.05 * t;
    std::vector<Site> k1, k2;
    for (Site s : d.interior()) {
      Point p = d.point(s);
      if (p.x > x0 && p.y > 0.0 && p.y < 0.3) k1.push_back(s);
      else if (p.x > x0 - 0.2 && p.y > 0.0 && p.y < 0.3) k2.push_back(s);
    }
    std::vector<Site> k12 = k1;
    k12.insert(k12.end(), k2.begin(), k2.end());
    LatticeDomain dp = d.subtract(k1);
    // log-det differences telescope by construction, so use the Green-block oracle here
    const double whole = LoopMassOracle(d, k12).mass(eta);
    const double first = LoopMassOracle(d, k1).mass(eta);
    const double second = LoopMassOracle(dp, k2).mass(eta);
    worst = std::max(worst, std::abs(whole - first - second) / whole);
    smallest = std::min(smallest, whole);
    ++triples;
  }
  return {worst < 1e-9, std::to_string(triples) + " nested triples, max relative defect " + num(worst) + " (smallest mass " + num(smallest) + ")"};
}

// 9. Level-line and loop-soup pipelines at kappa = 4.
Outcome cross_construction() {
  Stopwatch sw;
  auto d = LatticeDomain::build_circle(spec_of(1.0 / 32, {Hole{{0.0, 0.35}, 0.2}}));
  const std::int64_t n = 20000;
  MixtureRun gff = run_noncrossing_mixture(d, 4.0, Construction::GFF4, n, 901, 1, true);
  MixtureRun cle = run_noncrossing_mixture(d, 4.0, Construction::CLEKappa, n, 902, 1, true);
  const double zg = gff.report.partition_function, zc = cle.report.partition_function;
  const double allowed = 3.0 * std::hypot(gff.report.partition_stderr, cle.report.partition_stderr) + 0.05 * zg;
  bool ok = std::abs(zg - zc) <= allowed;
  std::string detail = "Z level line " + num(zg) + " +- " + num(gff.report.partition_stderr) + ", Z loop soup " +
                       num(zc) + " +- " + num(cle.report.partition_stderr) + (ok ? " (agree)" : " (disagree)");
  for (std::size_t s = 0; s < kCurveStatNames.size(); ++s) {
    std::vector<double> a, wa, b, wb;
    for (const auto& x : gff.samples)
      if (std::isfinite(x.stats.as_array()[s])) {
        a.push_back(x.stats.as_array()[s]);
        wa.push_back(x.weight);
      }
    for (const auto& x : cle.samples)
      if (std::isfinite(x.stats.as_array()[s])) {
        b.push_back(x.stats.as_array()[s]);
        wb.push_back(x.weight);
      }
    TestResult r = ks_two_sample(a, wa, b, wb);
    WeightedMoments ma = weighted_moments(a, wa), mb = weighted_moments(b, wb);
    ok = ok && r.p_value >= 0.01;
    detail += "; " + std::string(kCurveStatNames[s]) + " KS p " + num(r.p_value) + " (means " + num(ma.mean) +
              " vs " + num(mb.mean) + ")";
  }
  return {ok, "n=1, mesh 1/32, 2e4 draws per signature and pipeline; " + detail + "; " + num(sw.seconds()) + " s"};
}

// 10. Restriction harness.
Outcome restriction_harness() {
  Stopwatch sw;
  auto d = LatticeDomain::build_circle(spec_of(1.0 / 32, {Hole{{0.0, 0.35}, 0.2}}));
  auto restricted = reference_domain(d, std::vector<int>{1}, 0);
  RestrictionReport r = verify_restriction(d, restricted, 4.0, 4000, 1001);
  bool ok = r.ratio_ok() && r.tests_ok(0.01);
  std::string detail = "mass ratio " + num(r.mass_ratio) + " +- " + num(r.mass_ratio_stderr) + " vs " +
                       num(r.expected_ratio) + ", " + std::to_string(r.n_restricted) + " restricted draws (ESS " +
                       num(r.restricted_ess) + ")";
  for (const auto& [name, t] : r.tests) detail += "; " + name + " KS p " + num(t.p_value);
  return {ok, detail + "; " + num(sw.seconds()) + " s"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 11. Every CLI command reproduces its outputs byte for byte.
Outcome cli_determinism() {
  const fs::path configs = fs::path(MCSLE_SOURCE_DIR) / "configs";
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"kernels", "one_hole.json"},      {"identities", "annulus_identities.json"},
      {"winding", "winding.json"},       {"partition", "one_hole.json"},
      {"sample", "one_hole.json"},       {"verify-restriction", "restriction.json"},
      {"soup", "soup.json"}};
  const fs::path root = fs::temp_directory_path() / "mcsle_acceptance_cli";
  fs::remove_all(root);
  bool ok = true;
  std::string detail;
  int files = 0;
  for (const auto& [cmd, cfg] : runs) {
    std::vector<fs::path> outs;
    for (int rep = 0; rep < 2; ++rep) {
      fs::path out = root / (cmd + "_" + std::to_string(rep));
      std::string line = std::string(MCSLE_BINARY) + " " + cmd + " --config " + (configs / cfg).string() +
                         " --seed 2718 --out " + out.string() + " > " + (root / "log.txt").string() + " 2>&1";
      fs::create_directories(root);
      if (std::system(line.c_str()) != 0) {
        ok = false;
        detail += " " + cmd + ": exit status nonzero;";
      }
      outs.push_back(out);
    }
    json manifest;
    try {
      manifest = json::parse(slurp(outs[0] / "manifest.json"));
    } catch (const std::exception&) {
      ok = false;
      detail += " " + cmd + ": no manifest;";
      continue;
    }
    bool same = true;
    for (const auto& o : manifest["outputs"]) {
      const std::string f = o["file"];
      same = same && slurp(outs[0] / f) == slurp(outs[1] / f) && o["sha256"] == sha256_file(outs[1] / f);
      ++files;
    }
    json m2 = json::parse(slurp(outs[1] / "manifest.json"));
    manifest.erase("wall_time_seconds");
    m2.erase("wall_time_seconds");
    same = same && manifest == m2;
    ok = ok && same;
    if (!same) detail += " " + cmd + ": outputs differ;";
  }
  return {ok, std::to_string(runs.size()) + " commands, " + std::to_string(files) +
                  " output files compared between two runs with seed 2718" + (detail.empty() ? "" : ";" + detail)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"operator identities", operator_identities},
      {"Fredholm identity", fredholm_identity},
      {"Gaussian quadratic form", gaussian_quadratic},
      {"winding law", winding_law},
      {"energy difference dual forms", energy_dual},
      {"simply connected reduction", simply_connected_reduction},
      {"excursion no-exit law", excursion_no_exit},
      {"loop mass additivity", loop_mass_additivity},
      {"cross-construction agreement", cross_construction},
      {"restriction harness", restriction_harness},
      {"CLI determinism", cli_determinism},
  };
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));
  int failed = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[c].first << ": " << o.detail
              << std::endl;
  }
  return failed ? 1 : 0;
}
