#include "mcsle/sle_assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

#include "mcsle/errors.hpp"
#include "mcsle/loop_excursion.hpp"
#include "mcsle/parallel.hpp"

namespace mcsle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

SignatureWeight weight_for(const LatticeDomain& domain, const TopologySignature& sig, double kappa) {
  std::optional<Error> last;
  for (int variant : {0, 1}) {
    try {
      return z_weight_noncrossing(domain, sig, reference_domain(domain, sig.signs, variant), kappa);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::IncompatibleReference) throw;
      last = e;
    }
  }
  throw *last;
}

// Per-signature draw: accepted path or nothing.
struct Draw {
  bool accepted = false;
  std::int64_t discarded = 0;
  LatticePath path;
};

class SignatureDrawer {
 public:
  SignatureDrawer(const LatticeDomain& domain, const TopologySignature& sig, double kappa, Construction c)
      : sig_(sig) {
    if (c == Construction::GFF4) {
      MeanSpec spec;
      spec.mode = Mode::NonCrossing;
      spec.signs = sig.signs;
      gff_ = std::make_unique<FieldSampler>(domain, spec);
    } else {
      cle_ = std::make_unique<KappaCurveSampler>(domain, sig, kappa);
    }
  }

  Draw draw(Rng& rng, bool conditioned) const {
    Draw d;
    if (gff_) {
      LevelLineSample s = trace_level_line(gff_->sample(rng));
      d.accepted = !conditioned || s.signature == sig_;
      d.path = std::move(s.path);
      return d;
    }
    for (;;) {
      try {
        LevelLineSample s = cle_->sample(rng);
        d.accepted = !conditioned || s.accepted;
        d.path = std::move(s.path);
        return d;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::FillSwallowsTarget && e.kind() != ErrorKind::DegenerateSample) throw;
        if (++d.discarded > 10000) throw Error(ErrorKind::RejectionBudgetExhausted, "fillings keep reaching (xy)");
      }
    }
  }

 private:
  TopologySignature sig_;
  std::unique_ptr<FieldSampler> gff_;
  std::unique_ptr<KappaCurveSampler> cle_;
};

}  // namespace

std::string_view to_string(Construction c) {
  switch (c) {
    case Construction::GFF4: return "GFF4";
    case Construction::CLEKappa: return "CLEKappa";
    case Construction::AnnulusCrossing4: return "AnnulusCrossing4";
  }
  return "?";
}

CurveStats curve_statistics(const LatticeDomain& domain, const LatticePath& path) {
  std::vector<Point> pts;
  pts.reserve(path.vertices.size());
  for (std::size_t k = 0; k < path.vertices.size(); ++k) pts.push_back(domain.point(path, k));
  return curve_statistics(domain.spec(), pts);
}

CurveStats curve_statistics(const DomainSpec& spec, std::span<const Point> pts) {
  const double R = spec.outer_radius;
  CurveStats st;
  if (pts.size() < 2) return st;

  Point X{R * std::cos(spec.angle_x), R * std::sin(spec.angle_x)};
  Point Y{R * std::cos(spec.angle_y), R * std::sin(spec.angle_y)};
  Point mid{(X.x + Y.x) / 2, (X.y + Y.y) / 2};
  Point axis{Y.x - X.x, Y.y - X.y};
  Point along{-axis.y, axis.x};
  const double na = std::hypot(along.x, along.y);
  auto side = [&](Point p) { return (p.x - mid.x) * axis.x + (p.y - mid.y) * axis.y; };
  st.chord_crossing = std::nan("");
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double a = side(pts[k]), b = side(pts[k + 1]);
    if (a < 0.0 && b >= 0.0) {
      double t = a / (a - b);
      Point c{pts[k].x + t * (pts[k + 1].x - pts[k].x), pts[k].y + t * (pts[k + 1].y - pts[k].y)};
      st.chord_crossing = ((c.x - mid.x) * along.x + (c.y - mid.y) * along.y) / na;
      break;
    }
  }

  const double sweep = wrap_2pi(spec.angle_x - spec.angle_y);
  for (Point p : pts) {
    double a = wrap_2pi(std::atan2(p.y, p.x) - spec.angle_y);
    double d = a <= sweep ? std::abs(R - std::hypot(p.x, p.y)) : std::min(dist(p, X), dist(p, Y));
    st.max_distance = std::max(st.max_distance, d);
  }

  std::vector<Point> poly(pts.begin(), pts.end());
  const int steps = std::max(8, static_cast<int>(std::ceil(sweep / 0.01)));
  for (int k = 0; k <= steps; ++k) {
    double t = spec.angle_y + sweep * k / steps;
    poly.push_back({R * std::cos(t), R * std::sin(t)});
  }
  double area = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Point& a = poly[k];
    const Point& b = poly[(k + 1) % poly.size()];
    area += a.x * b.y - b.x * a.y;
  }
  st.left_area = area / 2.0;
  return st;
}

std::vector<TopologySignature> enumerate_signatures(const LatticeDomain& domain) {
  if (domain.mode() != Mode::NonCrossing)
    throw Error(ErrorKind::InvalidArgument, "signatures are enumerated for non-crossing domains");
  const int n = domain.n_holes();
  if (n > 6) throw Error(ErrorKind::InvalidArgument, "at most 6 holes are supported", "holes");
  std::vector<TopologySignature> out;
  for (int mask = 0; mask < (1 << n); ++mask) {
    TopologySignature s;
    s.mode = Mode::NonCrossing;
    for (int j = 0; j < n; ++j) s.signs.push_back((mask >> j) & 1 ? 1 : -1);
    out.push_back(std::move(s));
  }
  return out;
}

MixtureRun run_noncrossing_mixture(const LatticeDomain& domain, double kappa, Construction construction,
                                   std::int64_t n_samples, std::uint64_t seed, int workers, bool keep_samples) {
  check_kappa(kappa);
  if (construction == Construction::AnnulusCrossing4)
    throw Error(ErrorKind::InvalidArgument, "use assemble_crossing_annulus for the crossing annulus");
  if (construction == Construction::GFF4 && kappa != 4.0)
    throw Error(ErrorKind::InvalidArgument, "the level-line construction is for kappa = 4", "kappa");
  if (n_samples < 1) throw Error(ErrorKind::InvalidArgument, "n_samples must be positive", "n_samples");

  MixtureRun run;
  MixtureReport& rep = run.report;
  rep.construction = construction;
  rep.kappa = kappa;
  const auto sigs = enumerate_signatures(domain);
  double var = 0.0;
  double max_w = -INFINITY;
  for (std::size_t b = 0; b < sigs.size(); ++b) {
    SignatureTerm term;
    term.weight = weight_for(domain, sigs[b], kappa);
    max_w = std::max(max_w, term.weight.log_weight);
    SignatureDrawer drawer(domain, sigs[b], kappa, construction);
    std::vector<Draw> draws(static_cast<std::size_t>(n_samples));
    const std::uint64_t stream_seed = substream_seed(seed, 1000 + b);
    parallel_for(draws.size(), workers, [&](std::size_t r) {
      Rng rng(stream_seed, r);
      draws[r] = drawer.draw(rng, true);
    });
    term.n_samples = n_samples;
    for (const Draw& d : draws) {
      term.hits += d.accepted;
      term.discarded += d.discarded;
    }
    term.p_hat = static_cast<double>(term.hits) / static_cast<double>(n_samples);
    term.stderr_ = binomial_stderr(term.p_hat, n_samples);
    const double w = std::exp(term.weight.log_weight);
    rep.partition_function += w * term.p_hat;
    var += w * w * term.stderr_ * term.stderr_;
    if (keep_samples) {
      for (Draw& d : draws) {
        if (!d.accepted) continue;
        MixtureSample s;
        s.stats = curve_statistics(domain, d.path);
        s.path = std::move(d.path);
        s.signature_index = static_cast<int>(b);
        s.weight = w / static_cast<double>(n_samples);
        run.samples.push_back(std::move(s));
      }
    }
    if (term.discarded > 0)
      rep.notes.push_back("signature " + std::to_string(b) + ": " + std::to_string(term.discarded) +
                          " fillings reached (xy) and were resampled");
    rep.per_signature.push_back(std::move(term));
  }
  rep.partition_stderr = std::sqrt(var);

  std::vector<SignatureTerm> kept;
  for (std::size_t b = 0; b < rep.per_signature.size(); ++b) {
    const SignatureTerm& t = rep.per_signature[b];
    if (t.hits == 0 && t.weight.log_weight < max_w + std::log(1e-12)) {
      rep.notes.push_back("signature " + std::to_string(b) + " dropped: never observed and weight below 1e-12 of max");
      continue;
    }
    kept.push_back(t);
  }
  rep.per_signature = std::move(kept);
  return run;
}

MixtureReport assemble_noncrossing(const LatticeDomain& domain, double kappa, Construction construction,
                                   std::int64_t n_samples, std::uint64_t seed, int workers) {
  return run_noncrossing_mixture(domain, kappa, construction, n_samples, seed, workers, false).report;
}

MixtureReport assemble_noncrossing(const LatticeDomain& domain, double kappa, std::int64_t n_samples,
                                   std::uint64_t seed, int workers) {
  return assemble_noncrossing(domain, kappa, kappa == 4.0 ? Construction::GFF4 : Construction::CLEKappa, n_samples,
                              seed, workers);
}

DomainSpec annulus_spec(double p, double alpha, double mesh, Mode mode) {
  if (!(p > 0.0)) throw Error(ErrorKind::NonPositiveModulus, "annulus modulus must be positive", "p");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in [0, 1)", "alpha");
  DomainSpec spec;
  spec.outer_radius = 1.0;
  spec.holes = {Hole{{0.0, 0.0}, std::exp(-p)}};
  spec.mesh = mesh;
  spec.mode = mode;
  spec.angle_x = 0.0;
  spec.angle_y = mode == Mode::Crossing ? kTwoPi * alpha : std::numbers::pi;
  return spec;
}

CrossingReport assemble_crossing_annulus(double p, double alpha, std::int64_t n_samples, int k_max,
                                         std::uint64_t seed, double mesh, int workers) {
  if (n_samples < 1) throw Error(ErrorKind::InvalidArgument, "n_samples must be positive", "n_samples");
  if (k_max < 1) throw Error(ErrorKind::InvalidArgument, "k_max must be positive", "k_max");
  CrossingReport rep;
  rep.n_samples = n_samples;
  rep.theory = winding_distribution(p, alpha, k_max);
  rep.mixture.construction = Construction::AnnulusCrossing4;
  rep.mixture.kappa = 4.0;

  LatticeDomain domain = LatticeDomain::build_circle(annulus_spec(p, alpha, mesh));
  auto solver = std::make_shared<const LaplaceSolver>(domain);
  std::map<int, double> energy;
  for (int k = -k_max; k <= k_max; ++k) energy[k] = annulus_branch_energy(*solver, annulus_branch_mean(*solver, k));
  double top = -INFINITY;
  for (auto [k, e] : energy) {
    rep.branch_log_weight[k] = -0.5 * (e - energy[0]);
    top = std::max(top, rep.branch_log_weight[k]);
  }
  double norm = 0.0;
  for (auto [k, lw] : rep.branch_log_weight) norm += std::exp(lw - top);
  std::vector<int> ks;
  std::vector<double> cdf;
  double acc = 0.0;
  for (auto [k, lw] : rep.branch_log_weight) {
    rep.lattice_probs[k] = std::exp(lw - top) / norm;
    acc += rep.lattice_probs[k];
    ks.push_back(k);
    cdf.push_back(acc);
  }

  std::map<int, FieldSampler> samplers;
  for (int k : ks) {
    MeanSpec spec;
    spec.mode = Mode::Crossing;
    spec.branch = k;
    samplers.emplace(k, FieldSampler(solver, spec));
  }
  std::vector<int> branch(static_cast<std::size_t>(n_samples)), winding(branch.size());
  parallel_for(branch.size(), workers, [&](std::size_t r) {
    Rng rng(seed, r);
    double u = rng.uniform() * acc;
    std::size_t pick = std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), ks.size() - 1);
    branch[r] = ks[pick];
    winding[r] = trace_level_line(samplers.at(ks[pick]).sample(rng)).signature.winding;
  });

  std::map<int, std::int64_t> per_branch, on_branch, per_winding;
  std::int64_t off = 0;
  for (std::size_t r = 0; r < branch.size(); ++r) {
    per_branch[branch[r]]++;
    per_winding[winding[r]]++;
    if (winding[r] == branch[r]) on_branch[branch[r]]++;
    else ++off;
  }
  rep.off_branch_fraction = static_cast<double>(off) / static_cast<double>(n_samples);
  for (int k = -k_max; k <= k_max; ++k) {
    ClassEstimate e;
    e.n_samples = n_samples;
    e.hits = per_winding.count(k) ? per_winding[k] : 0;
    e.p_hat = static_cast<double>(e.hits) / static_cast<double>(n_samples);
    e.stderr_ = binomial_stderr(e.p_hat, n_samples);
    rep.empirical[k] = e;
  }

  double var = 0.0;
  for (int k : ks) {
    SignatureTerm t;
    t.weight.signature.mode = Mode::Crossing;
    t.weight.signature.winding = k;
    t.weight.log_weight = rep.branch_log_weight[k];
    t.weight.energy_diff = energy[k] - energy[0];
    t.n_samples = per_branch[k];
    t.hits = on_branch[k];
    t.p_hat = t.n_samples ? static_cast<double>(t.hits) / static_cast<double>(t.n_samples) : 1.0;
    t.stderr_ = binomial_stderr(t.p_hat, t.n_samples);
    const double w = std::exp(t.weight.log_weight);
    rep.mixture.partition_function += w * t.p_hat;
    var += w * w * t.stderr_ * t.stderr_;
    rep.mixture.per_signature.push_back(t);
  }
  rep.mixture.partition_stderr = std::sqrt(var);
  rep.mixture.notes.push_back("weights relative to the k = 0 branch; the common constant cancels in the winding law");
  return rep;
}

bool RestrictionReport::ratio_ok() const {
  return std::abs(mass_ratio - expected_ratio) <= 3.0 * mass_ratio_stderr + 0.05 * expected_ratio;
}

bool RestrictionReport::tests_ok(double level) const {
  return std::all_of(tests.begin(), tests.end(), [level](const auto& t) { return t.second.p_value >= level; });
}

RestrictionReport verify_restriction(const LatticeDomain& domain, const LatticeDomain& restricted, double kappa,
                                     std::int64_t n_samples, std::uint64_t seed, int workers) {
  check_kappa(kappa);
  const auto& sp = domain.spec();
  const auto& sr = restricted.spec();
  if (restricted.size() != domain.size() || sr.mesh != sp.mesh || restricted.marked_x() != domain.marked_x() ||
      restricted.marked_y() != domain.marked_y())
    throw Error(ErrorKind::InvalidArgument, "restricted domain must share the grid and marks");
  if (!restricted.simply_connected())
    throw Error(ErrorKind::InvalidArgument, "restricted domain must be simply connected");
  std::vector<Site> removed;
  for (Site s : domain.interior()) {
    if (!restricted.is_interior(s)) removed.push_back(s);
  }
  for (Site s : restricted.interior())
    if (!domain.is_interior(s)) throw Error(ErrorKind::InvalidArgument, "restricted domain is not inside the domain");

  const Construction c = kappa == 4.0 ? Construction::GFF4 : Construction::CLEKappa;
  const double half_c = central_charge(kappa) / 2.0;
  RestrictionReport rep;
  MixtureRun run = run_noncrossing_mixture(domain, kappa, c, n_samples, seed, workers, true);
  rep.n_mixture = n_samples * static_cast<std::int64_t>(enumerate_signatures(domain).size());
  rep.z_domain = run.report.partition_function;

  // Reweight the restricted draws.
  std::unique_ptr<LoopMassOracle> oracle;
  if (!removed.empty()) oracle = std::make_unique<LoopMassOracle>(domain, removed);
  std::vector<char> inside(run.samples.size(), 0);
  std::vector<double> rw(run.samples.size(), 0.0);
  parallel_for(run.samples.size(), workers, [&](std::size_t i) {
    const auto sites = path_sites(domain, run.samples[i].path);
    for (Site s : sites)
      if (!restricted.is_interior(s)) return;
    inside[i] = 1;
    rw[i] = run.samples[i].weight * (oracle ? std::exp(half_c * oracle->mass(sites)) : 1.0);
  });
  std::vector<std::array<double, 3>> restricted_stats;
  std::vector<double> restricted_w;
  const auto sigs = enumerate_signatures(domain);
  std::vector<double> sum(sigs.size(), 0.0), sum2(sigs.size(), 0.0);
  for (std::size_t i = 0; i < run.samples.size(); ++i) {
    if (!inside[i]) continue;
    restricted_stats.push_back(run.samples[i].stats.as_array());
    restricted_w.push_back(rw[i]);
    // per-attempt value y = Z_b 1{...} e^{...}; rw = y / n
    const int b = run.samples[i].signature_index;
    const double y = rw[i] * static_cast<double>(n_samples);
    sum[b] += y;
    sum2[b] += y * y;
  }
  rep.n_restricted = static_cast<std::int64_t>(restricted_w.size());
  if (rep.n_restricted < 100)
    throw Error(ErrorKind::TooFewRestrictedSamples,
                "only " + std::to_string(rep.n_restricted) + " mixture samples stay inside the restricted domain");
  double var = 0.0;
  const double n = static_cast<double>(n_samples);
  for (std::size_t b = 0; b < sigs.size(); ++b) {
    const double m = sum[b] / n;
    rep.z_restricted += m;
    var += std::max(sum2[b] / n - m * m, 0.0) / n;
  }
  rep.z_restricted_stderr = std::sqrt(var);
  rep.restricted_ess = weighted_moments(std::vector<double>(restricted_w.size(), 0.0), restricted_w).n_eff;

  // Direct samples in the restricted domain, using the signature its reference carving encodes.
  TopologySignature direct_sig;
  direct_sig.mode = Mode::NonCrossing;
  {
    for (int j = 0; j < restricted.n_holes(); ++j) {
      // A hole merged into the outer boundary takes the sign of the arc it joins.
      int sign = 1;
      for (Site s : restricted.hole_boundary(j)) {
        for (Site st : kSteps8) {
          Site t = s + st;
          if (restricted.in_grid(t) && restricted.region(t) == Region::Carved) {
            for (Site st2 : kSteps8) {
              Site u = t + st2;
              if (restricted.in_grid(u) && restricted.region(u) == Region::Outer && restricted.arc(u) == Arc::Left)
                sign = -1;
            }
          }
        }
      }
      direct_sig.signs.push_back(sign);
    }
  }
  const double h = restriction_exponent(kappa);
  {
    auto H = boundary_poisson_matrix(restricted, std::vector<Site>{restricted.marked_x()},
                                     std::vector<Site>{restricted.marked_y()});
    rep.z_exact = std::pow(H.entries(0, 0), h);
  }
  SignatureDrawer drawer(restricted, direct_sig, kappa, c);
  std::vector<Draw> direct(static_cast<std::size_t>(n_samples));
  const std::uint64_t dseed = substream_seed(seed, 7);
  parallel_for(direct.size(), workers, [&](std::size_t r) {
    Rng rng(dseed, r);
    direct[r] = drawer.draw(rng, false);
  });
  rep.n_direct = n_samples;
  std::vector<std::array<double, 3>> direct_stats;
  for (const Draw& d : direct) direct_stats.push_back(curve_statistics(restricted, d.path).as_array());

  for (std::size_t s = 0; s < kCurveStatNames.size(); ++s) {
    std::vector<double> a, wa, b;
    for (std::size_t i = 0; i < restricted_stats.size(); ++i)
      if (std::isfinite(restricted_stats[i][s])) {
        a.push_back(restricted_stats[i][s]);
        wa.push_back(restricted_w[i]);
      }
    for (const auto& v : direct_stats)
      if (std::isfinite(v[s])) b.push_back(v[s]);
    rep.tests.emplace_back(std::string(kCurveStatNames[s]), ks_two_sample(a, wa, b, {}));
  }

  rep.mass_ratio = rep.z_restricted / rep.z_domain;
  rep.mass_ratio_stderr = rep.z_restricted_stderr / rep.z_domain;
  rep.expected_ratio = rep.z_exact / rep.z_domain;
  return rep;
}

BridgeExit bridge_exit_probabilities(double p, double start, double end, double speed) {
  if (!(p > 0.0)) throw Error(ErrorKind::NonPositiveModulus, "bridge duration must be positive", "p");
  if (!(start > 0.0 && start < kTwoPi)) throw Error(ErrorKind::InvalidArgument, "start must lie in (0, 2 pi)", "start");
  if (!(end >= 0.0 && end <= kTwoPi)) throw Error(ErrorKind::InvalidArgument, "end must lie in [0, 2 pi]", "end");
  if (!(speed > 0.0)) throw Error(ErrorKind::InvalidArgument, "speed must be positive", "speed");
  const double s = speed * p;
  const double L = kTwoPi;
  // Gaussian densities relative to the free one, exp(-(z^2 - d^2) / 2s).
  const double d = end - start;
  auto rel = [&](double z) { return std::exp(-(z * z - d * d) / (2.0 * s)); };
  int N = 1;
  while ((2.0 * N - 1.0) * L * (2.0 * N - 1.0) * L / (2.0 * s) < 40.0) ++N;
  BridgeExit out;
  out.terms = 2 * N + 1;
  // First exit through 0 from a, then anywhere to b: sum_n sign(c) phi(|c| + b), c = a + 2nL.
  auto first_exit_low = [&](double a, double b) {
    double acc = 0.0;
    for (int n = -N; n <= N; ++n) {
      double c = a + 2.0 * n * L;
      acc += (c > 0 ? 1.0 : -1.0) * rel(std::abs(c) + b);
    }
    return acc;
  };
  out.exit_0 = first_exit_low(start, end);
  out.exit_2pi = first_exit_low(L - start, L - end);
  out.no_exit = 0.0;
  if (end > 0.0 && end < L) {
    for (int n = -N; n <= N; ++n) out.no_exit += rel(d + 2.0 * n * L) - rel(end + start + 2.0 * n * L);
  }
  return out;
}

BridgeExit bridge_exit_monte_carlo(double p, double start, double end, std::int64_t n_bridges, double dt,
                                   std::uint64_t seed, double speed, int workers) {
  if (!(p > 0.0)) throw Error(ErrorKind::NonPositiveModulus, "bridge duration must be positive", "p");
  if (n_bridges < 1 || !(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "need bridges and a positive step");
  const double L = kTwoPi;
  const int steps = std::max(1, static_cast<int>(std::lround(p / dt)));
  const double h = p / steps;
  const double sig = std::sqrt(speed * h);
  std::vector<std::int8_t> outcome(static_cast<std::size_t>(n_bridges), 0);
  parallel_for(outcome.size(), workers, [&](std::size_t r) {
    Rng rng(seed, r);
    double x = start;
    for (int k = 0; k < steps; ++k) {
      const double remaining = p - k * h;
      double next = k + 1 == steps ? end : x + (end - x) * h / remaining + sig * std::sqrt(1.0 - h / remaining) * rng.normal();
      // Barrier crossings between grid times, from the Brownian bridge law of the step.
      if (next <= 0.0) {
        outcome[r] = 1;
        return;
      }
      if (next >= L) {
        outcome[r] = 2;
        return;
      }
      const double var = speed * h;
      if (rng.uniform() < std::exp(-2.0 * x * next / var)) {
        outcome[r] = 1;
        return;
      }
      if (rng.uniform() < std::exp(-2.0 * (L - x) * (L - next) / var)) {
        outcome[r] = 2;
        return;
      }
      x = next;
    }
  });
  BridgeExit out;
  const double n = static_cast<double>(n_bridges);
  out.exit_0 = std::count(outcome.begin(), outcome.end(), 1) / n;
  out.exit_2pi = std::count(outcome.begin(), outcome.end(), 2) / n;
  out.no_exit = std::count(outcome.begin(), outcome.end(), 0) / n;
  out.stderr_ = std::sqrt(std::max({out.exit_0 * (1 - out.exit_0), out.exit_2pi * (1 - out.exit_2pi), 0.0}) / n);
  out.terms = steps;
  return out;
}

}  // namespace mcsle
