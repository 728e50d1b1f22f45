#include "mcsle/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <numbers>

#include "mcsle/energy_weights.hpp"
#include "mcsle/errors.hpp"
#include "mcsle/harmonic_kernels.hpp"
#include "mcsle/lattice_domain.hpp"
#include "mcsle/loop_excursion.hpp"
#include "mcsle/rng.hpp"
#include "mcsle/sle_assembly.hpp"

namespace fs = std::filesystem;

namespace mcsle {

namespace {

constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::Kernels, "kernels"},     {Command::Identities, "identities"},
    {Command::Winding, "winding"},     {Command::Partition, "partition"},
    {Command::Sample, "sample"},       {Command::VerifyRestriction, "verify-restriction"},
    {Command::Soup, "soup"},
};

const std::vector<std::string> kKnownKeys = {
    "domain", "kappa",     "n_samples", "seed",         "workers",    "out_dir", "tolerances", "crosscuts",
    "p",      "alpha",     "mesh",      "k_max",        "construction", "restricted", "intensity"};

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::InvalidConfig, field + ": " + msg, field);
}

double get_number(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number()) invalid(key, "expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) invalid(key, "not finite");
  return x;
}

double number_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? get_number(j, key) : fallback;
}

std::int64_t integer_or(const json& j, const std::string& key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) invalid(key, "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t parse_seed_text(const std::string& text, const std::string& field) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(text, &used, 10);
    if (used != text.size() || text.front() == '-') invalid(field, "expected a non-negative integer");
    return v;
  } catch (const std::logic_error&) {
    invalid(field, "expected a non-negative integer");
  }
}

const DomainSpec& need_domain(const RunConfig& cfg) {
  if (!cfg.domain) invalid("domain", "missing");
  return *cfg.domain;
}

LatticeDomain build_domain(const RunConfig& cfg) {
  const DomainSpec& spec = need_domain(cfg);
  try {
    return LatticeDomain::build_circle(spec);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MeshTooCoarse || e.kind() == ErrorKind::MarksCoincide ||
        e.kind() == ErrorKind::InvalidArgument)
      throw Error(ErrorKind::InvalidConfig, std::string("domain: ") + e.what(),
                  e.field().empty() ? "domain" : "domain." + e.field());
    throw;
  }
}

double tolerance(const RunConfig& cfg, const std::string& key, double fallback) {
  if (!cfg.tolerances.contains(key)) return fallback;
  const json& v = cfg.tolerances.at(key);
  if (!v.is_number() || !(v.get<double>() > 0.0)) invalid("tolerances." + key, "expected a positive number");
  return v.get<double>();
}

std::string signs_text(const std::vector<int>& signs) {
  if (signs.empty()) return "none";
  std::string s;
  for (int v : signs) s += v < 0 ? '-' : '+';
  return s;
}

json to_json(const TestResult& t) {
  return {{"statistic", t.statistic}, {"p_value", t.p_value}, {"n_eff", t.n_eff}};
}

json to_json(const MixtureReport& r) {
  json j;
  j["construction"] = std::string(to_string(r.construction));
  j["kappa"] = r.kappa;
  j["partition_function"] = r.partition_function;
  j["partition_stderr"] = r.partition_stderr;
  j["signatures"] = json::array();
  for (const SignatureTerm& t : r.per_signature) {
    json s;
    if (t.weight.signature.mode == Mode::Crossing) s["winding"] = t.weight.signature.winding;
    else s["signs"] = t.weight.signature.signs;
    s["log_weight"] = t.weight.log_weight;
    s["energy_diff"] = t.weight.energy_diff;
    s["reference_H"] = t.weight.reference_H;
    s["p_hat"] = t.p_hat;
    s["stderr"] = t.stderr_;
    s["n_samples"] = t.n_samples;
    s["hits"] = t.hits;
    s["discarded"] = t.discarded;
    j["signatures"].push_back(s);
  }
  j["notes"] = r.notes;
  return j;
}

// Every sampled command needs kappa in (8/3, 4].
void require_kappa(const RunConfig& cfg) {
  try {
    check_kappa(cfg.kappa);
  } catch (const Error& e) {
    invalid("kappa", e.what());
  }
}

std::vector<std::string> run_kernels(const RunConfig& cfg) {
  LatticeDomain d = build_domain(cfg);
  LaplaceSolver solver(d);
  const auto& bnd = d.boundary();
  KernelMatrix H = boundary_poisson_matrix(solver, bnd, bnd);
  {
    CsvWriter csv(cfg.out_dir / "boundary_kernel.csv", {"row_i", "row_j", "col_i", "col_j", "value"});
    for (std::size_t a = 0; a < bnd.size(); ++a)
      for (std::size_t b = 0; b < bnd.size(); ++b) {
        const double v = H.entries(a, b);
        if (v == 0.0) continue;
        csv << bnd[a].i << bnd[a].j << bnd[b].i << bnd[b].j << v;
        csv.end_row();
      }
  }
  const double sym = (H.entries - H.entries.transpose()).cwiseAbs().maxCoeff();

  // Green and Poisson checks on every k-th interior site, at most ~200 rows.
  const auto& in = d.interior();
  std::vector<Site> rows;
  const std::size_t stride = std::max<std::size_t>(1, in.size() / 200);
  for (std::size_t k = 0; k < in.size(); k += stride) rows.push_back(in[k]);
  KernelMatrix G = green_matrix(solver, rows, rows);
  KernelMatrix P = poisson_matrix(d, rows, bnd);
  const double row_sum = (P.entries.rowwise().sum().array() - 1.0).abs().maxCoeff();

  json j;
  j["n_interior"] = d.n_interior();
  j["n_boundary"] = static_cast<int>(bnd.size());
  j["n_components"] = static_cast<int>(d.components().size());
  j["log_det_laplacian"] = solver.log_det();
  j["marked_x"] = {d.marked_x().i, d.marked_x().j};
  j["marked_y"] = {d.marked_y().i, d.marked_y().j};
  j["boundary_poisson_xy"] = H.entries(d.boundary_index(d.marked_x()), d.boundary_index(d.marked_y()));
  j["boundary_poisson_symmetry_residual"] = sym;
  j["green_rows_checked"] = static_cast<int>(rows.size());
  j["green_symmetry_residual"] = (G.entries - G.entries.transpose()).cwiseAbs().maxCoeff();
  j["green_min_entry"] = G.entries.minCoeff();
  j["poisson_row_sum_residual"] = row_sum;
  j["poisson_min_entry"] = P.entries.minCoeff();
  write_json_file(cfg.out_dir / "kernels.json", j);
  return {"kernels.json", "boundary_kernel.csv"};
}

std::vector<std::string> run_identities(const RunConfig& cfg) {
  LatticeDomain d = build_domain(cfg);
  if (d.n_holes() < 1) invalid("domain.holes", "identities need at least one hole for radial crosscuts");
  std::vector<std::pair<double, int>> cuts = {{std::numbers::pi / 2, 0}, {3 * std::numbers::pi / 2, 0}};
  if (cfg.config.contains("crosscuts")) {
    const json& c = cfg.config["crosscuts"];
    if (!c.is_array() || c.size() != 2) invalid("crosscuts", "expected two entries");
    for (int k = 0; k < 2; ++k) {
      const std::string f = "crosscuts[" + std::to_string(k) + "]";
      if (!c[k].is_object() || !c[k].contains("angle")) invalid(f + ".angle", "missing");
      if (!c[k]["angle"].is_number()) invalid(f + ".angle", "expected a number");
      cuts[k].first = c[k]["angle"].get<double>();
      if (c[k].contains("hole")) {
        if (!c[k]["hole"].is_number_integer()) invalid(f + ".hole", "expected an integer");
        cuts[k].second = c[k]["hole"].get<int>();
        if (cuts[k].second < 0 || cuts[k].second >= d.n_holes()) invalid(f + ".hole", "no such hole");
      }
    }
  }
  LatticePath b1 = radial_crosscut(d, cuts[0].first, cuts[0].second);
  LatticePath b2 = radial_crosscut(d, cuts[1].first, cuts[1].second);
  LoopIdentityReport li = verify_loop_identities(d, b1, b2);
  LoopMassReport fr = fredholm_identity_check(d, b1, b2);
  const double tol = tolerance(cfg, "identity", 1e-8);
  const double ftol = tolerance(cfg, "fredholm", 1e-8);

  json j;
  j["b1_size"] = li.b1_size;
  j["b2_size"] = li.b2_size;
  j["green_residual"] = li.green_residual;
  j["poisson_residual"] = li.poisson_residual;
  j["no_assumption_residual"] = li.no_assumption_residual;
  j["max_residual"] = li.max();
  j["loop_mass"] = fr.m_hit_both;
  j["log_det_fredholm"] = fr.log_det_fredholm;
  j["log_det_composite"] = fr.log_det_composite;
  j["fredholm_residual"] = fr.det_identity_residual;
  j["composite_residual"] = fr.composite_identity_residual;
  j["spectral_radius"] = fr.spectral_radius;
  j["tolerance"] = tol;
  j["fredholm_tolerance"] = ftol;
  j["pass"] = li.max() < tol && fr.det_identity_residual < ftol && fr.composite_identity_residual < ftol;
  write_json_file(cfg.out_dir / "identities.json", j);
  return {"identities.json"};
}

std::vector<std::string> run_winding(const RunConfig& cfg) {
  const json& c = cfg.config;
  double p = 0.0, alpha = 0.0;
  double mesh = number_or(c, "mesh", 1.0 / 64.0);
  if (c.contains("p")) {
    p = get_number(c, "p");
    alpha = number_or(c, "alpha", 0.0);
  } else if (c.contains("domain") && c["domain"].is_object() && c["domain"].contains("annulus")) {
    const json& a = c["domain"]["annulus"];
    p = get_number(a, "p");
    alpha = number_or(a, "alpha", 0.0);
    mesh = cfg.domain->mesh;
  } else {
    invalid("p", "missing (or give domain.annulus)");
  }
  if (!(p > 0.0)) invalid("p", "must be positive");
  if (!(alpha >= 0.0 && alpha < 1.0)) invalid("alpha", "must lie in [0, 1)");
  if (!(mesh > 0.0)) invalid("mesh", "must be positive");
  const std::int64_t kmax = integer_or(c, "k_max", 3);
  if (kmax < 1 || kmax > 50) invalid("k_max", "must lie in [1, 50]");

  CrossingReport rep = assemble_crossing_annulus(p, alpha, cfg.n_samples, static_cast<int>(kmax), cfg.seed, mesh,
                                                 cfg.workers);
  const double allowance = tolerance(cfg, "discretization", 0.03);
  bool pass = true;
  {
    CsvWriter csv(cfg.out_dir / "winding.csv",
                  {"k", "theory", "lattice", "empirical", "stderr", "hits", "within_tolerance"});
    for (int k = -static_cast<int>(kmax); k <= kmax; ++k) {
      const double th = rep.theory.probs.count(k) ? rep.theory.probs.at(k) : 0.0;
      const ClassEstimate& e = rep.empirical.at(k);
      const bool ok = std::abs(e.p_hat - th) <= 3.0 * e.stderr_ + allowance;
      if (std::abs(k) <= 1) pass = pass && ok;
      csv << k << th << rep.lattice_probs.at(k) << e.p_hat << e.stderr_ << static_cast<long long>(e.hits)
          << (ok ? 1 : 0);
      csv.end_row();
    }
  }
  json j;
  j["p"] = p;
  j["alpha"] = alpha;
  j["mesh"] = mesh;
  j["k_max"] = kmax;
  j["n_samples"] = rep.n_samples;
  j["theta_value"] = rep.theory.theta_value;
  j["off_branch_fraction"] = rep.off_branch_fraction;
  j["discretization_allowance"] = allowance;
  j["pass"] = pass;
  j["mixture"] = to_json(rep.mixture);
  write_json_file(cfg.out_dir / "winding.json", j);
  return {"winding.csv", "winding.json"};
}

Construction construction_of(const RunConfig& cfg) {
  if (!cfg.config.contains("construction")) return cfg.kappa == 4.0 ? Construction::GFF4 : Construction::CLEKappa;
  const json& v = cfg.config["construction"];
  if (v == "gff") {
    if (cfg.kappa != 4.0) invalid("construction", "gff needs kappa = 4");
    return Construction::GFF4;
  }
  if (v == "cle") return Construction::CLEKappa;
  invalid("construction", "expected \"gff\" or \"cle\"");
}

LatticeDomain noncrossing_domain(const RunConfig& cfg) {
  if (need_domain(cfg).mode != Mode::NonCrossing) invalid("domain.mode", "this command needs a non-crossing domain");
  LatticeDomain d = build_domain(cfg);
  if (d.n_holes() > 6) invalid("domain.holes", "at most 6 holes");
  return d;
}

std::vector<std::string> run_partition(const RunConfig& cfg) {
  require_kappa(cfg);
  LatticeDomain d = noncrossing_domain(cfg);
  MixtureReport rep = assemble_noncrossing(d, cfg.kappa, construction_of(cfg), cfg.n_samples, cfg.seed, cfg.workers);
  {
    CsvWriter csv(cfg.out_dir / "signatures.csv", {"index", "signs", "log_weight", "energy_diff", "reference_H",
                                                   "p_hat", "stderr", "n_samples", "hits", "discarded"});
    int b = 0;
    for (const SignatureTerm& t : rep.per_signature) {
      csv << b++ << signs_text(t.weight.signature.signs) << t.weight.log_weight << t.weight.energy_diff
          << t.weight.reference_H << t.p_hat << t.stderr_ << static_cast<long long>(t.n_samples)
          << static_cast<long long>(t.hits) << static_cast<long long>(t.discarded);
      csv.end_row();
    }
  }
  json j = to_json(rep);
  j["n_holes"] = d.n_holes();
  write_json_file(cfg.out_dir / "partition.json", j);
  return {"partition.json", "signatures.csv"};
}

std::vector<std::string> run_sample(const RunConfig& cfg) {
  require_kappa(cfg);
  LatticeDomain d = noncrossing_domain(cfg);
  MixtureRun run = run_noncrossing_mixture(d, cfg.kappa, construction_of(cfg), cfg.n_samples, cfg.seed, cfg.workers);
  {
    CsvWriter paths(cfg.out_dir / "paths.csv", {"sample", "signature_index", "vertex", "x", "y"});
    CsvWriter stats(cfg.out_dir / "stats.csv",
                    {"sample", "signature_index", "weight", "chord_crossing", "max_distance", "left_area"});
    for (std::size_t s = 0; s < run.samples.size(); ++s) {
      const MixtureSample& m = run.samples[s];
      const auto id = static_cast<long long>(s);
      for (std::size_t k = 0; k < m.path.vertices.size(); ++k) {
        Point p = d.point(m.path, k);
        paths << id << m.signature_index << static_cast<long long>(k) << p.x << p.y;
        paths.end_row();
      }
      stats << id << m.signature_index << m.weight << m.stats.chord_crossing << m.stats.max_distance
            << m.stats.left_area;
      stats.end_row();
    }
  }
  return {"paths.csv", "stats.csv"};
}

std::vector<std::string> run_verify_restriction(const RunConfig& cfg) {
  require_kappa(cfg);
  LatticeDomain d = noncrossing_domain(cfg);
  if (!cfg.config.contains("restricted")) invalid("restricted", "missing");
  const json& r = cfg.config["restricted"];
  if (!r.is_object()) invalid("restricted", "expected an object");
  std::optional<LatticeDomain> dr;
  if (r.contains("signs")) {
    const json& s = r["signs"];
    if (!s.is_array() || static_cast<int>(s.size()) != d.n_holes()) invalid("restricted.signs", "expected one sign per hole");
    std::vector<int> signs;
    for (const json& v : s) {
      if (!v.is_number_integer() || (v.get<int>() != 1 && v.get<int>() != -1)) invalid("restricted.signs", "entries must be +1 or -1");
      signs.push_back(v.get<int>());
    }
    const std::int64_t variant = integer_or(r, "variant", 0);
    if (variant < 0 || variant > 1) invalid("restricted.variant", "expected 0 or 1");
    dr.emplace(reference_domain(d, signs, static_cast<int>(variant)));
  } else if (r.contains("carve")) {
    const json& c = r["carve"];
    if (!c.is_array()) invalid("restricted.carve", "expected an array of [i, j] sites");
    std::vector<Site> sites;
    for (const json& v : c) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        invalid("restricted.carve", "expected [i, j] integer pairs");
      sites.push_back({v[0].get<int>(), v[1].get<int>()});
    }
    try {
      dr.emplace(d.carve(sites));
    } catch (const Error& e) {
      invalid("restricted.carve", e.what());
    }
  } else {
    invalid("restricted", "expected \"signs\" or \"carve\"");
  }
  RestrictionReport rep = verify_restriction(d, *dr, cfg.kappa, cfg.n_samples, cfg.seed, cfg.workers);
  const double level = tolerance(cfg, "test_level", 0.01);
  json j;
  j["kappa"] = cfg.kappa;
  j["n_mixture"] = rep.n_mixture;
  j["n_restricted"] = rep.n_restricted;
  j["n_direct"] = rep.n_direct;
  j["restricted_ess"] = rep.restricted_ess;
  j["z_domain"] = rep.z_domain;
  j["z_restricted"] = rep.z_restricted;
  j["z_restricted_stderr"] = rep.z_restricted_stderr;
  j["z_exact"] = rep.z_exact;
  j["mass_ratio"] = rep.mass_ratio;
  j["mass_ratio_stderr"] = rep.mass_ratio_stderr;
  j["expected_ratio"] = rep.expected_ratio;
  j["tests"] = json::object();
  for (const auto& [name, t] : rep.tests) j["tests"][name] = to_json(t);
  j["test_level"] = level;
  j["ratio_ok"] = rep.ratio_ok();
  j["tests_ok"] = rep.tests_ok(level);
  write_json_file(cfg.out_dir / "restriction.json", j);
  return {"restriction.json"};
}

std::vector<std::string> run_soup(const RunConfig& cfg) {
  LatticeDomain d = build_domain(cfg);
  double intensity = 0.0;
  if (cfg.config.contains("intensity")) {
    intensity = get_number(cfg.config, "intensity");
    if (!(intensity > 0.0 && intensity <= 1.0)) invalid("intensity", "must lie in (0, 1]");
  } else {
    require_kappa(cfg);
    intensity = central_charge(cfg.kappa) / 2.0;
  }
  LoopSoupSampler sampler(d);
  Rng rng(cfg.seed, 0);
  std::vector<Loop> loops = sampler.sample(intensity, rng);
  std::vector<Cluster> clusters = cle_clusters(d, loops);
  {
    CsvWriter csv(cfg.out_dir / "loops.csv", {"loop", "vertex", "i", "j"});
    for (std::size_t l = 0; l < loops.size(); ++l)
      for (std::size_t k = 0; k < loops[l].sites.size(); ++k) {
        Site s = d.interior()[loops[l].sites[k]];
        csv << static_cast<long long>(l) << static_cast<long long>(k) << s.i << s.j;
        csv.end_row();
      }
  }
  {
    CsvWriter csv(cfg.out_dir / "clusters.csv", {"cluster", "n_loops", "n_sites", "boundary_length"});
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      csv << static_cast<long long>(c) << static_cast<long long>(clusters[c].loops.size())
          << static_cast<long long>(clusters[c].sites.size())
          << static_cast<long long>(clusters[c].outer_boundary.vertices.size());
      csv.end_row();
    }
  }
  json j;
  j["intensity"] = intensity;
  j["total_mass"] = sampler.total_mass();
  j["expected_loops"] = intensity * sampler.total_mass();
  j["n_loops"] = static_cast<std::int64_t>(loops.size());
  j["n_clusters"] = static_cast<std::int64_t>(clusters.size());
  write_json_file(cfg.out_dir / "soup.json", j);
  return {"loops.csv", "clusters.csv", "soup.json"};
}

json error_json(std::string_view kind, const std::string& message, const std::string& field) {
  json j;
  j["error"] = std::string(kind);
  j["message"] = message;
  if (!field.empty()) j["field"] = field;
  return j;
}

}  // namespace

std::string_view to_string(Command c) {
  for (auto [cmd, name] : kCommands)
    if (cmd == c) return name;
  return "?";
}

std::optional<Command> parse_command(std::string_view name) {
  for (auto [cmd, n] : kCommands)
    if (n == name) return cmd;
  return std::nullopt;
}

RunConfig load_run_config(Command command, const fs::path& config_path, const CliOverrides& cli) {
  RunConfig cfg;
  cfg.command = command;
  cfg.config_path = config_path;
  cfg.config = read_json_file(config_path, "config");
  const json& c = cfg.config;
  if (!c.is_object()) invalid("config", "expected a JSON object");
  for (auto& [k, v] : c.items())
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), k) == kKnownKeys.end()) invalid(k, "unknown field");

  if (c.contains("domain")) {
    const json& dj = c["domain"];
    if (dj.is_string()) {
      fs::path p = dj.get<std::string>();
      if (p.is_relative()) p = config_path.parent_path() / p;
      cfg.domain = parse_domain_spec(read_json_file(p, "domain"), "domain");
    } else {
      cfg.domain = parse_domain_spec(dj, "domain");
    }
  }
  cfg.kappa = number_or(c, "kappa", 4.0);
  if (!(cfg.kappa > 8.0 / 3.0 && cfg.kappa <= 4.0)) invalid("kappa", "must lie in (8/3, 4]");
  cfg.n_samples = integer_or(c, "n_samples", 1000);
  if (cfg.n_samples < 1) invalid("n_samples", "must be at least 1");

  if (cli.seed) {
    cfg.seed = *cli.seed;
  } else if (c.contains("seed")) {
    if (!c["seed"].is_number_unsigned()) invalid("seed", "expected a non-negative integer");
    cfg.seed = c["seed"].get<std::uint64_t>();
  } else if (const char* env = std::getenv("MCSLE_SEED"); env && *env) {
    cfg.seed = parse_seed_text(env, "MCSLE_SEED");
  }

  cfg.workers = static_cast<int>(integer_or(c, "workers", 1));
  if (cli.workers) cfg.workers = *cli.workers;
  if (cfg.workers < 1) invalid("workers", "must be at least 1");

  if (c.contains("out_dir")) {
    if (!c["out_dir"].is_string()) invalid("out_dir", "expected a path string");
    cfg.out_dir = c["out_dir"].get<std::string>();
  }
  if (cli.out_dir) cfg.out_dir = *cli.out_dir;

  if (c.contains("tolerances")) {
    if (!c["tolerances"].is_object()) invalid("tolerances", "expected an object");
    cfg.tolerances = c["tolerances"];
  }
  return cfg;
}

std::vector<std::string> run(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec || !fs::is_directory(cfg.out_dir)) invalid("out_dir", "cannot create " + cfg.out_dir.string());

  std::vector<std::string> outputs;
  switch (cfg.command) {
    case Command::Kernels: outputs = run_kernels(cfg); break;
    case Command::Identities: outputs = run_identities(cfg); break;
    case Command::Winding: outputs = run_winding(cfg); break;
    case Command::Partition: outputs = run_partition(cfg); break;
    case Command::Sample: outputs = run_sample(cfg); break;
    case Command::VerifyRestriction: outputs = run_verify_restriction(cfg); break;
    case Command::Soup: outputs = run_soup(cfg); break;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json m;
  m["tool"] = "mcsle";
  m["version"] = std::string(kVersion);
  m["command"] = std::string(to_string(cfg.command));
  m["inputs"] = json::array();
  m["inputs"].push_back({{"file", cfg.config_path.string()}, {"sha256", sha256_file(cfg.config_path)}});
  if (cfg.config.contains("domain") && cfg.config["domain"].is_string()) {
    fs::path p = cfg.config["domain"].get<std::string>();
    if (p.is_relative()) p = cfg.config_path.parent_path() / p;
    m["inputs"].push_back({{"file", p.string()}, {"sha256", sha256_file(p)}});
  }
  if (cfg.domain) m["domain"] = to_json(*cfg.domain);
  m["seed"] = cfg.seed;
  m["workers"] = cfg.workers;
  m["kappa"] = cfg.kappa;
  m["n_samples"] = cfg.n_samples;
  m["wall_time_seconds"] = wall;
  m["outputs"] = json::array();
  for (const std::string& f : outputs)
    m["outputs"].push_back({{"file", f},
                            {"sha256", sha256_file(cfg.out_dir / f)},
                            {"bytes", static_cast<std::uint64_t>(fs::file_size(cfg.out_dir / f))}});
  write_json_file(cfg.out_dir / "manifest.json", m);
  return outputs;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Lattice constructions of SLE in multiply connected domains"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string config_file;
  std::optional<std::string> seed_text;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  std::optional<double> p_flag, alpha_flag;
  for (auto [cmd, name] : kCommands) {
    CLI::App* sub = app.add_subcommand(std::string(name));
    sub->add_option("--config", config_file, "JSON config file")->required();
    sub->add_option("--seed", seed_text, "master seed (overrides config and MCSLE_SEED)");
    sub->add_option("--workers", workers, "worker threads");
    sub->add_option("--out", out_dir, "output directory");
    if (cmd == Command::Winding) {
      sub->add_option("--p", p_flag, "annulus modulus");
      sub->add_option("--alpha", alpha_flag, "angle of y over 2 pi");
    }
  }

  fs::path error_dir;
  auto fail = [&](int code, std::string_view kind, const std::string& msg, const std::string& field) {
    json e = error_json(kind, msg, field);
    std::cout << e.dump() << std::endl;
    if (!error_dir.empty()) {
      std::error_code ec;
      fs::create_directories(error_dir, ec);
      if (!ec) {
        try {
          write_json_file(error_dir / "error.json", e);
        } catch (...) {
        }
      }
    }
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "InvalidArguments", e.what(), "");
  }

  Command command = Command::Kernels;
  for (CLI::App* sub : app.get_subcommands()) command = *parse_command(sub->get_name());
  if (out_dir) error_dir = *out_dir;

  try {
    CliOverrides ov;
    if (seed_text) ov.seed = parse_seed_text(*seed_text, "--seed");
    ov.workers = workers;
    if (out_dir) ov.out_dir = *out_dir;
    RunConfig cfg = load_run_config(command, config_file, ov);
    error_dir = cfg.out_dir;
    if (p_flag) cfg.config["p"] = *p_flag;
    if (alpha_flag) cfg.config["alpha"] = *alpha_flag;
    run(cfg);
    return 0;
  } catch (const Error& e) {
    const int code = e.kind() == ErrorKind::InvalidConfig ? 2 : 1;
    return fail(code, to_string(e.kind()), e.what(), e.field());
  } catch (const std::exception& e) {
    return fail(1, "InternalError", e.what(), "");
  }
}

}  // namespace mcsle
