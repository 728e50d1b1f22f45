#include "mcsle/loop_excursion.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <numbers>
#include <numeric>

#include "mcsle/energy_weights.hpp"
#include "mcsle/errors.hpp"

namespace mcsle {

namespace {

double log_det_without(const LatticeDomain& domain, std::span<const Site> removed) {
  if (removed.empty()) return LaplaceSolver(domain).log_det();
  LatticeDomain sub = domain.subtract(removed);
  if (sub.n_interior() == 0) return 0.0;
  return LaplaceSolver(sub).log_det();
}

std::vector<Site> sorted_unique(std::span<const Site> s) {
  std::vector<Site> out(s.begin(), s.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

int wedge_sign(const LatticeDomain& d, Site s) {
  const DomainSpec& spec = d.spec();
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  Point p = d.point(s);
  double a = std::fmod(std::atan2(p.y, p.x) - spec.angle_y + 2.0 * kTwoPi, kTwoPi);
  double span = std::fmod(spec.angle_x - spec.angle_y + 2.0 * kTwoPi, kTwoPi);
  return (a > 0.0 && a < span) ? -1 : 1;
}

// Interior sites reachable from (xy) without crossing `blocked`.
std::vector<char> reach_from_right_arc(const LatticeDomain& d, const std::vector<char>& blocked) {
  const int N = d.n_interior();
  std::vector<char> reached(N, 0);
  std::vector<int> stack;
  for (Site b : d.boundary()) {
    if (d.region(b) != Region::Outer || d.arc(b) != Arc::Right) continue;
    for (Site st : kSteps4) {
      int a = d.interior_index(b + st);
      if (a >= 0 && !blocked[a] && !reached[a]) {
        reached[a] = 1;
        stack.push_back(a);
      }
    }
  }
  while (!stack.empty()) {
    int a = stack.back();
    stack.pop_back();
    Site s = d.interior()[a];
    for (Site st : kSteps4) {
      int m = d.interior_index(s + st);
      if (m >= 0 && !blocked[m] && !reached[m]) {
        reached[m] = 1;
        stack.push_back(m);
      }
    }
  }
  return reached;
}

// Full-grid sign array with the filled region negative and the component
// reaching (xy) positive; holes next to that component are positive unless
// `hole_minus` forces them.
std::vector<int> filling_signs(const LatticeDomain& d, const std::vector<char>& reached,
                               const std::vector<char>& hole_minus) {
  const int n = d.size();
  std::vector<int> signs(static_cast<std::size_t>(n) * n, 1);
  std::vector<char> hole_touch(d.n_holes(), 0);
  for (int a = 0; a < d.n_interior(); ++a) {
    if (!reached[a]) continue;
    Site s = d.interior()[a];
    for (Site st : kSteps4) {
      Site t = s + st;
      if (d.in_grid(t) && d.region(t) == Region::Hole) hole_touch[d.hole_of(t)] = 1;
    }
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Site s{i, j};
      int& sg = signs[static_cast<std::size_t>(j) * n + i];
      int a = d.interior_index(s);
      if (a >= 0) sg = reached[a] ? 1 : -1;
      else if (d.region(s) == Region::Outer) sg = wedge_sign(d, s);
      else if (d.region(s) == Region::Hole) {
        int h = d.hole_of(s);
        sg = (hole_minus[h] || !hole_touch[h]) ? -1 : 1;
      }
    }
  return signs;
}

// Right boundary of the filling of `blocked` together with (yx).
LevelLineSample curve_around(const LatticeDomain& d, const std::vector<char>& blocked,
                             const std::vector<char>& hole_minus) {
  auto reached = reach_from_right_arc(d, blocked);
  if (std::find(reached.begin(), reached.end(), 1) == reached.end())
    throw Error(ErrorKind::FillSwallowsTarget, "cluster of (yx) separates (xy) from the domain");
  LevelLineSample out;
  try {
    out.path = trace_interface(d, filling_signs(d, reached, hole_minus));
    out.signature = classify_topology(d, out.path);
  } catch (const Error& e) {
    throw Error(ErrorKind::DegenerateSample, e.what());
  }
  out.accepted = true;
  return out;
}

}  // namespace

LoopMassReport loop_mass(const LatticeDomain& domain, std::span<const Site> k1_in, std::span<const Site> k2_in) {
  auto k1 = sorted_unique(k1_in);
  auto k2 = sorted_unique(k2_in);
  for (Site s : k1)
    if (!domain.is_interior(s)) throw Error(ErrorKind::InvalidArgument, "K1 site is not interior");
  for (Site s : k2)
    if (!domain.is_interior(s)) throw Error(ErrorKind::InvalidArgument, "K2 site is not interior");
  std::vector<Site> both;
  std::set_union(k1.begin(), k1.end(), k2.begin(), k2.end(), std::back_inserter(both));
  if (both.size() != k1.size() + k2.size()) throw Error(ErrorKind::OverlappingTargets, "K1 and K2 share sites");

  LoopMassReport rep;
  rep.per_subdomain_logdets = {log_det_without(domain, {}), log_det_without(domain, k1),
                               log_det_without(domain, k2), log_det_without(domain, both)};
  if (k1.empty() || k2.empty()) {
    rep.m_hit_both = 0.0;
    return rep;
  }
  const auto& ld = rep.per_subdomain_logdets;
  rep.m_hit_both = -ld[0] + ld[1] + ld[2] - ld[3];
  return rep;
}

LoopMassReport fredholm_identity_check(const LatticeDomain& domain, const LatticePath& b1, const LatticePath& b2) {
  CrosscutKernels k = crosscut_kernels(domain, b1.vertices, b2.vertices);
  LoopMassReport rep = loop_mass(domain, b1.vertices, b2.vertices);
  const Eigen::Index n = k.green_d.rows();
  if (k.hit_12.cols() == 0) {
    rep.det_identity_residual = std::abs(rep.m_hit_both);
    rep.composite_identity_residual = std::abs(rep.m_hit_both);
    return rep;
  }
  Eigen::MatrixXd K = k.hit_12 * k.hit_21;
  Eigen::MatrixXd Kc = k.green_d2 * k.boundary_diff;
  rep.spectral_radius = Eigen::EigenSolver<Eigen::MatrixXd>(K, false).eigenvalues().cwiseAbs().maxCoeff();
  if (rep.spectral_radius >= 1.0) throw Error(ErrorKind::OperatorNotContraction, "H12 H21 has spectral radius >= 1");
  auto log_det = [n](const Eigen::MatrixXd& M) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - M);
    double acc = 0.0;
    double sign = lu.permutationP().determinant();
    const Eigen::MatrixXd& U = lu.matrixLU();
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += std::log(std::abs(U(i, i)));
      if (U(i, i) < 0) sign = -sign;
    }
    if (sign <= 0) throw Error(ErrorKind::OperatorNotContraction, "det(I - K) is not positive");
    return acc;
  };
  rep.log_det_fredholm = log_det(K);
  rep.log_det_composite = log_det(Kc);
  rep.det_identity_residual = std::abs(rep.log_det_fredholm + rep.m_hit_both);
  rep.composite_identity_residual = std::abs(rep.log_det_composite + rep.m_hit_both);
  return rep;
}

LoopMassOracle::LoopMassOracle(const LatticeDomain& domain, std::span<const Site> fixed)
    : domain_(std::make_shared<const LatticeDomain>(domain)), fixed_(sorted_unique(fixed)) {
  for (Site s : fixed_) {
    int k = domain.interior_index(s);
    if (k < 0) throw Error(ErrorKind::InvalidArgument, "fixed site is not interior");
    fixed_index_.push_back(k);
  }
  solver_ = std::make_shared<const LaplaceSolver>(domain);
  const int N = domain.n_interior();
  if (N <= 6000) {
    green_ = solver_->solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(N, N)));
  } else {
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(N, static_cast<Eigen::Index>(fixed_.size()));
    for (std::size_t c = 0; c < fixed_index_.size(); ++c) rhs(fixed_index_[c], c) = 1.0;
    green_ = solver_->solve(rhs);
  }
  const Eigen::Index a = static_cast<Eigen::Index>(fixed_.size());
  Eigen::MatrixXd ga(a, a);
  for (Eigen::Index r = 0; r < a; ++r)
    for (Eigen::Index c = 0; c < a; ++c)
      ga(r, c) = green_.cols() == N ? green_(fixed_index_[r], fixed_index_[c]) : green_(fixed_index_[r], c);
  Eigen::LLT<Eigen::MatrixXd> llt(ga);
  for (Eigen::Index i = 0; i < a; ++i) log_det_fixed_ += 2.0 * std::log(llt.matrixL()(i, i));
}

double LoopMassOracle::mass(std::span<const Site> eta_in) const {
  const LatticeDomain& d = *domain_;
  std::vector<int> eta;
  for (Site s : sorted_unique(eta_in)) {
    int k = d.interior_index(s);
    if (k < 0) continue;
    if (std::binary_search(fixed_.begin(), fixed_.end(), s))
      throw Error(ErrorKind::OverlappingTargets, "path meets the fixed set");
    eta.push_back(k);
  }
  const Eigen::Index a = static_cast<Eigen::Index>(fixed_.size());
  if (eta.empty() || a == 0) return 0.0;
  const int N = d.n_interior();
  Eigen::MatrixXd schur(a, a);
  if (green_.cols() == N) {
    const Eigen::Index e = static_cast<Eigen::Index>(eta.size());
    Eigen::MatrixXd gee(e, e), gea(e, a);
    for (Eigen::Index r = 0; r < e; ++r) {
      for (Eigen::Index c = 0; c < e; ++c) gee(r, c) = green_(eta[r], eta[c]);
      for (Eigen::Index c = 0; c < a; ++c) gea(r, c) = green_(eta[r], fixed_index_[c]);
    }
    for (Eigen::Index r = 0; r < a; ++r)
      for (Eigen::Index c = 0; c < a; ++c) schur(r, c) = green_(fixed_index_[r], fixed_index_[c]);
    schur -= gea.transpose() * Eigen::LLT<Eigen::MatrixXd>(gee).solve(gea);
  } else {
    std::vector<Site> removed;
    for (int k : eta) removed.push_back(d.interior()[k]);
    LatticeDomain sub = d.subtract(removed);
    schur = green_matrix(sub, fixed_, fixed_).entries;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(schur);
  double ld = 0.0;
  for (Eigen::Index i = 0; i < a; ++i) ld += 2.0 * std::log(llt.matrixL()(i, i));
  return log_det_fixed_ - ld;
}

std::vector<double> excursion_endpoint_weights(const LatticeDomain& domain, std::span<const Site> arcs) {
  std::vector<double> g(domain.boundary().size(), 0.0);
  for (Site s : arcs) {
    int b = domain.boundary_index(s);
    if (b < 0) throw Error(ErrorKind::InvalidArgument, "arc site is not on the boundary");
    g[b] = 1.0;
  }
  for (Site m : {domain.marked_x(), domain.marked_y()}) {
    int b = domain.boundary_index(m);
    if (b >= 0) g[b] = 0.5;
  }
  return g;
}

ExcursionSampler::ExcursionSampler(const LatticeDomain& domain, std::span<const Site> arcs, double kappa)
    : ExcursionSampler(std::make_shared<const LaplaceSolver>(domain), arcs, kappa) {}

ExcursionSampler::ExcursionSampler(std::shared_ptr<const LaplaceSolver> solver, std::span<const Site> arcs,
                                   double kappa)
    : solver_(std::move(solver)) {
  check_kappa(kappa);
  if (arcs.empty()) throw Error(ErrorKind::InvalidArgument, "excursion arcs are empty", "arcs");
  intensity_ = restriction_exponent(kappa) * std::numbers::pi;
  init(arcs);
}

void ExcursionSampler::init(std::span<const Site> arcs) {
  const LatticeDomain& d = solver_->domain();
  g_ = excursion_endpoint_weights(d, arcs);
  v_ = solver_->extend(g_);
  double acc = 0.0;
  for (std::size_t b = 0; b < g_.size(); ++b) {
    if (g_[b] == 0.0) continue;
    for (Site st : kSteps4) {
      int a = d.interior_index(d.boundary()[b] + st);
      if (a < 0) continue;
      double w = g_[b] * v_[a];
      if (w <= 0.0) continue;
      acc += w;
      starts_.emplace_back(static_cast<int>(b), a);
      start_cdf_.push_back(acc);
    }
  }
  total_mass_ = acc;
}

std::vector<double> ExcursionSampler::boundary_occupation() const {
  std::vector<double> out(g_.size());
  for (std::size_t b = 0; b < g_.size(); ++b) out[b] = intensity_ * g_[b] * g_[b];
  return out;
}

ExcursionEnsemble ExcursionSampler::sample(Rng& rng) const {
  const LatticeDomain& d = solver_->domain();
  ExcursionEnsemble out;
  out.intensity_constant = intensity_;
  out.total_mass = total_mass_;
  const std::uint64_t count = rng.poisson(intensity_ * total_mass_);
  out.excursions.reserve(count);
  for (std::uint64_t e = 0; e < count; ++e) {
    double u = rng.uniform() * total_mass_;
    auto it = std::upper_bound(start_cdf_.begin(), start_cdf_.end(), u);
    std::size_t pick = std::min<std::size_t>(it - start_cdf_.begin(), starts_.size() - 1);
    auto [b, a] = starts_[pick];
    LatticePath path;
    path.vertices.push_back(d.boundary()[b]);
    int cur = a;
    for (;;) {
      Site s = d.interior()[cur];
      path.vertices.push_back(s);
      double w[4];
      double total = 0.0;
      for (int k = 0; k < 4; ++k) {
        Site t = s + kSteps4[k];
        int m = d.interior_index(t);
        if (m >= 0) w[k] = v_[m];
        else {
          int bt = d.boundary_index(t);
          w[k] = bt >= 0 ? g_[bt] : 0.0;
        }
        total += w[k];
      }
      double r = rng.uniform() * total;
      int k = 0;
      while (k < 3 && r >= w[k]) r -= w[k++];
      while (w[k] == 0.0) k = (k + 3) % 4;
      Site t = s + kSteps4[k];
      int m = d.interior_index(t);
      if (m < 0) {
        path.vertices.push_back(t);
        break;
      }
      cur = m;
    }
    out.excursions.push_back(std::move(path));
  }
  return out;
}

ExcursionEnsemble sample_excursion_ppp(const LatticeDomain& domain, std::span<const Site> arcs, double kappa,
                                       std::uint64_t seed) {
  Rng rng(seed);
  ExcursionEnsemble e = ExcursionSampler(domain, arcs, kappa).sample(rng);
  e.seed = seed;
  return e;
}

HullSample fill_hull(const LatticeDomain& domain, std::span<const LatticePath> generators) {
  if (domain.mode() != Mode::NonCrossing) throw Error(ErrorKind::InvalidArgument, "hulls need a non-crossing domain");
  std::vector<char> blocked(domain.n_interior(), 0);
  for (const LatticePath& p : generators)
    for (Site s : p.scale == 1 ? p.vertices : path_sites(domain, p)) {
      int a = domain.interior_index(s);
      if (a >= 0) blocked[a] = 1;
    }
  auto reached = reach_from_right_arc(domain, blocked);
  if (std::find(reached.begin(), reached.end(), 1) == reached.end())
    throw Error(ErrorKind::FillSwallowsTarget, "filling reaches the (xy) arc");
  HullSample out;
  for (int a = 0; a < domain.n_interior(); ++a)
    if (!reached[a]) out.filled_sites.push_back(domain.interior()[a]);
  std::vector<char> hole_minus(domain.n_holes(), 0);
  out.right_boundary = trace_interface(domain, filling_signs(domain, reached, hole_minus));
  return out;
}

LoopSoupSampler::LoopSoupSampler(const LatticeDomain& domain)
    : domain_(std::make_shared<const LatticeDomain>(domain)) {
  const int N = domain.n_interior();
  if (N == 0) throw Error(ErrorKind::SingularSystem, "empty interior");
  nbr_.resize(N);
  std::vector<Eigen::Triplet<double>> trips;
  // Reverse raster order, so the pivot of vertex k eliminates exactly the later vertices.
  auto pos = [N](int k) { return N - 1 - k; };
  for (int k = 0; k < N; ++k) {
    Site s = domain.interior()[k];
    trips.emplace_back(pos(k), pos(k), 4.0);
    for (int d = 0; d < 4; ++d) {
      int m = domain.interior_index(s + kSteps4[d]);
      nbr_[k][d] = m;
      if (m >= 0) trips.emplace_back(pos(k), pos(m), -1.0);
    }
  }
  Eigen::SparseMatrix<double> L(N, N);
  L.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt(L);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "ordered factorization failed");
  return_prob_.resize(N);
  for (int k = 0; k < N; ++k) {
    double pivot = ldlt.vectorD()[pos(k)];
    return_prob_[k] = 1.0 - pivot / 4.0;
    total_mass_ -= std::log(pivot / 4.0);
  }
}

std::vector<Loop> LoopSoupSampler::sample(double intensity, Rng& rng) const {
  std::vector<Loop> loops;
  if (!(intensity > 0.0)) return loops;
  const int N = static_cast<int>(return_prob_.size());
  std::vector<std::vector<int>> excursions;
  std::vector<int> table_of;
  std::vector<std::vector<int>> tables;
  std::vector<int> walk;
  for (int k = 0; k < N; ++k) {
    const double q = return_prob_[k];
    if (q <= 0.0) continue;
    const std::uint64_t J = rng.poisson(rng.gamma(intensity) * q / (1.0 - q));
    if (J == 0) continue;
    excursions.assign(J, {});
    for (std::uint64_t e = 0; e < J; ++e) {
      for (;;) {
        walk.clear();
        walk.push_back(k);
        int cur = k;
        bool back = false;
        for (;;) {
          int nb = nbr_[cur][rng.below(4)];
          if (nb == k) {
            back = true;
            break;
          }
          if (nb < k) break;  // left D_k
          walk.push_back(nb);
          cur = nb;
        }
        if (back) break;
      }
      excursions[e] = walk;
    }
    // Ewens partition of the excursions into loops.
    tables.clear();
    table_of.assign(J, -1);
    for (std::uint64_t e = 0; e < J; ++e) {
      double u = rng.uniform() * (intensity + static_cast<double>(e));
      if (u < intensity) {
        table_of[e] = static_cast<int>(tables.size());
        tables.push_back({static_cast<int>(e)});
      } else {
        auto prev = std::min<std::uint64_t>(static_cast<std::uint64_t>(u - intensity), e - 1);
        table_of[e] = table_of[prev];
        tables[table_of[e]].push_back(static_cast<int>(e));
      }
    }
    for (const auto& t : tables) {
      Loop loop;
      for (int e : t) loop.sites.insert(loop.sites.end(), excursions[e].begin(), excursions[e].end());
      loops.push_back(std::move(loop));
    }
  }
  return loops;
}

std::vector<Loop> sample_loop_soup(const LatticeDomain& domain, double intensity, std::uint64_t seed) {
  if (!(intensity > 0.0 && intensity <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "loop soup intensity must lie in (0, 1]", "intensity");
  Rng rng(seed);
  return LoopSoupSampler(domain).sample(intensity, rng);
}

LatticePath outer_contour(const LatticeDomain& domain, std::span<const Site> sites) {
  const int n = domain.size();
  auto at = [n](Site s) { return static_cast<std::size_t>(s.j) * n + s.i; };
  std::vector<char> mask(static_cast<std::size_t>(n) * n, 0);
  for (Site s : sites) mask[at(s)] = 1;
  if (sites.empty()) return {};
  // Outside: 4-connected from the frame through unmasked sites.
  std::vector<char> outside(mask.size(), 0);
  std::vector<Site> stack;
  for (int t = 0; t < n; ++t)
    for (Site s : {Site{t, 0}, Site{t, n - 1}, Site{0, t}, Site{n - 1, t}})
      if (!mask[at(s)] && !outside[at(s)]) {
        outside[at(s)] = 1;
        stack.push_back(s);
      }
  while (!stack.empty()) {
    Site s = stack.back();
    stack.pop_back();
    for (Site st : kSteps4) {
      Site t = s + st;
      if (domain.in_grid(t) && !mask[at(t)] && !outside[at(t)]) {
        outside[at(t)] = 1;
        stack.push_back(t);
      }
    }
  }
  Site low = *std::min_element(sites.begin(), sites.end(),
                               [](Site a, Site b) { return a.j != b.j ? a.j < b.j : a.i < b.i; });
  auto inside = [&](Site s) { return domain.in_grid(s) && !outside[at(s)]; };
  // Walk with the filled set on the left, starting east across the edge below `low`.
  Site face{low.i, low.j - 1};
  int heading = 0;
  const std::pair<Site, Site> first{low, Site{low.i, low.j - 1}};
  LatticePath path;
  path.scale = 2;
  path.closed = true;
  path.vertices.push_back({2 * low.i, 2 * low.j - 1});
  static constexpr Site kHeading[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (long step = 0; step < 4L * n * n; ++step) {
    const int i = face.i, j = face.j;
    Site u, v, l, r;
    switch (heading) {
      case 0: u = {i, j + 1}; v = {i, j}; l = {i + 1, j + 1}; r = {i + 1, j}; break;
      case 1: u = {i, j}; v = {i + 1, j}; l = {i, j + 1}; r = {i + 1, j + 1}; break;
      case 2: u = {i + 1, j}; v = {i + 1, j + 1}; l = {i, j}; r = {i, j + 1}; break;
      default: u = {i + 1, j + 1}; v = {i, j + 1}; l = {i + 1, j}; r = {i, j}; break;
    }
    std::pair<Site, Site> e;
    if (inside(r)) {
      heading = (heading + 3) % 4;
      e = {r, v};
    } else if (inside(l)) {
      e = {l, r};
    } else {
      heading = (heading + 1) % 4;
      e = {u, l};
    }
    if (e == first) return path;
    path.vertices.push_back({e.first.i + e.second.i, e.first.j + e.second.j});
    face = face + kHeading[heading];
  }
  throw Error(ErrorKind::TraceStuck, "contour did not close");
}

std::vector<Cluster> cle_clusters(const LatticeDomain& domain, std::span<const Loop> loops) {
  UnionFind uf(loops.size());
  std::vector<int> owner(domain.n_interior(), -1);
  for (std::size_t l = 0; l < loops.size(); ++l)
    for (int s : loops[l].sites) {
      if (owner[s] < 0) owner[s] = static_cast<int>(l);
      else uf.unite(static_cast<int>(l), owner[s]);
    }
  std::vector<int> cluster_of(loops.size(), -1);
  std::vector<Cluster> out;
  for (std::size_t l = 0; l < loops.size(); ++l) {
    int root = uf.find(static_cast<int>(l));
    if (cluster_of[root] < 0) {
      cluster_of[root] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[cluster_of[root]].loops.push_back(static_cast<int>(l));
  }
  for (Cluster& c : out) {
    std::vector<int> idx;
    for (int l : c.loops) idx.insert(idx.end(), loops[l].sites.begin(), loops[l].sites.end());
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    for (int k : idx) c.sites.push_back(domain.interior()[k]);
    c.outer_boundary = outer_contour(domain, c.sites);
  }
  return out;
}

double cable_edge_open_probability(double intensity, double lx, double ly) {
  const double z = 2.0 * std::sqrt(lx * ly);
  if (!(z > 0.0)) return 0.0;
  const double nu = 1.0 - intensity;
  if (nu <= 0.0 || z > 700.0) return 1.0;
  // Given the end occupations the field on the edge avoids zero with probability
  // I_nu/I_-nu and the edge is uncrossed with probability (z/2)^-nu / (Gamma(a) I_-nu);
  // the difference of the two Bessel functions is (2/pi) sin(nu pi) K_nu.
  const double closed = std::tgamma(intensity) * std::pow(z / 2.0, nu) * 2.0 / std::numbers::pi *
                        std::sin(nu * std::numbers::pi) * std::cyl_bessel_k(nu, z);
  return std::clamp(1.0 - closed, 0.0, 1.0);
}

CableClusters cable_clusters(const LatticeDomain& domain, std::span<const Loop> loops, double intensity, Rng& rng,
                             std::span<const LatticePath> excursions, std::span<const double> boundary_occupation) {
  const int N = domain.n_interior();
  const int B = static_cast<int>(domain.boundary().size());
  auto node = [&](Site s) {
    int m = domain.interior_index(s);
    return m >= 0 ? m : N + domain.boundary_index(s);
  };
  std::vector<int> visits(N, 0);
  UnionFind uf(static_cast<std::size_t>(N + B));
  std::set<std::pair<int, int>> crossed;
  auto cross = [&](int a, int b) {
    uf.unite(a, b);
    crossed.insert({std::min(a, b), std::max(a, b)});
  };
  for (const Loop& l : loops) {
    const std::size_t len = l.sites.size();
    for (std::size_t k = 0; k < len; ++k) {
      ++visits[l.sites[k]];
      if (len > 1) cross(l.sites[k], l.sites[(k + 1) % len]);
    }
  }
  for (const LatticePath& e : excursions) {
    const auto& vs = e.vertices;
    for (std::size_t k = 0; k < vs.size(); ++k) {
      int a = node(vs[k]);
      if (a < N) ++visits[a];
      if (k > 0) cross(node(vs[k - 1]), a);
    }
  }
  CableClusters out;
  out.occupation.assign(N + B, 0.0);
  // holding times at rate 4 plus the loops that never leave the vertex
  for (int a = 0; a < N; ++a) out.occupation[a] = rng.gamma(visits[a] + intensity) / 4.0;
  for (std::size_t b = 0; b < boundary_occupation.size(); ++b) out.occupation[N + b] = boundary_occupation[b];
  for (int a = 0; a < N; ++a) {
    Site s = domain.interior()[a];
    for (Site st : kSteps4) {
      Site t = s + st;
      int b = node(t);
      // interior pairs once; boundary neighbours from their interior end
      if (b < 0 || (b < N && (st.i < 0 || st.j < 0))) continue;
      if (out.occupation[b] <= 0.0 || crossed.count({std::min(a, b), std::max(a, b)})) continue;
      if (rng.uniform() < cable_edge_open_probability(intensity, out.occupation[a], out.occupation[b])) uf.unite(a, b);
    }
  }
  out.label.assign(N + B, -1);
  std::vector<int> root_label(N + B, -1);
  for (int a = 0; a < N + B; ++a) {
    int r = uf.find(a);
    if (root_label[r] < 0) root_label[r] = out.n_clusters++;
    out.label[a] = root_label[r];
  }
  return out;
}

KappaCurveSampler::KappaCurveSampler(const LatticeDomain& domain, const TopologySignature& signature, double kappa,
                                     ClusterRule rule)
    : signature_(signature), kappa_(kappa), rule_(rule), soup_(domain) {
  check_kappa(kappa);
  if (domain.mode() != Mode::NonCrossing)
    throw Error(ErrorKind::InvalidArgument, "the loop-soup construction needs a non-crossing domain");
  auto minus = minus_sites(domain, signature.signs);
  excursions_ = std::make_shared<const ExcursionSampler>(domain, minus, kappa);
  boundary_occupation_ = excursions_->boundary_occupation();
}

LevelLineSample KappaCurveSampler::sample(Rng& rng) const {
  const LatticeDomain& d = soup_.domain();
  const int N = d.n_interior();
  const int holes = d.n_holes();
  const double alpha = central_charge(kappa_) / 2.0;
  std::vector<Loop> loops = soup_.sample(alpha, rng);
  ExcursionEnsemble ens = excursions_->sample(rng);

  // Nodes: 0 = (yx), 1..holes, then excursions and loops (or cable clusters).
  const int first_exc = 1 + holes;
  std::vector<int> owner(N, -1);
  UnionFind uf(0);
  if (rule_ == ClusterRule::Cable) {
    CableClusters cable = cable_clusters(d, loops, alpha, rng, ens.excursions, boundary_occupation_);
    uf = UnionFind(static_cast<std::size_t>(first_exc + cable.n_clusters));
    for (int a = 0; a < N; ++a) owner[a] = first_exc + cable.label[a];
    for (std::size_t b = 0; b < d.boundary().size(); ++b) {
      Site s = d.boundary()[b];
      const int node = first_exc + cable.label[N + b];
      if (d.region(s) == Region::Hole) uf.unite(node, 1 + d.hole_of(s));
      else if (boundary_occupation_[b] > 0.0) uf.unite(node, 0);
    }
  } else {
    const int first_loop = first_exc + static_cast<int>(ens.excursions.size());
    uf = UnionFind(static_cast<std::size_t>(first_loop) + loops.size());
    auto claim = [&](int site, int node) {
      if (owner[site] < 0) owner[site] = node;
      else uf.unite(node, owner[site]);
    };
    for (std::size_t e = 0; e < ens.excursions.size(); ++e) {
      const int node = first_exc + static_cast<int>(e);
      const auto& vs = ens.excursions[e].vertices;
      for (Site end : {vs.front(), vs.back()}) {
        if (d.region(end) == Region::Hole) uf.unite(node, 1 + d.hole_of(end));
        else uf.unite(node, 0);
      }
      for (std::size_t k = 1; k + 1 < vs.size(); ++k) claim(d.interior_index(vs[k]), node);
    }
    for (std::size_t l = 0; l < loops.size(); ++l)
      for (int s : loops[l].sites) claim(s, first_loop + static_cast<int>(l));
  }

  const int root = uf.find(0);
  std::vector<char> blocked(N, 0);
  for (int a = 0; a < N; ++a)
    if (owner[a] >= 0 && uf.find(owner[a]) == root) blocked[a] = 1;
  std::vector<char> hole_minus(holes, 0);
  for (int h = 0; h < holes; ++h) hole_minus[h] = uf.find(1 + h) == root;
  LevelLineSample out = curve_around(d, blocked, hole_minus);
  out.accepted = out.signature == signature_;
  return out;
}

LevelLineSample first_passage_curve(const FieldSample& field, Rng& rng) {
  const LatticeDomain& d = *field.domain;
  if (d.mode() != Mode::NonCrossing)
    throw Error(ErrorKind::InvalidArgument, "first passage curves need a non-crossing domain");
  const int N = d.n_interior();
  const int B = static_cast<int>(d.boundary().size());
  // psi = lambda - field is positive on the minus side; its positive cluster on
  // the metric graph is covered edge by edge like a Brownian bridge.
  std::vector<double> psi(N + B);
  for (int a = 0; a < N; ++a) psi[a] = kLambda - field.values[a] - (*field.mean)[a];
  for (int b = 0; b < B; ++b) psi[N + b] = kLambda - (*field.boundary)[b];
  UnionFind uf(static_cast<std::size_t>(N + B + 1 + d.n_holes()));
  const int outer = N + B;
  for (int a = 0; a < N; ++a) {
    Site s = d.interior()[a];
    for (Site st : kSteps4) {
      int b = d.interior_index(s + st);
      if (b >= 0 && (st.i < 0 || st.j < 0)) continue;
      if (b < 0) b = N + d.boundary_index(s + st);
      const double p = psi[a] * psi[b];
      if (psi[a] > 0.0 && psi[b] > 0.0 && rng.uniform() < 1.0 - std::exp(-2.0 * p)) uf.unite(a, b);
    }
  }
  for (int b = 0; b < B; ++b) {
    Site s = d.boundary()[b];
    if (d.region(s) == Region::Hole) uf.unite(N + b, outer + 1 + d.hole_of(s));
    else if (psi[N + b] > 0.0) uf.unite(N + b, outer);
  }
  const int root = uf.find(outer);
  std::vector<char> blocked(N, 0);
  for (int a = 0; a < N; ++a) blocked[a] = uf.find(a) == root;
  std::vector<char> hole_minus(d.n_holes(), 0);
  for (int h = 0; h < d.n_holes(); ++h) hole_minus[h] = uf.find(outer + 1 + h) == root;
  return curve_around(d, blocked, hole_minus);
}

LevelLineSample construct_kappa_curve(const LatticeDomain& domain, const TopologySignature& signature,
                                      double kappa, std::uint64_t seed) {
  Rng rng(seed);
  return KappaCurveSampler(domain, signature, kappa).sample(rng);
}

}  // namespace mcsle
