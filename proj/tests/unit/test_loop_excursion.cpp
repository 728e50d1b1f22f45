#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "mcsle/energy_weights.hpp"
#include "mcsle/errors.hpp"
#include "mcsle/harmonic_kernels.hpp"
#include "mcsle/loop_excursion.hpp"
#include "mcsle/sle_assembly.hpp"
#include "mcsle/stats.hpp"

using namespace mcsle;
using namespace testing;

namespace {

// Loop measure of the walk restricted to the sites kept, by the trace series
// sum_n tr(P^n) / n.
double loop_measure_series(const LatticeDomain& d, const std::vector<char>& keep) {
  const int n = d.n_interior();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    if (!keep[a]) continue;
    for (int b : neighbours_inside(d, d.interior()[a]))
      if (keep[b]) P(a, b) = 0.25;
  }
  double rho = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P).eigenvalues().cwiseAbs().maxCoeff();
  REQUIRE(rho < 0.99);
  Eigen::MatrixXd pw = P;
  double m = 0.0;
  for (int k = 1; std::pow(rho, k) * n / (1.0 - rho) > 1e-13; ++k) {
    m += pw.trace() / k;
    pw = pw * P;
  }
  return m;
}

std::vector<char> keep_without(const LatticeDomain& d, const std::vector<Site>& removed) {
  std::vector<char> keep(d.n_interior(), 1);
  for (Site s : removed) keep[d.interior_index(s)] = 0;
  return keep;
}

bool adjacent(Site a, Site b) { return std::abs(a.i - b.i) + std::abs(a.j - b.j) == 1; }

}  // namespace

TEST_CASE("loop mass against the trace series") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 4));
  std::vector<Site> k1{d.nearest_site({-0.5, 0.0})}, k2{d.nearest_site({0.5, 0.0}), d.nearest_site({0.5, 0.25})};
  std::vector<Site> both = k1;
  both.insert(both.end(), k2.begin(), k2.end());
  const double oracle = loop_measure_series(d, keep_without(d, {})) - loop_measure_series(d, keep_without(d, k1)) -
                        loop_measure_series(d, keep_without(d, k2)) + loop_measure_series(d, keep_without(d, both));
  LoopMassReport r = loop_mass(d, k1, k2);
  CHECK(oracle > 0.0);
  CHECK(r.m_hit_both == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(loop_mass(d, k2, k1).m_hit_both == doctest::Approx(r.m_hit_both).epsilon(1e-12));
  CHECK(loop_mass(d, k1, std::vector<Site>{}).m_hit_both == 0.0);
  CHECK_THROWS_AS(loop_mass(d, k1, k1), Error);
}

TEST_CASE("loop mass grows with the target sets") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 16));
  std::vector<Site> k1{d.nearest_site({-0.5, 0.0})}, k2;
  double prev = 0.0;
  for (int s = 0; s < 6; ++s) {
    k2.push_back(d.nearest_site({0.5, -0.3 + 0.1 * s}));
    double m = loop_mass(d, k1, k2).m_hit_both;
    CHECK(m > prev);
    prev = m;
  }
  // a smaller domain carries fewer loops
  std::vector<Site> cut;
  for (int s = 0; s < 5; ++s) cut.push_back(d.nearest_site({0.0, 0.6 + 0.0625 * s}));
  auto e = d.carve(cut);
  CHECK(loop_mass(e, k1, k2).m_hit_both < prev);
}

TEST_CASE("Fredholm determinant identities") {
  for (double r : {0.2, 0.4}) {
    auto d = LatticeDomain::build_circle(disk(1.0 / 24, {Hole{{0, 0}, r}}));
    auto b1 = radial_crosscut(d, 0.5 * std::numbers::pi, 0);
    auto b2 = radial_crosscut(d, 1.3 * std::numbers::pi, 0);
    LoopMassReport rep = fredholm_identity_check(d, b1, b2);
    CHECK(rep.m_hit_both > 0.0);
    CHECK(rep.spectral_radius < 1.0);
    CHECK(rep.det_identity_residual < 1e-9 * std::max(1.0, rep.m_hit_both));
    CHECK(rep.composite_identity_residual < 1e-9 * std::max(1.0, rep.m_hit_both));
  }
}

TEST_CASE("loop mass oracle agrees with direct determinants") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 16));
  std::vector<Site> fixed{d.nearest_site({0.5, 0.5}), d.nearest_site({0.5, 0.4375})};
  LoopMassOracle oracle(d, fixed);
  LatticePath eta = polyline(d, {{-0.7, -0.2}, {0.0, 0.0}, {0.1, 0.3}});
  CHECK(oracle.mass(eta.vertices) == doctest::Approx(loop_mass(d, eta.vertices, fixed).m_hit_both).epsilon(1e-9));
  CHECK(oracle.mass(std::vector<Site>{}) == 0.0);
  CHECK_THROWS_AS(oracle.mass(fixed), Error);
}

TEST_CASE("excursion endpoint weights and total mass") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 16));
  auto arcs = minus_sites(d, std::vector<int>{});
  auto g = excursion_endpoint_weights(d, arcs);
  CHECK(g[d.boundary_index(d.marked_x())] == 0.5);
  CHECK(g[d.boundary_index(d.marked_y())] == 0.5);
  for (std::size_t b = 0; b < g.size(); ++b) {
    Site s = d.boundary()[b];
    if (s == d.marked_x() || s == d.marked_y()) continue;
    CHECK(g[b] == (d.arc(s) == Arc::Left ? 1.0 : 0.0));
  }
  // (g, H g) with the excursion kernel on all boundary pairs
  KernelMatrix H = boundary_poisson_matrix(d, d.boundary(), d.boundary());
  Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
  ExcursionSampler s(d, arcs, 4.0);
  CHECK(s.total_mass() == doctest::Approx(gv.dot(H.entries * gv)).epsilon(1e-10));
  CHECK(s.mean_count() == doctest::Approx(0.25 * std::numbers::pi * s.total_mass()));
  CHECK_THROWS_AS(ExcursionSampler(d, std::vector<Site>{}, 4.0), Error);
}

TEST_CASE("excursion ensembles: Poisson counts and well formed paths") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 12, {Hole{{0.0, 0.4}, 0.2}}));
  auto arcs = minus_sites(d, std::vector<int>{-1});
  ExcursionSampler s(d, arcs, 3.0);
  std::set<Site> arc_set(arcs.begin(), arcs.end());
  arc_set.insert({d.marked_x(), d.marked_y()});
  std::vector<std::int64_t> counts;
  for (int r = 0; r < 3000; ++r) {
    Rng rng(21, r);
    ExcursionEnsemble e = s.sample(rng);
    counts.push_back(static_cast<std::int64_t>(e.excursions.size()));
    if (r >= 50) continue;
    for (const LatticePath& p : e.excursions) {
      REQUIRE(p.vertices.size() >= 3);
      CHECK(arc_set.count(p.vertices.front()));
      CHECK(arc_set.count(p.vertices.back()));
      for (std::size_t k = 1; k + 1 < p.vertices.size(); ++k) CHECK(d.is_interior(p.vertices[k]));
      for (std::size_t k = 1; k < p.vertices.size(); ++k) CHECK(adjacent(p.vertices[k - 1], p.vertices[k]));
    }
  }
  CHECK(poisson_count_test(counts, s.mean_count()).p_value > 1e-3);
  ExcursionEnsemble a = sample_excursion_ppp(d, arcs, 3.0, 8), b = sample_excursion_ppp(d, arcs, 3.0, 8);
  REQUIRE(a.excursions.size() == b.excursions.size());
  for (std::size_t k = 0; k < a.excursions.size(); ++k) CHECK(a.excursions[k].vertices == b.excursions[k].vertices);
}

TEST_CASE("hull filling is monotone and idempotent") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 16));
  CHECK(fill_hull(d, std::vector<LatticePath>{}).filled_sites.empty());
  // an arc from (yx) to (yx) cuts off a cap of the lower half
  LatticePath g1 = polyline(d, {{-0.5, -0.9}, {-0.2, -0.4}, {0.2, -0.4}, {0.5, -0.9}});
  HullSample h1 = fill_hull(d, std::vector<LatticePath>{g1});
  CHECK(!h1.filled_sites.empty());
  for (Site s : h1.filled_sites) CHECK(d.point(s).y < -0.35);
  Site below = d.nearest_site({0.0, -0.7});
  CHECK(std::find(h1.filled_sites.begin(), h1.filled_sites.end(), below) != h1.filled_sites.end());

  LatticePath as_path;
  as_path.vertices = h1.filled_sites;
  HullSample again = fill_hull(d, std::vector<LatticePath>{as_path});
  CHECK(again.filled_sites == h1.filled_sites);

  LatticePath g2 = polyline(d, {{-0.95, -0.1}, {-0.6, 0.1}});
  HullSample h12 = fill_hull(d, std::vector<LatticePath>{g1, g2});
  std::set<Site> big(h12.filled_sites.begin(), h12.filled_sites.end());
  for (Site s : h1.filled_sites) CHECK(big.count(s));
  CHECK(h12.filled_sites.size() > h1.filled_sites.size());

  // blocking everything next to (xy) swallows it
  std::vector<LatticePath> wall;
  for (Site s : d.interior())
    if (d.point(s).y > -0.95) {
      LatticePath p;
      p.vertices = {s};
      wall.push_back(p);
    }
  CHECK_THROWS_AS(fill_hull(d, wall), Error);
}

TEST_CASE("loop soup: total mass, Poisson counts and restriction") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 6));
  LoopSoupSampler soup(d);
  std::vector<char> all(d.n_interior(), 1);
  CHECK(soup.total_mass() == doctest::Approx(loop_measure_series(d, all)).epsilon(1e-9));
  CHECK(soup.total_mass() ==
        doctest::Approx(-LaplaceSolver(d).log_det() + d.n_interior() * std::log(4.0)).epsilon(1e-12));

  // loops inside the right half form a soup there
  std::vector<char> right(d.n_interior(), 0);
  std::vector<Site> left_sites;
  for (int a = 0; a < d.n_interior(); ++a) {
    if (d.point(d.interior()[a]).x > 0.1) right[a] = 1;
    else left_sites.push_back(d.interior()[a]);
  }
  const double alpha = 0.5;
  const double m_right = loop_measure_series(d, right);
  std::vector<std::int64_t> total, inside;
  for (int r = 0; r < 4000; ++r) {
    Rng rng(13, r);
    auto loops = soup.sample(alpha, rng);
    total.push_back(static_cast<std::int64_t>(loops.size()));
    std::int64_t in = 0;
    for (const Loop& l : loops) {
      bool ok = true;
      for (int s : l.sites) ok = ok && right[s];
      in += ok;
      if (r < 100) {
        REQUIRE(!l.sites.empty());
        for (std::size_t k = 0; k < l.sites.size(); ++k) {
          Site a = d.interior()[l.sites[k]], b = d.interior()[l.sites[(k + 1) % l.sites.size()]];
          if (l.sites.size() > 1) CHECK(adjacent(a, b));
        }
      }
    }
    inside.push_back(in);
  }
  CHECK(poisson_count_test(total, alpha * soup.total_mass()).p_value > 1e-3);
  CHECK(poisson_count_test(inside, alpha * m_right).p_value > 1e-3);

  // the intensity goes to zero with c
  Rng rng(1);
  CHECK(soup.sample(0.0, rng).empty());
  std::int64_t tiny = 0;
  for (int r = 0; r < 200; ++r) {
    Rng q(2, r);
    tiny += static_cast<std::int64_t>(soup.sample(1e-9, q).size());
  }
  CHECK(tiny == 0);
  CHECK_THROWS_AS(sample_loop_soup(d, 1.5, 1), Error);
}

TEST_CASE("clusters partition the loops; contours close") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 12));
  auto loops = sample_loop_soup(d, 1.0, 5);
  REQUIRE(!loops.empty());
  auto clusters = cle_clusters(d, loops);
  std::vector<int> seen(loops.size(), 0);
  for (const Cluster& c : clusters) {
    for (int l : c.loops) ++seen[l];
    CHECK(c.outer_boundary.closed);
    CHECK(c.outer_boundary.vertices.size() >= 4);
  }
  for (int s : seen) CHECK(s == 1);
  // disjoint clusters share no site
  std::set<Site> used;
  for (const Cluster& c : clusters)
    for (Site s : c.sites) CHECK(used.insert(s).second);

  Site one = d.nearest_site({0, 0});
  LatticePath c1 = outer_contour(d, std::vector<Site>{one});
  CHECK(c1.vertices.size() == 4);
  std::vector<Site> block{one, one + Site{1, 0}, one + Site{0, 1}, one + Site{1, 1}};
  CHECK(outer_contour(d, block).vertices.size() == 8);
}

TEST_CASE("loop-soup curves: simple paths between the marks") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 16, {Hole{{0.0, 0.4}, 0.2}}));
  for (double kappa : {3.0, 4.0}) {
    TopologySignature sig;
    sig.signs = {1};
    KappaCurveSampler sampler(d, sig, kappa);
    int accepted = 0, ok = 0;
    for (int r = 0; r < 60; ++r) {
      Rng rng(31, r);
      LevelLineSample s;
      try {
        s = sampler.sample(rng);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FillSwallowsTarget);
        continue;
      }
      ++ok;
      accepted += s.accepted;
      CHECK(s.accepted == (s.signature == sig));
      std::set<Site> seen(s.path.vertices.begin(), s.path.vertices.end());
      CHECK(seen.size() == s.path.vertices.size());
      Point a = d.point(s.path, 0), x = d.point(d.marked_x());
      CHECK(std::hypot(a.x - x.x, a.y - x.y) < 2 * d.mesh());
    }
    CHECK(ok > 50);
    CHECK(accepted > 0);
  }
  auto plain = LatticeDomain::build_circle(disk(1.0 / 16));
  CHECK(construct_kappa_curve(plain, TopologySignature{}, 3.0, 4).accepted);
  CHECK_THROWS_AS(KappaCurveSampler(plain, TopologySignature{}, 5.0), Error);
}

TEST_CASE("cable edges: closed form at intensity 1/2 and the limits") {
  for (double lx : {0.01, 0.3, 2.0})
    for (double ly : {0.05, 0.7})
      CHECK(cable_edge_open_probability(0.5, lx, ly) ==
            doctest::Approx(1.0 - std::exp(-2.0 * std::sqrt(lx * ly))).epsilon(1e-12));
  CHECK(cable_edge_open_probability(0.25, 0.0, 1.0) == 0.0);
  CHECK(cable_edge_open_probability(0.25, 1e-12, 1e-12) < 1e-4);
  CHECK(cable_edge_open_probability(0.25, 50.0, 50.0) == doctest::Approx(1.0));
  CHECK(cable_edge_open_probability(1.0, 0.1, 0.1) == 1.0);
  // more loops inside the edge cover more of it
  CHECK(cable_edge_open_probability(0.25, 0.2, 0.3) < cable_edge_open_probability(0.5, 0.2, 0.3));
}

TEST_CASE("cable soup at intensity 1/2: occupation and clusters of the free field") {
  // occupation is half the squared field and clusters are its sign clusters
  auto d = LatticeDomain::build_circle(disk(1.0 / 8));
  const int N = d.n_interior();
  LoopSoupSampler soup(d);
  const int a = d.interior_index(d.nearest_site({0, 0})), b = d.interior_index(d.nearest_site({0.5, 0}));
  MeanSpec zero;
  zero.zero = true;
  FieldSampler field(d, zero);
  const int n = 20000;
  double l = 0, l2 = 0, soup_ab = 0, field_ab = 0;
  for (int r = 0; r < n; ++r) {
    Rng rng(3, r);
    CableClusters c = cable_clusters(d, soup.sample(0.5, rng), 0.5, rng);
    l += c.occupation[a];
    l2 += c.occupation[a] * c.occupation[a];
    soup_ab += c.label[a] == c.label[b];
    Rng r2(4, r);
    FieldSample f = field.sample(r2);
    std::vector<int> parent(N);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (int x = 0; x < N; ++x)
      for (Site st : {Site{1, 0}, Site{0, 1}}) {
        int y = d.interior_index(d.interior()[x] + st);
        if (y < 0) continue;
        const double p = f.values[x] * f.values[y];
        if (p > 0 && r2.uniform() < 1 - std::exp(-2 * p)) parent[find(x)] = find(y);
      }
    field_ab += find(a) == find(b);
  }
  KernelMatrix G = green_matrix(d, d.interior(), d.interior());
  const double g = G.entries(a, a);
  const double mean = l / n, var = l2 / n - mean * mean;
  CHECK(std::abs(mean - g / 2) < 4 * std::sqrt(g * g / 2 / n));
  CHECK(var == doctest::Approx(g * g / 2).epsilon(0.06));
  const double pa = soup_ab / n, pb = field_ab / n;
  CHECK(std::abs(pa - pb) < 4 * std::sqrt((pa * (1 - pa) + pb * (1 - pb)) / n));
}

TEST_CASE("cable construction at kappa 4 is the first passage set of the field") {
  for (int sign : {0, 1}) {
    auto d = LatticeDomain::build_circle(sign ? disk(1.0 / 16, {Hole{{0.0, 0.35}, 0.2}}) : disk(1.0 / 16));
    TopologySignature sig;
    if (sign) sig.signs = {sign};
    KappaCurveSampler cable(d, sig, 4.0);
    MeanSpec spec;
    spec.signs = sig.signs;
    FieldSampler field(d, spec);
    std::vector<double> x, y, xc, yc;
    for (int r = 0; r < 1500; ++r) {
      Rng r1(21, r), r2(22, r), r3(23, r);
      CurveStats s = curve_statistics(d, cable.sample(r1).path);
      CurveStats t = curve_statistics(d, first_passage_curve(field.sample(r2), r3).path);
      x.push_back(s.left_area);
      y.push_back(t.left_area);
      xc.push_back(s.chord_crossing);
      yc.push_back(t.chord_crossing);
    }
    CHECK(ks_two_sample(x, y).p_value > 1e-3);
    CHECK(ks_two_sample(xc, yc).p_value > 1e-3);
  }
  // the site rule is a different lattice object
  auto d = LatticeDomain::build_circle(disk(1.0 / 16));
  KappaCurveSampler sites(d, TopologySignature{}, 4.0, ClusterRule::Sites), cable(d, TopologySignature{}, 4.0);
  std::vector<double> x, y;
  for (int r = 0; r < 1500; ++r) {
    Rng r1(24, r), r2(25, r);
    x.push_back(curve_statistics(d, sites.sample(r1).path).left_area);
    y.push_back(curve_statistics(d, cable.sample(r2).path).left_area);
  }
  CHECK(ks_two_sample(x, y).p_value < 1e-6);
}
