#include <numbers>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "mcsle/energy_weights.hpp"
#include "mcsle/errors.hpp"
#include "mcsle/harmonic_kernels.hpp"

using namespace mcsle;
using namespace testing;

namespace {

BoundaryTrace trace_of(const LatticeDomain& d, double (*f)(Point)) {
  BoundaryTrace t;
  t.sites = d.boundary();
  for (Site s : t.sites) t.values.push_back(f(d.point(s)));
  return t;
}

}  // namespace

TEST_CASE("Dirichlet solve: trivial and symmetric data") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 16));
  Eigen::VectorXd zero = solve_dirichlet(d, trace_of(d, [](Point) { return 0.0; }));
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd c = solve_dirichlet(d, trace_of(d, [](Point) { return 2.5; }));
  CHECK((c.array() - 2.5).abs().maxCoeff() < 1e-12);

  // +lambda on the upper half, -lambda below, 0 on the axis.
  Eigen::VectorXd u = solve_dirichlet(d, trace_of(d, [](Point p) {
    return p.y > 1e-12 ? kLambda : (p.y < -1e-12 ? -kLambda : 0.0);
  }));
  CHECK(u.cwiseAbs().maxCoeff() <= kLambda + 1e-12);
  int centre = d.interior_index(d.nearest_site({0, 0}));
  REQUIRE(centre >= 0);
  CHECK(std::abs(u[centre]) < 1e-12);
  // Antisymmetry under reflection in the horizontal axis.
  for (Site s : d.interior()) {
    Site r = d.nearest_site({d.point(s).x, -d.point(s).y});
    CHECK(u[d.interior_index(s)] == doctest::Approx(-u[d.interior_index(r)]).epsilon(1e-10));
  }
}

TEST_CASE("Green matrix equals the dense inverse of 4I - A") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 6, {Hole{{0.2, 0.1}, 0.25}}));
  Eigen::MatrixXd oracle = dense_laplacian(d).inverse();
  KernelMatrix G = green_matrix(d, d.interior(), d.interior());
  CHECK((G.entries - oracle).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((G.entries - G.entries.transpose()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(G.entries.minCoeff() > 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.entries);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("carving decreases Green entries") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 12));
  std::vector<Site> cut{d.nearest_site({0.3, 0.3}), d.nearest_site({0.3, 0.38})};
  auto e = d.carve(cut);
  KernelMatrix G = green_matrix(d, e.interior(), e.interior());
  KernelMatrix Ge = green_matrix(e, e.interior(), e.interior());
  CHECK((G.entries - Ge.entries).minCoeff() > 0.0);
}

TEST_CASE("Poisson kernel: stochastic rows, columns harmonic") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 10, {Hole{{-0.2, 0}, 0.25}}));
  KernelMatrix P = poisson_matrix(d, d.interior(), d.boundary());
  CHECK((P.entries.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(P.entries.minCoeff() >= 0.0);
  for (std::size_t c : {std::size_t{0}, d.boundary().size() / 2}) {
    BoundaryTrace t;
    t.sites = d.boundary();
    t.values.assign(t.sites.size(), 0.0);
    t.values[c] = 1.0;
    Eigen::VectorXd col = solve_dirichlet(d, t);
    CHECK((P.entries.col(static_cast<Eigen::Index>(c)) - col).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Poisson kernel vs random-walk exit frequencies") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 8));
  Site start = d.nearest_site({0.1, -0.05});
  KernelMatrix P = poisson_matrix(d, std::vector<Site>{start}, d.boundary());
  std::vector<double> freq(d.boundary().size(), 0.0);
  std::mt19937_64 gen(3);
  const int walks = 1'000'000;
  for (int w = 0; w < walks; ++w) {
    Site s = start;
    while (d.is_interior(s)) s = s + kSteps4[gen() & 3];
    freq[d.boundary_index(s)] += 1.0 / walks;
  }
  double tv = 0.0;
  for (std::size_t b = 0; b < freq.size(); ++b) tv += 0.5 * std::abs(freq[b] - P.entries(0, b));
  CHECK(tv < 0.005);
}

TEST_CASE("boundary Poisson kernel vs walk enumeration") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 5));
  const auto& bnd = d.boundary();
  KernelMatrix H = boundary_poisson_matrix(d, bnd, bnd);
  CHECK((H.entries - H.entries.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(H.entries.minCoeff() >= 0.0);

  // sum over walks u -> v of 4^-(len+1), u next to a, v next to b
  const int n = d.n_interior();
  Eigen::MatrixXd A = 4.0 * Eigen::MatrixXd::Identity(n, n) - dense_laplacian(d);
  Eigen::MatrixXd Q = A / 4.0;
  const double rho = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).eigenvalues().cwiseAbs().maxCoeff();
  REQUIRE(rho < 1.0);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n) / 4.0, G = Eigen::MatrixXd::Zero(n, n);
  int len = 0;
  while (std::pow(rho, len) / (1.0 - rho) > 1e-15) {
    G += term;
    term = term * Q;
    ++len;
  }
  const double tail = std::pow(rho, len) / (1.0 - rho) * 16.0;
  int a = d.boundary_index(d.marked_x()), b = d.boundary_index(d.marked_y());
  double oracle = 0.0;
  for (int u : neighbours_inside(d, bnd[a]))
    for (int v : neighbours_inside(d, bnd[b])) oracle += G(u, v);
  CHECK(std::abs(H.entries(a, b) - oracle) <= tail + 1e-14);
}

TEST_CASE("carving lowers the boundary kernel between the marks") {
  auto d = LatticeDomain::build_circle(disk(1.0 / 16));
  std::vector<Site> cut;
  for (int k = -2; k <= 2; ++k) cut.push_back(d.nearest_site({0.0, 0.1 * k}));
  auto e = d.carve(cut);
  std::vector<Site> x{d.marked_x()}, y{d.marked_y()};
  CHECK(boundary_poisson_matrix(e, x, y).entries(0, 0) < boundary_poisson_matrix(d, x, y).entries(0, 0));
}

TEST_CASE("loop identities are exact at every mesh") {
  for (double mesh : {1.0 / 16, 1.0 / 32, 1.0 / 48}) {
    auto d = LatticeDomain::build_circle(disk(mesh, {Hole{{0, 0}, std::exp(-1.0)}}));
    auto b1 = radial_crosscut(d, 0.5 * std::numbers::pi, 0);
    auto b2 = radial_crosscut(d, 1.5 * std::numbers::pi, 0);
    LoopIdentityReport r = verify_loop_identities(d, b1, b2);
    CHECK(r.max() < 1e-9);
    CHECK(r.b1_size > 0);
  }
  auto d = LatticeDomain::build_circle(disk(1.0 / 16, {Hole{{0, 0}, 0.4}}));
  auto b1 = radial_crosscut(d, 0.5 * std::numbers::pi, 0);
  CHECK_THROWS_AS(verify_loop_identities(d, b1, b1), Error);
}

TEST_CASE("Gaussian quadratic expectation") {
  SUBCASE("M = 0 and m = 0 give 1") {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(3, 3);
    auto r = gaussian_quadratic_expectation(Q, Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(3), 1000, 1);
    CHECK(r.closed_form == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.mc_estimate == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("scalar case") {
    const double q = 0.3;
    auto r = gaussian_quadratic_expectation(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Constant(1, 1, q),
                                            Eigen::VectorXd::Zero(1), 10, 1);
    CHECK(r.closed_form == doctest::Approx(1.0 / std::sqrt(1.0 - q)).epsilon(1e-14));
  }
  SUBCASE("random five dimensional instance") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> N;
    Eigen::MatrixXd B(5, 5), C(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        B(i, j) = N(gen);
        C(i, j) = N(gen);
      }
    Eigen::MatrixXd Q = B * B.transpose() / 5.0 + 0.2 * Eigen::MatrixXd::Identity(5, 5);
    Eigen::MatrixXd M = (C + C.transpose()) / 2.0;
    // Scale M so that Q^1/2 M Q^1/2 has spectral radius 0.2.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
    Eigen::MatrixXd Qh = es.operatorSqrt();
    double r0 = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Qh * M * Qh).eigenvalues().cwiseAbs().maxCoeff();
    M *= 0.2 / r0;
    Eigen::VectorXd m(5);
    for (int i = 0; i < 5; ++i) m[i] = 0.1 * N(gen);
    auto r = gaussian_quadratic_expectation(Q, M, m, 1'000'000, 17);
    CHECK(r.spectral_radius == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(std::abs(r.mc_estimate - r.closed_form) / r.closed_form < 0.02);

    // Closed form by direct Gaussian algebra: det(I - QM)^-1/2 exp(m'(Q^-1 - M)^-1 m / 2)
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(5, 5);
    double oracle = std::pow((I - Q * M).determinant(), -0.5) *
                    std::exp(0.5 * m.dot((Q.inverse() - M).inverse() * m));
    CHECK(r.closed_form == doctest::Approx(oracle).epsilon(1e-10));
  }
  SUBCASE("non-contraction is refused") {
    try {
      gaussian_quadratic_expectation(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Constant(1, 1, 1.0),
                                     Eigen::VectorXd::Zero(1), 10, 1);
      FAIL("expected ContractionViolated");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ContractionViolated);
    }
  }
}
