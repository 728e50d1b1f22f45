#include "mcsle/energy_weights.hpp"

#include <algorithm>
#include <cmath>

#include "mcsle/errors.hpp"

namespace mcsle {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0 ? a + kTwoPi : a;
}

// Sign of an original (uncarved) boundary site; 0 for marks and carved sites.
int original_sign(const LatticeDomain& d, Site s, std::span<const int> signs) {
  switch (d.region(s)) {
    case Region::Outer: {
      Arc a = d.arc(s);
      if (a == Arc::Left) return -1;
      if (a == Arc::Right) return +1;
      return 0;
    }
    case Region::Hole: return signs[d.hole_of(s)];
    default: return 0;
  }
}

}  // namespace

double restriction_exponent(double kappa) { return (6.0 - kappa) / (2.0 * kappa); }

double central_charge(double kappa) { return (3.0 * kappa - 8.0) * (6.0 - kappa) / (2.0 * kappa); }

void check_kappa(double kappa) {
  if (!(kappa > 8.0 / 3.0 && kappa <= 4.0))
    throw Error(ErrorKind::InvalidArgument, "kappa must lie in (8/3, 4]", "kappa");
}

std::vector<int> grid_signs(const LatticeDomain& domain, std::span<const int> signs) {
  if (domain.mode() != Mode::NonCrossing)
    throw Error(ErrorKind::InvalidArgument, "signature data needs a non-crossing domain");
  if (static_cast<int>(signs.size()) != domain.n_holes())
    throw Error(ErrorKind::InvalidArgument, "signature length differs from the number of holes", "signature");

  const int n = domain.size();
  auto at = [n](Site s) { return static_cast<std::size_t>(s.j) * n + s.i; };
  std::vector<int> out(static_cast<std::size_t>(n) * n, 0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out[at({i, j})] = original_sign(domain, {i, j}, signs);

  // Carved clusters take the sign of what they touch.
  std::vector<char> seen(out.size(), 0);
  for (Site seed : domain.carved_sites()) {
    if (seen[at(seed)]) continue;
    bool minus = false, plus = false;
    std::vector<Site> members{seed};
    seen[at(seed)] = 1;
    for (std::size_t q = 0; q < members.size(); ++q) {
      for (Site st : kSteps8) {
        Site v = members[q] + st;
        if (!domain.in_grid(v)) continue;
        if (domain.region(v) == Region::Carved) {
          if (!seen[at(v)]) {
            seen[at(v)] = 1;
            members.push_back(v);
          }
          continue;
        }
        int sg = original_sign(domain, v, signs);
        minus |= sg < 0;
        plus |= sg > 0;
      }
    }
    if (minus && plus)
      throw Error(ErrorKind::IncompatibleReference, "carved region joins components of opposite sign");
    for (Site m : members) out[at(m)] = minus ? -1 : 1;
  }
  return out;
}

std::vector<double> signature_boundary_signs(const LatticeDomain& domain, std::span<const int> signs) {
  auto grid = grid_signs(domain, signs);
  std::vector<double> out;
  out.reserve(domain.boundary().size());
  for (Site s : domain.boundary()) out.push_back(grid[static_cast<std::size_t>(s.j) * domain.size() + s.i]);
  return out;
}

double dirichlet_energy(const LaplaceSolver& solver, std::span<const double> boundary_values) {
  const LatticeDomain& d = solver.domain();
  Eigen::VectorXd u = solver.extend(boundary_values);
  double e = 0.0;
  for (int k = 0; k < d.n_interior(); ++k) {
    Site s = d.interior()[k];
    for (Site st : kSteps4) {
      Site t = s + st;
      int m = d.interior_index(t);
      if (m >= 0) {
        if (m > k) e += (u[m] - u[k]) * (u[m] - u[k]);
      } else {
        double f = boundary_values[d.boundary_index(t)];
        e += (f - u[k]) * (f - u[k]);
      }
    }
  }
  return e;
}

std::vector<Site> minus_sites(const LatticeDomain& domain, std::span<const int> signs) {
  auto values = signature_boundary_signs(domain, signs);
  std::vector<Site> out;
  for (std::size_t b = 0; b < values.size(); ++b)
    if (values[b] < 0) out.push_back(domain.boundary()[b]);
  return out;
}

EnergyDifference energy_difference(const LatticeDomain& D, const LatticeDomain& Dp,
                                   std::span<const Site> minus) {
  for (Site s : Dp.interior())
    if (!D.is_interior(s)) throw Error(ErrorKind::InvalidArgument, "D' is not contained in D");
  std::vector<Site> removed;
  for (Site s : D.interior())
    if (!Dp.is_interior(s)) removed.push_back(s);
  for (Site r : removed)
    for (Site m : minus)
      if (std::max(std::abs(r.i - m.i), std::abs(r.j - m.j)) < 2)
        throw Error(ErrorKind::ObstacleTouchesMinusArcs, "carved set within 2 cells of the minus arcs");

  // g = indicator of the minus set, 1/2 at the marks; u = 1 - 2g.
  std::vector<Site> support;
  std::vector<double> weight;
  std::vector<double> gD(D.boundary().size(), 0.0);
  for (Site s : minus) {
    int b = D.boundary_index(s);
    if (b < 0) throw Error(ErrorKind::InvalidArgument, "minus site is not on the boundary");
    gD[b] = 1.0;
  }
  for (Site m : {D.marked_x(), D.marked_y()}) gD[D.boundary_index(m)] = 0.5;
  for (std::size_t b = 0; b < gD.size(); ++b)
    if (gD[b] != 0.0) {
      support.push_back(D.boundary()[b]);
      weight.push_back(gD[b]);
    }
  std::vector<double> gDp(Dp.boundary().size(), 0.0);
  for (std::size_t b = 0; b < gDp.size(); ++b) {
    int ob = D.boundary_index(Dp.boundary()[b]);
    if (ob >= 0) gDp[b] = gD[ob];
  }
  std::vector<double> uD(gD.size()), uDp(gDp.size());
  std::transform(gD.begin(), gD.end(), uD.begin(), [](double g) { return 1.0 - 2.0 * g; });
  std::transform(gDp.begin(), gDp.end(), uDp.begin(), [](double g) { return 1.0 - 2.0 * g; });

  LaplaceSolver sD(D), sDp(Dp);
  EnergyDifference out;
  Eigen::Map<const Eigen::VectorXd> w(weight.data(), static_cast<Eigen::Index>(weight.size()));
  Eigen::MatrixXd diff = boundary_poisson_matrix(sD, support, support).entries -
                         boundary_poisson_matrix(sDp, support, support).entries;
  out.kernel_form = 4.0 * w.dot(diff * w);

  Eigen::VectorXd u = sD.extend(uD);
  Eigen::VectorXd up = sDp.extend(uDp);
  double flux = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    double nu = 0.0;
    for (Site st : kSteps4) {
      Site a = support[k] + st;
      int i = D.interior_index(a);
      if (i < 0) continue;
      nu += up[Dp.interior_index(a)] - u[i];
    }
    flux += weight[k] * nu;
  }
  out.flux_form = 2.0 * flux;
  out.dirichlet_form = dirichlet_energy(sDp, uDp) - dirichlet_energy(sD, uD);
  return out;
}

LatticeDomain reference_domain(const LatticeDomain& domain, std::span<const int> signs, int variant) {
  if (static_cast<int>(signs.size()) != domain.n_holes())
    throw Error(ErrorKind::InvalidArgument, "signature length differs from the number of holes", "signature");
  const DomainSpec& spec = domain.spec();
  const double R = spec.outer_radius;
  const double span_left = wrap_2pi(spec.angle_x - spec.angle_y);
  static constexpr double kFractions[2][9] = {
      {0.5, 0.4, 0.6, 0.3, 0.7, 0.2, 0.8, 0.15, 0.85},
      {0.3, 0.7, 0.25, 0.75, 0.45, 0.55, 0.2, 0.8, 0.5}};
  const auto& fractions = kFractions[variant % 2];

  std::vector<Site> carved;
  for (int j = 0; j < domain.n_holes(); ++j) {
    const Point c = spec.holes[j].center;
    bool found = false;
    for (double f : fractions) {
      double phi = signs[j] < 0 ? spec.angle_y + f * span_left
                                : spec.angle_x + f * (kTwoPi - span_left);
      LatticePath seg = digital_segment(domain, c, {R * std::cos(phi), R * std::sin(phi)});
      // Leave hole j, cross the interior once, end on the outer boundary.
      std::vector<Site> channel;
      bool ok = true;
      int phase = 0;
      for (Site s : seg.vertices) {
        Region r = domain.region(s);
        if (phase == 0) {
          if (r == Region::Interior) phase = 1;
          else if (!(r == Region::Hole && domain.hole_of(s) == j)) ok = false;
        }
        if (phase == 1) {
          if (r == Region::Interior) channel.push_back(s);
          else if (r == Region::Outer) phase = 2;
          else ok = false;
        }
        if (!ok || phase == 2) break;
      }
      if (!ok || phase != 2 || channel.empty()) continue;
      std::vector<Site> trial = carved;
      trial.insert(trial.end(), channel.begin(), channel.end());
      try {
        LatticeDomain cand = domain.carve(trial);
        signature_boundary_signs(cand, signs);
      } catch (const Error&) {
        continue;
      }
      carved = std::move(trial);
      found = true;
      break;
    }
    if (!found)
      throw Error(ErrorKind::IncompatibleReference, "no admissible channel for hole " + std::to_string(j));
  }
  LatticeDomain ref = domain.carve(carved);
  if (!ref.simply_connected())
    throw Error(ErrorKind::IncompatibleReference, "reference domain is not simply connected");
  return ref;
}

SignatureWeight z_weight_noncrossing(const LatticeDomain& domain, const TopologySignature& signature,
                                     const LatticeDomain& reference, double kappa) {
  check_kappa(kappa);
  if (domain.mode() != Mode::NonCrossing)
    throw Error(ErrorKind::InvalidArgument, "z_weight_noncrossing needs a non-crossing domain");
  if (reference.size() != domain.size() || reference.mesh() != domain.mesh() ||
      reference.marked_x() != domain.marked_x() || reference.marked_y() != domain.marked_y())
    throw Error(ErrorKind::IncompatibleReference, "reference is not a test domain of D");
  for (Site s : reference.interior())
    if (!domain.is_interior(s)) throw Error(ErrorKind::IncompatibleReference, "reference leaves D");
  if (!reference.simply_connected())
    throw Error(ErrorKind::IncompatibleReference, "reference domain is not simply connected");

  auto ref_values = signature_boundary_signs(reference, signature.signs);
  auto d_values = signature_boundary_signs(domain, signature.signs);
  LaplaceSolver sref(reference), sd(domain);
  SignatureWeight w;
  w.signature = signature;
  w.energy_diff = dirichlet_energy(sref, ref_values) - dirichlet_energy(sd, d_values);
  Site x = domain.marked_x(), y = domain.marked_y();
  w.reference_H = boundary_poisson_matrix(sref, std::span<const Site>(&x, 1), std::span<const Site>(&y, 1)).entries(0, 0);
  const double h = restriction_exponent(kappa);
  w.log_weight = h * std::log(w.reference_H) + (kPi * h / 4.0) * w.energy_diff;
  return w;
}

std::complex<double> jacobi_theta3(std::complex<double> z, std::complex<double> tau) {
  if (!(tau.imag() > 0.0)) throw Error(ErrorKind::InvalidArgument, "theta needs Im tau > 0");
  const std::complex<double> i(0.0, 1.0);
  std::complex<double> sum = 1.0;
  for (int n = 1; n < 100000; ++n) {
    double dn = n;
    std::complex<double> base = i * kPi * dn * dn * tau;
    std::complex<double> term = std::exp(base + 2.0 * kPi * i * dn * z) + std::exp(base - 2.0 * kPi * i * dn * z);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum) && n > 2) break;
  }
  return sum;
}

double crossing_weight_annulus(double p, double alpha, int k) {
  if (!(p > 0.0)) throw Error(ErrorKind::NonPositiveModulus, "annulus modulus must be positive", "p");
  double s = k + alpha;
  return std::exp(-kPi * kPi * s * s / (2.0 * p));
}

WindingLaw winding_distribution(double p, double alpha, int k_max) {
  if (!(p > 0.0)) throw Error(ErrorKind::NonPositiveModulus, "annulus modulus must be positive", "p");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in [0, 1)", "alpha");
  WindingLaw law;
  law.p = p;
  law.alpha = alpha;
  const std::complex<double> i(0.0, 1.0);
  law.theta_value = jacobi_theta3(i * kPi * alpha / (2.0 * p), i * kPi / (2.0 * p)).real();
  const double norm = std::exp(-kPi * kPi * alpha * alpha / (2.0 * p)) * law.theta_value;

  int needed = 0;
  for (;; ++needed) {
    double tail = 0.0;
    for (int k = needed + 1;; ++k) {
      double t = crossing_weight_annulus(p, alpha, k) + crossing_weight_annulus(p, alpha, -k);
      tail += t;
      if (t < 1e-20 * norm) break;
    }
    if (tail / norm < 1e-13) break;
  }
  law.truncation_k = std::max(k_max, needed);
  for (int k = -law.truncation_k; k <= law.truncation_k; ++k)
    law.probs[k] = crossing_weight_annulus(p, alpha, k) / norm;
  return law;
}

int seam_offset(const LatticeDomain& domain, Site s, Site t) {
  double d = domain.seam_angle(t) - domain.seam_angle(s);
  if (d < -kPi) return 1;
  if (d > kPi) return -1;
  return 0;
}

AnnulusBranch annulus_branch_mean(const LaplaceSolver& solver, int k) {
  const LatticeDomain& d = solver.domain();
  if (d.mode() != Mode::Crossing || d.n_holes() != 1)
    throw Error(ErrorKind::InvalidArgument, "branch means are defined for the crossing annulus only");
  const DomainSpec& spec = d.spec();
  const Point c = spec.holes[0].center;
  const double R = spec.outer_radius;
  const double ax = std::atan2(R * std::sin(spec.angle_x) - c.y, R * std::cos(spec.angle_x) - c.x);
  const double w_hat = wrap_2pi(spec.angle_y - ax);

  AnnulusBranch br;
  br.k = k;
  br.boundary.resize(d.boundary().size());
  for (std::size_t b = 0; b < d.boundary().size(); ++b) {
    Site s = d.boundary()[b];
    double v;
    if (s == d.marked_x()) v = 0.0;
    else if (s == d.marked_y()) v = -2.0 * k * kLambda;
    else if (d.region(s) == Region::Hole) {
      v = d.seam_angle(s) < w_hat ? -kLambda * (1.0 + 2.0 * k) : kLambda * (1.0 - 2.0 * k);
    } else {
      v = kLambda;
    }
    br.boundary[b] = v;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(solver.dim());
  for (int a = 0; a < d.n_interior(); ++a) {
    Site s = d.interior()[a];
    for (Site st : kSteps4) {
      Site t = s + st;
      double lift = 2.0 * kLambda * seam_offset(d, s, t);
      int b = d.boundary_index(t);
      rhs[a] += lift + (b >= 0 ? br.boundary[b] : 0.0);
    }
  }
  br.mean = solver.solve(rhs);
  return br;
}

double annulus_branch_energy(const LaplaceSolver& solver, const AnnulusBranch& br) {
  const LatticeDomain& d = solver.domain();
  double e = 0.0;
  for (int a = 0; a < d.n_interior(); ++a) {
    Site s = d.interior()[a];
    for (Site st : kSteps4) {
      Site t = s + st;
      int m = d.interior_index(t);
      if (m >= 0 && m < a) continue;
      double gt = m >= 0 ? br.mean[m] : br.boundary[d.boundary_index(t)];
      double diff = gt + 2.0 * kLambda * seam_offset(d, s, t) - br.mean[a];
      e += diff * diff;
    }
  }
  return e;
}

}  // namespace mcsle
