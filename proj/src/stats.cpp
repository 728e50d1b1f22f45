#include "mcsle/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <cmath>
#include <numeric>

#include "mcsle/errors.hpp"

namespace mcsle {

double kolmogorov_survival(double lambda) {
  if (lambda < 0.2) return 1.0;  // series converges slowly here; survival is 1 to 1e-15
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

struct Weighted {
  std::vector<std::pair<double, double>> pts;
  double total = 0.0;
  double n_eff = 0.0;
};

Weighted prepare(std::span<const double> x, std::span<const double> w) {
  if (!w.empty() && w.size() != x.size())
    throw Error(ErrorKind::InvalidArgument, "weights and samples differ in length");
  Weighted out;
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    if (wi < 0.0 || !std::isfinite(wi)) throw Error(ErrorKind::InvalidArgument, "weights must be finite and >= 0");
    if (wi == 0.0) continue;
    out.pts.emplace_back(x[i], wi);
    out.total += wi;
    sq += wi * wi;
  }
  if (out.total <= 0.0) throw Error(ErrorKind::InvalidArgument, "sample has no mass");
  std::sort(out.pts.begin(), out.pts.end());
  out.n_eff = out.total * out.total / sq;
  return out;
}

}  // namespace

TestResult ks_two_sample(std::span<const double> x, std::span<const double> wx, std::span<const double> y,
                         std::span<const double> wy) {
  Weighted a = prepare(x, wx);
  Weighted b = prepare(y, wy);
  double fa = 0.0, fb = 0.0, d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.pts.size() || j < b.pts.size()) {
    double t = std::min(i < a.pts.size() ? a.pts[i].first : INFINITY, j < b.pts.size() ? b.pts[j].first : INFINITY);
    while (i < a.pts.size() && a.pts[i].first == t) fa += a.pts[i++].second;
    while (j < b.pts.size() && b.pts[j].first == t) fb += b.pts[j++].second;
    d = std::max(d, std::abs(fa / a.total - fb / b.total));
  }
  const double ne = a.n_eff * b.n_eff / (a.n_eff + b.n_eff);
  const double sn = std::sqrt(ne);
  TestResult r;
  r.statistic = d;
  r.n_eff = ne;
  r.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

TestResult ks_two_sample(std::span<const double> x, std::span<const double> y) {
  return ks_two_sample(x, {}, y, {});
}

TestResult chi_square_gof(std::span<const double> observed, std::span<const double> expected, double min_expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw Error(ErrorKind::InvalidArgument, "observed and expected differ in length");
  std::vector<double> o, e;
  double co = 0.0, ce = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    co += observed[k];
    ce += expected[k];
    if (ce >= min_expected) {
      o.push_back(co);
      e.push_back(ce);
      co = ce = 0.0;
    }
  }
  if (ce > 0.0 || co > 0.0) {
    if (e.empty()) {
      o.push_back(co);
      e.push_back(ce);
    } else {
      o.back() += co;
      e.back() += ce;
    }
  }
  TestResult r;
  for (std::size_t k = 0; k < o.size(); ++k) r.statistic += (o[k] - e[k]) * (o[k] - e[k]) / e[k];
  r.n_eff = static_cast<double>(o.size()) - 1.0;
  if (r.n_eff < 1.0) return r;
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.n_eff), r.statistic));
  return r;
}

TestResult poisson_count_test(std::span<const std::int64_t> counts, double mean) {
  if (counts.empty()) throw Error(ErrorKind::InvalidArgument, "no counts");
  const std::int64_t top = *std::max_element(counts.begin(), counts.end());
  std::vector<double> obs(top + 2, 0.0), exp(top + 2, 0.0);
  for (auto c : counts) obs[c] += 1.0;
  const double n = static_cast<double>(counts.size());
  if (mean <= 0.0) {
    exp[0] = n;
  } else {
    boost::math::poisson_distribution<double> pd(mean);
    for (std::int64_t k = 0; k <= top; ++k) exp[k] = n * boost::math::pdf(pd, static_cast<double>(k));
    exp[top + 1] = n * boost::math::cdf(boost::math::complement(pd, static_cast<double>(top)));
  }
  return chi_square_gof(obs, exp);
}

double binomial_stderr(double p, std::int64_t n) {
  if (n <= 0) return 0.0;
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

WeightedMoments weighted_moments(std::span<const double> x, std::span<const double> w) {
  WeightedMoments m;
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    m.sum_weights += wi;
    m.mean += wi * x[i];
    sq += wi * wi;
  }
  if (m.sum_weights <= 0.0) return m;
  m.mean /= m.sum_weights;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    m.variance += wi * (x[i] - m.mean) * (x[i] - m.mean);
  }
  m.variance /= m.sum_weights;
  m.n_eff = m.sum_weights * m.sum_weights / sq;
  return m;
}

}  // namespace mcsle
