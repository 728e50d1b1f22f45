#include "mcsle/gff_levelline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mcsle/errors.hpp"
#include "mcsle/parallel.hpp"

namespace mcsle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0 ? a + kTwoPi : a;
}

double circular_gap(double a, double b) {
  double d = wrap_2pi(a - b);
  return std::min(d, kTwoPi - d);
}

// Headings: 0 east, 1 north, 2 west, 3 south.
constexpr Site kHeading[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

struct Corners {
  Site u, v, l, r;  // back-left, back-right, front-left, front-right
};

Corners corners(Site f, int d) {
  const int i = f.i, j = f.j;
  switch (d) {
    case 0: return {{i, j + 1}, {i, j}, {i + 1, j + 1}, {i + 1, j}};
    case 1: return {{i, j}, {i + 1, j}, {i, j + 1}, {i + 1, j + 1}};
    case 2: return {{i + 1, j}, {i + 1, j + 1}, {i, j}, {i, j + 1}};
    default: return {{i + 1, j + 1}, {i, j + 1}, {i + 1, j}, {i, j}};
  }
}

struct Walker {
  Site face;
  int heading;
};

// Faces on the grid frame with an inward heading; their back edge lies on the frame.
std::vector<Walker> frame_walkers(int n) {
  std::vector<Walker> out;
  for (int i = 0; i + 1 < n; ++i) {
    out.push_back({{i, 0}, 1});
    out.push_back({{i, n - 2}, 3});
  }
  for (int j = 0; j + 1 < n; ++j) {
    out.push_back({{0, j}, 0});
    out.push_back({{n - 2, j}, 2});
  }
  return out;
}

Point face_center(const LatticeDomain& d, Site f) {
  Point p = d.point(f);
  return {p.x + 0.5 * d.mesh(), p.y + 0.5 * d.mesh()};
}

Point edge_midpoint(const LatticeDomain& d, Site a, Site b) {
  Point pa = d.point(a), pb = d.point(b);
  return {0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)};
}

// Keeps the crossed edges between the first and last one touching the interior.
LatticePath crop_to_interior(const LatticeDomain& d, const std::vector<std::pair<Site, Site>>& edges) {
  std::ptrdiff_t first = -1, last = -1;
  for (std::size_t k = 0; k < edges.size(); ++k)
    if (d.is_interior(edges[k].first) || d.is_interior(edges[k].second)) {
      if (first < 0) first = static_cast<std::ptrdiff_t>(k);
      last = static_cast<std::ptrdiff_t>(k);
    }
  if (first < 0) throw Error(ErrorKind::TraceStuck, "interface never enters the domain");
  LatticePath path;
  path.scale = 2;
  for (std::ptrdiff_t k = first; k <= last; ++k) {
    auto [a, b] = edges[k];
    path.vertices.push_back({a.i + b.i, a.j + b.j});
  }
  return path;
}

int wedge_sign(const LatticeDomain& d, Site s) {
  const DomainSpec& spec = d.spec();
  Point p = d.point(s);
  double a = wrap_2pi(std::atan2(p.y, p.x) - spec.angle_y);
  double span = wrap_2pi(spec.angle_x - spec.angle_y);
  return (a > 0.0 && a < span) ? -1 : 1;
}

LevelLineSample trace_crossing(const FieldSample& field) {
  const LatticeDomain& d = *field.domain;
  const int n = d.size();
  const int k = field.mean_spec.branch;
  const DomainSpec& spec = d.spec();
  const Point c = spec.holes[0].center;
  const double R = spec.outer_radius;
  const double ax = std::atan2(R * std::sin(spec.angle_x) - c.y, R * std::cos(spec.angle_x) - c.x);
  const double w_hat = wrap_2pi(spec.angle_y - ax);
  auto at = [n](Site s) { return static_cast<std::size_t>(s.j) * n + s.i; };

  // Sheet-0 values on the whole grid.
  std::vector<double> value(static_cast<std::size_t>(n) * n);
  std::vector<double> angle(value.size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Site s{i, j};
      angle[at(s)] = d.seam_angle(s);
      int m = d.interior_index(s);
      int b = d.boundary_index(s);
      double v;
      if (m >= 0) v = field.values[m] + (*field.mean)[m];
      else if (b >= 0) v = (*field.boundary)[b];
      else if (d.region(s) == Region::Hole)
        v = angle[at(s)] < w_hat ? -kLambda * (1.0 + 2.0 * k) : kLambda * (1.0 - 2.0 * k);
      else v = kLambda;
      value[at(s)] = v;
    }
  auto offset = [](double from, double to) {
    double dd = to - from;
    return dd < -std::numbers::pi ? 1 : (dd > std::numbers::pi ? -1 : 0);
  };
  auto lifted = [&](Site s, int sheet, double face_angle) {
    return value[at(s)] + 2.0 * kLambda * (sheet + offset(face_angle, angle[at(s)]));
  };
  auto minus = [&](Site s, int sheet, double face_angle) { return lifted(s, sheet, face_angle) < 0.0; };

  // The jump at x sits on the seam: the face just below it ends sheet -1.
  Walker w{{-1, -1}, 0};
  int sheet = 0;
  double best = 1e300;
  for (Walker cand : frame_walkers(n)) {
    double fa = d.seam_angle(face_center(d, cand.face));
    Corners cn = corners(cand.face, cand.heading);
    for (int s : {0, -1}) {
      if (!minus(cn.u, s, fa) || minus(cn.v, s, fa)) continue;
      double gap = circular_gap(fa, 0.0);
      if (gap < best) {
        best = gap;
        w = cand;
        sheet = s;
      }
    }
  }
  if (w.face.i < 0) throw Error(ErrorKind::TraceStuck, "no interface start at the seam");

  double fa = d.seam_angle(face_center(d, w.face));
  std::vector<std::pair<Site, Site>> edges;
  const long limit = 8L * n * n;
  for (long step = 0;; ++step) {
    if (step > limit) throw Error(ErrorKind::TraceStuck, "interface exceeded the step budget");
    Corners cn = corners(w.face, w.heading);
    std::pair<Site, Site> e;
    const bool saddle = minus(cn.r, sheet, fa) && !minus(cn.l, sheet, fa);
    if (saddle && lifted(cn.u, sheet, fa) + lifted(cn.v, sheet, fa) + lifted(cn.l, sheet, fa) +
                          lifted(cn.r, sheet, fa) >= 0.0) {
      w.heading = (w.heading + 1) % 4;
      e = {cn.u, cn.l};
    } else if (minus(cn.r, sheet, fa)) {
      w.heading = (w.heading + 3) % 4;
      e = {cn.v, cn.r};
    } else if (minus(cn.l, sheet, fa)) {
      e = {cn.l, cn.r};
    } else {
      w.heading = (w.heading + 1) % 4;
      e = {cn.u, cn.l};
    }
    edges.push_back(e);
    if (d.region(e.first) == Region::Hole && d.region(e.second) == Region::Hole) break;
    w.face = w.face + kHeading[w.heading];
    if (w.face.i < 0 || w.face.j < 0 || w.face.i > n - 2 || w.face.j > n - 2)
      throw Error(ErrorKind::TraceStuck, "crossing interface left the grid");
    double nfa = d.seam_angle(face_center(d, w.face));
    sheet += offset(fa, nfa);
    fa = nfa;
  }
  LevelLineSample out;
  out.path = crop_to_interior(d, edges);
  out.signature = classify_topology(d, out.path);
  return out;
}

}  // namespace

FieldSampler::FieldSampler(const LatticeDomain& domain, MeanSpec spec)
    : FieldSampler(std::make_shared<const LaplaceSolver>(domain), std::move(spec)) {}

FieldSampler::FieldSampler(std::shared_ptr<const LaplaceSolver> solver, MeanSpec spec)
    : solver_(std::move(solver)), spec_(std::move(spec)) {
  const LatticeDomain& d = solver_->domain();
  if (spec_.mode != d.mode()) throw Error(ErrorKind::InvalidArgument, "mean spec mode differs from the domain mode");
  std::vector<double> boundary(d.boundary().size(), 0.0);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(solver_->dim());
  if (!spec_.zero) {
    if (spec_.mode == Mode::NonCrossing) {
      boundary = signature_boundary_signs(d, spec_.signs);
      for (double& b : boundary) b *= kLambda;
      mean = solver_->extend(boundary);
    } else {
      AnnulusBranch br = annulus_branch_mean(*solver_, spec_.branch);
      boundary = std::move(br.boundary);
      mean = std::move(br.mean);
    }
  }
  mean_ = std::make_shared<const Eigen::VectorXd>(std::move(mean));
  boundary_ = std::make_shared<const std::vector<double>>(std::move(boundary));
}

FieldSample FieldSampler::sample(Rng& rng) const {
  Eigen::VectorXd z(solver_->dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  FieldSample out;
  out.domain = solver_->domain_ptr();
  out.mean_spec = spec_;
  out.values = solver_->correlate(z);
  out.mean = mean_;
  out.boundary = boundary_;
  return out;
}

FieldSample FieldSampler::sample(std::uint64_t seed) const {
  Rng rng(seed);
  FieldSample out = sample(rng);
  out.seed = seed;
  return out;
}

FieldSample sample_dgff(const LatticeDomain& domain, const MeanSpec& spec, std::uint64_t seed) {
  return FieldSampler(domain, spec).sample(seed);
}

LatticePath trace_interface(const LatticeDomain& d, const std::vector<int>& signs,
                            const std::vector<double>* values) {
  const int n = d.size();
  if (values && values->size() != signs.size())
    throw Error(ErrorKind::InvalidArgument, "values and signs differ in size");
  auto minus = [&](Site s) { return signs[static_cast<std::size_t>(s.j) * n + s.i] < 0; };
  const double theta_x = d.spec().angle_x;

  Walker w{{-1, -1}, 0};
  double best = 1e300;
  for (Walker cand : frame_walkers(n)) {
    Corners cn = corners(cand.face, cand.heading);
    if (!minus(cn.u) || minus(cn.v)) continue;
    Point m = edge_midpoint(d, cn.u, cn.v);
    double gap = circular_gap(std::atan2(m.y, m.x), theta_x);
    if (gap < best) {
      best = gap;
      w = cand;
    }
  }
  if (w.face.i < 0) throw Error(ErrorKind::TraceStuck, "no interface start at x");

  std::vector<std::pair<Site, Site>> edges;
  const long limit = 4L * n * n;
  for (long step = 0;; ++step) {
    if (step > limit) throw Error(ErrorKind::TraceStuck, "interface exceeded the step budget");
    Corners cn = corners(w.face, w.heading);
    auto val = [&](Site q) { return (*values)[static_cast<std::size_t>(q.j) * n + q.i]; };
    if (values && minus(cn.r) && !minus(cn.l) && val(cn.u) + val(cn.v) + val(cn.l) + val(cn.r) >= 0.0) {
      w.heading = (w.heading + 1) % 4;
      edges.emplace_back(cn.u, cn.l);
    } else if (minus(cn.r)) {
      w.heading = (w.heading + 3) % 4;
      edges.emplace_back(cn.v, cn.r);
    } else if (minus(cn.l)) {
      edges.emplace_back(cn.l, cn.r);
    } else {
      w.heading = (w.heading + 1) % 4;
      edges.emplace_back(cn.u, cn.l);
    }
    w.face = w.face + kHeading[w.heading];
    if (w.face.i < 0 || w.face.j < 0 || w.face.i > n - 2 || w.face.j > n - 2) break;
  }
  return crop_to_interior(d, edges);
}

LevelLineSample trace_level_line(const FieldSample& field) {
  const LatticeDomain& d = *field.domain;
  if (d.mode() == Mode::Crossing) return trace_crossing(field);

  const int n = d.size();
  std::vector<int> signs;
  if (static_cast<int>(field.mean_spec.signs.size()) == d.n_holes())
    signs = grid_signs(d, field.mean_spec.signs);
  else
    signs.assign(static_cast<std::size_t>(n) * n, 0);
  if (field.mean_spec.zero) std::fill(signs.begin(), signs.end(), 0);
  std::vector<double> values(signs.size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Site s{i, j};
      const auto k = static_cast<std::size_t>(j) * n + i;
      int m = d.interior_index(s);
      if (m >= 0) {
        values[k] = field.values[m] + (*field.mean)[m];
        signs[k] = values[k] >= 0.0 ? 1 : -1;
        continue;
      }
      if (signs[k] == 0) signs[k] = d.region(s) == Region::Outer ? wedge_sign(d, s) : 1;
      values[k] = signs[k] * kLambda;
    }
  LevelLineSample out;
  out.path = trace_interface(d, signs, &values);
  out.signature = classify_topology(d, out.path);
  return out;
}

std::vector<Site> path_sites(const LatticeDomain& domain, const LatticePath& path) {
  std::vector<Site> out;
  for (Site v : path.vertices) {
    Site a, b;
    if (path.scale == 1) {
      a = b = v;
    } else if (v.i % 2 != 0) {
      a = {(v.i - 1) / 2, v.j / 2};
      b = {(v.i + 1) / 2, v.j / 2};
    } else {
      a = {v.i / 2, (v.j - 1) / 2};
      b = {v.i / 2, (v.j + 1) / 2};
    }
    if (domain.is_interior(a)) out.push_back(a);
    if (domain.is_interior(b)) out.push_back(b);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ClassEstimate estimate_class_probability(const LatticeDomain& domain, const TopologySignature& target,
                                         std::int64_t n_samples, std::uint64_t seed, int workers) {
  if (n_samples < 1) throw Error(ErrorKind::InvalidArgument, "n_samples must be positive", "n_samples");
  MeanSpec spec;
  spec.mode = domain.mode();
  spec.signs = target.signs;
  spec.branch = target.winding;
  FieldSampler sampler(domain, spec);
  std::vector<char> hit(static_cast<std::size_t>(n_samples), 0);
  parallel_for(hit.size(), workers, [&](std::size_t r) {
    Rng rng(seed, r);
    hit[r] = trace_level_line(sampler.sample(rng)).signature == target;
  });
  ClassEstimate est;
  est.n_samples = n_samples;
  est.hits = std::count(hit.begin(), hit.end(), 1);
  est.p_hat = static_cast<double>(est.hits) / static_cast<double>(n_samples);
  est.stderr_ = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(n_samples));
  return est;
}

LevelLineSample sample_conditioned_level_line(const FieldSampler& sampler, const TopologySignature& target,
                                              int max_attempts, std::uint64_t seed) {
  for (int a = 0; a < max_attempts; ++a) {
    Rng rng(seed, static_cast<std::uint64_t>(a));
    LevelLineSample s = trace_level_line(sampler.sample(rng));
    if (s.signature == target) {
      s.accepted = true;
      s.attempts = a + 1;
      return s;
    }
  }
  throw Error(ErrorKind::RejectionBudgetExhausted,
              "no sample with the target signature in " + std::to_string(max_attempts) + " attempts");
}

LevelLineSample sample_conditioned_level_line(const LatticeDomain& domain, const TopologySignature& target,
                                              int max_attempts, std::uint64_t seed) {
  MeanSpec spec;
  spec.mode = domain.mode();
  spec.signs = target.signs;
  spec.branch = target.winding;
  return sample_conditioned_level_line(FieldSampler(domain, spec), target, max_attempts, seed);
}

}  // namespace mcsle
