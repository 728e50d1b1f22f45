#include "mcsle/lattice_domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "mcsle/errors.hpp"

namespace mcsle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

double wrap_pi(double a) {
  a = wrap_2pi(a);
  return a > std::numbers::pi ? a - kTwoPi : a;
}

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Sum of angle increments about c along the polyline.
double swept_angle(const std::vector<Point>& pts, Point c) {
  double total = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    double a0 = std::atan2(pts[k - 1].y - c.y, pts[k - 1].x - c.x);
    double a1 = std::atan2(pts[k].y - c.y, pts[k].x - c.x);
    total += wrap_pi(a1 - a0);
  }
  return total;
}

}  // namespace

LatticeDomain LatticeDomain::build_circle(const DomainSpec& spec) {
  const double h = spec.mesh;
  const double R = spec.outer_radius;
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error(ErrorKind::InvalidArgument, "mesh must be positive", "mesh");
  if (!(R > 0.0)) throw Error(ErrorKind::InvalidArgument, "outer radius must be positive", "outer_radius");
  if (R / h < 4.0) throw Error(ErrorKind::MeshTooCoarse, "outer disk spans fewer than 4 cells", "mesh");
  if (spec.mode == Mode::Crossing && spec.holes.empty())
    throw Error(ErrorKind::InvalidArgument, "crossing mode needs a hole carrying y", "holes");

  for (std::size_t a = 0; a < spec.holes.size(); ++a) {
    const Hole& ha = spec.holes[a];
    if (!(ha.radius > 0.0))
      throw Error(ErrorKind::InvalidArgument, "hole radius must be positive", "holes");
    double gap = R - std::hypot(ha.center.x, ha.center.y) - ha.radius;
    if (gap < 3.0 * h)
      throw Error(ErrorKind::MeshTooCoarse, "hole " + std::to_string(a) + " is within 3 cells of the outer boundary", "holes");
    for (std::size_t b = a + 1; b < spec.holes.size(); ++b) {
      const Hole& hb = spec.holes[b];
      double g = dist(ha.center, hb.center) - ha.radius - hb.radius;
      if (g < 3.0 * h)
        throw Error(ErrorKind::MeshTooCoarse, "holes " + std::to_string(a) + " and " + std::to_string(b) + " are within 3 cells", "holes");
    }
  }

  LatticeDomain d;
  d.spec_ = spec;
  d.center_ = static_cast<int>(std::ceil(R / h)) + 3;
  d.n_ = 2 * d.center_ + 1;
  const std::size_t total = static_cast<std::size_t>(d.n_) * d.n_;
  d.region_.assign(total, Region::Interior);
  d.hole_.assign(total, -1);
  std::vector<int> hole_count(spec.holes.size(), 0);
  for (int j = 0; j < d.n_; ++j) {
    for (int i = 0; i < d.n_; ++i) {
      Site s{i, j};
      Point p = d.point(s);
      auto f = d.flat(s);
      if (std::hypot(p.x, p.y) >= R) {
        d.region_[f] = Region::Outer;
        continue;
      }
      for (std::size_t k = 0; k < spec.holes.size(); ++k) {
        if (dist(p, spec.holes[k].center) <= spec.holes[k].radius) {
          d.region_[f] = Region::Hole;
          d.hole_[f] = static_cast<int>(k);
          ++hole_count[k];
          break;
        }
      }
    }
  }
  for (std::size_t k = 0; k < hole_count.size(); ++k)
    if (hole_count[k] < 4)
      throw Error(ErrorKind::MeshTooCoarse, "hole " + std::to_string(k) + " contains fewer than 4 sites", "mesh");

  d.rebuild_indices();
  if (!d.interior_connected())
    throw Error(ErrorKind::MeshTooCoarse, "interior is not connected at this mesh", "mesh");
  if (d.count_complement_components() != 1 + d.n_holes())
    throw Error(ErrorKind::MeshTooCoarse, "boundary components merge at this mesh", "mesh");

  auto nearest_on = [&](auto pred, Point target) {
    Site best{-1, -1};
    double bd = 1e300;
    for (Site s : d.boundary_) {
      if (!pred(s)) continue;
      double dd = dist(d.point(s), target);
      if (dd < bd) {
        bd = dd;
        best = s;
      }
    }
    return best;
  };
  auto on_outer = [&](Site s) { return d.region(s) == Region::Outer; };
  d.x_ = nearest_on(on_outer, {R * std::cos(spec.angle_x), R * std::sin(spec.angle_x)});
  if (spec.mode == Mode::NonCrossing) {
    d.y_ = nearest_on(on_outer, {R * std::cos(spec.angle_y), R * std::sin(spec.angle_y)});
  } else {
    const Hole& h0 = spec.holes[0];
    d.y_ = nearest_on([&](Site s) { return d.region(s) == Region::Hole && d.hole_of(s) == 0; },
                      {h0.center.x + h0.radius * std::cos(spec.angle_y),
                       h0.center.y + h0.radius * std::sin(spec.angle_y)});
  }
  d.validate_marks();

  // Components, each ordered by angle about its centre.
  BoundaryComponent outer{true, -1, {0.0, 0.0}, {}};
  std::vector<BoundaryComponent> inner;
  for (std::size_t k = 0; k < spec.holes.size(); ++k)
    inner.push_back({false, static_cast<int>(k), spec.holes[k].center, {}});
  for (Site s : d.boundary_) {
    if (d.region(s) == Region::Outer) outer.cycle.push_back(s);
    else if (d.region(s) == Region::Hole) inner[d.hole_of(s)].cycle.push_back(s);
  }
  auto sort_cycle = [&](BoundaryComponent& c) {
    std::stable_sort(c.cycle.begin(), c.cycle.end(), [&](Site a, Site b) {
      Point pa = d.point(a), pb = d.point(b);
      return wrap_2pi(std::atan2(pa.y - c.center.y, pa.x - c.center.x)) <
             wrap_2pi(std::atan2(pb.y - c.center.y, pb.x - c.center.x));
    });
  };
  sort_cycle(outer);
  d.components_.push_back(std::move(outer));
  for (auto& c : inner) {
    sort_cycle(c);
    d.components_.push_back(std::move(c));
  }
  return d;
}

void LatticeDomain::validate_marks() const {
  if (x_.i < 0 || y_.i < 0) throw Error(ErrorKind::MeshTooCoarse, "no boundary site for a mark", "marks");
  if (x_ == y_) throw Error(ErrorKind::MarksCoincide, "marked points map to the same site", "marks");
  if (spec_.mode == Mode::NonCrossing &&
      std::max(std::abs(x_.i - y_.i), std::abs(x_.j - y_.j)) <= 2 * kProtectiveRadius)
    throw Error(ErrorKind::MarksCoincide, "marked points closer than their protective neighbourhoods", "marks");
}

Point LatticeDomain::point(Site s) const {
  return {(s.i - center_) * spec_.mesh, (s.j - center_) * spec_.mesh};
}

Point LatticeDomain::point(const LatticePath& path, std::size_t k) const {
  const Site v = path.vertices[k];
  const double sc = path.scale;
  return {(v.i / sc - center_) * spec_.mesh, (v.j / sc - center_) * spec_.mesh};
}

Site LatticeDomain::nearest_site(Point p) const {
  int i = static_cast<int>(std::lround(p.x / spec_.mesh)) + center_;
  int j = static_cast<int>(std::lround(p.y / spec_.mesh)) + center_;
  return {std::clamp(i, 0, n_ - 1), std::clamp(j, 0, n_ - 1)};
}

void LatticeDomain::rebuild_indices() {
  const std::size_t total = static_cast<std::size_t>(n_) * n_;
  index_.assign(total, -1);
  bindex_.assign(total, -1);
  interior_.clear();
  boundary_.clear();
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i < n_; ++i)
      if (region_[flat({i, j})] == Region::Interior) {
        index_[flat({i, j})] = static_cast<int>(interior_.size());
        interior_.push_back({i, j});
      }
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i < n_; ++i) {
      Site s{i, j};
      if (region_[flat(s)] == Region::Interior) continue;
      for (Site st : kSteps4)
        if (is_interior(s + st)) {
          bindex_[flat(s)] = static_cast<int>(boundary_.size());
          boundary_.push_back(s);
          break;
        }
    }
  for (auto& c : components_)
    std::erase_if(c.cycle, [&](Site s) { return boundary_index(s) < 0; });
}

bool LatticeDomain::interior_connected() const {
  if (interior_.empty()) return false;
  std::vector<char> seen(interior_.size(), 0);
  std::queue<Site> q;
  q.push(interior_[0]);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    Site s = q.front();
    q.pop();
    for (Site st : kSteps4) {
      int k = interior_index(s + st);
      if (k >= 0 && !seen[k]) {
        seen[k] = 1;
        ++count;
        q.push(s + st);
      }
    }
  }
  return count == interior_.size();
}

int LatticeDomain::count_complement_components() const {
  std::vector<char> seen(region_.size(), 0);
  int comps = 0;
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i < n_; ++i) {
      Site s{i, j};
      if (region(s) == Region::Interior || seen[flat(s)]) continue;
      ++comps;
      std::queue<Site> q;
      q.push(s);
      seen[flat(s)] = 1;
      while (!q.empty()) {
        Site u = q.front();
        q.pop();
        for (Site st : kSteps8) {
          Site v = u + st;
          if (!in_grid(v) || region(v) == Region::Interior || seen[flat(v)]) continue;
          seen[flat(v)] = 1;
          q.push(v);
        }
      }
    }
  return comps;
}

int LatticeDomain::euler_characteristic() const {
  long v = 0, e = 0, f = 0;
  for (Site s : interior_) {
    ++v;
    if (is_interior(s + Site{1, 0})) ++e;
    if (is_interior(s + Site{0, 1})) ++e;
    if (is_interior(s + Site{1, 0}) && is_interior(s + Site{0, 1}) && is_interior(s + Site{1, 1})) ++f;
  }
  return static_cast<int>(v - e + f);
}

Arc LatticeDomain::arc(Site s) const {
  if (s == x_) return Arc::MarkX;
  if (s == y_) return Arc::MarkY;
  if (spec_.mode == Mode::Crossing || region(s) != Region::Outer) return Arc::None;
  Point p = point(s);
  double a = wrap_2pi(std::atan2(p.y, p.x) - spec_.angle_y);
  double span = wrap_2pi(spec_.angle_x - spec_.angle_y);
  return (a > 0.0 && a < span) ? Arc::Left : Arc::Right;
}

std::vector<Site> LatticeDomain::arc_sites(Arc which) const {
  std::vector<Site> out;
  for (Site s : boundary_)
    if (region(s) == Region::Outer && arc(s) == which) out.push_back(s);
  return out;
}

std::vector<Site> LatticeDomain::hole_boundary(int j) const {
  std::vector<Site> out;
  for (Site s : boundary_)
    if (region(s) == Region::Hole && hole_of(s) == j) out.push_back(s);
  return out;
}

double LatticeDomain::seam_angle(Site s) const { return seam_angle(point(s)); }

double LatticeDomain::seam_angle(Point p) const {
  Point c = spec_.holes.empty() ? Point{} : spec_.holes[0].center;
  const double R = spec_.outer_radius;
  // Rotated by 1e-9 so that no site lies on the seam itself; sites on the ray
  // through x (x included) open sheet 0, where the mark values are averages.
  double base = std::atan2(R * std::sin(spec_.angle_x) - c.y, R * std::cos(spec_.angle_x) - c.x) - 1e-9;
  return wrap_2pi(std::atan2(p.y - c.y, p.x - c.x) - base);
}

std::vector<Site> LatticeDomain::carved_sites() const {
  std::vector<Site> out;
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i < n_; ++i)
      if (region({i, j}) == Region::Carved) out.push_back({i, j});
  return out;
}

LatticeDomain LatticeDomain::subtract(std::span<const Site> removed) const {
  LatticeDomain d = *this;
  for (Site s : removed) {
    if (!is_interior(s))
      throw Error(ErrorKind::InvalidArgument, "removed site is not interior");
    d.region_[flat(s)] = Region::Carved;
  }
  d.parent_ = std::make_shared<const LatticeDomain>(*this);
  d.rebuild_indices();
  return d;
}

LatticeDomain LatticeDomain::carve(std::span<const Site> removed) const {
  for (Site s : removed) {
    for (Site m : {x_, y_})
      if (std::max(std::abs(s.i - m.i), std::abs(s.j - m.j)) <= kProtectiveRadius)
        throw Error(ErrorKind::TouchesMarks, "carved site inside the protective neighbourhood of a mark");
  }
  LatticeDomain d = subtract(removed);
  if (!d.interior_connected())
    throw Error(ErrorKind::DisconnectsDomain, "carving disconnects the interior");
  return d;
}

std::string LatticeDomain::mask_text() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(n_ + 1) * n_);
  for (int j = n_ - 1; j >= 0; --j) {
    for (int i = 0; i < n_; ++i) {
      Site s{i, j};
      char c = '.';
      if (s == x_) c = 'X';
      else if (s == y_) c = 'Y';
      else switch (region(s)) {
          case Region::Interior: c = '.'; break;
          case Region::Outer: c = '#'; break;
          case Region::Hole: c = 'o'; break;
          case Region::Carved: c = 'x'; break;
        }
      out.push_back(c);
    }
    out.push_back('\n');
  }
  return out;
}

TopologySignature classify_topology(const LatticeDomain& domain, const LatticePath& path) {
  if (path.vertices.size() < 2) throw Error(ErrorKind::NotACrosscut, "path has fewer than two vertices");
  const DomainSpec& spec = domain.spec();
  const double h = spec.mesh;
  const double R = spec.outer_radius;
  std::vector<Point> pts;
  pts.reserve(path.vertices.size() + 700);
  for (std::size_t k = 0; k < path.vertices.size(); ++k) pts.push_back(domain.point(path, k));
  const double tol = 2.0 * std::numbers::sqrt2 * h + 1e-12;
  if (dist(pts.front(), domain.point(domain.marked_x())) > tol ||
      dist(pts.back(), domain.point(domain.marked_y())) > tol)
    throw Error(ErrorKind::NotACrosscut, "path does not run from x to y");

  TopologySignature sig;
  sig.mode = spec.mode;
  Point X{R * std::cos(spec.angle_x), R * std::sin(spec.angle_x)};
  if (spec.mode == Mode::NonCrossing) {
    // Close the curve along (yx), counterclockwise from y to x.
    double sweep = wrap_2pi(spec.angle_x - spec.angle_y);
    int steps = std::max(8, static_cast<int>(std::ceil(sweep / 0.01)));
    for (int k = 0; k <= steps; ++k) {
      double t = spec.angle_y + sweep * k / steps;
      pts.push_back({R * std::cos(t), R * std::sin(t)});
    }
    pts.push_back(pts.front());
    for (const Hole& hole : spec.holes) {
      long w = std::lround(swept_angle(pts, hole.center) / kTwoPi);
      if (w == 1) sig.signs.push_back(-1);
      else if (w == 0) sig.signs.push_back(+1);
      else throw Error(ErrorKind::NotACrosscut, "closed-up curve winds " + std::to_string(w) + " times around a hole");
    }
  } else {
    const Hole& h0 = spec.holes[0];
    Point Y{h0.center.x + h0.radius * std::cos(spec.angle_y), h0.center.y + h0.radius * std::sin(spec.angle_y)};
    std::vector<Point> full;
    full.reserve(pts.size() + 2);
    full.push_back(X);
    full.insert(full.end(), pts.begin(), pts.end());
    full.push_back(Y);
    double total = swept_angle(full, h0.center);
    double ax = std::atan2(X.y - h0.center.y, X.x - h0.center.x);
    double alpha = wrap_2pi(spec.angle_y - ax) / kTwoPi;
    sig.winding = static_cast<int>(std::lround(total / kTwoPi - alpha));
  }
  return sig;
}

LatticePath digital_segment(const LatticeDomain& domain, Point a, Point b) {
  LatticePath path;
  const double len = dist(a, b);
  const int steps = std::max(1, static_cast<int>(std::ceil(4.0 * len / domain.mesh())));
  for (int k = 0; k <= steps; ++k) {
    double t = static_cast<double>(k) / steps;
    Site s = domain.nearest_site({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    if (!path.vertices.empty()) {
      Site last = path.vertices.back();
      if (s == last) continue;
      if (s.i != last.i && s.j != last.j) path.vertices.push_back({s.i, last.j});
    }
    path.vertices.push_back(s);
  }
  return path;
}

LatticePath radial_crosscut(const LatticeDomain& domain, double angle, int hole) {
  const DomainSpec& spec = domain.spec();
  Point c = (hole >= 0 && hole < domain.n_holes()) ? spec.holes[hole].center : Point{};
  const double far = 2.0 * spec.outer_radius + 4.0 * spec.mesh;
  LatticePath seg = digital_segment(domain, c, {c.x + far * std::cos(angle), c.y + far * std::sin(angle)});
  LatticePath out;
  bool started = false;
  for (Site s : seg.vertices) {
    if (!domain.in_grid(s)) break;
    if (domain.is_interior(s)) {
      started = true;
      out.vertices.push_back(s);
    } else if (started) {
      break;
    }
  }
  if (out.vertices.empty()) throw Error(ErrorKind::NotACrosscut, "ray does not meet the interior");
  return out;
}

}  // namespace mcsle
