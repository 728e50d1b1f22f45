#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "mcsle/lattice_domain.hpp"

namespace testing {

using namespace mcsle;

inline DomainSpec disk(double mesh, std::initializer_list<Hole> holes = {}, Mode mode = Mode::NonCrossing) {
  DomainSpec s;
  s.mesh = mesh;
  s.holes = holes;
  s.mode = mode;
  return s;
}

// Site path through the given points, joined by digital segments.
inline LatticePath polyline(const LatticeDomain& d, const std::vector<Point>& pts) {
  LatticePath out;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    LatticePath seg = digital_segment(d, pts[k], pts[k + 1]);
    for (Site s : seg.vertices)
      if (out.vertices.empty() || !(out.vertices.back() == s)) out.vertices.push_back(s);
  }
  return out;
}

// Even-odd rule for a closed polygon.
inline bool inside_polygon(const std::vector<Point>& poly, Point p) {
  bool in = false;
  for (std::size_t a = 0, b = poly.size() - 1; a < poly.size(); b = a++) {
    const Point u = poly[a], v = poly[b];
    if ((u.y > p.y) != (v.y > p.y) && p.x < (v.x - u.x) * (p.y - u.y) / (v.y - u.y) + u.x) in = !in;
  }
  return in;
}

// L = 4I - A on the interior, assembled directly from the mask.
inline Eigen::MatrixXd dense_laplacian(const LatticeDomain& d) {
  const int n = d.n_interior();
  Eigen::MatrixXd L = 4.0 * Eigen::MatrixXd::Identity(n, n);
  for (int a = 0; a < n; ++a)
    for (Site st : kSteps4) {
      int b = d.interior_index(d.interior()[a] + st);
      if (b >= 0) L(a, b) -= 1.0;
    }
  return L;
}

inline std::vector<int> neighbours_inside(const LatticeDomain& d, Site s) {
  std::vector<int> out;
  for (Site st : kSteps4)
    if (int b = d.interior_index(s + st); b >= 0) out.push_back(b);
  return out;
}

}  // namespace testing
