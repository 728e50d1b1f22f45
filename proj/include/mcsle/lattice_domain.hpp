#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mcsle {

struct Site {
  int i = 0;
  int j = 0;
  auto operator<=>(const Site&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline constexpr Site kSteps4[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
inline constexpr Site kSteps8[8] = {{1, 0}, {1, 1},   {0, 1},  {-1, 1},
                                    {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
inline Site operator+(Site a, Site b) { return {a.i + b.i, a.j + b.j}; }

enum class Mode { NonCrossing, Crossing };

enum class Region : std::int8_t { Interior, Outer, Hole, Carved };

// Side of the outer component relative to the marks: Left is the arc (yx)
// running counterclockwise from y to x, Right is (xy).
enum class Arc { Left, Right, MarkX, MarkY, None };

struct Hole {
  Point center;
  double radius = 0.0;
};

struct DomainSpec {
  double outer_radius = 1.0;
  std::vector<Hole> holes;
  double mesh = 1.0 / 32.0;
  double angle_x = 0.0;
  double angle_y = 3.14159265358979323846;
  Mode mode = Mode::NonCrossing;
};

struct BoundaryComponent {
  bool outer = true;
  int index = -1;  // hole index for Inner(j)
  Point center;
  std::vector<Site> cycle;  // boundary sites ordered by angle about center
};

// Vertices live on the grid (scale 1) or on the doubled grid (scale 2), where
// odd coordinates denote edge midpoints crossed by an interface.
struct LatticePath {
  std::vector<Site> vertices;
  bool closed = false;
  int scale = 1;
};

struct TopologySignature {
  Mode mode = Mode::NonCrossing;
  std::vector<int> signs;  // -1: component left of the curve, +1: right
  int winding = 0;
  bool operator==(const TopologySignature&) const = default;
};

class LatticeDomain {
 public:
  static constexpr int kProtectiveRadius = 3;

  static LatticeDomain build_circle(const DomainSpec& spec);

  // Removes interior sites; checks marks and connectivity. Keeps a parent link.
  LatticeDomain carve(std::span<const Site> removed) const;
  // Same removal without validation, for kernels on D minus crosscuts.
  LatticeDomain subtract(std::span<const Site> removed) const;

  const DomainSpec& spec() const { return spec_; }
  int size() const { return n_; }
  double mesh() const { return spec_.mesh; }
  Mode mode() const { return spec_.mode; }
  int n_holes() const { return static_cast<int>(spec_.holes.size()); }

  bool in_grid(Site s) const { return s.i >= 0 && s.j >= 0 && s.i < n_ && s.j < n_; }
  Point point(Site s) const;
  Point point(const LatticePath& path, std::size_t k) const;
  // Nearest grid site to a point (clamped to the grid).
  Site nearest_site(Point p) const;
  Region region(Site s) const { return region_[flat(s)]; }
  int hole_of(Site s) const { return hole_[flat(s)]; }
  bool is_interior(Site s) const { return in_grid(s) && index_[flat(s)] >= 0; }
  int interior_index(Site s) const { return in_grid(s) ? index_[flat(s)] : -1; }
  const std::vector<Site>& interior() const { return interior_; }
  int n_interior() const { return static_cast<int>(interior_.size()); }

  // Non-interior sites 4-adjacent to at least one interior site.
  const std::vector<Site>& boundary() const { return boundary_; }
  int boundary_index(Site s) const { return in_grid(s) ? bindex_[flat(s)] : -1; }
  const std::vector<BoundaryComponent>& components() const { return components_; }

  Site marked_x() const { return x_; }
  Site marked_y() const { return y_; }
  Arc arc(Site s) const;
  std::vector<Site> arc_sites(Arc which) const;
  // Boundary sites of hole j (in the root geometry labelling).
  std::vector<Site> hole_boundary(int j) const;
  // Angle of a site about the centre of hole 0, shifted so x sits at 0; [0, 2pi).
  double seam_angle(Site s) const;
  double seam_angle(Point p) const;

  const LatticeDomain* parent() const { return parent_.get(); }
  std::vector<Site> carved_sites() const;

  int count_complement_components() const;  // 8-connected non-interior pieces
  int euler_characteristic() const;         // V - E + F of the interior mask
  bool simply_connected() const { return count_complement_components() == 1; }
  bool interior_connected() const;

  std::string mask_text() const;

 private:
  LatticeDomain() = default;
  std::size_t flat(Site s) const { return static_cast<std::size_t>(s.j) * n_ + s.i; }
  void rebuild_indices();
  void validate_marks() const;

  DomainSpec spec_;
  int n_ = 0;
  int center_ = 0;
  std::vector<Region> region_;
  std::vector<int> hole_;
  std::vector<int> index_;
  std::vector<int> bindex_;
  std::vector<Site> interior_;
  std::vector<Site> boundary_;
  std::vector<BoundaryComponent> components_;
  Site x_, y_;
  std::shared_ptr<const LatticeDomain> parent_;
};

// Left/right side of each hole (non-crossing) or winding class (crossing).
TopologySignature classify_topology(const LatticeDomain& domain, const LatticePath& path);

// Site path along the segment a -> b, 4-connected, staying on the grid.
LatticePath digital_segment(const LatticeDomain& domain, Point a, Point b);

// Interior sites of a 4-connected radial crosscut at the given angle about the
// centre of hole `hole` (or the origin when hole < 0), from boundary to boundary.
LatticePath radial_crosscut(const LatticeDomain& domain, double angle, int hole = 0);

}  // namespace mcsle
