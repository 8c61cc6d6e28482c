#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace conslaw {

inline constexpr int kMaxDim = 3;
using Index3 = std::array<int, kMaxDim>;
using Point3 = std::array<double, kMaxDim>;

/// Default cap on ncomp * prod(cells + 2 * ghost).
inline constexpr std::size_t kDefaultFieldSizeCap = std::size_t{1} << 28;

/// Cartesian structured grid over a box domain.
///
/// A grid may describe a sub-block of a larger (global) grid: `cells` is
/// the local interior size, `offset` the index of the first local cell in
/// the global index space. Cell sizes and centres are always derived from
/// the global description, so a sub-block reproduces the global geometry
/// bit for bit. Axes at or beyond `dim` are inactive: one cell, no ghosts.
struct GridSpec {
  int dim = 1;
  Index3 cells{1, 1, 1};
  Point3 origin{0.0, 0.0, 0.0};
  Point3 extent{1.0, 1.0, 1.0};
  Index3 global_cells{1, 1, 1};
  Index3 offset{0, 0, 0};
  int ghost_width = 2;

  /// An undecomposed grid. Unused trailing entries of the arrays are ignored.
  static GridSpec uniform(int dim, Index3 cells, Point3 origin, Point3 extent,
                          int ghost_width);

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  bool active(int axis) const { return axis < dim; }
  double cell_size(int axis) const {
    return extent[axis] / static_cast<double>(global_cells[axis]);
  }
  double cell_volume() const;
  /// Ghost layers on `axis` (0 for inactive axes).
  int ghosts(int axis) const { return active(axis) ? ghost_width : 0; }
  /// Interior plus ghost cells on `axis`.
  int padded(int axis) const { return cells[axis] + 2 * ghosts(axis); }
  std::size_t interior_count() const;
  std::size_t padded_count() const;

  bool operator==(const GridSpec&) const = default;
};

/// Interior cell centre: origin + (offset + i + 1/2) * dx per active axis.
Point3 cell_center(const GridSpec& grid, const Index3& i);

enum class BoundaryKind { Periodic, Outflow };
using BoundarySpec = std::array<BoundaryKind, kMaxDim>;

/// Cell-averaged state with ghost layers.
///
/// Storage is component-major; within a component cells are ordered
/// x fastest, then y, then z, over the ghost-padded box. Index arguments of
/// the accessors are interior-relative: 0 is the first interior cell and
/// ghosts have indices in [-ghost_width, 0) and [cells, cells + ghost_width).
class Field {
 public:
  Field() = default;
  Field(const GridSpec& grid, int ncomp, double fill,
        std::size_t size_cap = kDefaultFieldSizeCap);

  const GridSpec& grid() const { return grid_; }
  int ncomp() const { return ncomp_; }

  std::size_t component_stride() const { return component_stride_; }
  std::array<std::size_t, kMaxDim> strides() const { return strides_; }

  std::size_t index(int comp, int i, int j = 0, int k = 0) const {
    return static_cast<std::size_t>(comp) * component_stride_ +
           static_cast<std::size_t>(i + grid_.ghosts(0)) * strides_[0] +
           static_cast<std::size_t>(j + grid_.ghosts(1)) * strides_[1] +
           static_cast<std::size_t>(k + grid_.ghosts(2)) * strides_[2];
  }

  double& operator()(int comp, int i, int j = 0, int k = 0) {
    return data_[index(comp, i, j, k)];
  }
  double operator()(int comp, int i, int j = 0, int k = 0) const {
    return data_[index(comp, i, j, k)];
  }
  double& at(int comp, const Index3& c) { return (*this)(comp, c[0], c[1], c[2]); }
  double at(int comp, const Index3& c) const { return (*this)(comp, c[0], c[1], c[2]); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// Interior values only, component-major, x fastest.
  std::vector<double> interior_values() const;
  /// Inverse of interior_values(); ghosts are left untouched.
  void set_interior_values(std::span<const double> values);

  bool same_shape(const Field& other) const {
    return grid_ == other.grid_ && ncomp_ == other.ncomp_;
  }
  /// Bitwise comparison of interior values (ghosts ignored).
  bool interior_equal(const Field& other) const;

 private:
  GridSpec grid_{};
  int ncomp_ = 0;
  std::size_t component_stride_ = 0;
  std::array<std::size_t, kMaxDim> strides_{0, 0, 0};
  std::vector<double> data_;
};

Field make_field(const GridSpec& grid, int ncomp, double fill,
                 std::size_t size_cap = kDefaultFieldSizeCap);

/// Calls fn(Index3) for every interior cell, x fastest.
template <class Fn>
void for_each_interior(const GridSpec& grid, Fn&& fn) {
  for (int k = 0; k < grid.cells[2]; ++k)
    for (int j = 0; j < grid.cells[1]; ++j)
      for (int i = 0; i < grid.cells[0]; ++i) fn(Index3{i, j, k});
}

/// Fills one axis worth of ghost layers. Transverse ranges cover the full
/// padded box, so running axes in order x, y, z fills edges and corners.
void fill_boundary_axis(Field& field, int axis, BoundaryKind kind);

/// Populates every ghost cell: periodic ghosts copy the wrapped interior,
/// outflow ghosts copy the nearest interior cell.
void fill_boundary(Field& field, const BoundarySpec& bc);

/// Sum over interior cells of u * cell volume, per component. Uses
/// compensated summation in interior order.
std::vector<double> total_integral(const Field& field);

/// True when every interior value is finite.
bool all_finite(const Field& field);

}  // namespace conslaw
