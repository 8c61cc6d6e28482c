#include "conslaw/grid.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "conslaw/error.hpp"

namespace conslaw {

GridSpec GridSpec::uniform(int dim, Index3 cells, Point3 origin, Point3 extent,
                           int ghost_width) {
  GridSpec g;
  g.dim = dim;
  g.ghost_width = ghost_width;
  for (int a = 0; a < kMaxDim; ++a) {
    if (a < dim) {
      g.cells[a] = cells[a];
      g.origin[a] = origin[a];
      g.extent[a] = extent[a];
    } else {
      g.cells[a] = 1;
      g.origin[a] = 0.0;
      g.extent[a] = 1.0;
    }
    g.global_cells[a] = g.cells[a];
    g.offset[a] = 0;
  }
  return g;
}

void GridSpec::validate() const {
  if (dim < 1 || dim > kMaxDim)
    throw ConfigError("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
  if (ghost_width < 1)
    throw ConfigError("ghost_width must be at least 1");
  for (int a = 0; a < kMaxDim; ++a) {
    const std::string ax = "axis " + std::to_string(a);
    if (cells[a] < 1) throw ConfigError(ax + ": cell count must be >= 1");
    if (global_cells[a] < cells[a])
      throw ConfigError(ax + ": local cells exceed global cells");
    if (offset[a] < 0 || offset[a] + cells[a] > global_cells[a])
      throw ConfigError(ax + ": block offset out of range");
    if (!(extent[a] > 0.0) || !std::isfinite(extent[a]))
      throw ConfigError(ax + ": extent must be finite and > 0");
    if (!std::isfinite(origin[a])) throw ConfigError(ax + ": origin must be finite");
    if (!active(a) && (cells[a] != 1 || global_cells[a] != 1))
      throw ConfigError(ax + ": inactive axis must have a single cell");
    if (!(cell_size(a) > 0.0)) throw ConfigError(ax + ": cell size underflows");
  }
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= cell_size(a);
  return v;
}

std::size_t GridSpec::interior_count() const {
  std::size_t n = 1;
  for (int a = 0; a < kMaxDim; ++a) n *= static_cast<std::size_t>(cells[a]);
  return n;
}

std::size_t GridSpec::padded_count() const {
  std::size_t n = 1;
  for (int a = 0; a < kMaxDim; ++a) n *= static_cast<std::size_t>(padded(a));
  return n;
}

Point3 cell_center(const GridSpec& grid, const Index3& i) {
  Point3 x{0.0, 0.0, 0.0};
  for (int a = 0; a < grid.dim; ++a) {
    if (i[a] < 0 || i[a] >= grid.cells[a])
      throw ConfigError("cell index " + std::to_string(i[a]) +
                        " out of range on axis " + std::to_string(a));
    const double pos = static_cast<double>(grid.offset[a] + i[a]) + 0.5;
    x[a] = grid.origin[a] + pos * grid.cell_size(a);
  }
  return x;
}

Field::Field(const GridSpec& grid, int ncomp, double fill, std::size_t size_cap)
    : grid_(grid), ncomp_(ncomp) {
  grid_.validate();
  if (ncomp < 1) throw ConfigError("ncomp must be >= 1");
  const std::size_t cells = grid_.padded_count();
  if (cells > size_cap / static_cast<std::size_t>(ncomp))
    throw ConfigError("field size " + std::to_string(cells) + " x " +
                      std::to_string(ncomp) + " exceeds the cap of " +
                      std::to_string(size_cap));
  strides_[0] = 1;
  strides_[1] = static_cast<std::size_t>(grid_.padded(0));
  strides_[2] = strides_[1] * static_cast<std::size_t>(grid_.padded(1));
  component_stride_ = cells;
  data_.assign(cells * static_cast<std::size_t>(ncomp), fill);
}

Field make_field(const GridSpec& grid, int ncomp, double fill, std::size_t size_cap) {
  return Field(grid, ncomp, fill, size_cap);
}

std::vector<double> Field::interior_values() const {
  std::vector<double> out;
  out.reserve(grid_.interior_count() * static_cast<std::size_t>(ncomp_));
  for (int c = 0; c < ncomp_; ++c)
    for_each_interior(grid_, [&](const Index3& i) { out.push_back(at(c, i)); });
  return out;
}

void Field::set_interior_values(std::span<const double> values) {
  const std::size_t expected = grid_.interior_count() * static_cast<std::size_t>(ncomp_);
  if (values.size() != expected)
    throw ConfigError("expected " + std::to_string(expected) + " interior values, got " +
                      std::to_string(values.size()));
  std::size_t n = 0;
  for (int c = 0; c < ncomp_; ++c)
    for_each_interior(grid_, [&](const Index3& i) { at(c, i) = values[n++]; });
}

bool Field::interior_equal(const Field& other) const {
  if (!same_shape(other)) return false;
  bool equal = true;
  for (int c = 0; c < ncomp_ && equal; ++c)
    for_each_interior(grid_, [&](const Index3& i) {
      // bitwise: distinguishes -0.0 from 0.0 and compares NaN payloads
      const double a = at(c, i);
      const double b = other.at(c, i);
      if (std::memcmp(&a, &b, sizeof(double)) != 0) equal = false;
    });
  return equal;
}

void fill_boundary_axis(Field& field, int axis, BoundaryKind kind) {
  const GridSpec& g = field.grid();
  if (!g.active(axis)) return;
  const int gw = g.ghost_width;
  const int n = g.cells[axis];
  if (kind == BoundaryKind::Periodic && n < gw)
    throw ConfigError("periodic axis " + std::to_string(axis) +
                      " needs at least ghost_width cells");

  // Transverse axes span their full padded range.
  Index3 lo{}, hi{};
  for (int a = 0; a < kMaxDim; ++a) {
    lo[a] = -g.ghosts(a);
    hi[a] = g.cells[a] + g.ghosts(a);
  }
  lo[axis] = 0;
  hi[axis] = 1;

  auto source = [&](int ghost) {
    if (kind == BoundaryKind::Periodic) return ghost < 0 ? ghost + n : ghost - n;
    return ghost < 0 ? 0 : n - 1;
  };

  for (int c = 0; c < field.ncomp(); ++c)
    for (int k = lo[2]; k < hi[2]; ++k)
      for (int j = lo[1]; j < hi[1]; ++j)
        for (int i = lo[0]; i < hi[0]; ++i) {
          Index3 dst{i, j, k};
          for (int s = 1; s <= gw; ++s) {
            for (const int ghost : {-s, n - 1 + s}) {
              dst[axis] = ghost;
              Index3 src = dst;
              src[axis] = source(ghost);
              field.at(c, dst) = field.at(c, src);
            }
          }
        }
}

void fill_boundary(Field& field, const BoundarySpec& bc) {
  for (int a = 0; a < field.grid().dim; ++a) fill_boundary_axis(field, a, bc[a]);
}

std::vector<double> total_integral(const Field& field) {
  const double volume = field.grid().cell_volume();
  std::vector<double> out(static_cast<std::size_t>(field.ncomp()), 0.0);
  for (int c = 0; c < field.ncomp(); ++c) {
    // Neumaier summation
    double sum = 0.0;
    double carry = 0.0;
    for_each_interior(field.grid(), [&](const Index3& i) {
      const double v = field.at(c, i);
      const double t = sum + v;
      if (std::abs(sum) >= std::abs(v))
        carry += (sum - t) + v;
      else
        carry += (v - t) + sum;
      sum = t;
    });
    out[static_cast<std::size_t>(c)] = (sum + carry) * volume;
  }
  return out;
}

bool all_finite(const Field& field) {
  bool ok = true;
  for (int c = 0; c < field.ncomp() && ok; ++c)
    for_each_interior(field.grid(), [&](const Index3& i) {
      if (!std::isfinite(field.at(c, i))) ok = false;
    });
  return ok;
}

}  // namespace conslaw
