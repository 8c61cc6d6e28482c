#include "support/scenarios.hpp"

#include <cmath>
#include <numbers>

#include "support/exact_riemann.hpp"

using namespace conslaw;

namespace scenarios {

Field sod_initial(int cells) {
  const auto model = EquationModel::euler(1, 1.4);
  Field f(GridSpec::uniform(1, {cells}, {0.0}, {1.0}, 2), 3, 0.0);
  for (int i = 0; i < cells; ++i) {
    const double x = cell_center(f.grid(), {i, 0, 0})[0];
    const PrimitiveState w = x < 0.5 ? PrimitiveState{1.0, {0, 0, 0}, 1.0}
                                     : PrimitiveState{0.125, {0, 0, 0}, 0.1};
    const State u = primitive_to_conserved(model, w);
    for (int c = 0; c < 3; ++c) f(c, i) = u[c];
  }
  return f;
}

SchemeConfig sod_scheme(double t_end) {
  SchemeConfig cfg;
  cfg.model = EquationModel::euler(1, 1.4);
  cfg.flux = FluxKind::HLLC;
  cfg.recon = {ReconstructionType::WENO2};
  cfg.rk_order = 2;
  cfg.cfl = kDefaultCfl;
  cfg.t_end = t_end;
  cfg.bc = {BoundaryKind::Outflow, BoundaryKind::Outflow, BoundaryKind::Outflow};
  return cfg;
}

double sod_l1_error(const Field& field, double t) {
  const oracle::ExactRiemann rp({1.0, 0.0, 1.0}, {0.125, 0.0, 0.1}, 1.4);
  const int n = field.grid().cells[0];
  const double dx = field.grid().cell_size(0);
  double err = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = i * dx;
    const double exact = oracle::exact_density_average(rp, 0.5, t, a, a + dx, 64);
    err += std::abs(field(0, i) - exact) * dx;
  }
  return err;
}

Field density_wave_initial(int cells) {
  const auto model = EquationModel::euler(1, 1.4);
  Field f(GridSpec::uniform(1, {cells}, {0.0}, {1.0}, 2), 3, 0.0);
  for (int i = 0; i < cells; ++i) {
    const double x = cell_center(f.grid(), {i, 0, 0})[0];
    const double rho = 1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * x);
    const State u = primitive_to_conserved(model, {rho, {1.0, 0, 0}, 1.0});
    for (int c = 0; c < 3; ++c) f(c, i) = u[c];
  }
  return f;
}

SchemeConfig density_wave_scheme(ReconstructionType recon, int rk_order, double t_end) {
  SchemeConfig cfg;
  cfg.model = EquationModel::euler(1, 1.4);
  cfg.flux = FluxKind::HLLC;
  cfg.recon = {recon};
  cfg.rk_order = rk_order;
  cfg.cfl = kDefaultCfl;
  cfg.t_end = t_end;
  cfg.bc = {BoundaryKind::Periodic, BoundaryKind::Periodic, BoundaryKind::Periodic};
  return cfg;
}

double density_wave_l1_error(const Field& field, double t) {
  const int n = field.grid().cells[0];
  const double dx = field.grid().cell_size(0);
  double err = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = cell_center(field.grid(), {i, 0, 0})[0];
    const double exact = 1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * (x - t));
    err += std::abs(field(0, i) - exact) * dx;
  }
  return err;
}

double observed_order(const std::vector<int>& cells, const std::vector<double>& errors) {
  const std::size_t n = cells.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double x = std::log(1.0 / cells[q]);
    const double y = std::log(errors[q]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace scenarios
