#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "conslaw/equations.hpp"
#include "conslaw/grid.hpp"
#include "conslaw/numerics.hpp"

namespace conslaw {

inline constexpr double kDefaultCfl = 0.475;

struct SchemeConfig {
  EquationModel model{};
  FluxKind flux = FluxKind::Rusanov;
  ReconstructionKind recon{};
  int rk_order = 3;
  double cfl = kDefaultCfl;
  double t_end = 1.0;
  BoundarySpec bc{BoundaryKind::Periodic, BoundaryKind::Periodic, BoundaryKind::Periodic};

  void validate() const;
  /// Also checks that the grid matches the model and has enough ghosts.
  void validate(const GridSpec& grid) const;
};

struct TimeSeriesRecord {
  std::size_t step = 0;
  double t = 0.0;
  double dt = 0.0;
  double seconds = 0.0;
};

/// Half-open box of interior cells [lo, hi) per axis.
struct CellBox {
  Index3 lo{0, 0, 0};
  Index3 hi{1, 1, 1};

  static CellBox interior(const GridSpec& grid) { return {{0, 0, 0}, grid.cells}; }
  bool empty() const {
    return hi[0] <= lo[0] || hi[1] <= lo[1] || hi[2] <= lo[2];
  }
};

/// Writes dU/dt into `out` for every cell of `box`; other cells of `out`
/// are not touched. Interface fluxes on the box faces are recomputed, so
/// covering the interior with disjoint boxes gives the same bits as one
/// call over the whole interior. Ghosts of `field` must be filled.
void spatial_residual_box(const Field& field, const SchemeConfig& cfg, const CellBox& box,
                          Field& out);

/// Semi-discrete operator -sum_k (F_{i+1/2} - F_{i-1/2}) / dx_k over the interior.
/// Ghost entries of the result are zero.
Field spatial_residual(const Field& field, const SchemeConfig& cfg);

/// Largest interior signal speed per axis (0 for inactive axes).
Point3 max_speeds(const Field& field, const EquationModel& model);

/// cfl / sum_k (speed_k / dx_k). Throws NumericalError when every speed is 0.
double cfl_dt(const Point3& speeds, const GridSpec& grid, double cfl);

/// CFL step for the current field, capped so that t + dt <= t_end.
double stable_dt(const Field& field, const SchemeConfig& cfg, double t = 0.0);

/// Computes dU/dt of `stage` into `rate`. The callee fills ghosts of `stage`.
using RateFunction = std::function<void(Field& stage, Field& rate)>;

/// Generic SSP Runge-Kutta update on a flat state vector. `rate` receives the
/// current stage and writes its time derivative.
using VectorRate = std::function<void(std::span<double> stage, std::span<double> rate)>;
void ssp_rk_update(std::span<double> u, double dt, int order, const VectorRate& rate);

/// One SSP-RK step of order 1, 2 or 3 driven by an arbitrary rate function.
void ssp_rk_step(Field& field, double dt, int order, const RateFunction& rate);

/// One step with boundary fill + spatial_residual as the rate.
Field ssp_rk_step(const Field& field, double dt, const SchemeConfig& cfg);

/// Throws NumericalError naming the first non-finite or unphysical interior cell.
void check_state(const Field& field, const EquationModel& model, std::size_t step);

struct SnapshotRequest {
  std::vector<double> times;
  /// Called once per requested time, at the first step with t >= time.
  std::function<void(const Field& field, double t, std::size_t index)> callback;
};

struct RunOptions {
  std::optional<std::size_t> max_steps;
  std::vector<SnapshotRequest> observers;
};

struct RunResult {
  Field field;
  double t = 0.0;
  std::vector<TimeSeriesRecord> records;
};

/// Fires every pending snapshot whose time is <= t. Shared by the serial and
/// decomposed drivers.
class SnapshotScheduler {
 public:
  explicit SnapshotScheduler(const std::vector<SnapshotRequest>& requests);
  /// Requests due at time t, marked as fired.
  std::vector<std::pair<std::size_t, std::size_t>> due(double t);
  bool any_pending() const;

 private:
  const std::vector<SnapshotRequest>* requests_;
  std::vector<std::size_t> next_;
};

/// Advances `init` from t = 0 to cfg.t_end (or max_steps).
RunResult run_simulation(const Field& init, const SchemeConfig& cfg,
                         const RunOptions& options = {});

}  // namespace conslaw
