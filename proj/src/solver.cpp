#include "conslaw/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <string>

#include "conslaw/error.hpp"

namespace conslaw {

namespace {

std::string cell_string(const Index3& i, int dim) {
  std::ostringstream os;
  os << "(";
  for (int a = 0; a < dim; ++a) os << (a ? "," : "") << i[a];
  os << ")";
  return os.str();
}

State load_state(const Field& f, const Index3& idx) {
  State s{};
  for (int c = 0; c < f.ncomp(); ++c) s[static_cast<std::size_t>(c)] = f.at(c, idx);
  return s;
}

/// Stage combinations in increment form: u + a * ((stage - u) + dt * rate).
/// Algebraically the Shu-Osher convex combinations; a zero rate leaves u
/// unchanged bit for bit.
void ssp_rk_core(std::span<double> u, std::span<double> stage, std::span<double> rate,
                 double dt, int order, const std::function<void()>& eval_rate) {
  const std::size_t n = u.size();
  std::copy(u.begin(), u.end(), stage.begin());
  eval_rate();
  for (std::size_t q = 0; q < n; ++q) stage[q] = u[q] + dt * rate[q];
  if (order == 1) {
    std::copy(stage.begin(), stage.end(), u.begin());
    return;
  }
  const double first_weight = order == 2 ? 0.5 : 0.25;
  eval_rate();
  for (std::size_t q = 0; q < n; ++q)
    stage[q] = u[q] + first_weight * ((stage[q] - u[q]) + dt * rate[q]);
  if (order == 2) {
    std::copy(stage.begin(), stage.end(), u.begin());
    return;
  }
  eval_rate();
  for (std::size_t q = 0; q < n; ++q)
    u[q] = u[q] + (2.0 / 3.0) * ((stage[q] - u[q]) + dt * rate[q]);
}

void check_order(int order) {
  if (order < 1 || order > 3) throw ConfigError("rk_order must be 1, 2 or 3");
}

}  // namespace

void SchemeConfig::validate() const {
  model.validate();
  check_flux_compatible(flux, model);
  check_order(rk_order);
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("cfl must lie in (0, 1]");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be >= 0");
  if (!(recon.epsilon > 0.0)) throw ConfigError("WENO epsilon must be > 0");
}

void SchemeConfig::validate(const GridSpec& grid) const {
  validate();
  grid.validate();
  if (grid.dim != model.dim)
    throw ConfigError("grid dimension does not match the equation dimension");
  if (grid.ghost_width < recon.radius())
    throw ConfigError("ghost_width " + std::to_string(grid.ghost_width) +
                      " is smaller than the reconstruction radius " +
                      std::to_string(recon.radius()));
}

void spatial_residual_box(const Field& field, const SchemeConfig& cfg, const CellBox& box,
                          Field& out) {
  const GridSpec& g = field.grid();
  const int ncomp = field.ncomp();
  const int gw = g.ghost_width;
  const EquationModel& model = cfg.model;
  const bool euler = model.kind == EquationKind::Euler;
  if (box.empty()) return;

  for (int k = box.lo[2]; k < box.hi[2]; ++k)
    for (int j = box.lo[1]; j < box.hi[1]; ++j)
      for (int i = box.lo[0]; i < box.hi[0]; ++i)
        for (int c = 0; c < ncomp; ++c) out(c, i, j, k) = 0.0;

  std::vector<State> line;
  std::vector<FacePair> pairs;
  std::vector<State> flux;

  for (int axis = 0; axis < g.dim; ++axis) {
    const int lo = box.lo[axis];
    const int n = box.hi[axis] - lo;
    const double dx = g.cell_size(axis);
    line.resize(static_cast<std::size_t>(n + 2 * gw));
    pairs.resize(static_cast<std::size_t>(n + 1));
    flux.resize(static_cast<std::size_t>(n + 1));

    Index3 tlo = box.lo;
    Index3 thi = box.hi;
    thi[axis] = tlo[axis] + 1;
    for (int k = tlo[2]; k < thi[2]; ++k)
      for (int j = tlo[1]; j < thi[1]; ++j)
        for (int i = tlo[0]; i < thi[0]; ++i) {
          Index3 idx{i, j, k};
          for (int s = -gw; s < n + gw; ++s) {
            idx[axis] = lo + s;
            line[static_cast<std::size_t>(s + gw)] = load_state(field, idx);
          }
          reconstruct_line(line, gw, ncomp, cfg.recon, pairs);

          for (int q = 0; q <= n; ++q) {
            FacePair& pair = pairs[static_cast<std::size_t>(q)];
            if (euler && cfg.recon.type != ReconstructionType::None &&
                (!is_physical(model, pair.uL) || !is_physical(model, pair.uR))) {
              pair.uL = line[static_cast<std::size_t>(q - 1 + gw)];
              pair.uR = line[static_cast<std::size_t>(q + gw)];
            }
            try {
              flux[static_cast<std::size_t>(q)] = numerical_flux(cfg.flux, model, pair, axis);
            } catch (const UnphysicalState& e) {
              Index3 at = idx;
              at[axis] = lo + q - 1;
              throw NumericalError(std::string(e.what()) + " at interface right of cell " +
                                   cell_string(at, g.dim) + " on axis " +
                                   std::to_string(axis));
            }
          }

          for (int q = 0; q < n; ++q) {
            idx[axis] = lo + q;
            const State& fm = flux[static_cast<std::size_t>(q)];
            const State& fp = flux[static_cast<std::size_t>(q + 1)];
            for (int c = 0; c < ncomp; ++c) {
              const auto cc = static_cast<std::size_t>(c);
              out.at(c, idx) -= (fp[cc] - fm[cc]) / dx;
            }
          }
        }
  }
}

Field spatial_residual(const Field& field, const SchemeConfig& cfg) {
  Field out(field.grid(), field.ncomp(), 0.0);
  spatial_residual_box(field, cfg, CellBox::interior(field.grid()), out);
  return out;
}

Point3 max_speeds(const Field& field, const EquationModel& model) {
  Point3 speeds{0.0, 0.0, 0.0};
  const int dim = field.grid().dim;
  for_each_interior(field.grid(), [&](const Index3& i) {
    const State u = load_state(field, i);
    for (int a = 0; a < dim; ++a) {
      double s = 0.0;
      try {
        s = max_wave_speed(model, u, a);
      } catch (const UnphysicalState& e) {
        throw NumericalError(std::string(e.what()) + " in cell " + cell_string(i, dim));
      }
      speeds[a] = std::max(speeds[a], s);
    }
  });
  return speeds;
}

double cfl_dt(const Point3& speeds, const GridSpec& grid, double cfl) {
  double rate = 0.0;
  for (int a = 0; a < grid.dim; ++a) rate += speeds[a] / grid.cell_size(a);
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw NumericalError("static field: no finite CFL constraint (all wave speeds are zero)");
  return cfl / rate;
}

double stable_dt(const Field& field, const SchemeConfig& cfg, double t) {
  const double dt = cfl_dt(max_speeds(field, cfg.model), field.grid(), cfg.cfl);
  return std::min(dt, cfg.t_end - t);
}

void ssp_rk_update(std::span<double> u, double dt, int order, const VectorRate& rate) {
  check_order(order);
  std::vector<double> stage(u.size());
  std::vector<double> k(u.size());
  ssp_rk_core(u, stage, k, dt, order, [&] { rate(stage, k); });
}

void ssp_rk_step(Field& field, double dt, int order, const RateFunction& rate) {
  check_order(order);
  Field stage(field.grid(), field.ncomp(), 0.0);
  Field k(field.grid(), field.ncomp(), 0.0);
  ssp_rk_core(field.data(), stage.data(), k.data(), dt, order, [&] { rate(stage, k); });
}

Field ssp_rk_step(const Field& field, double dt, const SchemeConfig& cfg) {
  Field out = field;
  ssp_rk_step(out, dt, cfg.rk_order, [&](Field& stage, Field& rate) {
    fill_boundary(stage, cfg.bc);
    spatial_residual_box(stage, cfg, CellBox::interior(stage.grid()), rate);
  });
  return out;
}

void check_state(const Field& field, const EquationModel& model, std::size_t step) {
  const int dim = field.grid().dim;
  for_each_interior(field.grid(), [&](const Index3& i) {
    const State u = load_state(field, i);
    bool finite = true;
    for (int c = 0; c < field.ncomp(); ++c)
      finite = finite && std::isfinite(u[static_cast<std::size_t>(c)]);
    if (!finite)
      throw NumericalError("non-finite value at step " + std::to_string(step) + " in cell " +
                           cell_string(i, dim));
    if (!is_physical(model, u))
      throw NumericalError(UnphysicalState(u, field.ncomp()).what() + std::string(" at step ") +
                           std::to_string(step) + " in cell " + cell_string(i, dim));
  });
}

SnapshotScheduler::SnapshotScheduler(const std::vector<SnapshotRequest>& requests)
    : requests_(&requests), next_(requests.size(), 0) {
  for (const auto& r : requests)
    if (!std::is_sorted(r.times.begin(), r.times.end()))
      throw ConfigError("snapshot times must be sorted");
}

std::vector<std::pair<std::size_t, std::size_t>> SnapshotScheduler::due(double t) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r = 0; r < requests_->size(); ++r) {
    const auto& times = (*requests_)[r].times;
    while (next_[r] < times.size() && times[next_[r]] <= t) out.emplace_back(r, next_[r]++);
  }
  return out;
}

bool SnapshotScheduler::any_pending() const {
  for (std::size_t r = 0; r < requests_->size(); ++r)
    if (next_[r] < (*requests_)[r].times.size()) return true;
  return false;
}

RunResult run_simulation(const Field& init, const SchemeConfig& cfg, const RunOptions& options) {
  cfg.validate(init.grid());
  if (init.ncomp() != cfg.model.ncomp())
    throw ConfigError("field component count does not match the equation");
  check_state(init, cfg.model, 0);

  RunResult result{init, 0.0, {}};
  Field& u = result.field;
  SnapshotScheduler scheduler(options.observers);
  auto fire = [&](double t) {
    for (const auto& [r, idx] : scheduler.due(t))
      if (options.observers[r].callback) options.observers[r].callback(u, t, idx);
  };
  fire(0.0);

  const auto rate = [&](Field& stage, Field& k) {
    fill_boundary(stage, cfg.bc);
    spatial_residual_box(stage, cfg, CellBox::interior(stage.grid()), k);
  };

  double t = 0.0;
  std::size_t step = 0;
  while (t < cfg.t_end && (!options.max_steps || step < *options.max_steps)) {
    const auto start = std::chrono::steady_clock::now();
    fill_boundary(u, cfg.bc);
    const double dt = stable_dt(u, cfg, t);
    ssp_rk_step(u, dt, cfg.rk_order, rate);
    const auto stop = std::chrono::steady_clock::now();

    t = dt >= cfg.t_end - t ? cfg.t_end : t + dt;
    ++step;
    check_state(u, cfg.model, step);
    result.records.push_back(
        {step, t, dt, std::chrono::duration<double>(stop - start).count()});
    fire(t);
  }
  fill_boundary(u, cfg.bc);
  result.t = t;
  return result;
}

}  // namespace conslaw
