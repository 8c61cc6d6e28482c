#include "conslaw/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace conslaw {

namespace {

std::array<double, 2> ideal_weights(ReconstructionType type) {
  // Substencil {i-1, i} first. The third-order pair reproduces the
  // quadratic interpolant through u[i-1], u[i], u[i+1] at the face.
  if (type == ReconstructionType::WENO3) return {1.0 / 3.0, 2.0 / 3.0};
  return {0.5, 0.5};
}

}  // namespace

std::array<double, 2> weno_weights(std::span<const double, 3> cells,
                                   const ReconstructionKind& kind) {
  const std::array<double, 2> d = ideal_weights(kind.type);
  const double left = cells[1] - cells[0];
  const double right = cells[2] - cells[1];
  const double beta0 = left * left;
  const double beta1 = right * right;
  if (beta0 == beta1) return d;

  const double a0 = d[0] / ((kind.epsilon + beta0) * (kind.epsilon + beta0));
  const double a1 = d[1] / ((kind.epsilon + beta1) * (kind.epsilon + beta1));
  const double sum = a0 + a1;
  return {a0 / sum, a1 / sum};
}

double weno_face_value(std::span<const double, 3> cells, const ReconstructionKind& kind) {
  const auto w = weno_weights(cells, kind);
  const double left = cells[1] - cells[0];
  const double right = cells[2] - cells[1];
  return cells[1] + (w[0] * (0.5 * left) + w[1] * (0.5 * right));
}

void reconstruct_line(std::span<const State> line, int ghosts, int ncomp,
                      const ReconstructionKind& kind, std::span<FacePair> out) {
  const int n = static_cast<int>(line.size()) - 2 * ghosts;
  if (ghosts < kind.radius())
    throw ConfigError("reconstruction stencil radius " + std::to_string(kind.radius()) +
                      " exceeds ghost width " + std::to_string(ghosts));
  auto cell = [&](int i) -> const State& { return line[static_cast<std::size_t>(i + ghosts)]; };

  for (int q = 0; q <= n; ++q) {
    FacePair& pair = out[static_cast<std::size_t>(q)];
    const State& lo = cell(q - 1);
    const State& hi = cell(q);
    if (kind.type == ReconstructionType::None) {
      pair.uL = lo;
      pair.uR = hi;
      continue;
    }
    const State& lolo = cell(q - 2);
    const State& hihi = cell(q + 1);
    for (int c = 0; c < ncomp; ++c) {
      const auto cc = static_cast<std::size_t>(c);
      const std::array<double, 3> left_cell{lolo[cc], lo[cc], hi[cc]};
      const std::array<double, 3> right_cell{hihi[cc], hi[cc], lo[cc]};
      pair.uL[cc] = weno_face_value(left_cell, kind);
      pair.uR[cc] = weno_face_value(right_cell, kind);
    }
  }
}

std::vector<FacePair> reconstruct(const Field& field, int axis,
                                  const ReconstructionKind& kind) {
  const GridSpec& g = field.grid();
  if (!g.active(axis)) throw ConfigError("reconstruction axis is inactive");
  const int gw = g.ghost_width;
  const int n = g.cells[axis];
  const int ncomp = field.ncomp();

  std::vector<State> line(static_cast<std::size_t>(n + 2 * gw));
  std::vector<FacePair> out;
  Index3 extent = g.cells;
  extent[axis] = 1;
  for (int k = 0; k < extent[2]; ++k)
    for (int j = 0; j < extent[1]; ++j)
      for (int i = 0; i < extent[0]; ++i) {
        Index3 idx{i, j, k};
        for (int s = -gw; s < n + gw; ++s) {
          idx[axis] = s;
          State& st = line[static_cast<std::size_t>(s + gw)];
          for (int c = 0; c < ncomp; ++c) st[static_cast<std::size_t>(c)] = field.at(c, idx);
        }
        const std::size_t base = out.size();
        out.resize(base + static_cast<std::size_t>(n + 1));
        reconstruct_line(line, gw, ncomp, kind,
                         std::span<FacePair>(out).subspan(base, static_cast<std::size_t>(n + 1)));
      }
  return out;
}

State rusanov_flux(const EquationModel& model, const FacePair& pair, int axis) {
  const State fl = physical_flux(model, pair.uL, axis);
  const State fr = physical_flux(model, pair.uR, axis);
  const double s = std::max(max_wave_speed(model, pair.uL, axis),
                            max_wave_speed(model, pair.uR, axis));
  State f{};
  for (int c = 0; c < model.ncomp(); ++c) {
    const auto cc = static_cast<std::size_t>(c);
    f[cc] = 0.5 * (fl[cc] + fr[cc]) - 0.5 * s * (pair.uR[cc] - pair.uL[cc]);
  }
  return f;
}

State hllc_flux(const EquationModel& model, const FacePair& pair, int axis) {
  if (model.kind != EquationKind::Euler)
    throw ConfigError("HLLC flux requires the Euler equations");
  const State& uL = pair.uL;
  const State& uR = pair.uR;
  if (uL == uR) return physical_flux(model, uL, axis);

  const int ncomp = model.ncomp();
  const int e = model.energy_index();
  const State fL = physical_flux(model, uL, axis);
  const State fR = physical_flux(model, uR, axis);
  const double rhoL = uL[0];
  const double rhoR = uR[0];
  const double vL = uL[1 + axis] / rhoL;
  const double vR = uR[1 + axis] / rhoR;
  const double pL = pressure(model, uL);
  const double pR = pressure(model, uR);
  const double cL = std::sqrt(model.gamma * pL / rhoL);
  const double cR = std::sqrt(model.gamma * pR / rhoR);

  // Davis estimates
  const double sL = std::min(vL - cL, vR - cR);
  const double sR = std::max(vL + cL, vR + cR);
  if (sL == 0.0 && sR == 0.0) throw NumericalError("HLLC: degenerate wave speeds");

  if (sL >= 0.0) return fL;
  if (sR <= 0.0) return fR;

  const double mL = rhoL * (sL - vL);
  const double mR = rhoR * (sR - vR);
  const double sStar = (pR - pL + vL * mL - vR * mR) / (mL - mR);

  auto star_flux = [&](const State& u, const State& f, double rho, double v, double p,
                       double s) {
    const double scale = rho * (s - v) / (s - sStar);
    State ustar{};
    ustar[0] = scale;
    for (int a = 0; a < model.dim; ++a) ustar[1 + a] = scale * (u[1 + a] / rho);
    ustar[1 + axis] = scale * sStar;
    ustar[e] = scale * (u[e] / rho + (sStar - v) * (sStar + p / (rho * (s - v))));
    State out{};
    for (int c = 0; c < ncomp; ++c) {
      const auto cc = static_cast<std::size_t>(c);
      out[cc] = f[cc] + s * (ustar[cc] - u[cc]);
    }
    return out;
  };

  if (sStar >= 0.0) return star_flux(uL, fL, rhoL, vL, pL, sL);
  return star_flux(uR, fR, rhoR, vR, pR, sR);
}

State numerical_flux(FluxKind kind, const EquationModel& model, const FacePair& pair,
                     int axis) {
  return kind == FluxKind::HLLC ? hllc_flux(model, pair, axis)
                                : rusanov_flux(model, pair, axis);
}

void check_flux_compatible(FluxKind kind, const EquationModel& model) {
  if (kind == FluxKind::HLLC && model.kind != EquationKind::Euler)
    throw ConfigError("flux incompatible with equation: HLLC requires euler");
}

}  // namespace conslaw
