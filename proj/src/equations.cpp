#include "conslaw/equations.hpp"

#include <cmath>
#include <sstream>

namespace conslaw {

namespace {

std::string describe(const State& u, int ncomp) {
  std::ostringstream os;
  os.precision(17);
  os << "unphysical state (";
  for (int c = 0; c < ncomp; ++c) os << (c ? ", " : "") << u[static_cast<std::size_t>(c)];
  os << ")";
  return os.str();
}

double kinetic_energy(int dim, const State& u) {
  double m2 = 0.0;
  for (int a = 0; a < dim; ++a) m2 += u[1 + a] * u[1 + a];
  return 0.5 * m2 / u[0];
}

void require_physical(const EquationModel& model, const State& u) {
  if (!is_physical(model, u)) throw UnphysicalState(u, model.ncomp());
}

}  // namespace

UnphysicalState::UnphysicalState(const State& u, int ncomp)
    : NumericalError(describe(u, ncomp)), state_(u) {}

EquationModel EquationModel::euler(int dim, double gamma) {
  EquationModel m;
  m.kind = EquationKind::Euler;
  m.dim = dim;
  m.gamma = gamma;
  return m;
}

EquationModel EquationModel::burgers(int dim) {
  EquationModel m;
  m.kind = EquationKind::Burgers;
  m.dim = dim;
  return m;
}

EquationModel EquationModel::advection(int dim, Point3 speed) {
  EquationModel m;
  m.kind = EquationKind::LinearAdvection;
  m.dim = dim;
  m.speed = speed;
  return m;
}

void EquationModel::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("equation dimension must be 1, 2 or 3");
  if (kind == EquationKind::Euler && !(gamma > 1.0 && std::isfinite(gamma)))
    throw ConfigError("gamma must be > 1");
  if (kind == EquationKind::LinearAdvection)
    for (int a = 0; a < dim; ++a)
      if (!std::isfinite(speed[a])) throw ConfigError("advection speed must be finite");
}

std::vector<std::string> EquationModel::component_names() const {
  if (kind != EquationKind::Euler) return {"u"};
  std::vector<std::string> names{"rho"};
  const char* axes[] = {"mx", "my", "mz"};
  for (int a = 0; a < dim; ++a) names.emplace_back(axes[a]);
  names.emplace_back("E");
  return names;
}

double pressure(const EquationModel& model, const State& u) {
  return (model.gamma - 1.0) * (u[model.energy_index()] - kinetic_energy(model.dim, u));
}

bool is_physical(const EquationModel& model, const State& u) {
  if (model.kind != EquationKind::Euler) return std::isfinite(u[0]);
  if (!(u[0] > kPositivityFloor)) return false;
  const double p = pressure(model, u);
  return p > kPositivityFloor && std::isfinite(p);
}

State physical_flux(const EquationModel& model, const State& u, int axis) {
  State f{};
  switch (model.kind) {
    case EquationKind::Burgers:
      f[0] = 0.5 * u[0] * u[0];
      break;
    case EquationKind::LinearAdvection:
      f[0] = model.speed[axis] * u[0];
      break;
    case EquationKind::Euler: {
      require_physical(model, u);
      const int e = model.energy_index();
      const double p = pressure(model, u);
      const double vk = u[1 + axis] / u[0];
      f[0] = u[1 + axis];
      for (int a = 0; a < model.dim; ++a) f[1 + a] = u[1 + a] * vk;
      f[1 + axis] += p;
      f[e] = (u[e] + p) * vk;
      break;
    }
  }
  return f;
}

double max_wave_speed(const EquationModel& model, const State& u, int axis) {
  switch (model.kind) {
    case EquationKind::Burgers:
      return std::abs(u[0]);
    case EquationKind::LinearAdvection:
      return std::abs(model.speed[axis]);
    case EquationKind::Euler: {
      require_physical(model, u);
      const double c = std::sqrt(model.gamma * pressure(model, u) / u[0]);
      return std::abs(u[1 + axis] / u[0]) + c;
    }
  }
  return 0.0;
}

State primitive_to_conserved(const EquationModel& model, const PrimitiveState& w) {
  if (!(w.rho > kPositivityFloor) || !(w.p > kPositivityFloor))
    throw NumericalError("primitive state needs rho > 0 and p > 0");
  State u{};
  u[0] = w.rho;
  double v2 = 0.0;
  for (int a = 0; a < model.dim; ++a) {
    u[1 + a] = w.rho * w.v[a];
    v2 += w.v[a] * w.v[a];
  }
  u[model.energy_index()] = w.p / (model.gamma - 1.0) + 0.5 * w.rho * v2;
  return u;
}

PrimitiveState conserved_to_primitive(const EquationModel& model, const State& u) {
  require_physical(model, u);
  PrimitiveState w;
  w.rho = u[0];
  for (int a = 0; a < model.dim; ++a) w.v[a] = u[1 + a] / u[0];
  w.p = pressure(model, u);
  return w;
}

}  // namespace conslaw
