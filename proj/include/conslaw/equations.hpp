#pragma once

#include <array>
#include <string>
#include <vector>

#include "conslaw/error.hpp"
#include "conslaw/grid.hpp"

namespace conslaw {

inline constexpr int kMaxComponents = kMaxDim + 2;

/// Conserved state of one cell; only the first `ncomp` entries are used.
using State = std::array<double, kMaxComponents>;

/// Densities and pressures at or below this value count as unphysical.
inline constexpr double kPositivityFloor = 1e-12;

enum class EquationKind { Euler, Burgers, LinearAdvection };

struct EquationModel {
  EquationKind kind = EquationKind::Euler;
  int dim = 1;
  double gamma = 1.4;
  /// Advection velocity per axis (LinearAdvection only).
  Point3 speed{0.0, 0.0, 0.0};

  static EquationModel euler(int dim, double gamma = 1.4);
  static EquationModel burgers(int dim);
  static EquationModel advection(int dim, Point3 speed);

  /// Euler: dim + 2 (rho, momentum, E); scalar models: 1.
  int ncomp() const { return kind == EquationKind::Euler ? dim + 2 : 1; }
  void validate() const;
  /// Names of the conserved components, e.g. {"rho", "mx", "my", "E"}.
  std::vector<std::string> component_names() const;
  int energy_index() const { return dim + 1; }
};

/// Thrown by flux and wave-speed evaluation on an unphysical Euler state.
class UnphysicalState : public NumericalError {
 public:
  UnphysicalState(const State& u, int ncomp);
  const State& state() const { return state_; }

 private:
  State state_;
};

struct PrimitiveState {
  double rho = 1.0;
  Point3 v{0.0, 0.0, 0.0};
  double p = 1.0;
};

double pressure(const EquationModel& model, const State& u);
bool is_physical(const EquationModel& model, const State& u);

State physical_flux(const EquationModel& model, const State& u, int axis);
double max_wave_speed(const EquationModel& model, const State& u, int axis);

State primitive_to_conserved(const EquationModel& model, const PrimitiveState& w);
PrimitiveState conserved_to_primitive(const EquationModel& model, const State& u);

}  // namespace conslaw
