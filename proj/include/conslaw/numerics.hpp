#pragma once

#include <array>
#include <span>
#include <vector>

#include "conslaw/equations.hpp"
#include "conslaw/grid.hpp"

namespace conslaw {

enum class ReconstructionType {
  None,   ///< piecewise constant
  WENO2,  ///< second-order WENO: two linear substencils, central ideal weights
  WENO3,  ///< third-order WENO: two linear substencils, upwind-optimal weights
};

struct ReconstructionKind {
  ReconstructionType type = ReconstructionType::None;
  double epsilon = 1e-6;

  /// Cells needed on each side of a cell to evaluate its interface fluxes.
  int radius() const { return type == ReconstructionType::None ? 1 : 2; }
};

enum class FluxKind { Rusanov, HLLC };

/// Reconstructed states on the two sides of one interface.
struct FacePair {
  State uL{};
  State uR{};
};

/// Nonlinear weights of the two substencils {i-1, i} and {i, i+1} used for
/// the value of cell i at its right face (i + 1/2). The weights for the left
/// face follow by mirroring the cell values.
std::array<double, 2> weno_weights(std::span<const double, 3> cells,
                                   const ReconstructionKind& kind);

/// Value of the middle cell of `cells` = {u[i-1], u[i], u[i+1]} at face i + 1/2.
double weno_face_value(std::span<const double, 3> cells, const ReconstructionKind& kind);

/// Interface states along one line of cells.
///
/// `line` holds `ncells + 2 * ghosts` states (ghosts first). Produces
/// `ncells + 1` pairs for interfaces -1/2 .. ncells - 1/2 in `out`.
void reconstruct_line(std::span<const State> line, int ghosts, int ncomp,
                      const ReconstructionKind& kind, std::span<FacePair> out);

/// Interface pairs for every line along `axis` (transverse lines in interior
/// order, x fastest), `cells[axis] + 1` pairs per line. Ghosts must be filled.
std::vector<FacePair> reconstruct(const Field& field, int axis,
                                  const ReconstructionKind& kind);

State rusanov_flux(const EquationModel& model, const FacePair& pair, int axis);
State hllc_flux(const EquationModel& model, const FacePair& pair, int axis);
State numerical_flux(FluxKind kind, const EquationModel& model, const FacePair& pair,
                     int axis);

/// Throws ConfigError for incompatible flux/equation combinations.
void check_flux_compatible(FluxKind kind, const EquationModel& model);

}  // namespace conslaw
