#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conslaw/expr.hpp"
#include "conslaw/solver.hpp"
#include "conslaw/uq.hpp"

namespace conslaw {

enum class InitForm { Primitive, Conserved };

/// One expression per input variable, in the order of
/// initial_variable_names().
struct InitSpec {
  InitForm form = InitForm::Primitive;
  std::vector<Expr> exprs;
  std::vector<std::string> texts;
};

/// Names accepted in [initial]: rho, vx.., p (primitive Euler), rho, mx.., E
/// (conserved Euler) or u (scalar equations).
std::vector<std::string> initial_variable_names(const EquationModel& model, InitForm form);

struct UqSection {
  bool present = false;
  SamplingMethod method = SamplingMethod::MC;
  std::size_t samples = 1;
  std::uint64_t seed = 0;
  int stochastic_dim = 0;
  int levels = 1;
  std::vector<std::size_t> level_samples;  // MLMC only, coarsest first
  int workers = 1;
  std::vector<FunctionalSpec> functionals;
};

struct OutputSection {
  std::string directory = "output";
  std::vector<double> times;
  bool snapshot = true;
  bool csv = false;
};

struct RunConfig {
  GridSpec grid;
  SchemeConfig scheme;
  std::optional<std::size_t> max_steps;
  InitSpec init;
  Index3 ranks{1, 1, 1};
  UqSection uq;
  OutputSection output;

  std::string canonical;  // canonical text the digest is computed from
  std::string digest;     // hex SHA-256 of `canonical`

  /// Grids of the MLMC levels, coarsest first (one entry for plain MC).
  std::vector<GridSpec> level_grids() const;
};

/// Parses and fully validates a configuration. Errors are ConfigError with
/// "line L, column C" and the offending key. `source` names the input in
/// diagnostics.
RunConfig parse_config(std::string_view text, const std::string& source = "config");
RunConfig load_config(const std::string& path);

/// Sorted "section.key=value" lines with comments removed and insignificant
/// whitespace dropped.
std::string canonicalize_config(std::string_view text);
std::string sha256_hex(std::string_view data);

/// Evaluates the initial data at every cell centre of `grid`.
/// Primitive Euler input is converted to conserved variables.
Field eval_init(const InitSpec& init, const EquationModel& model, const GridSpec& grid,
                std::span<const double> random);

/// eval_init bound to a parsed configuration, for the UQ drivers.
InitialData make_initial_data(const RunConfig& cfg);

/// Parses "2x2", "2,2" or "4" into ranks per axis for a `dim`-D grid.
Index3 parse_ranks(std::string_view text, int dim);

}  // namespace conslaw
