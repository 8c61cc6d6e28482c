#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "conslaw/grid.hpp"

namespace conslaw::cli {

enum ExitStatus : int { kSuccess = 0, kFailure = 1, kUsage = 2 };

struct RunArgs {
  std::string config;
  std::optional<std::string> ranks;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
};

struct UqArgs {
  std::string config;
  std::optional<int> workers;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
};

inline constexpr std::size_t kBenchWarmup = 5;

struct BenchArgs {
  std::string config;
  std::vector<int> ranks{1};
  std::string layout = "multix";
  /// Timed steps per rank count, after the warm-up.
  std::size_t steps = 20;
  std::optional<std::string> output;
};

struct RunReport {
  std::size_t steps = 0;
  double t = 0.0;
  /// Per conserved component, see conservation_drift().
  std::vector<double> drift;
  std::vector<std::filesystem::path> files;
};

/// |I(b) - I(a)| / max(|I(a)|, sum |a| vol) per component, I the total integral.
std::vector<double> conservation_drift(const Field& a, const Field& b);

/// Ranks per axis for `ranks` processes arranged as `layout` on a dim-D grid.
Index3 layout_ranks(const std::string& layout, int ranks, int dim);
const std::vector<std::string>& layout_names();

const std::vector<std::string>& preset_names();
/// Config text of a shipped experiment; `cells` overrides the resolution per axis.
std::string preset_config(const std::string& name, std::optional<int> cells = {});

/// Output directory: flag, then $CONSLAW_OUTPUT_DIR, then the config value.
std::filesystem::path output_directory(const std::optional<std::string>& flag,
                                       const std::string& configured);

RunReport cmd_run(const RunArgs& args, std::ostream& out);
std::vector<std::filesystem::path> cmd_uq(const UqArgs& args, std::ostream& out);
std::vector<std::filesystem::path> cmd_bench(const BenchArgs& args, std::ostream& out);

/// Parses the command line and dispatches; returns the process exit status.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conslaw::cli
