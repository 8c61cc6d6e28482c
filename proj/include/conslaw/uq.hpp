#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "conslaw/grid.hpp"
#include "conslaw/parallel.hpp"
#include "conslaw/solver.hpp"

namespace conslaw {

enum class SamplingMethod { MC, QMC };

struct SamplePlan {
  SamplingMethod method = SamplingMethod::MC;
  std::size_t M = 1;
  std::uint64_t seed = 0;
  int stochastic_dim = 0;

  void validate() const;
};

/// Radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, unsigned base);
/// First n primes.
std::vector<unsigned> first_primes(int n);

/// Uniform double in [0, 1) determined by (seed, sample, variable) alone.
double counter_uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t variable);

/// Random vector of draw `index`, without range checking against M. MC uses
/// the counter generator; QMC the Halton point index + 1.
std::vector<double> draw_point(SamplingMethod method, std::uint64_t seed, int stochastic_dim,
                               std::uint64_t index);
/// draw_point for sample k of the plan; throws ConfigError unless k < M.
std::vector<double> draw_sample(const SamplePlan& plan, std::size_t k);

/// Streaming per-value mean and sum of squared deviations.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  MomentAccumulator(const GridSpec& grid, int ncomp);

  void add(std::span<const double> values);
  void add(const Field& field);
  void merge(const MomentAccumulator& other);

  std::size_t count() const { return count_; }
  const std::vector<double>& mean_values() const { return mean_; }
  const std::vector<double>& m2_values() const { return m2_; }
  /// M2 / (n - 1); zero when fewer than two samples were seen.
  std::vector<double> variance_values() const;

  Field mean() const;
  Field variance() const;
  const GridSpec& grid() const { return grid_; }
  int ncomp() const { return ncomp_; }

 private:
  GridSpec grid_{};
  int ncomp_ = 0;
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// Point PDF estimates: one uniform-bin histogram per probe cell, plus an
/// underflow and an overflow bin.
class Histogram {
 public:
  Histogram() = default;
  Histogram(std::vector<Index3> probes, int component, double lo, double hi, int bins = 64);

  void add(const Field& field);
  void merge(const Histogram& other);

  const std::vector<Index3>& probes() const { return probes_; }
  int component() const { return component_; }
  int bins() const { return bins_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double bin_edge(int b) const;
  /// counts(p)[0] is underflow, [bins + 1] overflow.
  std::span<const std::uint64_t> counts(std::size_t probe) const;
  std::uint64_t total() const;

 private:
  std::vector<Index3> probes_;
  int component_ = 0;
  double lo_ = 0.0;
  double hi_ = 1.0;
  int bins_ = 64;
  std::vector<std::uint64_t> counts_;
};

/// Ensemble mean of S_p(h) = mean over cells and active axes of
/// |u(x + h e_k) - u(x)|^p, periodic in every axis, h = 0..max_offset cells.
class StructureFunctionAccumulator {
 public:
  StructureFunctionAccumulator() = default;
  StructureFunctionAccumulator(double p, int max_offset, int component);

  void add(const Field& field);
  void merge(const StructureFunctionAccumulator& other);

  double p() const { return p_; }
  int max_offset() const { return max_offset_; }
  int component() const { return component_; }
  std::size_t count() const { return count_; }
  std::vector<double> values() const;

 private:
  double p_ = 2.0;
  int max_offset_ = 0;
  int component_ = 0;
  std::size_t count_ = 0;
  std::vector<double> sums_;
};

/// Structure function of one field.
std::vector<double> structure_function(const Field& field, int component, double p, int max_offset);

enum class FunctionalKind { Moments, Histogram, StructureFunction };

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::Moments;
  std::string name = "moments";
  int component = 0;
  // histogram
  std::vector<Index3> probes;
  double lo = 0.0;
  double hi = 1.0;
  int bins = 64;
  // structure function
  double p = 2.0;
  int max_offset = 8;

  void validate(const GridSpec& grid, int ncomp) const;
};

using Accumulator = std::variant<MomentAccumulator, Histogram, StructureFunctionAccumulator>;

Accumulator make_accumulator(const FunctionalSpec& spec, const GridSpec& grid, int ncomp);
void accumulate(Accumulator& acc, const Field& field);
void merge(Accumulator& into, const Accumulator& other);

struct LoadAssignment {
  std::vector<std::vector<std::size_t>> per_worker;
  double makespan = 0.0;
};

/// Longest-processing-time greedy assignment followed by pairwise
/// move/swap improvement of the most loaded worker.
LoadAssignment load_balance(std::span<const double> costs, int workers);

/// Builds the initial field of one sample on `grid` from its random vector.
using InitialData = std::function<Field(const GridSpec& grid, std::span<const double> random)>;

struct UqOptions {
  int workers = 1;
  /// Extra statistics times before the final one (each < t_end).
  std::vector<double> times;
  std::optional<std::size_t> max_steps;
  /// Rank layout used for every sample; one rank runs the serial solver.
  Index3 ranks{1, 1, 1};
};

/// Accumulators for every functional at one statistics time.
struct TimeEstimate {
  double t = 0.0;
  std::vector<Accumulator> functionals;
};

struct UqResult {
  std::vector<TimeEstimate> times;  // requested times, then the final time
  std::size_t samples = 0;
};

UqResult run_mc(const SamplePlan& plan, const GridSpec& grid, const SchemeConfig& cfg,
                const InitialData& init, const std::vector<FunctionalSpec>& functionals,
                const UqOptions& options = {});

struct MlmcLevel {
  GridSpec grid;
  std::size_t M = 1;
};

struct MlmcPlan {
  SamplingMethod method = SamplingMethod::MC;
  std::uint64_t seed = 0;
  int stochastic_dim = 0;
  std::vector<MlmcLevel> levels;  // coarsest first

  void validate() const;
};

/// Telescoping estimate on the finest grid. levels[0] holds G(u^0); levels[l]
/// for l >= 1 holds G(u^l) - G(u^(l-1)), with coarse fields prolonged to the
/// finest grid by injection. second[l] is the mean of the squared-value
/// difference used for the variance.
struct MlmcEstimate {
  double t = 0.0;
  std::vector<MomentAccumulator> levels;
  std::vector<std::vector<double>> second;

  Field mean() const;
  /// Telescoped E[u^2] - E[u]^2, anchored on the level-0 sample variance and
  /// clipped at zero.
  Field variance() const;
  /// Largest |mean correction| over levels >= 1 (0 for one level).
  double max_correction() const;
};

struct MlmcResult {
  std::vector<MlmcEstimate> times;
};

/// Piecewise-constant prolongation of `coarse` onto `fine` (integer ratio
/// per axis, same domain).
Field prolong(const Field& coarse, const GridSpec& fine);

MlmcResult run_mlmc(const MlmcPlan& plan, const SchemeConfig& cfg, const InitialData& init,
                    const UqOptions& options = {});

}  // namespace conslaw
