#include "conslaw/uq.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "conslaw/error.hpp"

namespace conslaw {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void check_dim(int stochastic_dim) {
  if (stochastic_dim < 0) throw ConfigError("stochastic_dim must be >= 0");
  if (stochastic_dim > 256) throw ConfigError("stochastic_dim above 256 is not supported");
}

// Rethrows `e` with `prefix` prepended, keeping the error category.
[[noreturn]] void rethrow_annotated(std::exception_ptr e, const std::string& prefix) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError& x) {
    throw ConfigError(prefix + x.what());
  } catch (const NumericalError& x) {
    throw NumericalError(prefix + x.what());
  } catch (const IoError& x) {
    throw IoError(prefix + x.what());
  } catch (const ProtocolError& x) {
    throw ProtocolError(prefix + x.what());
  } catch (const std::exception& x) {
    throw Error(prefix + x.what());
  }
}

// Final field of a sample plus snapshots at the requested times.
std::vector<Field> solve_sample(const Field& init, const SchemeConfig& cfg, const UqOptions& o) {
  std::vector<Field> out;
  std::vector<SnapshotRequest> observers;
  if (!o.times.empty())
    observers.push_back({o.times, [&](const Field& f, double, std::size_t) { out.push_back(f); }});
  RunResult r;
  if (o.ranks[0] * o.ranks[1] * o.ranks[2] == 1) {
    r = run_simulation(init, cfg, {o.max_steps, observers});
  } else {
    ParallelOptions po;
    po.max_steps = o.max_steps;
    po.observers = observers;
    r = run_decomposed(init, cfg, RankTopology::make(init.grid().dim, o.ranks, cfg.bc), po);
  }
  if (out.size() != o.times.size())
    throw ConfigError("statistics time " + std::to_string(o.times[out.size()]) +
                      " was not reached");
  out.push_back(std::move(r.field));
  return out;
}

void validate_options(const UqOptions& o, const SchemeConfig& cfg) {
  if (o.workers < 1) throw ConfigError("workers must be >= 1");
  for (std::size_t i = 0; i < o.times.size(); ++i) {
    if (!(o.times[i] >= 0.0 && o.times[i] < cfg.t_end))
      throw ConfigError("statistics times must lie in [0, t_end)");
    if (i > 0 && !(o.times[i] > o.times[i - 1]))
      throw ConfigError("statistics times must increase");
  }
}

// Runs work(i) for i in [0, n) on `workers` threads following a load
// balanced assignment; failures are rethrown for the lowest index.
template <class Work>
void run_assigned(std::span<const double> costs, int workers, const Work& work,
                  const std::function<std::string(std::size_t)>& describe) {
  const std::size_t n = costs.size();
  std::vector<std::exception_ptr> errors(n);
  const LoadAssignment plan = load_balance(costs, workers);
  auto run_list = [&](const std::vector<std::size_t>& list) {
    for (std::size_t i : list) {
      try {
        work(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run_list(plan.per_worker[0]);
  } else {
    std::vector<std::jthread> threads;
    for (const auto& list : plan.per_worker)
      if (!list.empty()) threads.emplace_back([&, list] { run_list(list); });
  }
  for (std::size_t i = 0; i < n; ++i)
    if (errors[i]) rethrow_annotated(errors[i], describe(i) + ": ");
}

std::size_t batch_size(int workers) { return 4 * static_cast<std::size_t>(workers); }

}  // namespace

void SamplePlan::validate() const {
  if (M < 1) throw ConfigError("sample count M must be >= 1");
  check_dim(stochastic_dim);
}

double radical_inverse(std::uint64_t index, unsigned base) {
  if (base < 2) throw ConfigError("radical inverse base must be >= 2");
  const double inv = 1.0 / base;
  double f = inv, r = 0.0;
  while (index > 0) {
    r += static_cast<double>(index % base) * f;
    index /= base;
    f *= inv;
  }
  return r;
}

std::vector<unsigned> first_primes(int n) {
  std::vector<unsigned> out;
  for (unsigned c = 2; static_cast<int>(out.size()) < n; ++c) {
    bool prime = true;
    for (unsigned p : out) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) out.push_back(c);
  }
  return out;
}

double counter_uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t variable) {
  std::uint64_t x = splitmix(seed);
  x = splitmix(x ^ (sample * 0xD1B54A32D192ED03ull));
  x = splitmix(x ^ (variable * 0x8CB92BA72F3D8DD7ull + 1));
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

std::vector<double> draw_point(SamplingMethod method, std::uint64_t seed, int stochastic_dim,
                               std::uint64_t index) {
  check_dim(stochastic_dim);
  std::vector<double> out(static_cast<std::size_t>(stochastic_dim));
  if (method == SamplingMethod::MC) {
    for (int v = 0; v < stochastic_dim; ++v)
      out[static_cast<std::size_t>(v)] = counter_uniform(seed, index, static_cast<std::uint64_t>(v));
  } else {
    const auto primes = first_primes(stochastic_dim);
    for (int v = 0; v < stochastic_dim; ++v)
      out[static_cast<std::size_t>(v)] = radical_inverse(index + 1, primes[static_cast<std::size_t>(v)]);
  }
  return out;
}

std::vector<double> draw_sample(const SamplePlan& plan, std::size_t k) {
  if (k >= plan.M)
    throw ConfigError("sample index " + std::to_string(k) + " out of range (M = " +
                      std::to_string(plan.M) + ")");
  return draw_point(plan.method, plan.seed, plan.stochastic_dim, k);
}

// ---- moments

MomentAccumulator::MomentAccumulator(const GridSpec& grid, int ncomp)
    : grid_(grid),
      ncomp_(ncomp),
      mean_(grid.interior_count() * static_cast<std::size_t>(ncomp), 0.0),
      m2_(mean_.size(), 0.0) {}

void MomentAccumulator::add(std::span<const double> values) {
  if (values.size() != mean_.size())
    throw ConfigError("moment accumulator: expected " + std::to_string(mean_.size()) +
                      " values, got " + std::to_string(values.size()));
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double delta = values[i] - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (values[i] - mean_[i]);
  }
}

void MomentAccumulator::add(const Field& field) {
  if (!(field.grid() == grid_) || field.ncomp() != ncomp_)
    throw ConfigError("moment accumulator: field shape mismatch");
  add(field.interior_values());
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (!(other.grid_ == grid_) || other.ncomp_ != ncomp_)
    throw ConfigError("moment accumulator: merge shape mismatch");
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_), nb = static_cast<double>(other.count_);
  const double n = na + nb;
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double delta = other.mean_[i] - mean_[i];
    mean_[i] += delta * (nb / n);
    m2_[i] += other.m2_[i] + delta * delta * (na * nb / n);
  }
  count_ += other.count_;
}

std::vector<double> MomentAccumulator::variance_values() const {
  std::vector<double> v(m2_.size(), 0.0);
  if (count_ < 2) return v;
  const double d = static_cast<double>(count_ - 1);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = m2_[i] / d;
  return v;
}

Field MomentAccumulator::mean() const {
  Field f(grid_, ncomp_, 0.0);
  f.set_interior_values(mean_);
  return f;
}

Field MomentAccumulator::variance() const {
  Field f(grid_, ncomp_, 0.0);
  f.set_interior_values(variance_values());
  return f;
}

// ---- histograms

Histogram::Histogram(std::vector<Index3> probes, int component, double lo, double hi, int bins)
    : probes_(std::move(probes)), component_(component), lo_(lo), hi_(hi), bins_(bins) {
  if (probes_.empty()) throw ConfigError("histogram needs at least one probe");
  if (bins_ < 1) throw ConfigError("histogram bins must be >= 1");
  if (!(hi_ > lo_) || !std::isfinite(lo_) || !std::isfinite(hi_))
    throw ConfigError("histogram range must satisfy lo < hi");
  counts_.assign(probes_.size() * static_cast<std::size_t>(bins_ + 2), 0);
}

double Histogram::bin_edge(int b) const {
  return lo_ + (hi_ - lo_) * static_cast<double>(b) / static_cast<double>(bins_);
}

void Histogram::add(const Field& field) {
  if (component_ < 0 || component_ >= field.ncomp())
    throw ConfigError("histogram component out of range");
  const std::size_t stride = static_cast<std::size_t>(bins_ + 2);
  for (std::size_t p = 0; p < probes_.size(); ++p) {
    for (int a = 0; a < kMaxDim; ++a)
      if (probes_[p][a] < 0 || probes_[p][a] >= field.grid().cells[a])
        throw ConfigError("histogram probe outside the grid");
    const double v = field.at(component_, probes_[p]);
    int bin;
    if (v < lo_) {
      bin = 0;
    } else if (!(v < hi_)) {
      bin = bins_ + 1;
    } else {
      bin = 1 + std::min(bins_ - 1, static_cast<int>((v - lo_) / (hi_ - lo_) * bins_));
    }
    ++counts_[p * stride + static_cast<std::size_t>(bin)];
  }
}

void Histogram::merge(const Histogram& other) {
  if (other.probes_ != probes_ || other.bins_ != bins_ || other.lo_ != lo_ || other.hi_ != hi_ ||
      other.component_ != component_)
    throw ConfigError("histogram merge spec mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::span<const std::uint64_t> Histogram::counts(std::size_t probe) const {
  const std::size_t stride = static_cast<std::size_t>(bins_ + 2);
  return std::span<const std::uint64_t>(counts_).subspan(probe * stride, stride);
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

// ---- structure functions

std::vector<double> structure_function(const Field& field, int component, double p, int max_offset) {
  if (component < 0 || component >= field.ncomp())
    throw ConfigError("structure function component out of range");
  if (!(p >= 1.0)) throw ConfigError("structure function exponent must be >= 1");
  if (max_offset < 0) throw ConfigError("structure function offset must be >= 0");
  const GridSpec& g = field.grid();
  std::vector<double> out(static_cast<std::size_t>(max_offset) + 1, 0.0);
  const double norm = static_cast<double>(g.dim) * static_cast<double>(g.interior_count());
  for (int h = 1; h <= max_offset; ++h) {
    double sum = 0.0;
    for (int axis = 0; axis < g.dim; ++axis) {
      const int n = g.cells[axis];
      for_each_interior(g, [&](const Index3& i) {
        Index3 j = i;
        j[axis] = (i[axis] + h) % n;
        sum += std::pow(std::abs(field.at(component, j) - field.at(component, i)), p);
      });
    }
    out[static_cast<std::size_t>(h)] = sum / norm;
  }
  return out;
}

StructureFunctionAccumulator::StructureFunctionAccumulator(double p, int max_offset, int component)
    : p_(p), max_offset_(max_offset), component_(component),
      sums_(static_cast<std::size_t>(std::max(max_offset, 0)) + 1, 0.0) {
  if (!(p >= 1.0)) throw ConfigError("structure function exponent must be >= 1");
  if (max_offset < 0) throw ConfigError("structure function offset must be >= 0");
}

void StructureFunctionAccumulator::add(const Field& field) {
  const auto s = structure_function(field, component_, p_, max_offset_);
  for (std::size_t h = 0; h < s.size(); ++h) sums_[h] += s[h];
  ++count_;
}

void StructureFunctionAccumulator::merge(const StructureFunctionAccumulator& other) {
  if (other.p_ != p_ || other.max_offset_ != max_offset_ || other.component_ != component_)
    throw ConfigError("structure function merge spec mismatch");
  for (std::size_t h = 0; h < sums_.size(); ++h) sums_[h] += other.sums_[h];
  count_ += other.count_;
}

std::vector<double> StructureFunctionAccumulator::values() const {
  std::vector<double> v(sums_.size(), 0.0);
  if (count_ == 0) return v;
  for (std::size_t h = 0; h < v.size(); ++h) v[h] = sums_[h] / static_cast<double>(count_);
  return v;
}

// ---- functionals

void FunctionalSpec::validate(const GridSpec& grid, int ncomp) const {
  if (component < 0 || component >= ncomp)
    throw ConfigError("functional '" + name + "': component out of range");
  if (kind == FunctionalKind::Histogram) {
    if (probes.empty()) throw ConfigError("functional '" + name + "': no probes");
    for (const Index3& p : probes)
      for (int a = 0; a < kMaxDim; ++a)
        if (p[a] < 0 || p[a] >= grid.cells[a])
          throw ConfigError("functional '" + name + "': probe outside the grid");
    if (!(hi > lo)) throw ConfigError("functional '" + name + "': histogram range must satisfy lo < hi");
    if (bins < 1) throw ConfigError("functional '" + name + "': bins must be >= 1");
  }
  if (kind == FunctionalKind::StructureFunction) {
    if (!(p >= 1.0)) throw ConfigError("functional '" + name + "': exponent must be >= 1");
    if (max_offset < 0) throw ConfigError("functional '" + name + "': max_offset must be >= 0");
  }
}

Accumulator make_accumulator(const FunctionalSpec& spec, const GridSpec& grid, int ncomp) {
  spec.validate(grid, ncomp);
  switch (spec.kind) {
    case FunctionalKind::Moments:
      return MomentAccumulator(grid, ncomp);
    case FunctionalKind::Histogram:
      return Histogram(spec.probes, spec.component, spec.lo, spec.hi, spec.bins);
    case FunctionalKind::StructureFunction:
      return StructureFunctionAccumulator(spec.p, spec.max_offset, spec.component);
  }
  throw ConfigError("unknown functional kind");
}

void accumulate(Accumulator& acc, const Field& field) {
  std::visit([&](auto& a) { a.add(field); }, acc);
}

void merge(Accumulator& into, const Accumulator& other) {
  if (into.index() != other.index()) throw ConfigError("merging different functional kinds");
  std::visit(
      [&](auto& a) {
        using T = std::decay_t<decltype(a)>;
        a.merge(std::get<T>(other));
      },
      into);
}

// ---- load balancing

LoadAssignment load_balance(std::span<const double> costs, int workers) {
  if (workers < 1) throw ConfigError("load balancing needs at least one worker");
  if (costs.empty()) throw ConfigError("load balancing needs at least one sample");
  for (double c : costs)
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("sample costs must be positive");

  const auto W = static_cast<std::size_t>(workers);
  std::vector<std::size_t> order(costs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return costs[a] > costs[b]; });

  std::vector<std::vector<std::size_t>> lists(W);
  std::vector<double> load(W, 0.0);
  for (std::size_t i : order) {
    const auto w = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    lists[w].push_back(i);
    load[w] += costs[i];
  }

  for (int iter = 0; iter < 10000; ++iter) {
    const auto wm = static_cast<std::size_t>(std::max_element(load.begin(), load.end()) - load.begin());
    bool improved = false;
    for (std::size_t a = 0; a < lists[wm].size() && !improved; ++a) {
      const double ca = costs[lists[wm][a]];
      for (std::size_t w = 0; w < W && !improved; ++w) {
        if (w == wm) continue;
        if (load[w] + ca < load[wm]) {
          lists[w].push_back(lists[wm][a]);
          lists[wm].erase(lists[wm].begin() + static_cast<std::ptrdiff_t>(a));
          load[w] += ca;
          load[wm] -= ca;
          improved = true;
          break;
        }
        for (std::size_t b = 0; b < lists[w].size(); ++b) {
          const double cb = costs[lists[w][b]];
          if (cb < ca && load[w] - cb + ca < load[wm]) {
            std::swap(lists[wm][a], lists[w][b]);
            load[wm] += cb - ca;
            load[w] += ca - cb;
            improved = true;
            break;
          }
        }
      }
    }
    if (!improved) break;
  }

  LoadAssignment out;
  for (auto& l : lists) std::sort(l.begin(), l.end());
  out.per_worker = std::move(lists);
  out.makespan = *std::max_element(load.begin(), load.end());
  return out;
}

// ---- estimators

UqResult run_mc(const SamplePlan& plan, const GridSpec& grid, const SchemeConfig& cfg,
                const InitialData& init, const std::vector<FunctionalSpec>& functionals,
                const UqOptions& options) {
  plan.validate();
  cfg.validate(grid);
  validate_options(options, cfg);
  const int ncomp = cfg.model.ncomp();

  UqResult result;
  result.samples = plan.M;
  for (std::size_t t = 0; t <= options.times.size(); ++t) {
    TimeEstimate te;
    te.t = t < options.times.size() ? options.times[t] : cfg.t_end;
    for (const auto& f : functionals) te.functionals.push_back(make_accumulator(f, grid, ncomp));
    result.times.push_back(std::move(te));
  }

  const std::size_t batch = batch_size(options.workers);
  for (std::size_t begin = 0; begin < plan.M; begin += batch) {
    const std::size_t end = std::min(plan.M, begin + batch);
    std::vector<std::vector<Field>> fields(end - begin);
    const std::vector<double> costs(end - begin, 1.0);
    run_assigned(
        costs, options.workers,
        [&](std::size_t i) {
          const std::vector<double> random = draw_sample(plan, begin + i);
          fields[i] = solve_sample(init(grid, random), cfg, options);
        },
        [&](std::size_t i) { return "sample " + std::to_string(begin + i); });
    for (auto& per_time : fields)
      for (std::size_t t = 0; t < per_time.size(); ++t)
        for (auto& acc : result.times[t].functionals) accumulate(acc, per_time[t]);
  }
  return result;
}

void MlmcPlan::validate() const {
  check_dim(stochastic_dim);
  if (levels.empty()) throw ConfigError("MLMC needs at least one level");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    levels[l].grid.validate();
    if (levels[l].M < 1) throw ConfigError("level " + std::to_string(l) + ": M must be >= 1");
    if (l == 0) continue;
    const GridSpec& c = levels[l - 1].grid;
    const GridSpec& f = levels[l].grid;
    if (c.dim != f.dim || c.origin != f.origin || c.extent != f.extent)
      throw ConfigError("level " + std::to_string(l) + ": grids must cover the same domain");
    for (int a = 0; a < f.dim; ++a)
      if (f.cells[a] != c.cells[a] && f.cells[a] != 2 * c.cells[a])
        throw ConfigError("level " + std::to_string(l) + ": cells must double (or repeat) per axis");
  }
}

Field prolong(const Field& coarse, const GridSpec& fine) {
  const GridSpec& c = coarse.grid();
  Index3 ratio{1, 1, 1};
  for (int a = 0; a < kMaxDim; ++a) {
    if (fine.cells[a] % c.cells[a] != 0)
      throw ConfigError("prolongation needs an integer refinement ratio");
    ratio[a] = fine.cells[a] / c.cells[a];
  }
  Field out(fine, coarse.ncomp(), 0.0);
  for (int comp = 0; comp < coarse.ncomp(); ++comp)
    for_each_interior(fine, [&](const Index3& i) {
      out.at(comp, i) = coarse.at(comp, {i[0] / ratio[0], i[1] / ratio[1], i[2] / ratio[2]});
    });
  return out;
}

Field MlmcEstimate::mean() const {
  std::vector<double> m = levels.at(0).mean_values();
  for (std::size_t l = 1; l < levels.size(); ++l)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += levels[l].mean_values()[i];
  Field f(levels[0].grid(), levels[0].ncomp(), 0.0);
  f.set_interior_values(m);
  return f;
}

Field MlmcEstimate::variance() const {
  const std::vector<double>& m0 = levels.at(0).mean_values();
  const std::vector<double> mean_total = mean().interior_values();
  std::vector<double> v = levels[0].variance_values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    double s = 0.0;
    for (std::size_t l = 1; l < levels.size(); ++l) s += second[l][i];
    v[i] = std::max(0.0, v[i] + s - (mean_total[i] * mean_total[i] - m0[i] * m0[i]));
  }
  Field f(levels[0].grid(), levels[0].ncomp(), 0.0);
  f.set_interior_values(v);
  return f;
}

double MlmcEstimate::max_correction() const {
  double m = 0.0;
  for (std::size_t l = 1; l < levels.size(); ++l)
    for (double x : levels[l].mean_values()) m = std::max(m, std::abs(x));
  return m;
}

MlmcResult run_mlmc(const MlmcPlan& plan, const SchemeConfig& cfg, const InitialData& init,
                    const UqOptions& options) {
  plan.validate();
  for (const auto& level : plan.levels) cfg.validate(level.grid);
  validate_options(options, cfg);
  const GridSpec& finest = plan.levels.back().grid;
  const int ncomp = cfg.model.ncomp();
  const std::size_t L = plan.levels.size();
  const std::size_t ntimes = options.times.size() + 1;

  MlmcResult result;
  std::vector<std::vector<MomentAccumulator>> squares(ntimes);
  for (std::size_t t = 0; t < ntimes; ++t) {
    MlmcEstimate e;
    e.t = t < options.times.size() ? options.times[t] : cfg.t_end;
    for (std::size_t l = 0; l < L; ++l) {
      e.levels.emplace_back(finest, ncomp);
      squares[t].emplace_back(finest, ncomp);
    }
    result.times.push_back(std::move(e));
  }

  struct Job {
    std::size_t level;
    std::size_t k;
    std::uint64_t draw;
  };
  std::vector<Job> jobs;
  std::uint64_t draw = 0;
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t k = 0; k < plan.levels[l].M; ++k) jobs.push_back({l, k, draw++});

  // difference values (fine - coarse) and squared-value differences
  struct Contribution {
    std::vector<std::vector<double>> diff, diff2;
  };

  const std::size_t batch = batch_size(options.workers);
  for (std::size_t begin = 0; begin < jobs.size(); begin += batch) {
    const std::size_t end = std::min(jobs.size(), begin + batch);
    std::vector<Contribution> out(end - begin);
    std::vector<double> costs;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t l = jobs[i].level;
      double c = static_cast<double>(plan.levels[l].grid.interior_count());
      if (l > 0) c += static_cast<double>(plan.levels[l - 1].grid.interior_count());
      costs.push_back(c);
    }
    run_assigned(
        costs, options.workers,
        [&](std::size_t i) {
          const Job& job = jobs[begin + i];
          const auto random = draw_point(plan.method, plan.seed, plan.stochastic_dim, job.draw);
          const GridSpec& g = plan.levels[job.level].grid;
          const auto fine = solve_sample(init(g, random), cfg, options);
          Contribution& c = out[i];
          for (std::size_t t = 0; t < ntimes; ++t) {
            std::vector<double> a = prolong(fine[t], finest).interior_values();
            std::vector<double> a2(a.size());
            for (std::size_t v = 0; v < a.size(); ++v) a2[v] = a[v] * a[v];
            c.diff.push_back(std::move(a));
            c.diff2.push_back(std::move(a2));
          }
          if (job.level == 0) return;
          const GridSpec& gc = plan.levels[job.level - 1].grid;
          const auto coarse = solve_sample(init(gc, random), cfg, options);
          for (std::size_t t = 0; t < ntimes; ++t) {
            const std::vector<double> b = prolong(coarse[t], finest).interior_values();
            for (std::size_t v = 0; v < b.size(); ++v) {
              c.diff2[t][v] -= b[v] * b[v];
              c.diff[t][v] -= b[v];
            }
          }
        },
        [&](std::size_t i) {
          return "level " + std::to_string(jobs[begin + i].level) + " sample " +
                 std::to_string(jobs[begin + i].k);
        });
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::size_t l = jobs[begin + i].level;
      for (std::size_t t = 0; t < ntimes; ++t) {
        result.times[t].levels[l].add(out[i].diff[t]);
        if (l > 0) squares[t][l].add(out[i].diff2[t]);
      }
    }
  }

  for (std::size_t t = 0; t < ntimes; ++t) {
    auto& e = result.times[t];
    e.second.resize(L);
    for (std::size_t l = 1; l < L; ++l) e.second[l] = squares[t][l].mean_values();
  }
  return result;
}

}  // namespace conslaw
