#include "conslaw/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>

#include "CLI11.hpp"
#include "conslaw/config.hpp"
#include "conslaw/error.hpp"
#include "conslaw/output.hpp"
#include "conslaw/parallel.hpp"

namespace conslaw::cli {

namespace fs = std::filesystem;

namespace {

std::vector<double> sample_zero(const RunConfig& cfg) {
  if (cfg.uq.stochastic_dim == 0) return {};
  SamplePlan plan;
  plan.method = cfg.uq.method;
  plan.seed = cfg.uq.seed;
  plan.stochastic_dim = cfg.uq.stochastic_dim;
  return draw_sample(plan, 0);
}

OutputHeader run_header(const RunConfig& cfg) {
  OutputHeader h = OutputHeader::make(cfg.digest);
  if (cfg.uq.stochastic_dim > 0) {
    h.seed = cfg.uq.seed;
    h.sample = 0;
  }
  return h;
}

std::string ranks_label(const Index3& r, int dim) {
  std::string s;
  for (int a = 0; a < dim; ++a) s += (a ? "x" : "") + std::to_string(r[static_cast<std::size_t>(a)]);
  return s;
}

// Per component average and maximum over the interior.
struct ComponentStats {
  double avg = 0.0;
  double max = -std::numeric_limits<double>::infinity();
};

std::vector<ComponentStats> component_stats(const Field& f) {
  const std::vector<double> v = f.interior_values();
  const std::size_t n = f.grid().interior_count();
  std::vector<ComponentStats> out(static_cast<std::size_t>(f.ncomp()));
  for (std::size_t c = 0; c < out.size(); ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += v[c * n + i];
      out[c].max = std::max(out[c].max, v[c * n + i]);
    }
    out[c].avg = sum / static_cast<double>(n);
  }
  return out;
}

void print_moments(std::ostream& out, const std::string& name, double t, const Field& mean,
                   const Field& var, const std::vector<std::string>& components) {
  const auto m = component_stats(mean);
  const auto v = component_stats(var);
  for (std::size_t c = 0; c < components.size(); ++c)
    out << name << " t=" << format_double(t) << " " << components[c] << ": domain-average mean "
        << format_double(m[c].avg) << ", max variance " << format_double(v[c].max) << "\n";
}

// One prime factor at a time, onto the axis with the fewest ranks so far.
Index3 balanced_split(int ranks, int axes) {
  std::vector<int> factors;
  for (int p = 2, k = ranks; k > 1;) {
    if (k % p == 0) {
      factors.push_back(p);
      k /= p;
    } else {
      ++p;
    }
  }
  std::sort(factors.rbegin(), factors.rend());
  Index3 r{1, 1, 1};
  for (int f : factors) {
    int best = 0;
    for (int a = 1; a < axes; ++a)
      if (r[static_cast<std::size_t>(a)] < r[static_cast<std::size_t>(best)]) best = a;
    r[static_cast<std::size_t>(best)] *= f;
  }
  return r;
}

std::string kh_interface_shift(bool three_d) {
  // 5 modes with amplitudes X0..X4 and phases X5..X9; the shift is in [0, 0.025]
  std::string s = "0.005 * (";
  for (int n = 1; n <= 5; ++n) {
    const std::string a = "X" + std::to_string(n - 1), b = "X" + std::to_string(n + 4);
    const std::string k = std::to_string(n);
    if (n > 1) s += " + ";
    if (three_d)
      s += a + " * (2 + cos(2*pi*(" + k + "*x + " + b + ")) + cos(2*pi*(" + k + "*z + " + b + "))) / 4";
    else
      s += a + " * (1 + cos(2*pi*(" + k + "*x + " + b + "))) / 2";
  }
  return s + ")";
}

std::string kh_preset(int dim, int cells) {
  const std::string band = "abs(y - 0.5) < 0.25 - " + kh_interface_shift(dim == 3);
  std::string t = "# Kelvin-Helmholtz shear layer, interfaces displaced by random modes\n";
  t += "[grid]\ndim = " + std::to_string(dim) + "\ncells = " + std::to_string(cells) + "\n\n";
  t += "[scheme]\nequation = euler\ngamma = 1.4\nflux = hllc\nreconstruction = weno3\nrk_order = 3\n"
       "cfl = 0.45\nt_end = 2.0\nboundary = periodic\n\n";
  t += "[initial]\nrho = " + band + " ? 2 : 1\n";
  t += "vx = " + band + " ? -0.5 : 0.5\nvy = 0\n";
  if (dim == 3) t += "vz = 0\n";
  t += "p = 2.5\n\n";
  t += "[uq]\nmethod = mc\nsamples = " + std::string(dim == 3 ? "4" : "8") +
       "\nseed = 42\nstochastic_dim = 10\nworkers = 1\nfunctionals = moments\n\n";
  t += "[output]\ndirectory = output/kh" + std::to_string(dim) + "d\n";
  return t;
}

void write_timing_csv(const fs::path& path, const OutputHeader& header,
                      const std::vector<TimeSeriesRecord>& records) {
  std::string text = csv_header_comment(header) + "step,t,dt,seconds\n";
  for (const auto& r : records)
    text += std::to_string(r.step) + "," + format_double(r.t) + "," + format_double(r.dt) + "," +
            format_double(r.seconds) + "\n";
  write_text_file(path, text);
}

}  // namespace

std::vector<double> conservation_drift(const Field& a, const Field& b) {
  const auto ia = total_integral(a);
  const auto ib = total_integral(b);
  const GridSpec& g = a.grid();
  std::vector<double> scale(ia.size(), 0.0);
  for (int c = 0; c < a.ncomp(); ++c)
    for_each_interior(g, [&](const Index3& i) { scale[static_cast<std::size_t>(c)] += std::abs(a.at(c, i)); });
  std::vector<double> out(ia.size());
  for (std::size_t c = 0; c < ia.size(); ++c) {
    const double ref = std::max(std::abs(ia[c]), scale[c] * g.cell_volume());
    out[c] = ref > 0.0 ? std::abs(ib[c] - ia[c]) / ref : std::abs(ib[c] - ia[c]);
  }
  return out;
}

const std::vector<std::string>& layout_names() {
  static const std::vector<std::string> names{"multix", "multiy", "multixmultiy", "multiz", "multixyz"};
  return names;
}

Index3 layout_ranks(const std::string& layout, int ranks, int dim) {
  if (ranks < 1) throw ConfigError("rank counts must be positive, got " + std::to_string(ranks));
  auto need = [&](int d) {
    if (dim < d)
      throw ConfigError("layout '" + layout + "' needs a " + std::to_string(d) + "D config, this one is " +
                        std::to_string(dim) + "D");
  };
  if (layout == "multix") return {ranks, 1, 1};
  if (layout == "multiy") {
    need(2);
    return {1, ranks, 1};
  }
  if (layout == "multixmultiy") {
    need(2);
    return balanced_split(ranks, 2);
  }
  if (layout == "multiz") {
    need(3);
    return {1, 1, ranks};
  }
  if (layout == "multixyz") {
    need(3);
    return balanced_split(ranks, 3);
  }
  throw ConfigError("unknown layout '" + layout + "'");
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"sod", "advection-smooth", "kh2d", "kh3d"};
  return names;
}

std::string preset_config(const std::string& name, std::optional<int> cells) {
  if (cells && *cells < 1) throw ConfigError("--cells must be positive");
  if (name == "sod") {
    return "# Sod shock tube\n[grid]\ndim = 1\ncells = " + std::to_string(cells.value_or(400)) +
           "\n\n[scheme]\nequation = euler\ngamma = 1.4\nflux = hllc\nreconstruction = weno2\n"
           "rk_order = 2\nt_end = 0.2\nboundary = outflow\n\n"
           "[initial]\nrho = x < 0.5 ? 1.0 : 0.125\nvx = 0\np = x < 0.5 ? 1.0 : 0.1\n\n"
           "[output]\ndirectory = output/sod\nformats = snapshot, csv\n";
  }
  if (name == "advection-smooth") {
    return "# Density wave carried by a uniform flow, one period\n[grid]\ndim = 1\ncells = " +
           std::to_string(cells.value_or(128)) +
           "\n\n[scheme]\nequation = euler\ngamma = 1.4\nflux = hllc\nreconstruction = weno3\n"
           "rk_order = 3\nt_end = 1.0\nboundary = periodic\n\n"
           "[initial]\nrho = 1 + 0.2*sin(2*pi*x)\nvx = 1\np = 1\n\n"
           "[output]\ndirectory = output/advection\nformats = snapshot, csv\n";
  }
  if (name == "kh2d") return kh_preset(2, cells.value_or(64));
  if (name == "kh3d") return kh_preset(3, cells.value_or(32));
  throw ConfigError("unknown preset '" + name + "'");
}

fs::path output_directory(const std::optional<std::string>& flag, const std::string& configured) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CONSLAW_OUTPUT_DIR"); env && *env) return env;
  return configured;
}

RunReport cmd_run(const RunArgs& args, std::ostream& out) {
  RunConfig cfg = load_config(args.config);
  if (args.ranks) cfg.ranks = parse_ranks(*args.ranks, cfg.grid.dim);
  if (args.seed) cfg.uq.seed = *args.seed;
  if (args.steps) cfg.max_steps = *args.steps;
  const RankTopology topo = RankTopology::make(cfg.grid.dim, cfg.ranks, cfg.scheme.bc);
  decompose(cfg.grid, topo);

  const fs::path dir = output_directory(args.output, cfg.output.directory);
  const OutputHeader header = run_header(cfg);
  const auto names = cfg.scheme.model.component_names();
  const Field init = eval_init(cfg.init, cfg.scheme.model, cfg.grid, sample_zero(cfg));

  RunReport report;
  auto emit = [&](const Field& f, double t, const std::string& stem) {
    if (cfg.output.snapshot) {
      report.files.push_back(dir / (stem + ".snap"));
      write_snapshot(report.files.back(), f, header, t, names);
    }
    if (cfg.output.csv) {
      report.files.push_back(dir / (stem + ".csv"));
      write_field_csv(report.files.back(), f, header, t, names);
    }
  };
  SnapshotRequest request{cfg.output.times, [&](const Field& f, double t, std::size_t i) {
                            emit(f, t, "snapshot_" + std::to_string(i));
                          }};

  RunResult r;
  if (topo.size() == 1) {
    RunOptions opt;
    opt.max_steps = cfg.max_steps;
    if (!cfg.output.times.empty()) opt.observers.push_back(request);
    r = run_simulation(init, cfg.scheme, opt);
  } else {
    ParallelOptions opt;
    opt.max_steps = cfg.max_steps;
    if (!cfg.output.times.empty()) opt.observers.push_back(request);
    r = run_decomposed(init, cfg.scheme, topo, opt);
  }
  emit(r.field, r.t, "final");

  report.steps = r.records.size();
  report.t = r.t;
  report.drift = conservation_drift(init, r.field);
  report.files.push_back(dir / "timing.csv");
  write_timing_csv(report.files.back(), header, r.records);

  std::string summary = "steps: " + std::to_string(report.steps) + "\nfinal_time: " + format_double(r.t) +
                        "\nranks: " + ranks_label(cfg.ranks, cfg.grid.dim) + "\n";
  for (std::size_t c = 0; c < names.size(); ++c)
    summary += "drift_" + names[c] + ": " + format_double(report.drift[c]) + "\n";
  report.files.push_back(dir / "summary.txt");
  write_text_file(report.files.back(), csv_header_comment(header) + summary);
  out << summary << "output: " << dir.string() << "\n";
  return report;
}

std::vector<fs::path> cmd_uq(const UqArgs& args, std::ostream& out) {
  RunConfig cfg = load_config(args.config);
  if (!cfg.uq.present) throw ConfigError(args.config + ": no [uq] section");
  if (args.seed) cfg.uq.seed = *args.seed;
  if (args.workers) {
    if (*args.workers < 1) throw ConfigError("--workers must be positive");
    cfg.uq.workers = *args.workers;
  }
  if (args.steps) cfg.max_steps = *args.steps;
  if (cfg.uq.functionals.empty()) cfg.uq.functionals.push_back(FunctionalSpec{});

  const fs::path dir = output_directory(args.output, cfg.output.directory);
  OutputHeader header = OutputHeader::make(cfg.digest);
  header.seed = cfg.uq.seed;
  const auto names = cfg.scheme.model.component_names();
  const InitialData init = make_initial_data(cfg);
  UqOptions opt;
  opt.workers = cfg.uq.workers;
  opt.times = cfg.output.times;
  opt.max_steps = cfg.max_steps;
  opt.ranks = cfg.ranks;

  std::vector<fs::path> files;
  if (cfg.uq.levels > 1) {
    MlmcPlan plan;
    plan.method = cfg.uq.method;
    plan.seed = cfg.uq.seed;
    plan.stochastic_dim = cfg.uq.stochastic_dim;
    const auto grids = cfg.level_grids();
    for (std::size_t l = 0; l < grids.size(); ++l) plan.levels.push_back({grids[l], cfg.uq.level_samples.at(l)});
    const MlmcResult r = run_mlmc(plan, cfg.scheme, init, opt);
    files = write_stats(r, header, dir, names);
    for (const auto& e : r.times) {
      print_moments(out, "moments", e.t, e.mean(), e.variance(), names);
      out << "moments t=" << format_double(e.t) << ": max level correction "
          << format_double(e.max_correction()) << "\n";
    }
  } else {
    SamplePlan plan;
    plan.method = cfg.uq.method;
    plan.M = cfg.uq.samples;
    plan.seed = cfg.uq.seed;
    plan.stochastic_dim = cfg.uq.stochastic_dim;
    const UqResult r = run_mc(plan, cfg.grid, cfg.scheme, init, cfg.uq.functionals, opt);
    files = write_stats(r, header, dir, cfg.uq.functionals, names);
    for (const auto& te : r.times) {
      for (std::size_t f = 0; f < te.functionals.size(); ++f) {
        const std::string& name = cfg.uq.functionals[f].name;
        const Accumulator& acc = te.functionals[f];
        if (const auto* m = std::get_if<MomentAccumulator>(&acc)) {
          print_moments(out, name, te.t, m->mean(), m->variance(), names);
        } else if (const auto* h = std::get_if<Histogram>(&acc)) {
          out << name << " t=" << format_double(te.t) << ": " << h->probes().size() << " probes, "
              << h->total() << " counts\n";
        } else {
          const auto v = std::get<StructureFunctionAccumulator>(acc).values();
          out << name << " t=" << format_double(te.t) << ": S(1) = " << format_double(v.size() > 1 ? v[1] : 0.0)
              << ", S(" << v.size() - 1 << ") = " << format_double(v.back()) << "\n";
        }
      }
    }
    out << "samples: " << r.samples << "\n";
  }
  out << "output: " << dir.string() << "\n";
  return files;
}

std::vector<fs::path> cmd_bench(const BenchArgs& args, std::ostream& out) {
  const RunConfig cfg = load_config(args.config);
  if (args.ranks.empty()) throw ConfigError("--ranks needs at least one rank count");
  if (args.steps < 1) throw ConfigError("--steps must be positive");
  std::vector<Index3> layouts;
  for (int k : args.ranks) layouts.push_back(layout_ranks(args.layout, k, cfg.grid.dim));

  const fs::path dir = output_directory(args.output, cfg.output.directory);
  OutputHeader header = run_header(cfg);
  header.extra.emplace_back("warmup_steps", std::to_string(kBenchWarmup));
  const GridSpec& block = cfg.grid;
  const std::size_t cells_per_rank = block.interior_count();
  SchemeConfig scheme = cfg.scheme;
  scheme.t_end = std::numeric_limits<double>::max();
  const std::vector<double> random = sample_zero(cfg);

  auto timed = [&](const Index3& rpa) {
    Index3 cells{1, 1, 1};
    for (int a = 0; a < block.dim; ++a) cells[a] = block.cells[a] * rpa[a];
    const GridSpec global = GridSpec::uniform(block.dim, cells, block.origin, block.extent, block.ghost_width);
    const RankTopology topo = RankTopology::make(block.dim, rpa, scheme.bc);
    const Field init = eval_init(cfg.init, cfg.scheme.model, global, random);
    ParallelOptions opt;
    opt.max_steps = kBenchWarmup + args.steps;
    return run_decomposed(init, scheme, topo, opt).records;
  };
  auto measured = [](const std::vector<TimeSeriesRecord>& records) {
    std::vector<double> s;
    for (std::size_t i = kBenchWarmup; i < records.size(); ++i) s.push_back(records[i].seconds);
    return s;
  };

  std::string timing = csv_header_comment(header) + "ranks,layout,cells_per_rank,step,seconds\n";
  std::string overhead = csv_header_comment(header) + "ranks,layout,mean_seconds,overhead_fraction\n";
  std::vector<double> baseline;
  const auto one = std::find(args.ranks.begin(), args.ranks.end(), 1);
  if (one == args.ranks.end()) baseline = measured(timed({1, 1, 1}));

  std::vector<std::vector<double>> series(args.ranks.size());
  for (std::size_t i = 0; i < args.ranks.size(); ++i) {
    const auto records = timed(layouts[i]);
    for (const auto& r : records)
      timing += std::to_string(args.ranks[i]) + "," + args.layout + "," + std::to_string(cells_per_rank) + "," +
                std::to_string(r.step) + "," + format_double(r.seconds) + "\n";
    series[i] = measured(records);
    if (args.ranks[i] == 1 && baseline.empty()) baseline = series[i];
  }
  for (std::size_t i = 0; i < args.ranks.size(); ++i) {
    const OverheadReport rep = overhead_metric(args.ranks[i], series[i], baseline);
    overhead += std::to_string(rep.ranks) + "," + args.layout + "," + format_double(rep.mean_seconds) + "," +
                format_double(rep.overhead_fraction) + "\n";
    out << "ranks " << rep.ranks << " (" << ranks_label(layouts[i], block.dim) << "): mean "
        << format_double(rep.mean_seconds) << " s/step, overhead " << format_double(rep.overhead_fraction) << "\n";
  }
  const std::vector<fs::path> files{dir / "bench_timing.csv", dir / "bench_overhead.csv"};
  write_text_file(files[0], timing);
  write_text_file(files[1], overhead);
  out << "output: " << dir.string() << "\n";
  return files;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite volume solver for hyperbolic conservation laws with sampling-based UQ", "conslaw"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version() + " (" + source_revision() + ")");

  RunArgs ra;
  std::string run_ranks, run_output;
  std::uint64_t run_seed = 0;
  std::size_t run_steps = 0;
  auto* run = app.add_subcommand("run", "Deterministic run: snapshots, timing CSV and a summary");
  run->add_option("config", ra.config, "Configuration file")->required();
  auto* run_ranks_opt = run->add_option("--ranks", run_ranks, "Rank layout, e.g. 2x2");
  auto* run_out_opt = run->add_option("-o,--output", run_output, "Output directory");
  auto* run_seed_opt = run->add_option("--seed", run_seed, "Seed for random symbols in the initial data");
  auto* run_steps_opt = run->add_option("--steps", run_steps, "Stop after this many steps");

  UqArgs ua;
  int uq_workers = 1;
  std::string uq_output;
  std::uint64_t uq_seed = 0;
  std::size_t uq_steps = 0;
  auto* uq = app.add_subcommand("uq", "Monte Carlo or multilevel Monte Carlo statistics");
  uq->add_option("config", ua.config, "Configuration file with a [uq] section")->required();
  auto* uq_workers_opt = uq->add_option("--workers", uq_workers, "Concurrent sample workers");
  auto* uq_out_opt = uq->add_option("-o,--output", uq_output, "Output directory");
  auto* uq_seed_opt = uq->add_option("--seed", uq_seed, "Override the configured seed");
  auto* uq_steps_opt = uq->add_option("--steps", uq_steps, "Stop every sample after this many steps");

  BenchArgs ba;
  std::string bench_output;
  auto* bench = app.add_subcommand("bench", "Weak-scaling benchmark; grid cells are per rank");
  bench->add_option("config", ba.config, "Configuration file")->required();
  bench->add_option("--ranks", ba.ranks, "Rank counts, e.g. 1,2,4")->delimiter(',');
  bench->add_option("--layout", ba.layout, "Rank layout")->check(CLI::IsMember(layout_names()));
  bench->add_option("--steps", ba.steps, "Timed steps per rank count after the warm-up");
  auto* bench_out_opt = bench->add_option("-o,--output", bench_output, "Output directory");

  std::string preset_name, preset_out;
  int preset_cells = 0;
  auto* preset = app.add_subcommand("preset", "Print or write a shipped experiment config");
  preset->add_option("name", preset_name, "Preset name")->required()->check(CLI::IsMember(preset_names()));
  auto* cells_opt = preset->add_option("--cells", preset_cells, "Cells per axis");
  auto* preset_out_opt = preset->add_option("-o,--output", preset_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kUsage;
  }

  try {
    if (run->parsed()) {
      if (run_ranks_opt->count()) ra.ranks = run_ranks;
      if (run_out_opt->count()) ra.output = run_output;
      if (run_seed_opt->count()) ra.seed = run_seed;
      if (run_steps_opt->count()) ra.steps = run_steps;
      cmd_run(ra, out);
    } else if (uq->parsed()) {
      if (uq_workers_opt->count()) ua.workers = uq_workers;
      if (uq_out_opt->count()) ua.output = uq_output;
      if (uq_seed_opt->count()) ua.seed = uq_seed;
      if (uq_steps_opt->count()) ua.steps = uq_steps;
      cmd_uq(ua, out);
    } else if (bench->parsed()) {
      if (bench_out_opt->count()) ba.output = bench_output;
      cmd_bench(ba, out);
    } else if (preset->parsed()) {
      const std::string text =
          preset_config(preset_name, cells_opt->count() ? std::optional<int>(preset_cells) : std::nullopt);
      if (preset_out_opt->count())
        write_text_file(preset_out, text);
      else
        out << text;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kSuccess;
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"conslaw"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace conslaw::cli
