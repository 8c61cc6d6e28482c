#include "conslaw/uq.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "conslaw/error.hpp"
#include "doctest.h"

using namespace conslaw;

namespace {

constexpr BoundarySpec kPeriodic{BoundaryKind::Periodic, BoundaryKind::Periodic,
                                 BoundaryKind::Periodic};

SchemeConfig burgers_scheme(double t_end) {
  SchemeConfig cfg;
  cfg.model = EquationModel::burgers(1);
  cfg.flux = FluxKind::Rusanov;
  cfg.recon = {ReconstructionType::WENO3};
  cfg.rk_order = 3;
  cfg.t_end = t_end;
  cfg.bc = kPeriodic;
  return cfg;
}

GridSpec line(int n) { return GridSpec::uniform(1, {n}, {0}, {1}, 2); }

// u0 = a + b X0 + c sin(2 pi x)
InitialData linear_init(double a, double b, double c) {
  return [=](const GridSpec& g, std::span<const double> r) {
    Field f(g, 1, 0.0);
    for_each_interior(g, [&](const Index3& i) {
      const double x = cell_center(g, i)[0];
      f.at(0, i) = a + (r.empty() ? 0.0 : b * r[0]) + c * std::sin(2 * std::numbers::pi * x);
    });
    return f;
  };
}

double two_pass_variance(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

}  // namespace

TEST_CASE("Halton points") {
  SamplePlan plan{SamplingMethod::QMC, 3, 0, 1};
  CHECK(draw_sample(plan, 0)[0] == 0.5);
  CHECK(draw_sample(plan, 1)[0] == 0.25);
  CHECK(draw_sample(plan, 2)[0] == 0.75);
  plan.stochastic_dim = 2;
  const auto p = draw_sample(plan, 0);
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 1.0 / 3.0);
  CHECK_THROWS_AS(draw_sample(plan, 3), ConfigError);
}

TEST_CASE("base-2 Halton coordinates match bit reversal") {
  for (std::uint64_t k = 0; k < 64; ++k) {
    // reverse the bits of k + 1 into the fraction
    std::uint64_t n = k + 1, rev = 0;
    for (int b = 0; b < 64; ++b) {
      rev = (rev << 1) | (n & 1);
      n >>= 1;
    }
    const double oracle = std::ldexp(static_cast<double>(rev >> 11), -53);
    CHECK(draw_point(SamplingMethod::QMC, 0, 1, k)[0] == oracle);
  }
}

TEST_CASE("QMC points lie in the unit cube") {
  CHECK(first_primes(6) == std::vector<unsigned>{2, 3, 5, 7, 11, 13});
  for (std::uint64_t k = 0; k < 500; ++k)
    for (double v : draw_point(SamplingMethod::QMC, 0, 6, k)) CHECK((v >= 0.0 && v < 1.0));
}

TEST_CASE("MC draws are deterministic and uniform") {
  const SamplePlan plan{SamplingMethod::MC, 100000, 42, 3};
  CHECK(draw_sample(plan, 7) == draw_sample(plan, 7));
  CHECK(draw_sample(plan, 7) != draw_sample(plan, 8));
  CHECK(draw_point(SamplingMethod::MC, 43, 3, 7) != draw_sample(plan, 7));
  double sum = 0.0;
  for (std::size_t k = 0; k < plan.M; ++k) {
    const auto v = draw_sample(plan, k);
    for (double x : v) CHECK((x >= 0.0 && x < 1.0));
    sum += v[1];
  }
  CHECK(std::abs(sum / plan.M - 0.5) < 0.005);
}

TEST_CASE("moments of a short stream") {
  MomentAccumulator acc(line(1), 1);
  for (double x : {1.0, 2.0, 3.0, 4.0}) acc.add(std::vector<double>{x});
  CHECK(acc.mean_values()[0] == 2.5);
  CHECK(acc.variance_values()[0] == doctest::Approx(two_pass_variance({1, 2, 3, 4})).epsilon(1e-15));
  CHECK(acc.variance_values()[0] == doctest::Approx(5.0 / 3.0).epsilon(1e-15));

  MomentAccumulator a(line(1), 1), b(line(1), 1);
  a.add(std::vector<double>{1.0});
  a.add(std::vector<double>{2.0});
  b.add(std::vector<double>{3.0});
  b.add(std::vector<double>{4.0});
  a.merge(b);
  CHECK(a.count() == 4);
  CHECK(a.mean_values()[0] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(a.variance_values()[0] == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("moment merge is associative on random streams") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(3.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(1 + rng() % 200);
    for (double& x : xs) x = d(rng);
    const std::size_t cut1 = rng() % xs.size(), cut2 = cut1 + rng() % (xs.size() - cut1 + 1);
    MomentAccumulator p(line(1), 1), q(line(1), 1), r(line(1), 1), whole(line(1), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const std::vector<double> v{xs[i]};
      (i < cut1 ? p : i < cut2 ? q : r).add(v);
      whole.add(v);
    }
    MomentAccumulator left = p;
    left.merge(q);
    left.merge(r);
    MomentAccumulator right = q;
    right.merge(r);
    MomentAccumulator pr = p;
    pr.merge(right);
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    for (const auto* acc : {&left, &pr, &whole}) {
      CHECK(acc->count() == xs.size());
      CHECK(acc->mean_values()[0] == doctest::Approx(m).epsilon(1e-12));
      if (xs.size() > 1)
        CHECK(acc->variance_values()[0] == doctest::Approx(two_pass_variance(xs)).epsilon(1e-12));
    }
  }
}

TEST_CASE("moment accumulator rejects shape mismatch") {
  MomentAccumulator acc(line(4), 1);
  CHECK_THROWS_AS(acc.add(Field(line(5), 1, 0.0)), ConfigError);
  MomentAccumulator other(line(5), 1);
  CHECK_THROWS_AS(acc.merge(other), ConfigError);
}

TEST_CASE("histogram binning and totals") {
  Field f(line(4), 1, 0.0);
  Histogram h({{0, 0, 0}, {3, 0, 0}}, 0, 0.0, 1.0, 4);
  for (double v : {-1.0, 0.0, 0.3, 0.999, 1.0, 2.0}) {
    f(0, 0) = v;
    f(0, 3) = 0.5;
    h.add(f);
  }
  const auto c0 = h.counts(0);
  CHECK(std::vector<std::uint64_t>(c0.begin(), c0.end()) == std::vector<std::uint64_t>{1, 1, 1, 0, 1, 2});
  CHECK(h.counts(1)[3] == 6);
  CHECK(h.total() == 12);
  Histogram g = h;
  g.merge(h);
  CHECK(g.total() == 24);
  CHECK(h.bin_edge(4) == 1.0);
  CHECK_THROWS_AS(Histogram({{0, 0, 0}}, 0, 1.0, 1.0, 4), ConfigError);
}

TEST_CASE("structure function of a sine wave") {
  const int n = 32;
  Field f(line(n), 1, 0.0);
  for_each_interior(f.grid(), [&](const Index3& i) {
    f.at(0, i) = std::sin(2 * std::numbers::pi * cell_center(f.grid(), i)[0]);
  });
  const auto s = structure_function(f, 0, 2.0, 8);
  REQUIRE(s.size() == 9);
  CHECK(s[0] == 0.0);
  for (int h = 1; h <= 8; ++h) {
    const double half = std::numbers::pi * h / n;
    CHECK(s[h] == doctest::Approx(2.0 * std::sin(half) * std::sin(half)).epsilon(1e-12));
  }
  Field c(GridSpec::uniform(2, {8, 8}, {0, 0}, {1, 1}, 2), 1, 0.0);
  for_each_interior(c.grid(), [&](const Index3& i) { c.at(0, i) = 4.0; });
  StructureFunctionAccumulator acc(2.0, 5, 0);
  acc.add(c);
  acc.add(c);
  for (double v : acc.values()) CHECK(v == 0.0);
}

TEST_CASE("load balancing") {
  SUBCASE("even split") {
    const std::vector<double> costs(8, 1.0);
    const auto a = load_balance(costs, 4);
    for (const auto& l : a.per_worker) CHECK(l.size() == 2);
  }
  SUBCASE("single worker") {
    const std::vector<double> costs{3, 1, 2};
    const auto a = load_balance(costs, 1);
    CHECK(a.per_worker[0] == std::vector<std::size_t>{0, 1, 2});
    CHECK(a.makespan == 6.0);
  }
  SUBCASE("worked example") {
    const std::vector<double> costs{5, 4, 3, 3, 3};
    CHECK(load_balance(costs, 2).makespan == 9.0);
  }
  SUBCASE("against brute force") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + static_cast<int>(rng() % 8), W = 1 + static_cast<int>(rng() % 3);
      std::vector<double> costs(static_cast<std::size_t>(n));
      for (double& c : costs) c = 1.0 + static_cast<double>(rng() % 9);
      double best = 1e300;
      std::vector<int> assign(static_cast<std::size_t>(n), 0);
      for (;;) {
        std::vector<double> load(static_cast<std::size_t>(W), 0.0);
        for (int i = 0; i < n; ++i) load[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] += costs[static_cast<std::size_t>(i)];
        best = std::min(best, *std::max_element(load.begin(), load.end()));
        int i = 0;
        while (i < n && ++assign[static_cast<std::size_t>(i)] == W) assign[static_cast<std::size_t>(i++)] = 0;
        if (i == n) break;
      }
      const auto a = load_balance(costs, W);
      std::vector<int> seen(static_cast<std::size_t>(n), 0);
      for (const auto& l : a.per_worker)
        for (std::size_t i : l) ++seen[i];
      for (int s : seen) CHECK(s == 1);
      CHECK(a.makespan <= 4.0 / 3.0 * best + 1e-12);
      CHECK(a.makespan >= best);
    }
  }
  CHECK_THROWS_AS(load_balance(std::vector<double>{}, 2), ConfigError);
  CHECK_THROWS_AS(load_balance(std::vector<double>{1.0}, 0), ConfigError);
}

TEST_CASE("MC without randomness reproduces the deterministic run") {
  const auto cfg = burgers_scheme(0.1);
  const SamplePlan plan{SamplingMethod::MC, 5, 1, 0};
  const auto init = linear_init(1.0, 0.0, 0.5);
  const auto res = run_mc(plan, line(32), cfg, init, {FunctionalSpec{}});
  const auto& acc = std::get<MomentAccumulator>(res.times.back().functionals[0]);
  const Field det = run_simulation(init(line(32), {}), cfg).field;
  CHECK(acc.mean().interior_equal(det));
  for (double v : acc.variance_values()) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("M = 1 gives the single sample exactly") {
  const auto cfg = burgers_scheme(0.05);
  const SamplePlan plan{SamplingMethod::MC, 1, 77, 1};
  const auto init = linear_init(1.0, 0.5, 0.3);
  const auto res = run_mc(plan, line(16), cfg, init, {FunctionalSpec{}});
  const auto& acc = std::get<MomentAccumulator>(res.times.back().functionals[0]);
  const Field single = run_simulation(init(line(16), draw_sample(plan, 0)), cfg).field;
  CHECK(acc.mean().interior_equal(single));
  for (double v : acc.variance_values()) CHECK(v == 0.0);
}

TEST_CASE("estimates do not depend on the worker count") {
  const auto cfg = burgers_scheme(0.05);
  const SamplePlan plan{SamplingMethod::MC, 11, 3, 1};
  const auto init = linear_init(1.0, 0.5, 0.3);
  FunctionalSpec hist;
  hist.kind = FunctionalKind::Histogram;
  hist.name = "pdf";
  hist.probes = {{4, 0, 0}};
  hist.lo = 0.0;
  hist.hi = 2.5;
  hist.bins = 16;
  FunctionalSpec sf;
  sf.kind = FunctionalKind::StructureFunction;
  sf.name = "sf";
  sf.max_offset = 4;
  const std::vector<FunctionalSpec> fs{FunctionalSpec{}, hist, sf};
  UqOptions base;
  base.times = {0.02};
  const auto ref = run_mc(plan, line(16), cfg, init, fs, base);
  REQUIRE(ref.times.size() == 2);
  CHECK(ref.times[0].t == 0.02);
  for (int w : {2, 4}) {
    UqOptions o = base;
    o.workers = w;
    const auto res = run_mc(plan, line(16), cfg, init, fs, o);
    for (std::size_t t = 0; t < 2; ++t) {
      const auto& a = std::get<MomentAccumulator>(ref.times[t].functionals[0]);
      const auto& b = std::get<MomentAccumulator>(res.times[t].functionals[0]);
      CHECK(a.mean_values() == b.mean_values());
      CHECK(a.m2_values() == b.m2_values());
      const auto& ha = std::get<Histogram>(ref.times[t].functionals[1]);
      const auto& hb = std::get<Histogram>(res.times[t].functionals[1]);
      CHECK(std::equal(ha.counts(0).begin(), ha.counts(0).end(), hb.counts(0).begin()));
      CHECK(ha.total() == 11);
      CHECK(std::get<StructureFunctionAccumulator>(ref.times[t].functionals[2]).values() ==
            std::get<StructureFunctionAccumulator>(res.times[t].functionals[2]).values());
    }
  }
}

TEST_CASE("QMC estimate of a linear functional") {
  const auto cfg = burgers_scheme(0.0);
  const SamplePlan plan{SamplingMethod::QMC, 1023, 0, 1};
  const auto res = run_mc(plan, line(4), cfg, linear_init(1.0, 2.0, 0.0), {FunctionalSpec{}});
  const auto& acc = std::get<MomentAccumulator>(res.times.back().functionals[0]);
  CHECK(std::abs(acc.mean_values()[0] - 2.0) < 4e-3);
}

TEST_CASE("a failing sample is reported by index") {
  const auto cfg = burgers_scheme(0.05);
  const SamplePlan plan{SamplingMethod::MC, 6, 3, 1};
  const double bad = draw_sample(plan, 4)[0];
  InitialData init = [&](const GridSpec& g, std::span<const double> r) {
    Field f = linear_init(1.0, 0.5, 0.0)(g, r);
    if (r[0] == bad) f(0, 2) = std::nan("");
    return f;
  };
  for (int w : {1, 3}) {
    UqOptions o;
    o.workers = w;
    try {
      run_mc(plan, line(8), cfg, init, {FunctionalSpec{}}, o);
      FAIL("expected a failure");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("sample 4") != std::string::npos);
    }
  }
}

TEST_CASE("prolongation by injection") {
  Field c(GridSpec::uniform(2, {2, 2}, {0, 0}, {1, 1}, 2), 1, 0.0);
  c(0, 0, 0) = 1;
  c(0, 1, 0) = 2;
  c(0, 0, 1) = 3;
  c(0, 1, 1) = 4;
  const Field f = prolong(c, GridSpec::uniform(2, {4, 4}, {0, 0}, {1, 1}, 2));
  CHECK(f(0, 1, 1) == 1);
  CHECK(f(0, 2, 1) == 2);
  CHECK(f(0, 3, 3) == 4);
  CHECK(f(0, 0, 2) == 3);
}

TEST_CASE("MLMC with one level equals MC bitwise") {
  const auto cfg = burgers_scheme(0.05);
  const auto init = linear_init(1.0, 0.5, 0.3);
  const SamplePlan plan{SamplingMethod::MC, 9, 12, 1};
  const auto mc = run_mc(plan, line(16), cfg, init, {FunctionalSpec{}});
  const MlmcPlan mplan{SamplingMethod::MC, 12, 1, {{line(16), 9}}};
  const auto ml = run_mlmc(mplan, cfg, init);
  const auto& acc = std::get<MomentAccumulator>(mc.times.back().functionals[0]);
  const auto& est = ml.times.back();
  CHECK(est.mean().interior_equal(acc.mean()));
  CHECK(est.variance().interior_equal(acc.variance()));
  CHECK(est.max_correction() == 0.0);
}

TEST_CASE("MLMC with identical levels has vanishing corrections") {
  const auto cfg = burgers_scheme(0.05);
  const auto init = linear_init(1.0, 0.5, 0.3);
  const MlmcPlan plan{SamplingMethod::MC, 4, 1, {{line(16), 8}, {line(16), 4}, {line(16), 2}}};
  UqOptions o;
  o.workers = 2;
  const auto est = run_mlmc(plan, cfg, init, o).times.back();
  CHECK(est.max_correction() <= 1e-12);
  CHECK(est.mean().interior_equal(est.levels[0].mean()));
  CHECK(est.variance().interior_equal(est.levels[0].variance()));
}

TEST_CASE("MLMC estimate of a linear functional") {
  // t_end = 0: E[u] = 1 + 2 E[X0] = 2 at every cell
  const auto cfg = burgers_scheme(0.0);
  const auto init = linear_init(1.0, 2.0, 0.0);
  const MlmcPlan plan{SamplingMethod::MC, 21, 1, {{line(8), 256}, {line(16), 64}, {line(32), 16}}};
  const auto est = run_mlmc(plan, cfg, init).times.back();
  const double se = 2.0 / std::sqrt(12.0 * 256.0);
  for (double m : est.mean().interior_values()) CHECK(std::abs(m - 2.0) <= 3.0 * se);
  CHECK(est.max_correction() <= 1e-12);
  // var of 1 + 2 X0 is 1/3
  for (double v : est.variance().interior_values()) CHECK(std::abs(v - 1.0 / 3.0) < 0.1);
}

TEST_CASE("MLMC plan validation") {
  const auto cfg = burgers_scheme(0.0);
  const auto init = linear_init(1.0, 2.0, 0.0);
  CHECK_THROWS_AS(run_mlmc({SamplingMethod::MC, 0, 1, {}}, cfg, init), ConfigError);
  CHECK_THROWS_AS(run_mlmc({SamplingMethod::MC, 0, 1, {{line(8), 4}, {line(24), 2}}}, cfg, init),
                  ConfigError);
}
