#include "conslaw/numerics.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"

using namespace conslaw;

namespace {

const ReconstructionKind kNone{ReconstructionType::None};
const ReconstructionKind kWeno2{ReconstructionType::WENO2};
const ReconstructionKind kWeno3{ReconstructionType::WENO3};

/// HLLC in 1D written from the star-pressure form of the flux:
/// F*_K = (s* (s_K U_K - F_K) + s_K p*_K D*) / (s_K - s*), D* = (0, 1, s*).
std::array<double, 3> hllc_oracle(double rl, double ul, double pl, double rr, double ur,
                                  double pr, double gamma) {
  const double el = pl / (gamma - 1) + 0.5 * rl * ul * ul;
  const double er = pr / (gamma - 1) + 0.5 * rr * ur * ur;
  const double cl = std::sqrt(gamma * pl / rl), cr = std::sqrt(gamma * pr / rr);
  const double sl = std::min(ul - cl, ur - cr), sr = std::max(ul + cl, ur + cr);
  const double ss = (pr - pl + rl * ul * (sl - ul) - rr * ur * (sr - ur)) /
                    (rl * (sl - ul) - rr * (sr - ur));
  const std::array<double, 3> UL{rl, rl * ul, el}, UR{rr, rr * ur, er};
  const std::array<double, 3> FL{rl * ul, rl * ul * ul + pl, (el + pl) * ul};
  const std::array<double, 3> FR{rr * ur, rr * ur * ur + pr, (er + pr) * ur};
  if (sl >= 0) return FL;
  if (sr <= 0) return FR;
  auto star = [&](const auto& U, const auto& F, double r, double u, double p, double s) {
    const double pstar = p + r * (s - u) * (ss - u);
    const std::array<double, 3> D{0.0, 1.0, ss};
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) out[c] = (ss * (s * U[c] - F[c]) + s * pstar * D[c]) / (s - ss);
    return out;
  };
  return ss >= 0 ? star(UL, FL, rl, ul, pl, sl) : star(UR, FR, rr, ur, pr, sr);
}

Field line(std::vector<double> v, int ghost = 2) {
  Field f(GridSpec::uniform(1, {static_cast<int>(v.size())}, {0}, {1}, ghost), 1, 0.0);
  for (int i = 0; i < static_cast<int>(v.size()); ++i) f(0, i) = v[static_cast<std::size_t>(i)];
  fill_boundary(f, {BoundaryKind::Outflow});
  return f;
}

}  // namespace

TEST_CASE("constant fields reconstruct exactly for every kind") {
  for (const auto& kind : {kNone, kWeno2, kWeno3}) {
    Field f(GridSpec::uniform(2, {5, 4}, {0, 0}, {1, 1}, 2), 3, 0.0);
    for (int c = 0; c < 3; ++c)
      for_each_interior(f.grid(), [&](const Index3& i) { f.at(c, i) = 0.1 * (c + 1); });
    fill_boundary(f, {BoundaryKind::Periodic, BoundaryKind::Periodic, BoundaryKind::Periodic});
    for (int axis = 0; axis < 2; ++axis) {
      const auto pairs = reconstruct(f, axis, kind);
      CHECK(pairs.size() == static_cast<std::size_t>(axis == 0 ? 4 * 6 : 5 * 5));
      for (const auto& p : pairs)
        for (int c = 0; c < 3; ++c) {
          CHECK(p.uL[c] == 0.1 * (c + 1));
          CHECK(p.uR[c] == 0.1 * (c + 1));
        }
    }
  }
}

TEST_CASE("piecewise constant pairs are the neighbouring cells") {
  const auto pairs = reconstruct(line({1, 2, 3, 4}, 1), 0, kNone);
  REQUIRE(pairs.size() == 5);
  CHECK(pairs[0].uL[0] == 1);  // outflow ghost
  CHECK(pairs[0].uR[0] == 1);
  CHECK(pairs[2].uL[0] == 2);
  CHECK(pairs[2].uR[0] == 3);
}

TEST_CASE("WENO reconstructs linear data exactly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (const auto& kind : {kWeno2, kWeno3}) {
    for (int t = 0; t < 50; ++t) {
      const double a = 3.0 * coef(rng), b = coef(rng);
      const int n = 12;
      Field f(GridSpec::uniform(1, {n}, {0}, {1}, 2), 1, 0.0);
      for (int i = -2; i < n + 2; ++i) f(0, i) = a + b * i;
      const auto pairs = reconstruct(f, 0, kind);
      for (int q = 0; q <= n; ++q) {
        // interface q sits at index position q - 1/2
        const double exact = a + b * (q - 0.5);
        CHECK(std::abs(pairs[q].uL[0] - exact) < 1e-10);
        CHECK(std::abs(pairs[q].uR[0] - exact) < 1e-10);
      }
    }
  }
}

TEST_CASE("WENO3 introduces no new extrema at a step") {
  // brute force over random step profiles; the overshoot allowed is the
  // epsilon^2 leakage of the crossing substencil
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> level(-5.0, 5.0);
  for (int t = 0; t < 2000; ++t) {
    const double lo = level(rng);
    double hi = level(rng);
    if (std::abs(hi - lo) < 0.1) hi = lo + 0.1;
    const int n = 10;
    const int jump = 2 + static_cast<int>(rng() % 6);
    Field f(GridSpec::uniform(1, {n}, {0}, {1}, 2), 1, 0.0);
    for (int i = -2; i < n + 2; ++i) f(0, i) = i < jump ? lo : hi;
    const auto pairs = reconstruct(f, 0, kWeno3);
    const double tol = 1e-8 * std::abs(hi - lo);
    for (int q = 0; q <= n; ++q) {
      const double a = f(0, q - 1), b = f(0, q);
      const double mn = std::min(a, b) - tol, mx = std::max(a, b) + tol;
      CHECK(pairs[q].uL[0] >= mn);
      CHECK(pairs[q].uL[0] <= mx);
      CHECK(pairs[q].uR[0] >= mn);
      CHECK(pairs[q].uR[0] <= mx);
    }
  }
}

TEST_CASE("WENO weights") {
  SUBCASE("equal smoothness gives ideal weights") {
    const std::array<double, 3> flat{2.0, 2.0, 2.0};
    const auto w3 = weno_weights(flat, kWeno3);
    CHECK(w3[0] == 1.0 / 3.0);
    CHECK(w3[1] == 2.0 / 3.0);
    const auto w2 = weno_weights(flat, kWeno2);
    CHECK(w2[0] == 0.5);
    CHECK(w2[1] == 0.5);
    const std::array<double, 3> symmetric{1.0, 2.0, 1.0};
    CHECK(weno_weights(symmetric, kWeno3)[1] == 2.0 / 3.0);
  }
  SUBCASE("substencil across a jump is suppressed") {
    for (const auto& kind : {kWeno2, kWeno3}) {
      // jump measured on the smoothness indicator scale: beta = 1e3 * epsilon
      for (double beta : {1e3 * kind.epsilon, 1e-1, 1.0, 1e4}) {
        const double jump = std::sqrt(beta);
        const std::array<double, 3> right_jump{1.0, 1.0, 1.0 + jump};
        const auto w = weno_weights(right_jump, kind);
        CHECK(w[1] < 1e-4 * w[0]);
        const std::array<double, 3> left_jump{1.0 - jump, 1.0, 1.0};
        const auto v = weno_weights(left_jump, kind);
        CHECK(v[0] < 1e-4 * v[1]);
      }
    }
  }
  SUBCASE("random stencils: nonnegative, normalised within 4 ulps") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::uniform_int_distribution<int> scale(-8, 8);
    int failures = 0;
    for (int t = 0; t < 100000; ++t) {
      const double s = std::ldexp(1.0, scale(rng));
      const std::array<double, 3> c{s * val(rng), s * val(rng), s * val(rng)};
      const auto w = weno_weights(c, t % 2 ? kWeno3 : kWeno2);
      const double sum = w[0] + w[1];
      if (!(w[0] >= 0.0 && w[1] >= 0.0) ||
          std::abs(sum - 1.0) > 4 * std::numeric_limits<double>::epsilon())
        ++failures;
    }
    CHECK(failures == 0);
  }
}

TEST_CASE("stencil radius must fit in the ghost layer") {
  Field f(GridSpec::uniform(1, {6}, {0}, {1}, 1), 1, 1.0);
  CHECK_THROWS_AS(reconstruct(f, 0, kWeno3), ConfigError);
  CHECK_NOTHROW(reconstruct(f, 0, kNone));
}

TEST_CASE("Rusanov flux") {
  const auto burgers = EquationModel::burgers(1);
  CHECK(rusanov_flux(burgers, {State{1.0}, State{0.0}}, 0)[0] == 0.75);
  CHECK(rusanov_flux(burgers, {State{-1.0}, State{1.0}}, 0)[0] == -0.5);
}

TEST_CASE("flux consistency is bitwise") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(0.05, 5.0), vel(-3.0, 3.0);
  for (int dim = 1; dim <= 3; ++dim) {
    const auto m = EquationModel::euler(dim);
    for (int t = 0; t < 300; ++t) {
      const State u = primitive_to_conserved(m, {pos(rng), {vel(rng), vel(rng), vel(rng)}, pos(rng)});
      for (int axis = 0; axis < dim; ++axis) {
        const State f = physical_flux(m, u, axis);
        CHECK(rusanov_flux(m, {u, u}, axis) == f);
        CHECK(hllc_flux(m, {u, u}, axis) == f);
      }
    }
  }
  const auto b = EquationModel::burgers(1);
  CHECK(rusanov_flux(b, {State{0.3}, State{0.3}}, 0) == physical_flux(b, State{0.3}, 0));
}

TEST_CASE("HLLC mirror symmetry gives zero mass flux") {
  const auto m = EquationModel::euler(2);
  for (double v : {0.3, -0.7, 2.5}) {
    const State l = primitive_to_conserved(m, {1.3, {v, 0.2, 0}, 0.9});
    const State r = primitive_to_conserved(m, {1.3, {-v, 0.2, 0}, 0.9});
    CHECK(std::abs(hllc_flux(m, {l, r}, 0)[0]) < 1e-15);
  }
}

TEST_CASE("HLLC matches the straight-line oracle") {
  const auto m = EquationModel::euler(1, 1.4);
  auto check = [&](double rl, double ul, double pl, double rr, double ur, double pr) {
    const State L = primitive_to_conserved(m, {rl, {ul, 0, 0}, pl});
    const State R = primitive_to_conserved(m, {rr, {ur, 0, 0}, pr});
    const State f = hllc_flux(m, {L, R}, 0);
    const auto o = hllc_oracle(rl, ul, pl, rr, ur, pr, 1.4);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(f[c] - o[c]) <= 1e-12 * (1.0 + std::abs(o[c])));
  };
  check(1.0, 0.0, 1.0, 0.125, 0.0, 0.1);  // Sod
  check(0.125, 0.0, 0.1, 1.0, 0.0, 1.0);  // reversed Sod
  check(1.0, -2.0, 0.4, 1.0, 2.0, 0.4);   // 123 problem
  check(1.0, 3.0, 1.0, 0.5, 2.5, 0.8);    // supersonic right-moving
  check(1.0, -3.0, 1.0, 0.5, -2.5, 0.8);  // supersonic left-moving
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(0.05, 5.0), vel(-3.0, 3.0);
  for (int t = 0; t < 500; ++t) check(pos(rng), vel(rng), pos(rng), pos(rng), vel(rng), pos(rng));
}

TEST_CASE("HLLC rejects scalar equations") {
  CHECK_THROWS_AS(hllc_flux(EquationModel::burgers(1), {State{1.0}, State{0.0}}, 0), ConfigError);
  CHECK_THROWS_AS(check_flux_compatible(FluxKind::HLLC, EquationModel::burgers(1)), ConfigError);
  CHECK_THROWS_AS(rusanov_flux(EquationModel::euler(1), {State{-1.0, 0, 1}, State{1, 0, 1}}, 0),
                  UnphysicalState);
}
