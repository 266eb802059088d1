#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "omk/disorder.hpp"
#include "omk/errors.hpp"

using namespace omk;

namespace {
const FiniteLattice& lattice() {
  static const auto L = build_finite_lattice(16, 11, true);
  return L;
}

OmParams params() {
  auto p = OmParams::from_detuning(2.0, 4.0);
  p.kappa_C = 0.04;
  p.kappa_M = 4.6e-4;
  return p;
}

// A short transfer on a small lattice; only cheap enough for sweep plumbing.
TransferScenario tiny_scenario() {
  ScenarioConfig c;
  c.Nx = 6;
  c.Ny = 4;
  c.emitter = {0, 1, Basis::B};
  c.receiver = {0, 4, Basis::B};
  c.duration_units = 1.5;
  return make_scenario(c);
}
}  // namespace

TEST_CASE("target names") {
  for (auto t : all_targets()) CHECK(target_from_name(target_name(t)) == t);
  CHECK(all_targets().size() == 5);
  CHECK_THROWS_AS(target_from_name("phase"), InvalidArgument);
}

TEST_CASE("zero disorder leaves every site identical") {
  DisorderSpec spec;
  spec.seed = 5;
  const auto sp = sample_disorder(spec, lattice(), params(), 0);
  const auto ref = uniform_sites(lattice(), params());
  CHECK(sp.omega_M == ref.omega_M);
  CHECK(sp.Delta == ref.Delta);
  CHECK(sp.G == ref.G);
  CHECK(sp.kappa_C == ref.kappa_C);
  CHECK(sp.kappa_M == ref.kappa_M);
}

TEST_CASE("multiplier moments") {
  DisorderSpec spec;
  spec.W = 0.1;
  spec.seed = 42;
  std::vector<double> p;
  for (std::uint64_t r = 0; p.size() < 10000; ++r) {
    const auto sp = sample_disorder(spec, lattice(), params(), r);
    for (Eigen::Index i = 0; i < sp.omega_M.size(); ++i) p.push_back(sp.omega_M[i] / 460.0 - 1.0);
  }
  const double mean = std::accumulate(p.begin(), p.end(), 0.0) / p.size();
  double var = 0.0;
  for (double x : p) var += (x - mean) * (x - mean);
  var /= p.size() - 1;
  const double expected = spec.W * spec.W / 12.0;
  CHECK(std::abs(mean) < 0.05 * std::sqrt(expected));
  CHECK(var == doctest::Approx(expected).epsilon(0.05));
  for (double x : p) CHECK(std::abs(x) <= 0.5 * spec.W);
}

TEST_CASE("draws are reproducible and independent per realization and target") {
  DisorderSpec spec;
  spec.W = 0.2;
  spec.seed = 9;
  const auto a = sample_disorder(spec, lattice(), params(), 3);
  const auto b = sample_disorder(spec, lattice(), params(), 3);
  const auto c = sample_disorder(spec, lattice(), params(), 4);
  CHECK(a.omega_M == b.omega_M);
  CHECK(a.kappa_C == b.kappa_C);
  CHECK(a.omega_M != c.omega_M);
  const Eigen::VectorXd ra = a.omega_M / 460.0, rg = a.G / 2.0;
  CHECK((ra - rg).norm() > 0.1);
  CHECK(uniform_draws(1, 2, 5) == uniform_draws(1, 2, 5));
  CHECK(uniform_draws(1, 2, 5) != uniform_draws(2, 2, 5));
}

TEST_CASE("shared draw and restricted targets") {
  DisorderSpec spec;
  spec.W = 0.2;
  spec.seed = 9;
  spec.shared_draw = true;
  const auto a = sample_disorder(spec, lattice(), params(), 0);
  CHECK((a.omega_M / 460.0 - a.G / 2.0).norm() < 1e-12);

  spec.shared_draw = false;
  spec.targets = {DisorderTarget::G};
  const auto b = sample_disorder(spec, lattice(), params(), 0);
  CHECK((b.omega_M.array() == 460.0).all());
  CHECK((b.G.array() != 2.0).any());
}

TEST_CASE("disorder strength limits") {
  DisorderSpec spec;
  spec.W = 2.0;
  CHECK_THROWS_AS(sample_disorder(spec, lattice(), params(), 0), InvalidArgument);
  spec.W = -0.1;
  CHECK_THROWS_AS(sample_disorder(spec, lattice(), params(), 0), InvalidArgument);
}

TEST_CASE("default disorder grid") {
  const auto g = default_W_grid(1.0, 460.0);
  CHECK(g.size() == 6);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == doctest::Approx(3.0 / 460.0));
}

TEST_CASE("fidelity sweep plumbing") {
  const auto sc = tiny_scenario();
  const auto clean = run_transfer(sc);
  DisorderSpec spec;
  spec.seed = 3;
  spec.n_realizations = 3;
  const std::vector<double> W{0.0, 1e-3};
  const auto par = fidelity_sweep(sc, clean, W, spec, Exec::Parallel);
  const auto ser = fidelity_sweep(sc, clean, W, spec, Exec::Serial);
  REQUIRE(par.points.size() == 2);
  CHECK(par.clean_F == clean.F);
  CHECK(par.points[0].mean_F == clean.F);
  CHECK(par.points[0].stderr_F == 0.0);
  for (std::size_t i = 0; i < 2; ++i) CHECK(par.points[i].F == ser.points[i].F);
  CHECK(par.points[1].n == 3);
  const auto again = fidelity_sweep(sc, clean, W, spec, Exec::Parallel);
  CHECK(again.points[1].F == par.points[1].F);
}
