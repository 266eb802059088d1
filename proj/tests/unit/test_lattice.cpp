#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "omk/errors.hpp"
#include "omk/lattice.hpp"

using namespace omk;
using std::numbers::pi;

TEST_CASE("finite lattice site counts") {
  CHECK(build_finite_lattice(2, 2, false).size() == 12);
  CHECK(build_finite_lattice(2, 2, true).size() == 10);
  const auto L = build_finite_lattice(16, 11, true);
  CHECK(L.size() == 512);
  CHECK(L.edges.size() == 971);
  CHECK_THROWS_AS(build_finite_lattice(1, 5, true), InvalidArgument);
  CHECK_THROWS_AS(build_finite_lattice(5, 1, true), InvalidArgument);
}

TEST_CASE("site ordering is row-major by cell then basis") {
  const auto L = build_finite_lattice(3, 2, true);
  CHECK(L.sites[0].s == Basis::B);
  CHECK(L.sites[1].s == Basis::C);
  CHECK(L.sites[2].n == 1);
  for (std::size_t i = 0; i < L.size(); ++i)
    CHECK(L.index_of(L.sites[i].m, L.sites[i].n, L.sites[i].s) == i);
  CHECK_FALSE(L.contains(0, 0, Basis::A));
  CHECK_THROWS_AS(L.index_of(0, 0, Basis::A), InvalidArgument);
}

TEST_CASE("bond list equals a brute-force unit-distance scan") {
  for (bool trim : {false, true}) {
    const auto L = build_finite_lattice(6, 5, trim);
    std::set<std::pair<std::size_t, std::size_t>> brute;
    for (std::size_t i = 0; i < L.size(); ++i)
      for (std::size_t j = i + 1; j < L.size(); ++j)
        if (std::abs((L.sites[i].r - L.sites[j].r).norm() - 1.0) < 1e-9) brute.insert({i, j});
    const std::set<std::pair<std::size_t, std::size_t>> built(L.edges.begin(), L.edges.end());
    CHECK(built.size() == L.edges.size());
    CHECK(built == brute);

    const auto nb = L.neighbours();
    for (std::size_t i = 0; i < L.size(); ++i) {
      for (auto j : nb[i]) CHECK(std::count(nb[j].begin(), nb[j].end(), i) == 1);
      CHECK(nb[i].size() <= 4);
      if (!L.boundary_mask[i]) CHECK(nb[i].size() == 4);
    }
  }
}

TEST_CASE("A sites bond to B and C of their own and adjacent cells") {
  const auto L = build_finite_lattice(2, 2, false);
  const auto nb = L.neighbours();
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (L.sites[i].s != Basis::A) continue;
    for (auto j : nb[i]) CHECK(L.sites[j].s != Basis::A);
  }
}

TEST_CASE("reciprocal vectors are dual to the lattice vectors") {
  KagomeGeometry g;
  auto [b1, b2] = g.reciprocal();
  CHECK(g.R1().dot(b1) == doctest::Approx(2 * pi));
  CHECK(g.R2().dot(b2) == doctest::Approx(2 * pi));
  CHECK(std::abs(g.R1().dot(b2)) < 1e-12);
  CHECK(std::abs(g.R2().dot(b1)) < 1e-12);
}

TEST_CASE("delta_OM round trip") {
  auto p = OmParams::from_detuning(2.0, 4.0);
  CHECK(p.delta_OM() == doctest::Approx(4.0));
  CHECK(p.Delta == doctest::Approx(-4.0 - 400.0 - 460.0 - 1.0));
}

TEST_CASE("synthetic flux") {
  OmParams p;
  p.G = 0.0;
  CHECK(compute_flux(p) == 0.0);

  p.G = 2.0;
  p.Delta = -40.0 - p.omega_M;
  const double expected = 3.0 * std::atan(std::sqrt(3.0) * 800.0 / (800.0 - 3200.0));
  CHECK(compute_flux(p) == doctest::Approx(expected).epsilon(1e-14));

  p.delta_theta = -p.delta_theta;
  CHECK(compute_flux(p) == doctest::Approx(-expected).epsilon(1e-14));

  // J G^2 = 2 K (Delta + omega_M)^2
  p.delta_theta = 2 * pi / 3;
  p.G = std::sqrt(2.0 * 1600.0 / p.J);
  CHECK(compute_flux(p) == doctest::Approx(1.5 * pi));
  p.delta_theta = -p.delta_theta;
  CHECK(compute_flux(p) == doctest::Approx(-1.5 * pi));
}

TEST_CASE("flux is continuous in G away from the singular point") {
  OmParams p;
  p.Delta = -40.0 - p.omega_M;
  double prev = 0.0;
  for (double G = 0.01; G < 3.5; G += 0.01) {
    p.G = G;
    const double f = compute_flux(p);
    if (std::abs(p.J * G * G - 3200.0) > 50.0 && G > 0.011) CHECK(std::abs(f - prev) < 0.2);
    prev = f;
  }
}

TEST_CASE("optically induced hopping") {
  OmParams p;
  p.G = 2.0;
  p.Delta = -400.0 - p.omega_M;
  const auto h = optical_induced_hopping(p);
  CHECK(std::abs(h.K_opt) == doctest::Approx(0.005));
  CHECK(std::arg(h.K_opt) == doctest::Approx(2 * pi / 3));
  CHECK(h.validity_ratio == doctest::Approx(0.5));

  OmParams q = p;
  q.delta_theta = -p.delta_theta;
  CHECK(std::abs(optical_induced_hopping(q).K_opt - std::conj(h.K_opt)) < 1e-15);

  q = p;
  q.G = 0.0;
  CHECK(optical_induced_hopping(q).K_opt == cplx(0.0));

  q = p;
  q.G = 2.5;
  CHECK(std::abs(optical_induced_hopping(q).K_opt) > std::abs(h.K_opt));
  q = p;
  q.Delta = -500.0 - p.omega_M;
  CHECK(std::abs(optical_induced_hopping(q).K_opt) < std::abs(h.K_opt));

  q.Delta = -q.omega_M;
  CHECK_THROWS_AS(optical_induced_hopping(q), RegimeError);
}

TEST_CASE("stability criterion") {
  auto p = OmParams::from_detuning(2.0, 4.0);
  p.kappa_C = 0.2;
  p.kappa_M = decay_rate(p.omega_M, 1e6);
  const auto r = check_stability(p);
  CHECK(r.delta_K == doctest::Approx(924.0));
  CHECK(r.required_kappa_M == doctest::Approx(0.2 * 4.0 / (924.0 * 924.0)));
  CHECK(r.required_kappa_M == doctest::Approx(9.4e-7).epsilon(0.01));
  CHECK(r.stable);

  p.kappa_M = 0.5 * r.required_kappa_M;
  CHECK_FALSE(check_stability(p).stable);

  p.G = 0.0;
  p.kappa_M = 0.0;
  CHECK(check_stability(p).required_kappa_M == 0.0);
  CHECK(check_stability(p).stable);

  auto q = OmParams::from_detuning(2.0, 4.0);
  q.kappa_C = 0.1;
  const double base = check_stability(q).required_kappa_M;
  q.kappa_C = 0.2;
  CHECK(check_stability(q).required_kappa_M > base);
  q.G = 3.0;
  CHECK(check_stability(q).required_kappa_M > 2.0 * base);

  q = OmParams::from_detuning(2.0, -2000.0);
  CHECK_THROWS_AS(check_stability(q), RegimeError);
}

TEST_CASE("effective spin coupling") {
  SpinDriveParams s{0.3, 0.8, 4.0, 100.0, 360.0};
  const auto c = effective_spin_coupling(s);
  CHECK(c.g_sp == doctest::Approx(0.06));
  CHECK(c.omega_0 == doctest::Approx(460.0));
  s.delta_drive = 8.0;
  CHECK(effective_spin_coupling(s).g_sp == doctest::Approx(0.03));
  s.Omega = 0.0;
  CHECK(effective_spin_coupling(s).g_sp == 0.0);
  s.delta_drive = 0.0;
  CHECK_THROWS_AS(effective_spin_coupling(s), InvalidArgument);
}

TEST_CASE("decay rates from quality factors") {
  CHECK(decay_rate(2e6, 5e7) == doctest::Approx(0.04));
  CHECK_THROWS_AS(decay_rate(1.0, 0.0), InvalidArgument);
}

TEST_CASE("parameter json round trip") {
  auto p = OmParams::from_detuning(1.7, 5.0);
  p.kappa_C = 0.04;
  nlohmann::json j = p;
  const auto q = j.get<OmParams>();
  CHECK(q.Delta == p.Delta);
  CHECK(q.G == p.G);
  CHECK(q.kappa_C == p.kappa_C);

  nlohmann::json d = {{"G", 2.0}, {"delta_OM", 3.0}};
  CHECK(d.get<OmParams>().delta_OM() == doctest::Approx(3.0));

  nlohmann::json bad = {{"G", 2.0}, {"gamma", 1.0}};
  CHECK_THROWS_AS(bad.get<OmParams>(), InvalidArgument);
  nlohmann::json both = {{"Delta", -900.0}, {"delta_OM", 3.0}};
  CHECK_THROWS_AS(both.get<OmParams>(), InvalidArgument);
  nlohmann::json wrong = {{"G", "two"}};
  CHECK_THROWS_AS(wrong.get<OmParams>(), InvalidArgument);

  SpinDriveParams s{0.3, 0.8, 4.0, 1.0, 2.0};
  nlohmann::json js = s;
  CHECK(js.get<SpinDriveParams>().Omega == 0.8);
}

TEST_CASE("parameter validation") {
  OmParams p;
  CHECK_NOTHROW(p.validate());
  p.K = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = OmParams{};
  p.Delta = 1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = OmParams{};
  p.kappa_C = -1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
