#include "omk/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "omk/errors.hpp"

namespace omk {

namespace {
constexpr double kSqrt3 = std::numbers::sqrt3;
constexpr double kPi = std::numbers::pi;
}  // namespace

double Vec2::norm() const { return std::hypot(x, y); }

const char* basis_name(Basis s) {
  switch (s) {
    case Basis::A: return "A";
    case Basis::B: return "B";
    case Basis::C: return "C";
  }
  return "?";
}

Basis basis_from_char(char c) {
  switch (c) {
    case 'A': case 'a': return Basis::A;
    case 'B': case 'b': return Basis::B;
    case 'C': case 'c': return Basis::C;
    default: throw InvalidArgument(std::string("unknown basis site '") + c + "'");
  }
}

Vec2 KagomeGeometry::R1() const { return {-a, -kSqrt3 * a}; }
Vec2 KagomeGeometry::R2() const { return {2.0 * a, 0.0}; }

Vec2 KagomeGeometry::offset(Basis s) const {
  switch (s) {
    case Basis::A: return {0.0, 0.0};
    case Basis::B: return R1() * 0.5;
    case Basis::C: return (R1() + R2()) * 0.5;
  }
  return {};
}

std::pair<Vec2, Vec2> KagomeGeometry::reciprocal() const {
  const Vec2 r1 = R1(), r2 = R2();
  const double det = r1.x * r2.y - r1.y * r2.x;
  const double f = 2.0 * kPi / det;
  return {Vec2{r2.y * f, -r2.x * f}, Vec2{-r1.y * f, r1.x * f}};
}

Vec2 KagomeGeometry::position(int m, int n, Basis s) const {
  return R1() * m + R2() * n + offset(s);
}

OmParams OmParams::from_detuning(double G, double delta_OM, double J, double omega_M,
                                 double K) {
  OmParams p;
  p.G = G;
  p.J = J;
  p.omega_M = omega_M;
  p.K = K;
  p.Delta = -delta_OM - 2.0 * J - omega_M - K;
  return p;
}

OmParams OmParams::lossless() const {
  OmParams q = *this;
  q.kappa_C = 0.0;
  q.kappa_M = 0.0;
  return q;
}

void OmParams::validate() const {
  if (!(K > 0.0)) throw InvalidArgument("K must be positive");
  if (!(J > 0.0)) throw InvalidArgument("J must be positive");
  if (!(Delta < 0.0)) throw InvalidArgument("Delta must be negative (red-detuned drive)");
  if (kappa_C < 0.0 || kappa_M < 0.0) throw InvalidArgument("decay rates must be non-negative");
  for (double v : {omega_M, Delta, G, J, K, kappa_C, kappa_M, delta_theta})
    if (!std::isfinite(v)) throw InvalidArgument("non-finite crystal parameter");
}

double decay_rate(double omega, double quality_factor) {
  if (!(quality_factor > 0.0)) throw InvalidArgument("quality factor must be positive");
  return omega / quality_factor;
}

std::size_t FiniteLattice::index_of(int m, int n, Basis s) const {
  if (!contains(m, n, s))
    throw InvalidArgument("site (" + std::to_string(m) + "," + std::to_string(n) + "," +
                          basis_name(s) + ") is not part of the lattice");
  return static_cast<std::size_t>(lookup_[(static_cast<std::size_t>(m) * Nx + n) * 3 +
                                          static_cast<int>(s)]);
}

bool FiniteLattice::contains(int m, int n, Basis s) const {
  if (m < 0 || m >= Ny || n < 0 || n >= Nx) return false;
  return lookup_[(static_cast<std::size_t>(m) * Nx + n) * 3 + static_cast<int>(s)] >= 0;
}

std::vector<std::vector<std::size_t>> FiniteLattice::neighbours() const {
  std::vector<std::vector<std::size_t>> nb(sites.size());
  for (auto [i, j] : edges) {
    nb[i].push_back(j);
    nb[j].push_back(i);
  }
  for (auto& v : nb) std::sort(v.begin(), v.end());
  return nb;
}

FiniteLattice build_finite_lattice(int Nx, int Ny, bool trim_top_A) {
  if (Nx < 2 || Ny < 2)
    throw InvalidArgument("finite lattice needs Nx >= 2 and Ny >= 2");

  FiniteLattice L;
  L.Nx = Nx;
  L.Ny = Ny;
  L.removed_A_rows = trim_top_A;
  L.lookup_.assign(static_cast<std::size_t>(Nx) * Ny * 3, -1);

  for (int m = 0; m < Ny; ++m)
    for (int n = 0; n < Nx; ++n)
      for (int s = 0; s < 3; ++s) {
        if (trim_top_A && m == 0 && s == 0) continue;
        const auto b = static_cast<Basis>(s);
        L.lookup_[(static_cast<std::size_t>(m) * Nx + n) * 3 + s] =
            static_cast<long>(L.sites.size());
        L.sites.push_back({m, n, b, L.geometry.position(m, n, b), false});
      }

  auto bond = [&](int m1, int n1, Basis s1, int m2, int n2, Basis s2) {
    if (!L.contains(m1, n1, s1) || !L.contains(m2, n2, s2)) return;
    std::size_t i = L.index_of(m1, n1, s1), j = L.index_of(m2, n2, s2);
    if (i > j) std::swap(i, j);
    L.edges.emplace_back(i, j);
  };
  using enum Basis;
  for (int m = 0; m < Ny; ++m)
    for (int n = 0; n < Nx; ++n) {
      bond(m, n, A, m, n, B);
      bond(m, n, A, m, n, C);
      bond(m, n, B, m, n, C);
      bond(m, n, A, m - 1, n, B);
      bond(m, n, A, m - 1, n - 1, C);
      bond(m, n, B, m, n - 1, C);
    }
  std::sort(L.edges.begin(), L.edges.end());

  std::vector<int> degree(L.sites.size(), 0);
  for (auto [i, j] : L.edges) {
    ++degree[i];
    ++degree[j];
  }
  L.boundary_mask.resize(L.sites.size());
  for (std::size_t i = 0; i < L.sites.size(); ++i) {
    L.boundary_mask[i] = degree[i] < 4;
    L.sites[i].boundary = L.boundary_mask[i];
  }
  return L;
}

double compute_flux(const OmParams& p) {
  const double sgn = p.delta_theta >= 0.0 ? 1.0 : -1.0;
  const double JG2 = p.J * p.G * p.G;
  const double w = p.Delta + p.omega_M;
  const double den = JG2 - 2.0 * p.K * w * w;
  const double num = kSqrt3 * JG2;
  if (num == 0.0) return 0.0;
  const double scale = std::max(JG2, 2.0 * p.K * w * w);
  if (std::abs(den) <= 1e-14 * scale) return sgn * 1.5 * kPi;
  return sgn * 3.0 * std::atan(num / den);
}

InducedHopping optical_induced_hopping(const OmParams& p) {
  const double w = p.omega_M + p.Delta;
  if (w == 0.0) throw RegimeError("optically induced hopping diverges at omega_M + Delta = 0");
  const double mag = p.G * p.G * p.J / (w * w);
  return {std::polar(mag, p.delta_theta), p.J / std::abs(w)};
}

StabilityReport check_stability(const OmParams& p) {
  StabilityReport r;
  r.delta_K = p.delta_OM() + 2.0 * p.omega_M;
  if (!(r.delta_K > 0.0))
    throw RegimeError("delta_OM + 2 omega_M must be positive for the rotating-wave picture");
  r.required_kappa_M = p.kappa_C * p.G * p.G / (r.delta_K * r.delta_K);
  r.stable = p.kappa_M >= r.required_kappa_M;
  r.margin_ratio = r.required_kappa_M > 0.0 ? p.kappa_M / r.required_kappa_M
                                            : std::numeric_limits<double>::infinity();
  return r;
}

SpinCoupling effective_spin_coupling(const SpinDriveParams& s) {
  if (s.delta_drive == 0.0) throw InvalidArgument("Raman detuning must be nonzero");
  SpinCoupling c;
  c.g_sp = s.g_s * s.Omega / s.delta_drive;
  c.omega_0 = s.omega_d + s.omega_B;
  if (std::abs(s.delta_drive) < 4.0 * std::max(std::abs(s.g_s), std::abs(s.Omega)))
    c.warnings.push_back("adiabatic elimination questionable: |delta| < 4 max(|g_s|, |Omega|)");
  return c;
}

namespace {
void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys,
                    const char* what) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw InvalidArgument(std::string("unknown key '") + it.key() + "' in " + what);
  }
}

double number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw InvalidArgument(std::string("key '") + key + "' must be a number");
  return j.at(key).get<double>();
}
}  // namespace

void to_json(nlohmann::json& j, const OmParams& p) {
  j = {{"omega_M", p.omega_M}, {"Delta", p.Delta},     {"G", p.G},
       {"J", p.J},             {"K", p.K},             {"kappa_C", p.kappa_C},
       {"kappa_M", p.kappa_M}, {"delta_theta", p.delta_theta}};
}

// Accepts either Delta or delta_OM (not both).
void from_json(const nlohmann::json& j, OmParams& p) {
  reject_unknown(j, {"omega_M", "Delta", "delta_OM", "G", "J", "K", "kappa_C", "kappa_M",
                     "delta_theta"},
                 "params");
  if (j.contains("Delta") && j.contains("delta_OM"))
    throw InvalidArgument("give either Delta or delta_OM, not both");
  OmParams d;
  p.omega_M = number(j, "omega_M", d.omega_M);
  p.G = number(j, "G", d.G);
  p.J = number(j, "J", d.J);
  p.K = number(j, "K", d.K);
  p.kappa_C = number(j, "kappa_C", d.kappa_C);
  p.kappa_M = number(j, "kappa_M", d.kappa_M);
  p.delta_theta = number(j, "delta_theta", d.delta_theta);
  if (j.contains("delta_OM"))
    p.Delta = -number(j, "delta_OM", 0.0) - 2.0 * p.J - p.omega_M - p.K;
  else
    p.Delta = number(j, "Delta", -d.delta_OM() - 2.0 * p.J - p.omega_M - p.K);
}

void to_json(nlohmann::json& j, const SpinDriveParams& s) {
  j = {{"g_s", s.g_s},
       {"Omega", s.Omega},
       {"delta_drive", s.delta_drive},
       {"omega_d", s.omega_d},
       {"omega_B", s.omega_B}};
}

void from_json(const nlohmann::json& j, SpinDriveParams& s) {
  reject_unknown(j, {"g_s", "Omega", "delta_drive", "omega_d", "omega_B"}, "spin drive");
  s.g_s = number(j, "g_s", 0.0);
  s.Omega = number(j, "Omega", 0.0);
  s.delta_drive = number(j, "delta_drive", 0.0);
  s.omega_d = number(j, "omega_d", 0.0);
  s.omega_B = number(j, "omega_B", 0.0);
}

}  // namespace omk
