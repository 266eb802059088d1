#include "omk/stripe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace omk {

namespace {
constexpr double kPi = std::numbers::pi;
const cplx I{0.0, 1.0};
constexpr int kFitCells = 6;

double wrap_kx(double k) {
  // Stripe Hamiltonian is pi/a periodic; map into (0, pi].
  double w = std::fmod(k, kPi);
  if (w <= 0.0) w += kPi;
  return w;
}

// Position of (m, s) in one sector; -1 for the removed A site of row 0.
int sector_index(int m, Basis s) {
  if (m == 0) return s == Basis::A ? -1 : static_cast<int>(s) - 1;
  return 3 * m - 1 + static_cast<int>(s);
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solve(const Eigen::MatrixXcd& H, bool vectors) {
  const Eigen::MatrixXcd herm = 0.5 * (H + H.adjoint());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(
      herm, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
}

double row_center(const Eigen::VectorXcd& psi, int N_y) {
  const auto sites = stripe_sites(N_y);
  const std::size_t n = sites.size();
  double c = 0.0, w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pw = std::norm(psi[i]) + std::norm(psi[n + i]);
    c += pw * sites[i].m;
    w += pw;
  }
  return c / w;
}
}  // namespace

const char* side_name(EdgeSide s) { return s == EdgeSide::Upper ? "upper" : "lower"; }

std::vector<StripeSite> stripe_sites(int N_y) {
  std::vector<StripeSite> out;
  out.reserve(3 * N_y - 1);
  for (int m = 0; m < N_y; ++m)
    for (int s = 0; s < 3; ++s) {
      if (m == 0 && s == 0) continue;
      out.push_back({m, static_cast<Basis>(s)});
    }
  return out;
}

std::optional<std::string> stripe_depth_warning(int N_y) {
  if (N_y < 8)
    return "N_y = " + std::to_string(N_y) + " < 8: states of opposite edges may hybridize";
  return std::nullopt;
}

StripeMatrix stripe_hamiltonian(const OmParams& p, double k_x, int N_y) {
  if (N_y < 2) throw InvalidArgument("stripe needs N_y >= 2");
  const int n = 3 * N_y - 1;
  StripeMatrix S{k_x, N_y, Eigen::MatrixXcd::Zero(2 * n, 2 * n)};
  auto& H = S.H;
  auto add = [&](int i, int j, cplx v) {
    H(i, j) += v;
    H(j, i) += std::conj(v);
  };
  const cplx wrap_ab = std::exp(2.0 * I * k_x);
  const cplx bc_phase = 1.0 + std::exp(-2.0 * I * k_x);

  using enum Basis;
  for (int sector = 0; sector < 2; ++sector) {
    const int off = sector * n;
    const double t = sector == 0 ? p.K : p.J;
    for (int m = 0; m < N_y; ++m) {
      if (m > 0) {
        const int a = off + sector_index(m, A);
        add(a, off + sector_index(m, B), t);
        add(a, off + sector_index(m, C), t);
        add(a, off + sector_index(m - 1, B), t * wrap_ab);
        add(a, off + sector_index(m - 1, C), t);
      }
      add(off + sector_index(m, B), off + sector_index(m, C), t * bc_phase);
    }
  }
  const auto sites = stripe_sites(N_y);
  for (int i = 0; i < n; ++i) {
    H(i, i) = cplx(p.omega_M, -0.5 * p.kappa_M);
    H(n + i, n + i) = cplx(-p.Delta, -0.5 * p.kappa_C);
    const cplx g = std::polar(p.G, p.drive_phase(sites[i].s));
    H(n + i, i) = g;
    H(i, n + i) = std::conj(g);
  }
  return S;
}

std::vector<double> default_kx_grid(int n) {
  if (n < 2) throw InvalidArgument("k_x grid needs at least two points");
  std::vector<double> k(n);
  for (int i = 0; i < n; ++i) k[i] = -kPi / 2.0 + kPi * (i + 1) / n;
  return k;
}

StripeBands stripe_bands(const OmParams& p, int N_y, const std::vector<double>& k_x, Exec exec,
                         bool keep_vectors) {
  if (k_x.empty()) throw InvalidArgument("empty k_x grid");
  StripeBands b;
  b.params = p;
  b.N_y = N_y;
  b.k_x = k_x;
  const std::size_t nk = k_x.size();
  b.energies.resize(nk);
  b.phonon_weight.resize(nk);
  b.center.resize(nk);
  if (keep_vectors) b.vectors.resize(nk);
  const int n = 3 * N_y - 1;
  for_each_index(nk, exec, [&](std::size_t i) {
    const auto es = solve(stripe_hamiltonian(p, k_x[i], N_y).H, true);
    const auto& V = es.eigenvectors();
    b.energies[i] = es.eigenvalues();
    b.phonon_weight[i].resize(2 * n);
    b.center[i].resize(2 * n);
    for (int c = 0; c < 2 * n; ++c) {
      b.phonon_weight[i][c] = V.col(c).head(n).squaredNorm();
      b.center[i][c] = row_center(V.col(c), N_y);
    }
    if (keep_vectors) b.vectors[i] = V;
  });
  return b;
}

GapWindow edge_window(const GapReport& gap, double shrink) {
  const double lo = gap.band_max[1], hi = gap.band_min[2];
  const double w = hi - lo;
  if (!(w > 0.0)) throw NumericalError("topological gap is closed; no edge window");
  return {lo + shrink * w, hi - shrink * w};
}

EdgeStateProfile edge_profile(const OmParams& p, int N_y, double k_x, double omega,
                              const Eigen::VectorXcd& psi_in) {
  const auto sites = stripe_sites(N_y);
  const int n = static_cast<int>(sites.size());
  EdgeStateProfile e;
  e.k_x = wrap_kx(k_x);
  e.omega_E = omega;
  e.side = row_center(psi_in, N_y) < 0.5 * N_y ? EdgeSide::Upper : EdgeSide::Lower;

  auto row_of = [&](int c) { return e.side == EdgeSide::Upper ? c : N_y - 1 - c; };
  auto amp = [&](const Eigen::VectorXcd& v, int sector, int c, Basis s) -> cplx {
    const int idx = sector_index(row_of(c), s);
    return idx < 0 ? cplx{} : v[sector * n + idx];
  };

  // Gauge: outermost-cell B phonon amplitude real and positive.
  cplx ref = amp(psi_in, 0, 0, Basis::B);
  if (std::abs(ref) < 1e-12) {
    for (int s = 0; s < 3; ++s)
      if (std::abs(amp(psi_in, 0, 0, static_cast<Basis>(s))) > std::abs(ref))
        ref = amp(psi_in, 0, 0, static_cast<Basis>(s));
  }
  const Eigen::VectorXcd psi = psi_in / psi_in.norm() * (std::abs(ref) > 0 ? std::conj(ref) / std::abs(ref) : 1.0);

  for (int s = 0; s < 3; ++s) {
    e.u[s] = amp(psi, 0, 0, static_cast<Basis>(s));
    e.v[s] = amp(psi, 1, 0, static_cast<Basis>(s));
  }
  e.total_photon_weight = psi.tail(n).squaredNorm();

  // ln(cell weight) vs cell index over the first cells.
  const int cells = std::min(kFitCells, N_y);
  std::vector<double> xs, ys;
  for (int c = 0; c < cells; ++c) {
    double w = 0.0;
    for (int s = 0; s < 3; ++s)
      w += std::norm(amp(psi, 0, c, static_cast<Basis>(s))) +
           std::norm(amp(psi, 1, c, static_cast<Basis>(s)));
    xs.push_back(c);
    ys.push_back(std::log(std::max(w, 1e-300)));
  }
  const double nx = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (nx * sxy - sx * sy) / (nx * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / nx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) ss += std::pow(ys[i] - (icpt + slope * xs[i]), 2);
  e.fit_residual = std::sqrt(ss / nx);
  if (e.fit_residual > 0.05) e.warnings.push_back("non-exponential edge profile");

  double decay;  // 1 - e^{-2a/xi}
  if (slope < 0.0) {
    e.xi = -2.0 / slope;
    decay = -std::expm1(slope);
  } else {
    e.xi = std::numeric_limits<double>::infinity();
    decay = 0.0;
    e.warnings.push_back("profile does not decay into the bulk");
  }

  double su = 0.0, sv = 0.0;
  for (int s = 0; s < 3; ++s) {
    su += std::norm(e.u[s]);
    sv += std::norm(e.v[s]);
  }
  if (decay > 0.0) {
    e.normalization = (su + sv) / decay;
    e.P_opt = std::min(sv / decay, 1.0);
    e.P_mech = std::min(su / decay, 1.0);
  } else {
    e.normalization = std::numeric_limits<double>::infinity();
    e.P_opt = std::min(e.total_photon_weight, 1.0);
    e.P_mech = 1.0 - e.P_opt;
  }
  e.kappa_E = e.P_mech * p.kappa_M + e.P_opt * p.kappa_C;

  e.phi.resize(N_y);
  for (int c = 0; c < N_y; ++c) {
    cplx ov{};
    for (int sector = 0; sector < 2; ++sector)
      for (int s = 0; s < 3; ++s)
        ov += std::conj(amp(psi, sector, 0, static_cast<Basis>(s))) *
              amp(psi, sector, c, static_cast<Basis>(s));
    e.phi[c] = c == 0 ? 0.0 : std::arg(ov);
  }
  return e;
}

double group_velocity(const std::vector<double>& k, const std::vector<double>& w, std::size_t i,
                      bool* one_sided) {
  const std::size_t n = k.size();
  if (n < 2 || w.size() != n || i >= n)
    throw InvalidArgument("group velocity needs at least two samples of one branch");
  if (one_sided) *one_sided = (i == 0 || i + 1 == n);
  if (i == 0) return (w[1] - w[0]) / (k[1] - k[0]);
  if (i + 1 == n) return (w[n - 1] - w[n - 2]) / (k[n - 1] - k[n - 2]);
  return (w[i + 1] - w[i - 1]) / (k[i + 1] - k[i - 1]);
}

std::vector<EdgeStateProfile> branch(const std::vector<EdgeStateProfile>& profiles,
                                     EdgeSide side) {
  std::vector<EdgeStateProfile> out;
  for (const auto& e : profiles)
    if (e.side == side) out.push_back(e);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.k_x < b.k_x; });
  return out;
}

std::vector<EdgeStateProfile> extract_edge_states(const StripeBands& bands, GapWindow window) {
  if (bands.vectors.size() != bands.k_x.size())
    throw InvalidArgument("extract_edge_states needs stripe eigenvectors");
  std::vector<EdgeStateProfile> all;
  for (std::size_t i = 0; i < bands.k_x.size(); ++i) {
    const auto& E = bands.energies[i];
    for (Eigen::Index c = 0; c < E.size(); ++c)
      if (E[c] > window.lo && E[c] < window.hi)
        all.push_back(edge_profile(bands.params, bands.N_y, bands.k_x[i], E[c],
                                   bands.vectors[i].col(c)));
  }

  std::vector<EdgeStateProfile> out;
  for (EdgeSide side : {EdgeSide::Upper, EdgeSide::Lower}) {
    auto br = branch(all, side);
    if (br.empty()) continue;
    double dk = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < br.size(); ++i)
      if (br[i].k_x - br[i - 1].k_x > 1e-12) dk = std::min(dk, br[i].k_x - br[i - 1].k_x);
    // Split into contiguous runs, then difference within each run.
    std::size_t start = 0;
    for (std::size_t i = 1; i <= br.size(); ++i) {
      if (i < br.size() && br[i].k_x - br[i - 1].k_x < 1.5 * dk) continue;
      std::vector<double> ks, ws;
      for (std::size_t j = start; j < i; ++j) {
        ks.push_back(br[j].k_x);
        ws.push_back(br[j].omega_E);
      }
      for (std::size_t j = start; j < i; ++j) {
        if (ks.size() < 2) {
          br[j].warnings.push_back("isolated sample; group velocity unavailable");
          continue;
        }
        bool edge = false;
        br[j].v_g = group_velocity(ks, ws, j - start, &edge);
        if (edge) br[j].warnings.push_back("one-sided group velocity at window boundary");
      }
      start = i;
    }
    out.insert(out.end(), br.begin(), br.end());
  }
  return out;
}

EdgeBranch::EdgeBranch(const OmParams& p, int N_y, EdgeSide side, GapWindow window, int samples)
    : p_(p), N_y_(N_y), side_(side), window_(window) {
  std::vector<double> ks(samples);
  for (int i = 0; i < samples; ++i) ks[i] = kPi * (i + 1) / samples;
  const auto profiles = extract_edge_states(stripe_bands(p, N_y, ks), window);
  samples_ = branch(profiles, side);
  if (samples_.empty()) throw OutOfBand("no in-gap states on the requested edge");
  k_min_ = samples_.front().k_x;
  k_max_ = samples_.back().k_x;
  omega_min_ = omega_max_ = samples_.front().omega_E;
  for (const auto& e : samples_) {
    omega_min_ = std::min(omega_min_, e.omega_E);
    omega_max_ = std::max(omega_max_, e.omega_E);
  }
}

std::optional<std::pair<double, Eigen::VectorXcd>> EdgeBranch::state(double k_x) const {
  const auto es = solve(stripe_hamiltonian(p_, k_x, N_y_).H, true);
  const auto& E = es.eigenvalues();
  std::optional<std::pair<double, Eigen::VectorXcd>> best;
  for (Eigen::Index c = 0; c < E.size(); ++c) {
    if (E[c] <= window_.lo || E[c] >= window_.hi) continue;
    const bool upper = row_center(es.eigenvectors().col(c), N_y_) < 0.5 * N_y_;
    if (upper != (side_ == EdgeSide::Upper)) continue;
    if (!best) best.emplace(E[c], es.eigenvectors().col(c));
  }
  return best;
}

std::optional<double> EdgeBranch::omega(double k_x) const {
  auto s = state(k_x);
  if (!s) return std::nullopt;
  return s->first;
}

EdgeStateProfile EdgeBranch::profile(double k_x, double h) const {
  auto s = state(k_x);
  if (!s) throw OutOfBand("k_x outside the edge branch");
  EdgeStateProfile e = edge_profile(p_, N_y_, k_x, s->first, s->second);
  const auto wp = omega(k_x + h), wm = omega(k_x - h);
  if (wp && wm) {
    e.v_g = (*wp - *wm) / (2.0 * h);
  } else if (wp) {
    e.v_g = (*wp - s->first) / h;
    e.warnings.push_back("one-sided group velocity at window boundary");
  } else if (wm) {
    e.v_g = (s->first - *wm) / h;
    e.warnings.push_back("one-sided group velocity at window boundary");
  }
  return e;
}

double EdgeBranch::resonance(double omega_0, double tol) const {
  if (omega_0 < omega_min_ || omega_0 > omega_max_)
    throw OutOfBand("omega_0 lies outside the edge branch [" + std::to_string(omega_min_) + ", " +
                    std::to_string(omega_max_) + "]");
  for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
    const double f0 = samples_[i].omega_E - omega_0, f1 = samples_[i + 1].omega_E - omega_0;
    if (f0 == 0.0) return samples_[i].k_x;
    if (f0 * f1 > 0.0) continue;
    double lo = samples_[i].k_x, hi = samples_[i + 1].k_x, flo = f0;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      const auto w = omega(mid);
      if (!w) break;
      const double fm = *w - omega_0;
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }
  throw OutOfBand("no bracketing samples for omega_0");
}

double find_k0(const std::vector<EdgeStateProfile>& profiles, K0Mode mode, double omega_0,
               Basis s0) {
  if (profiles.empty()) throw OutOfBand("empty edge branch");
  std::vector<EdgeStateProfile> br = profiles;
  std::sort(br.begin(), br.end(), [](const auto& a, const auto& b) { return a.k_x < b.k_x; });
  const int s = static_cast<int>(s0);
  if (mode == K0Mode::MaxAmplitude) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < br.size(); ++i)
      if (std::abs(br[i].u[s]) > std::abs(br[best].u[s])) best = i;
    return br[best].k_x;
  }
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double f0 = br[i].omega_E - omega_0, f1 = br[i + 1].omega_E - omega_0;
    if (f0 == 0.0) return br[i].k_x;
    if (f0 * f1 <= 0.0) return br[i].k_x + (br[i + 1].k_x - br[i].k_x) * f0 / (f0 - f1);
  }
  if (br.back().omega_E == omega_0) return br.back().k_x;
  throw OutOfBand("omega_0 outside the sampled edge branch");
}

}  // namespace omk
