#include "omk/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "omk/bloch.hpp"
#include "omk/errors.hpp"

namespace omk {

namespace {
const cplx I{0.0, 1.0};
}

cplx emitter_pulse(double t, double g_max, double time_unit, double offset, double scale) {
  if (!(time_unit > 0.0)) throw InvalidArgument("time_unit must be positive");
  return g_max * std::min(1.0, std::exp((t / time_unit - offset) / scale));
}

PulseSchedule PulseSchedule::zero() { return {}; }

PulseSchedule PulseSchedule::emitter_ramp(double g_max, double time_unit, double offset,
                                          double scale) {
  if (!(time_unit > 0.0)) throw InvalidArgument("time_unit must be positive");
  PulseSchedule p;
  p.kind = PulseKind::EmitterRamp;
  p.g_max = g_max;
  p.time_unit = time_unit;
  p.offset = offset;
  p.scale = scale;
  return p;
}

PulseSchedule PulseSchedule::piecewise(double t0, double interval, std::vector<cplx> values,
                                       double g_max) {
  if (!(interval > 0.0)) throw InvalidArgument("piecewise interval must be positive");
  for (const auto& v : values)
    if (std::abs(v) > g_max * (1.0 + 1e-12)) throw InvalidArgument("control value exceeds g_max");
  PulseSchedule p;
  p.kind = PulseKind::PiecewiseControl;
  p.g_max = g_max;
  p.t0 = t0;
  p.interval = interval;
  p.values = std::move(values);
  return p;
}

cplx PulseSchedule::operator()(double t) const {
  switch (kind) {
    case PulseKind::Zero:
      return {};
    case PulseKind::EmitterRamp:
      return emitter_pulse(t, g_max, time_unit, offset, scale);
    case PulseKind::PiecewiseControl: {
      if (values.empty() || t < t0) return {};
      const auto i = static_cast<std::size_t>(std::floor((t - t0) / interval));
      return values[std::min(i, values.size() - 1)];
    }
  }
  return {};
}

SiteParameters uniform_sites(const FiniteLattice& lattice, const OmParams& p) {
  const auto n = static_cast<Eigen::Index>(lattice.size());
  return {Eigen::VectorXd::Constant(n, p.omega_M), Eigen::VectorXd::Constant(n, p.Delta),
          Eigen::VectorXd::Constant(n, p.G), Eigen::VectorXd::Constant(n, p.kappa_C),
          Eigen::VectorXd::Constant(n, p.kappa_M)};
}

void add_absorber(SiteParameters& sp, const FiniteLattice& lattice, int first_row,
                  double kappa_max) {
  if (first_row < 0 || first_row >= lattice.Ny)
    throw InvalidArgument("absorber must start inside the lattice");
  if (kappa_max < 0.0) throw InvalidArgument("absorber strength must be non-negative");
  const double depth = lattice.Ny - first_row;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const int m = lattice.sites[i].m;
    if (m < first_row) continue;
    const double x = (m - first_row + 1) / depth;
    const auto j = static_cast<Eigen::Index>(i);
    sp.kappa_M[j] += kappa_max * x * x;
    sp.kappa_C[j] += kappa_max * x * x;
  }
}

namespace {
template <class Emit>
void lattice_entries(const FiniteLattice& L, const OmParams& p, const SiteParameters& sp,
                     double frame, Emit&& emit) {
  const auto n = static_cast<Eigen::Index>(L.size());
  if (sp.omega_M.size() != n || sp.Delta.size() != n || sp.G.size() != n ||
      sp.kappa_C.size() != n || sp.kappa_M.size() != n)
    throw InvalidArgument("site parameter tables do not match the lattice size");
  for (Eigen::Index i = 0; i < n; ++i) {
    emit(i, i, cplx(sp.omega_M[i] - frame, -0.5 * sp.kappa_M[i]));
    emit(n + i, n + i, cplx(-sp.Delta[i] - frame, -0.5 * sp.kappa_C[i]));
    const cplx g = std::polar(sp.G[i], p.drive_phase(L.sites[i].s));
    emit(n + i, i, g);
    emit(i, n + i, std::conj(g));
  }
  for (auto [i, j] : L.edges) {
    const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
    emit(a, b, cplx(p.K));
    emit(b, a, cplx(p.K));
    emit(n + a, n + b, cplx(p.J));
    emit(n + b, n + a, cplx(p.J));
  }
}
}  // namespace

Eigen::MatrixXcd lattice_hamiltonian(const FiniteLattice& lattice, const OmParams& p,
                                     const SiteParameters& sites, double frame) {
  const auto n = static_cast<Eigen::Index>(lattice.size());
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  lattice_entries(lattice, p, sites, frame,
                  [&](Eigen::Index r, Eigen::Index c, cplx v) { H(r, c) += v; });
  return H;
}

SparseRowMatrix assemble_hamiltonian(const FiniteLattice& lattice, const OmParams& p,
                                     const std::vector<TlsNode>& nodes, double t,
                                     const SiteParameters* sites, double frame) {
  const auto n = static_cast<Eigen::Index>(lattice.size());
  const SiteParameters uniform = sites ? SiteParameters{} : uniform_sites(lattice, p);
  const SiteParameters& sp = sites ? *sites : uniform;

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 10 + nodes.size() * 3);
  lattice_entries(lattice, p, sp, frame,
                  [&](Eigen::Index r, Eigen::Index c, cplx v) { trip.emplace_back(r, c, v); });
  for (std::size_t l = 0; l < nodes.size(); ++l) {
    const auto& node = nodes[l];
    if (node.site_index >= lattice.size())
      throw InvalidArgument("TLS site index " + std::to_string(node.site_index) +
                            " outside the lattice");
    const Eigen::Index row = 2 * n + static_cast<Eigen::Index>(l);
    const auto site = static_cast<Eigen::Index>(node.site_index);
    const cplx g = node.pulse(t);
    trip.emplace_back(row, row, cplx(node.omega_0 - frame));
    trip.emplace_back(row, site, g);
    trip.emplace_back(site, row, std::conj(g));
  }
  const Eigen::Index dim = 2 * n + static_cast<Eigen::Index>(nodes.size());
  SparseRowMatrix H(dim, dim);
  H.setFromTriplets(trip.begin(), trip.end());
  H.makeCompressed();
  return H;
}

namespace {
double inf_norm_shifted(const SparseRowMatrix& H, double frame) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < H.outerSize(); ++r) {
    double row = 0.0;
    bool diag = false;
    for (SparseRowMatrix::InnerIterator it(H, r); it; ++it) {
      if (it.col() == r) {
        row += std::abs(it.value() - frame);
        diag = true;
      } else {
        row += std::abs(it.value());
      }
    }
    if (!diag) row += std::abs(frame);
    best = std::max(best, row);
  }
  return best;
}
}  // namespace

std::vector<NetworkState> evolve(const HamiltonianProvider& Hof, const NetworkState& psi0,
                                 double t_end, const EvolveOptions& opt) {
  if (!(opt.dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (t_end < psi0.t) throw InvalidArgument("t_end precedes the initial time");
  const SparseRowMatrix H0 = Hof(psi0.t);
  if (H0.rows() != psi0.amplitudes.size()) throw InvalidArgument("state and Hamiltonian sizes differ");
  const double hnorm = inf_norm_shifted(H0, opt.frame);
  if (opt.dt * hnorm > opt.max_step_norm)
    throw StepSizeError("dt * ||H|| = " + std::to_string(opt.dt * hnorm) + " exceeds " +
                            std::to_string(opt.max_step_norm),
                        opt.max_step_norm / hnorm);

  const auto steps = static_cast<std::size_t>(std::ceil((t_end - psi0.t) / opt.dt - 1e-9));
  const double h = steps ? (t_end - psi0.t) / static_cast<double>(steps) : 0.0;
  const Eigen::Index dim = psi0.amplitudes.size();

  auto deriv = [&](const SparseRowMatrix& H, const Eigen::VectorXcd& y, Eigen::VectorXcd& out) {
    spmv(H, y.data(), out.data(), opt.exec);
    out = -I * (out - opt.frame * y);
  };

  std::vector<NetworkState> traj{psi0};
  Eigen::VectorXcd y = psi0.amplitudes, k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  double t = psi0.t;
  SparseRowMatrix Ha = H0;
  for (std::size_t s = 1; s <= steps; ++s) {
    const SparseRowMatrix Hm = Hof(t + 0.5 * h);
    const SparseRowMatrix Hb = Hof(t + h);
    deriv(Ha, y, k1);
    tmp = y + 0.5 * h * k1;
    deriv(Hm, tmp, k2);
    tmp = y + 0.5 * h * k2;
    deriv(Hm, tmp, k3);
    tmp = y + h * k3;
    deriv(Hb, tmp, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = psi0.t + h * static_cast<double>(s);
    Ha = Hb;
    if (s % std::max<std::size_t>(opt.record_every, 1) == 0 || s == steps) traj.push_back({t, y});
  }
  return traj;
}

OmParams ScenarioConfig::params() const {
  OmParams p = OmParams::from_detuning(G, delta_OM, J, omega_M);
  p.delta_theta = delta_theta;
  p.kappa_C = decay_rate(omega_C, Q_C);
  p.kappa_M = decay_rate(omega_M, Q_M);
  return p;
}

ChannelInfo analyse_channel(const OmParams& p, double g_max, std::optional<double> omega_0,
                            int stripe_Ny, int gap_grid) {
  ChannelInfo c;
  const GapReport gap = numerical_gap(p.lossless(), gap_grid);
  c.epsilon = gap.epsilon;
  c.window = edge_window(gap);
  c.omega_0 = omega_0.value_or(0.5 * (gap.band_max[1] + gap.band_min[2]));
  const EdgeBranch br(p, stripe_Ny, EdgeSide::Upper, c.window, 201);
  c.k_0 = br.resonance(c.omega_0);
  c.profile = br.profile(c.k_0);
  c.v_g = c.profile.v_g;
  c.u_abs = std::abs(c.profile.u[static_cast<int>(Basis::B)]);
  c.xi = c.profile.xi;
  c.P_opt = c.profile.P_opt;
  c.kappa_E = c.profile.kappa_E;
  if (!(c.v_g > 0.0)) throw NumericalError("edge branch has non-positive group velocity at k_0");
  c.gamma_max = 2.0 * c.u_abs * c.u_abs * g_max * g_max / c.v_g;
  return c;
}

TransferScenario make_scenario(const ScenarioConfig& cfg) {
  if (!(cfg.g_max > 0.0)) throw InvalidArgument("g_max must be positive");
  if (!(cfg.dt > 0.0)) throw InvalidArgument("dt must be positive");
  const OmParams p = cfg.params();
  p.validate();

  TransferScenario sc;
  sc.params = p;
  sc.channel = analyse_channel(p, cfg.g_max, cfg.omega_0, cfg.stripe_Ny, cfg.gap_grid);
  sc.lattice = build_finite_lattice(cfg.Nx, cfg.Ny, true);
  sc.time_unit = cfg.time_unit.value_or(1.0 / sc.channel.gamma_max);
  sc.g_max = cfg.g_max;
  sc.dt = cfg.dt;
  sc.dt_opt = cfg.dt_opt_units * sc.time_unit;
  sc.t_end = cfg.duration_units * sc.time_unit;
  sc.record_every = cfg.record_every;

  if (cfg.absorber_first_row >= 0) {
    SiteParameters sp = uniform_sites(sc.lattice, p);
    add_absorber(sp, sc.lattice, cfg.absorber_first_row, cfg.absorber_kappa);
    sc.sites = std::move(sp);
  }

  sc.emitter.site_index = sc.lattice.index_of(cfg.emitter.m, cfg.emitter.n, cfg.emitter.s);
  sc.emitter.omega_0 = sc.channel.omega_0;
  sc.emitter.pulse = PulseSchedule::emitter_ramp(cfg.g_max, sc.time_unit);
  sc.emitter.role = NodeRole::Emitter;
  sc.receiver.site_index = sc.lattice.index_of(cfg.receiver.m, cfg.receiver.n, cfg.receiver.s);
  sc.receiver.omega_0 = sc.channel.omega_0;
  sc.receiver.pulse = PulseSchedule::zero();
  sc.receiver.role = NodeRole::Receiver;
  if (sc.emitter.site_index == sc.receiver.site_index)
    throw InvalidArgument("emitter and receiver share a site");
  return sc;
}

}  // namespace omk
