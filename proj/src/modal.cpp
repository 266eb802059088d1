// Exponential integrator in the lattice eigenbasis and the transfer driver
// with greedy receiver optimization.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "omk/dynamics.hpp"
#include "omk/errors.hpp"

namespace omk {

namespace {
const cplx I{0.0, 1.0};
constexpr double kPi = std::numbers::pi;
}  // namespace

ModalPropagator::ModalPropagator(std::shared_ptr<const ModalBasis> basis, std::size_t site_e,
                                 std::size_t site_r, double detuning_e, double detuning_r,
                                 double frame, double dt)
    : basis_(std::move(basis)), frame_(frame), dt_(dt) {
  if (!basis_) throw InvalidArgument("missing modal basis");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  n_ = static_cast<std::size_t>(basis_->mu.size());
  se_ = site_e;
  sr_ = site_r;
  if (se_ >= n_ || sr_ >= n_) throw InvalidArgument("TLS site outside the lattice");

  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::VectorXcd lam(n + 2);
  lam.head(n) = -I * (basis_->mu.array() - frame).matrix();
  lam[n] = -I * detuning_e;
  lam[n + 1] = -I * detuning_r;
  const Eigen::VectorXcd z = dt * lam;
  const PhiFunctions full = phi_functions(z);
  const PhiFunctions half = phi_functions(0.5 * z);
  E_ = z.array().exp();
  E2_ = (0.5 * z).array().exp();
  Q_ = 0.5 * dt * half.phi1;
  f1_ = dt * (full.phi1 - 3.0 * full.phi2 + 4.0 * full.phi3);
  f2_ = dt * (2.0 * full.phi2 - 4.0 * full.phi3);
  f3_ = dt * (4.0 * full.phi3 - full.phi2);

  Rse_ = basis_->R.row(static_cast<Eigen::Index>(se_));
  Rsr_ = basis_->R.row(static_cast<Eigen::Index>(sr_));
  Lse_ = basis_->L.col(static_cast<Eigen::Index>(se_));
  Lsr_ = basis_->L.col(static_cast<Eigen::Index>(sr_));
}

void ModalPropagator::rhs(const Eigen::VectorXcd& u, cplx ge, cplx gr,
                          Eigen::VectorXcd& out) const {
  const auto n = static_cast<Eigen::Index>(n_);
  const cplx ae = u[n], ar = u[n + 1];
  out.head(n) = (-I * std::conj(ge) * ae) * Lse_ + (-I * std::conj(gr) * ar) * Lsr_;
  out[n] = -I * ge * (Rse_ * u.head(n)).value();
  out[n + 1] = -I * gr * (Rsr_ * u.head(n)).value();
}

void ModalPropagator::step(Eigen::VectorXcd& u, cplx ge0, cplx ge_half, cplx ge1,
                           cplx gr) const {
  const Eigen::Index dim = u.size();
  Eigen::VectorXcd Nu(dim), Na(dim), Nb(dim), Nc(dim), a(dim), b(dim), c(dim);
  rhs(u, ge0, gr, Nu);
  a = E2_.cwiseProduct(u) + Q_.cwiseProduct(Nu);
  rhs(a, ge_half, gr, Na);
  b = E2_.cwiseProduct(u) + Q_.cwiseProduct(Na);
  rhs(b, ge_half, gr, Nb);
  c = E2_.cwiseProduct(a) + Q_.cwiseProduct(2.0 * Nb - Nu);
  rhs(c, ge1, gr, Nc);
  u = E_.cwiseProduct(u) + f1_.cwiseProduct(Nu) + f2_.cwiseProduct(Na + Nb) +
      f3_.cwiseProduct(Nc);
}

cplx ModalPropagator::site_amplitude(const Eigen::VectorXcd& u, std::size_t site) const {
  return (basis_->R.row(static_cast<Eigen::Index>(site)) *
          u.head(static_cast<Eigen::Index>(n_)))
      .value();
}

Eigen::VectorXcd ModalPropagator::lattice_amplitudes(const Eigen::VectorXcd& u) const {
  return basis_->R * u.head(static_cast<Eigen::Index>(n_));
}

Eigen::VectorXcd ModalPropagator::initial_emitter_state() const {
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_) + 2);
  u[static_cast<Eigen::Index>(n_)] = 1.0;
  return u;
}

namespace {

// Scores a constant receiver coupling over one control interval without
// propagating the lattice: the receiver sees the free local field plus its own
// re-absorbed emission through the exact local Green's function.
class ReceiverSurrogate {
 public:
  ReceiverSurrogate(const ModalBasis& basis, std::size_t site, double frame, double h,
                    std::size_t nodes, double detuning)
      : h_(h), det_(detuning), P_(nodes), Qw_(nodes) {
    const Eigen::Index n = basis.mu.size();
    const auto s = static_cast<Eigen::Index>(site);
    Eigen::VectorXcd w(n), z(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      w[k] = basis.R(s, k) * basis.L(k, s);
      z[k] = -I * (basis.mu[k] - frame) * h;
    }
    const PhiFunctions phi = phi_functions(z);
    Eigen::VectorXcd prev = w.cwiseProduct(phi.phi1 - phi.phi2) * h;
    Eigen::VectorXcd curr = w.cwiseProduct(phi.phi2) * h;
    const Eigen::VectorXcd ez = z.array().exp();
    for (std::size_t q = 0; q < nodes; ++q) {
      P_[q] = prev.sum();
      Qw_[q] = curr.sum();
      prev = prev.cwiseProduct(ez);
      curr = curr.cwiseProduct(ez);
    }
  }

  // Receiver amplitude at the last node for coupling g.
  cplx final_amplitude(cplx a0, cplx g, const std::vector<cplx>& field) const {
    const std::size_t M = field.size();
    std::vector<cplx> a(M);
    a[0] = a0;
    const double g2 = std::norm(g);
    const cplx denom = 1.0 + 0.5 * h_ * (I * det_ + g2 * Qw_[0]);
    cplx f_prev = -I * det_ * a0 - I * g * field[0];  // x(t_0) = 0
    for (std::size_t i = 0; i + 1 < M; ++i) {
      cplx S = P_[0] * a[i];
      for (std::size_t j = 0; j < i; ++j) S += P_[i - j] * a[j] + Qw_[i - j] * a[j + 1];
      const cplx rhs = a[i] + 0.5 * h_ * (f_prev - I * g * field[i + 1] - g2 * S);
      a[i + 1] = rhs / denom;
      const cplx x = S + Qw_[0] * a[i + 1];
      f_prev = -I * det_ * a[i + 1] - I * g * field[i + 1] - g2 * x;
    }
    return a[M - 1];
  }

 private:
  double h_, det_;
  std::vector<cplx> P_, Qw_;
};

struct Recorder {
  const ModalPropagator& prop;
  const Eigen::VectorXd& loss;  // per lattice site decay rate
  TransferResult& res;
  double last_rate = 0.0;
  double last_t = 0.0;
  double leaked = 0.0;

  double loss_rate(const Eigen::VectorXcd& psi) const {
    return (loss.array() * psi.array().abs2()).sum();
  }

  void record(double t, const Eigen::VectorXcd& u) {
    const Eigen::VectorXcd psi = prop.lattice_amplitudes(u);
    const double rate = loss_rate(psi);
    if (!res.times.empty()) leaked += 0.5 * (rate + last_rate) * (t - last_t);
    last_rate = rate;
    last_t = t;
    const auto n = static_cast<Eigen::Index>(prop.modes());
    const double lat = psi.squaredNorm();
    res.times.push_back(t);
    res.a_e.push_back(u[n]);
    res.a_r.push_back(u[n + 1]);
    res.channel_occupation.push_back(lat);
    res.norm.push_back(lat + std::norm(u[n]) + std::norm(u[n + 1]));
    res.leaked.push_back(leaked);
  }
};

TransferResult transfer_core(const TransferScenario& sc, std::shared_ptr<const ModalBasis> basis,
                             bool optimize, double dt_opt) {
  const FiniteLattice& L = sc.lattice;
  const SiteParameters sp = sc.sites ? *sc.sites : uniform_sites(L, sc.params);
  if (!basis) basis = std::make_shared<ModalBasis>(
      modal_decomposition(lattice_hamiltonian(L, sc.params, sp, 0.0)));
  if (static_cast<std::size_t>(basis->mu.size()) != 2 * L.size())
    throw InvalidArgument("modal basis does not match the lattice");
  if (!(sc.t_end > 0.0)) throw InvalidArgument("t_end must be positive");

  const double frame = sc.emitter.omega_0;
  const ModalPropagator prop(basis, sc.emitter.site_index, sc.receiver.site_index,
                             sc.emitter.omega_0 - frame, sc.receiver.omega_0 - frame, frame,
                             sc.dt);
  const std::size_t n = prop.modes();
  const auto ni = static_cast<Eigen::Index>(n);

  Eigen::VectorXd loss(ni);
  loss.head(ni / 2) = sp.kappa_M;
  loss.tail(ni / 2) = sp.kappa_C;

  TransferResult res;
  const auto& win = sc.channel.window;
  if (win.hi > win.lo)
    for (const TlsNode* node : {&sc.emitter, &sc.receiver})
      if (node->omega_0 <= win.lo || node->omega_0 >= win.hi)
        res.warnings.push_back("TLS frequency outside the bulk gap");

  const double dt = sc.dt;
  const std::size_t nsub =
      optimize ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(dt_opt / dt))) : 1;
  const std::size_t total_steps = static_cast<std::size_t>(std::ceil(sc.t_end / dt - 1e-9));
  const std::size_t intervals = (total_steps + nsub - 1) / nsub;

  // Node grid for the surrogate: at most 65 nodes per interval.
  const std::size_t stride = std::max<std::size_t>(1, (nsub + 63) / 64);
  const std::size_t nodes = nsub / stride + 1;
  std::optional<ReceiverSurrogate> surrogate;
  std::vector<cplx> candidates;
  if (optimize) {
    surrogate.emplace(*basis, sc.receiver.site_index, frame, stride * dt, nodes,
                      sc.receiver.omega_0 - frame);
    candidates.push_back(0.0);
    constexpr int kAmps = 17, kPhases = 32;
    for (int ia = 1; ia < kAmps; ++ia)
      for (int ip = 0; ip < kPhases; ++ip)
        candidates.push_back(std::polar(sc.g_max * ia / (kAmps - 1), 2.0 * kPi * ip / kPhases));
  }

  Eigen::VectorXcd u = prop.initial_emitter_state();
  Recorder rec{prop, loss, res};
  rec.record(0.0, u);

  std::vector<cplx> controls;
  std::vector<double> ar2;  // |a_r|^2 after every step
  ar2.reserve(total_steps);
  std::size_t step_index = 0;
  auto advance = [&](Eigen::VectorXcd& v, std::size_t k, cplx gr) {
    const double t = k * dt;
    prop.step(v, sc.emitter.pulse(t), sc.emitter.pulse(t + 0.5 * dt), sc.emitter.pulse(t + dt),
              gr);
  };

  for (std::size_t iv = 0; iv < intervals; ++iv) {
    const std::size_t first = iv * nsub;
    const std::size_t count = std::min(nsub, total_steps - first);
    cplx g{};
    if (optimize) {
      // Local field with the receiver switched off over this interval.
      std::vector<cplx> field;
      field.reserve(nodes);
      Eigen::VectorXcd free = u;
      field.push_back(prop.site_amplitude(free, sc.receiver.site_index));
      for (std::size_t k = 0; k < count; ++k) {
        advance(free, first + k, 0.0);
        if ((k + 1) % stride == 0) field.push_back(prop.site_amplitude(free, sc.receiver.site_index));
      }
      const cplx a0 = u[ni + 1];
      auto score = [&](cplx c) {
        return std::abs(surrogate->final_amplitude(a0, c, field));
      };
      std::vector<double> scores(candidates.size());
      for_each_index(candidates.size(), sc.exec,
                     [&](std::size_t i) { scores[i] = score(candidates[i]); });
      std::size_t best = 0;
      for (std::size_t i = 1; i < candidates.size(); ++i)
        if (scores[i] > scores[best] * (1.0 + 1e-12) + 1e-300) best = i;
      g = candidates[best];
      double best_score = scores[best];

      if (best != 0) {
        // Golden-section refinement: amplitude, then phase.
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        auto golden = [&](auto&& f, double lo, double hi) {
          double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
          double f1 = f(x1), f2 = f(x2);
          for (int it = 0; it < 30; ++it) {
            if (f1 < f2) {
              lo = x1; x1 = x2; f1 = f2; x2 = lo + gr * (hi - lo); f2 = f(x2);
            } else {
              hi = x2; x2 = x1; f2 = f1; x1 = hi - gr * (hi - lo); f1 = f(x1);
            }
          }
          return 0.5 * (lo + hi);
        };
        const double da = sc.g_max / 16.0, dp = 2.0 * kPi / 32.0;
        double amp = std::abs(g), ph = std::arg(g);
        amp = golden([&](double a) { return score(std::polar(a, ph)); }, std::max(0.0, amp - da),
                     std::min(sc.g_max, amp + da));
        ph = golden([&](double p) { return score(std::polar(amp, p)); }, ph - dp, ph + dp);
        const cplx refined = std::polar(amp, ph);
        const double rs = score(refined);
        if (rs > best_score) {
          g = refined;
          best_score = rs;
        }
      }
      controls.push_back(g);
    }
    for (std::size_t k = 0; k < count; ++k, ++step_index) {
      const double t = step_index * dt;
      const cplx gr = optimize ? g : sc.receiver.pulse(t + 0.5 * dt);
      advance(u, step_index, gr);
      ar2.push_back(std::norm(u[ni + 1]));
      if ((step_index + 1) % std::max<std::size_t>(sc.record_every, 1) == 0 ||
          step_index + 1 == total_steps)
        rec.record((step_index + 1) * dt, u);
    }
  }

  res.receiver_pulse = optimize ? PulseSchedule::piecewise(0.0, nsub * dt, controls, sc.g_max)
                                : sc.receiver.pulse;
  std::size_t peak = 0;
  for (std::size_t i = 1; i < ar2.size(); ++i)
    if (ar2[i] > ar2[peak]) peak = i;
  res.F = ar2.empty() ? 0.0 : ar2[peak];
  res.t_peak = (peak + 1) * dt;
  res.t_f = res.t_peak;
  for (std::size_t i = 0; i < ar2.size(); ++i)
    if (ar2[i] >= 0.99 * res.F) {
      res.t_f = (i + 1) * dt;
      break;
    }
  res.bookkeeping_error = std::abs(1.0 - res.norm.back() - res.leaked.back());
  return res;
}

}  // namespace

PulseSchedule optimize_receiver(const TransferScenario& scenario, double dt_opt) {
  if (!(dt_opt > 0.0)) throw InvalidArgument("dt_opt must be positive");
  return transfer_core(scenario, nullptr, true, dt_opt).receiver_pulse;
}

TransferResult run_transfer(const TransferScenario& scenario) {
  return run_transfer(scenario, nullptr);
}

TransferResult run_transfer(const TransferScenario& scenario,
                            std::shared_ptr<const ModalBasis> basis) {
  return transfer_core(scenario, std::move(basis), scenario.optimize, scenario.dt_opt);
}

}  // namespace omk
