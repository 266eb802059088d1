#pragma once
// Single-excitation dynamics of the finite hybrid lattice with two driven
// two-level emitters. State ordering: phonon sites, photon sites, then the
// TLS amplitudes in node order.

#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "omk/kernels.hpp"
#include "omk/lattice.hpp"
#include "omk/linalg.hpp"
#include "omk/stripe.hpp"

namespace omk {

enum class PulseKind { EmitterRamp, PiecewiseControl, Zero };

struct PulseSchedule {
  PulseKind kind = PulseKind::Zero;
  double g_max = 0.0;
  double offset = 4.0;
  double scale = 2.0;
  double time_unit = 1.0;
  // Piecewise control: values[i] holds on [t0 + i*interval, t0 + (i+1)*interval);
  // the last value extends beyond the final interval.
  double t0 = 0.0;
  double interval = 0.0;
  std::vector<cplx> values;

  cplx operator()(double t) const;

  static PulseSchedule zero();
  static PulseSchedule emitter_ramp(double g_max, double time_unit, double offset = 4.0,
                                    double scale = 2.0);
  static PulseSchedule piecewise(double t0, double interval, std::vector<cplx> values,
                                 double g_max);
};

// g_max * min[1, exp((t / time_unit - offset) / scale)].
cplx emitter_pulse(double t, double g_max, double time_unit, double offset = 4.0,
                   double scale = 2.0);

enum class NodeRole { Emitter, Receiver };

struct TlsNode {
  std::size_t site_index = 0;  // phonon site the TLS couples to
  double omega_0 = 0.0;
  PulseSchedule pulse;
  NodeRole role = NodeRole::Emitter;
};

// Per-site crystal parameters; disorder tables come in through this type.
struct SiteParameters {
  Eigen::VectorXd omega_M, Delta, G, kappa_C, kappa_M;
};

SiteParameters uniform_sites(const FiniteLattice& lattice, const OmParams& p);

// Extra loss kappa_max * x^2 on phonon and photon sites of rows m >= first_row,
// with x rising from 1/(Ny - first_row) to 1 at the bottom row. The chiral edge
// cannot back-reflect, so this terminates the edge loop without echoes.
void add_absorber(SiteParameters& sites, const FiniteLattice& lattice, int first_row,
                  double kappa_max);

// Lattice block only (phonons, photons), dense, minus frame on the diagonal.
Eigen::MatrixXcd lattice_hamiltonian(const FiniteLattice& lattice, const OmParams& p,
                                     const SiteParameters& sites, double frame = 0.0);

// Full sparse Hamiltonian including the TLS rows, evaluated at time t.
SparseRowMatrix assemble_hamiltonian(const FiniteLattice& lattice, const OmParams& p,
                                     const std::vector<TlsNode>& nodes, double t,
                                     const SiteParameters* sites = nullptr, double frame = 0.0);

struct NetworkState {
  double t = 0.0;
  Eigen::VectorXcd amplitudes;
  double norm() const { return amplitudes.squaredNorm(); }
};

using HamiltonianProvider = std::function<SparseRowMatrix(double)>;

struct EvolveOptions {
  double dt = 1e-4;
  double frame = 0.0;  // subtracted from every diagonal entry
  std::size_t record_every = 1;
  Exec exec = Exec::Parallel;
  double max_step_norm = 0.1;  // refuse when dt * ||H - frame||_inf exceeds this
};

// Fixed-step RK4; returns the initial state followed by every record_every-th step
// (the final state is always included).
std::vector<NetworkState> evolve(const HamiltonianProvider& H, const NetworkState& psi0,
                                 double t_end, const EvolveOptions& opt);

// Exponential (ETDRK4) propagator in the eigenbasis of the lossy lattice,
// with two TLS coupled at single phonon sites. The state vector holds the
// modal coefficients followed by (a_e, a_r); the frame rotates at `frame`.
class ModalPropagator {
 public:
  ModalPropagator(std::shared_ptr<const ModalBasis> basis, std::size_t site_e,
                  std::size_t site_r, double detuning_e, double detuning_r, double frame,
                  double dt);

  std::size_t modes() const { return n_; }
  double dt() const { return dt_; }
  double frame() const { return frame_; }
  const ModalBasis& basis() const { return *basis_; }

  // One step with emitter coupling sampled at t, t + dt/2, t + dt and a
  // receiver coupling held constant over the step.
  void step(Eigen::VectorXcd& u, cplx ge0, cplx ge_half, cplx ge1, cplx gr) const;

  cplx site_amplitude(const Eigen::VectorXcd& u, std::size_t site) const;
  Eigen::VectorXcd lattice_amplitudes(const Eigen::VectorXcd& u) const;
  Eigen::VectorXcd initial_emitter_state() const;

 private:
  void rhs(const Eigen::VectorXcd& u, cplx ge, cplx gr, Eigen::VectorXcd& out) const;

  std::shared_ptr<const ModalBasis> basis_;
  std::size_t n_, se_, sr_;
  double frame_, dt_;
  Eigen::VectorXcd E_, E2_, Q_, f1_, f2_, f3_;
  Eigen::RowVectorXcd Rse_, Rsr_;
  Eigen::VectorXcd Lse_, Lsr_;
};

struct NodeSpec {
  int m = 0;
  int n = 0;
  Basis s = Basis::B;
};

// Everything needed to build a transfer run from physical inputs.
struct ScenarioConfig {
  int Nx = 16;
  int Ny = 11;
  double G = 2.0;
  double delta_OM = 4.0;
  double J = 200.0;
  double omega_M = 460.0;
  double omega_C = 2e6;
  double Q_C = 5e7;
  double Q_M = 1e6;
  double delta_theta = -2.0 * std::numbers::pi / 3.0;
  double g_max = 0.06;
  NodeSpec emitter{2, 0, Basis::B};
  NodeSpec receiver{0, 2, Basis::B};
  std::optional<double> omega_0;    // lab frame; default is mid-gap
  std::optional<double> time_unit;  // default 1 / gamma_max
  double duration_units = 12.0;     // run length in time units
  double dt = 0.5;
  double dt_opt_units = 1.0 / 20.0;
  int stripe_Ny = 21;
  int gap_grid = 48;
  std::size_t record_every = 8;
  // Absorbing lower rows (first_row < 0: none).
  int absorber_first_row = -1;
  double absorber_kappa = 0.5;

  OmParams params() const;
};

// Edge-channel figures at the working point, used to set time scales.
struct ChannelInfo {
  double omega_0 = 0.0;
  double k_0 = 0.0;
  double v_g = 0.0;
  double u_abs = 0.0;
  double xi = 0.0;
  double P_opt = 0.0;
  double kappa_E = 0.0;
  double gamma_max = 0.0;
  double epsilon = 0.0;
  GapWindow window;
  EdgeStateProfile profile;
};

ChannelInfo analyse_channel(const OmParams& p, double g_max, std::optional<double> omega_0,
                            int stripe_Ny = 21, int gap_grid = 48);

struct TransferScenario {
  FiniteLattice lattice;
  OmParams params;
  std::optional<SiteParameters> sites;
  TlsNode emitter;
  TlsNode receiver;
  double t_end = 0.0;
  double dt = 0.5;
  double dt_opt = 0.0;
  double time_unit = 1.0;
  double g_max = 0.0;
  bool optimize = true;  // greedy receiver; otherwise receiver.pulse is used as is
  std::size_t record_every = 8;
  Exec exec = Exec::Parallel;  // candidate scan in the optimizer
  ChannelInfo channel;
};

TransferScenario make_scenario(const ScenarioConfig& cfg);

struct TransferResult {
  std::vector<double> times;
  std::vector<cplx> a_e, a_r;
  std::vector<double> channel_occupation;  // lattice population
  std::vector<double> norm;
  std::vector<double> leaked;              // integrated loss up to each record
  double F = 0.0;    // max_t |a_r|^2
  double t_f = 0.0;  // first time |a_r|^2 reaches 0.99 F
  double t_peak = 0.0;
  double bookkeeping_error = 0.0;  // |1 - (norm + leaked)| at the end
  PulseSchedule receiver_pulse;
  std::vector<std::string> warnings;
};

// Greedy forward pass over intervals of dt_opt; returns the schedule.
PulseSchedule optimize_receiver(const TransferScenario& scenario, double dt_opt);
TransferResult run_transfer(const TransferScenario& scenario);

// Same as run_transfer but reuses a precomputed modal basis of the lattice.
TransferResult run_transfer(const TransferScenario& scenario,
                            std::shared_ptr<const ModalBasis> basis);

}  // namespace omk
