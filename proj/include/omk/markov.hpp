#pragma once
// One-dimensional chiral channel in the Born-Markov limit: local
// input-output equations for an emitter and a downstream receiver.

#include <functional>
#include <vector>

#include "omk/dynamics.hpp"
#include "omk/io.hpp"
#include "omk/lattice.hpp"
#include "omk/stripe.hpp"

namespace omk {

struct MarkovChannel {
  double v_g = 0.0;  // units of K a
  double k_0 = 0.0;
  cplx u_s_e{};
  cplx u_s_r{};
  double kappa_E = 0.0;
  int n_e = 0;
  int n_r = 0;
  double phi_edge = 0.0;

  double delay() const;  // 2 (n_r - n_e) a / v_g
  double phase() const;  // 2 k_0 (n_r - n_e) a
};

MarkovChannel make_channel(const EdgeStateProfile& edge, int n_e, int n_r,
                           Basis s_e = Basis::B, Basis s_r = Basis::B);

// gamma = 2 |u_s|^2 |g_sp|^2 / (v_g / a).
double transfer_rate(cplx g_sp, cplx u_s, double v_g);

// Coupling of one node expressed as rate gamma(t) and phase theta(t).
struct NodeDrive {
  std::function<double(double)> gamma;
  std::function<double(double)> theta;

  static NodeDrive off();
  // theta = arg g + phi_edge.
  static NodeDrive from_coupling(const MarkovChannel& ch, std::function<cplx(double)> g, cplx u_s);
};

// Drive tabulated on a uniform grid, linearly interpolated (phase unwrapped).
NodeDrive sampled_drive(double dt, std::vector<double> gamma, std::vector<double> theta);

struct MarkovTrajectory {
  std::vector<double> t;
  std::vector<cplx> a_e, a_r, f_out_e, f_in_r, f_out_r;
  std::vector<double> emitted;   // integral of |f_out_e|^2 from 0
  std::vector<double> absorbed;  // integral of |f_in_r|^2 from 0
  std::vector<double> passed;    // integral of |f_out_r|^2 from 0
  double delay = 0.0;            // delay used (multiple of dt)
  double delay_rounding = 0.0;   // used minus requested
  std::size_t delay_steps = 0;
};

// RK4 with step dt. The emitter is integrated at dt/2 so the delayed field is
// available at every receiver stage; the delay line is a ring buffer.
MarkovTrajectory simulate_markov(const MarkovChannel& ch, const NodeDrive& emitter,
                                 const NodeDrive& receiver, double t_end, double dt);

// Impedance-matched receiver: gamma_r = |f_in|^2 / int_0^t |f_in|^2 (capped),
// theta_r = pi - arg f_in. Tabulated on the dt/2 grid used by simulate_markov.
NodeDrive darkstate_receiver_pulse(const MarkovChannel& ch, const NodeDrive& emitter,
                                   double t_end, double dt, double gamma_cap);

// Receiver with a prescribed rate and the phase matched to the incoming field.
NodeDrive matched_phase_receiver(const MarkovChannel& ch, const NodeDrive& emitter,
                                 std::function<double(double)> gamma, double t_end, double dt);

// Time series of a trajectory (one row per step).
CsvTable markov_table(const MarkovTrajectory& tr);

// Markov prediction for an exact run whose two nodes sit on the straight
// upper edge (row m = 0), driven with the exact emitter pulse and the exact
// receiver |g_r(t)| with its phase matched to the incoming field.
struct MarkovComparison {
  MarkovChannel channel;
  MarkovTrajectory markov;
  std::vector<double> t;  // exact record times
  std::vector<double> dev_e, dev_r;  // | |a|_exact - |a|_markov |
  double max_dev_e = 0.0;
  double max_dev_r = 0.0;
};

MarkovComparison compare_with_markov(const TransferScenario& sc, const TransferResult& exact,
                                     double dt);

}  // namespace omk
