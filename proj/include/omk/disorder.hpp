#pragma once
// Static fractional disorder on the cavity parameters and averaged transfer
// fidelities.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "omk/dynamics.hpp"

namespace omk {

enum class DisorderTarget { OmegaM, Delta, G, KappaC, KappaM };

const char* target_name(DisorderTarget t);
DisorderTarget target_from_name(const std::string& name);
std::vector<DisorderTarget> all_targets();

struct DisorderSpec {
  double W = 0.0;
  std::uint64_t seed = 0;
  std::vector<DisorderTarget> targets = all_targets();
  std::size_t n_realizations = 50;
  bool shared_draw = false;  // one p_j per site for every target
  bool reoptimize = false;   // re-run the receiver optimizer per realization
};

// Uniform draws in [0, 1) for realization r, reproducible across platforms:
// mt19937_64 seeded through seed_seq{seed_lo, seed_hi, r_lo, r_hi}, top 53 bits.
std::vector<double> uniform_draws(std::uint64_t seed, std::uint64_t realization, std::size_t count);

// Per-site tables x_j = (1 + p_j) x with p_j uniform on [-W/2, W/2].
// Throws InvalidArgument for W < 0 or W >= 2.
SiteParameters sample_disorder(const DisorderSpec& spec, const FiniteLattice& lattice,
                               const OmParams& p, std::uint64_t realization);

// Same multipliers applied to existing tables (e.g. a lattice with an absorber).
SiteParameters apply_disorder(const DisorderSpec& spec, SiteParameters ordered,
                              std::uint64_t realization);

struct SweepPoint {
  double W = 0.0;
  double mean_F = 0.0;
  double stderr_F = 0.0;
  std::size_t n = 0;
  std::vector<double> F;  // per realization, in realization order
};

struct DisorderSweep {
  double clean_F = 0.0;
  std::vector<SweepPoint> points;
  std::optional<double> crossover_W;  // first W with mean F <= 0.9 clean F
};

// Runs n_realizations disordered transfers for each W. `clean` is the
// optimized run on the ordered lattice; its receiver pulse is reused unless
// spec.reoptimize is set. Realizations run in parallel under Exec::Parallel.
DisorderSweep fidelity_sweep(const TransferScenario& base, const TransferResult& clean,
                             const std::vector<double>& W_grid, const DisorderSpec& spec,
                             Exec exec = Exec::Parallel);

// Disorder grid in units of eps / omega_M.
std::vector<double> default_W_grid(double epsilon, double omega_M);

}  // namespace omk
