#include "omk/disorder.hpp"

#include <cmath>
#include <random>

#include "omk/errors.hpp"

namespace omk {

const char* target_name(DisorderTarget t) {
  switch (t) {
    case DisorderTarget::OmegaM: return "omega_M";
    case DisorderTarget::Delta: return "Delta";
    case DisorderTarget::G: return "G";
    case DisorderTarget::KappaC: return "kappa_C";
    case DisorderTarget::KappaM: return "kappa_M";
  }
  return "?";
}

DisorderTarget target_from_name(const std::string& name) {
  for (auto t : all_targets())
    if (name == target_name(t)) return t;
  throw InvalidArgument("unknown disorder target '" + name + "'");
}

std::vector<DisorderTarget> all_targets() {
  return {DisorderTarget::OmegaM, DisorderTarget::Delta, DisorderTarget::G,
          DisorderTarget::KappaC, DisorderTarget::KappaM};
}

std::vector<double> uniform_draws(std::uint64_t seed, std::uint64_t realization,
                                  std::size_t count) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(realization), hi(realization)};
  std::mt19937_64 rng(seq);
  std::vector<double> out(count);
  for (auto& x : out) x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return out;
}

SiteParameters sample_disorder(const DisorderSpec& spec, const FiniteLattice& lattice,
                               const OmParams& p, std::uint64_t realization) {
  return apply_disorder(spec, uniform_sites(lattice, p), realization);
}

SiteParameters apply_disorder(const DisorderSpec& spec, SiteParameters sp,
                              std::uint64_t realization) {
  if (!(spec.W >= 0.0)) throw InvalidArgument("disorder strength W must be non-negative");
  if (spec.W >= 2.0)
    throw InvalidArgument("disorder strength W >= 2 allows negative parameters");
  if (spec.W == 0.0) return sp;

  const auto n = static_cast<std::size_t>(sp.omega_M.size());
  const std::size_t tables = spec.shared_draw ? 1 : all_targets().size();
  const auto u = uniform_draws(spec.seed, realization, tables * n);
  auto table = [&](DisorderTarget t) -> Eigen::VectorXd& {
    switch (t) {
      case DisorderTarget::OmegaM: return sp.omega_M;
      case DisorderTarget::Delta: return sp.Delta;
      case DisorderTarget::G: return sp.G;
      case DisorderTarget::KappaC: return sp.kappa_C;
      case DisorderTarget::KappaM: return sp.kappa_M;
    }
    throw std::logic_error("bad target");
  };
  // Draws are laid out per target in declaration order, so enabling or
  // disabling a target never shifts the draws of the others.
  for (auto t : spec.targets) {
    const std::size_t block = spec.shared_draw ? 0 : static_cast<std::size_t>(t);
    auto& x = table(t);
    for (std::size_t j = 0; j < n; ++j) {
      const double pj = spec.W * (u[block * n + j] - 0.5);
      x[static_cast<Eigen::Index>(j)] *= 1.0 + pj;
    }
  }
  return sp;
}

DisorderSweep fidelity_sweep(const TransferScenario& base, const TransferResult& clean,
                             const std::vector<double>& W_grid, const DisorderSpec& spec,
                             Exec exec) {
  if (W_grid.empty()) throw InvalidArgument("empty disorder grid");
  if (spec.n_realizations == 0) throw InvalidArgument("n_realizations must be positive");
  for (double W : W_grid)
    if (!(W >= 0.0) || W >= 2.0) throw InvalidArgument("disorder strength must lie in [0, 2)");

  DisorderSweep sweep;
  sweep.clean_F = clean.F;
  const SiteParameters ordered = base.sites ? *base.sites : uniform_sites(base.lattice, base.params);
  const std::size_t nr = spec.n_realizations;

  for (double W : W_grid) {
    SweepPoint pt;
    pt.W = W;
    pt.n = nr;
    if (W == 0.0) {
      pt.F.assign(nr, clean.F);
    } else {
      DisorderSpec s = spec;
      s.W = W;
      pt.F.resize(nr);
      for_each_index(nr, exec, [&](std::size_t r) {
        TransferScenario sc = base;
        sc.sites = apply_disorder(s, ordered, r);
        sc.exec = Exec::Serial;
        sc.optimize = spec.reoptimize;
        if (!spec.reoptimize) sc.receiver.pulse = clean.receiver_pulse;
        pt.F[r] = run_transfer(sc).F;
      });
    }
    double sum = 0.0;
    for (double f : pt.F) sum += f;
    pt.mean_F = sum / nr;
    double var = 0.0;
    for (double f : pt.F) var += (f - pt.mean_F) * (f - pt.mean_F);
    pt.stderr_F = nr > 1 ? std::sqrt(var / (nr - 1) / nr) : 0.0;
    if (!sweep.crossover_W && pt.mean_F <= 0.9 * clean.F) sweep.crossover_W = W;
    sweep.points.push_back(std::move(pt));
  }
  return sweep;
}

std::vector<double> default_W_grid(double epsilon, double omega_M) {
  std::vector<double> grid;
  for (double f : {0.0, 0.25, 0.5, 1.0, 2.0, 3.0}) grid.push_back(f * epsilon / omega_M);
  return grid;
}

}  // namespace omk
