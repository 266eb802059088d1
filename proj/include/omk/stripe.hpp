#pragma once
// Stripe geometry: periodic along x (period 2a), N_y cells across, straight
// upper edge with the A sites of row m = 0 removed.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "omk/bloch.hpp"
#include "omk/errors.hpp"
#include "omk/kernels.hpp"
#include "omk/lattice.hpp"

namespace omk {

struct StripeSite {
  int m = 0;
  Basis s = Basis::A;
};

// Sites of one sector (phonons or photons), row m outer, basis inner.
std::vector<StripeSite> stripe_sites(int N_y);

struct StripeMatrix {
  double k_x = 0.0;
  int N_y = 0;
  Eigen::MatrixXcd H;  // dimension 2 (3 N_y - 1); phonons first, then photons
};

// Throws InvalidArgument for N_y < 2. N_y < 8 is accepted; callers that care
// about edge-edge hybridization should check stripe_depth_warning().
StripeMatrix stripe_hamiltonian(const OmParams& p, double k_x, int N_y);
std::optional<std::string> stripe_depth_warning(int N_y);

// Uniform grid over (-pi/2a, pi/2a], endpoint included.
std::vector<double> default_kx_grid(int n = 401);

struct StripeBands {
  OmParams params;
  int N_y = 0;
  std::vector<double> k_x;
  std::vector<Eigen::VectorXd> energies;        // ascending per k_x
  std::vector<Eigen::VectorXd> phonon_weight;   // per eigenvector
  std::vector<Eigen::VectorXd> center;          // probability-weighted mean row
  std::vector<Eigen::MatrixXcd> vectors;        // empty unless requested
};

StripeBands stripe_bands(const OmParams& p, int N_y, const std::vector<double>& k_x,
                         Exec exec = Exec::Parallel, bool keep_vectors = true);

enum class EdgeSide { Upper, Lower };
const char* side_name(EdgeSide s);

struct GapWindow {
  double lo = 0.0;
  double hi = 0.0;
};

// Open interval between the bulk bands bordering the topological gap,
// shrunk by `shrink` of its width on each side.
GapWindow edge_window(const GapReport& gap, double shrink = 0.02);

struct EdgeStateProfile {
  double k_x = 0.0;  // wrapped into (0, pi/a]
  double omega_E = 0.0;
  EdgeSide side = EdgeSide::Upper;
  std::array<cplx, 3> u{};  // outermost-cell phonon amplitudes (A, B, C)
  std::array<cplx, 3> v{};  // outermost-cell photon amplitudes
  double xi = 0.0;
  std::vector<double> phi;  // per-cell phase counted from the edge, phi[0] = 0
  double P_opt = 0.0;
  double P_mech = 0.0;
  double v_g = 0.0;
  double kappa_E = 0.0;
  double fit_residual = 0.0;
  double normalization = 0.0;   // sum_s (|u|^2 + |v|^2) / (1 - e^{-2a/xi})
  double total_photon_weight = 0.0;
  std::vector<std::string> warnings;
};

// Profile of one stripe eigenvector (column of a StripeMatrix eigenbasis).
// v_g is left at zero; it needs neighbouring k_x samples.
EdgeStateProfile edge_profile(const OmParams& p, int N_y, double k_x, double omega,
                              const Eigen::VectorXcd& psi);

// In-gap states of every k_x, classified by edge; v_g filled from central
// differences along each branch.
std::vector<EdgeStateProfile> extract_edge_states(const StripeBands& bands, GapWindow window);

// Central difference of a sampled branch at index i; one-sided at the ends.
double group_velocity(const std::vector<double>& k_x, const std::vector<double>& omega,
                      std::size_t i, bool* one_sided = nullptr);

// All profiles of one side, sorted by k_x.
std::vector<EdgeStateProfile> branch(const std::vector<EdgeStateProfile>& profiles,
                                     EdgeSide side);

// Single edge branch evaluated exactly at arbitrary k_x.
class EdgeBranch {
 public:
  EdgeBranch(const OmParams& p, int N_y, EdgeSide side, GapWindow window,
             int samples = 401);

  double k_min() const { return k_min_; }
  double k_max() const { return k_max_; }
  double omega_min() const { return omega_min_; }
  double omega_max() const { return omega_max_; }
  const std::vector<EdgeStateProfile>& samples() const { return samples_; }

  std::optional<double> omega(double k_x) const;
  // Full profile including v_g (central difference with step h).
  EdgeStateProfile profile(double k_x, double h = 1e-4) const;
  // Root of omega_E(k_x) = omega_0 by bisection; throws OutOfBand outside the branch.
  double resonance(double omega_0, double tol = 1e-13) const;

 private:
  std::optional<std::pair<double, Eigen::VectorXcd>> state(double k_x) const;

  OmParams p_;
  int N_y_;
  EdgeSide side_;
  GapWindow window_;
  std::vector<EdgeStateProfile> samples_;
  double k_min_ = 0.0, k_max_ = 0.0, omega_min_ = 0.0, omega_max_ = 0.0;
};

enum class K0Mode { MaxAmplitude, Resonance };

// Max-amplitude: argmax |u_{s0}| over the sampled profiles. Resonance: linear
// interpolation of omega_E between bracketing samples (use EdgeBranch for an
// exact root).
double find_k0(const std::vector<EdgeStateProfile>& profiles, K0Mode mode, double omega_0 = 0.0,
               Basis s0 = Basis::B);

}  // namespace omk
