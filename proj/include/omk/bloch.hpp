#pragma once
// Bulk (infinite crystal) band structure, Chern numbers and gap estimates.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "omk/kernels.hpp"
#include "omk/lattice.hpp"

namespace omk {

using Mat6 = Eigen::Matrix<cplx, 6, 6>;

// Basis order: phonons (A, B, C), then photons (A, B, C).
struct BlochMatrix {
  Vec2 k;
  Mat6 H;
};

BlochMatrix bloch_hamiltonian(const OmParams& p, Vec2 k,
                              const KagomeGeometry& geom = {});

struct BandStructure {
  std::vector<Vec2> kpoints;
  std::vector<std::array<double, 6>> energies;  // ascending per k
  std::vector<Mat6> vectors;                    // columns match energies
  std::vector<std::string> labels;              // per k, empty when untagged

  std::size_t size() const { return kpoints.size(); }
  // Weight of eigenvector n at k-index i on the phonon sector.
  double phonon_weight(std::size_t i, int n) const;
};

// Hermitian part of H(k) is diagonalized; losses do not enter the bands.
BandStructure band_structure(const OmParams& p, const std::vector<Vec2>& kpoints,
                             Exec exec = Exec::Parallel, const KagomeGeometry& geom = {});

Vec2 high_symmetry_point(const std::string& name, const KagomeGeometry& geom = {});

struct KPath {
  std::vector<Vec2> k;
  std::vector<std::string> labels;  // vertex names on vertices, empty elsewhere
  std::vector<double> distance;     // cumulative path length
};

// Path through named points, e.g. "GKMK'G" (M means M1). Each segment has
// points_per_segment samples; the closing vertex is included once.
KPath high_symmetry_path(const std::string& spec, int points_per_segment = 100,
                         const KagomeGeometry& geom = {});

// Rhombic N x N grid k = (i b1 + j b2) / N, i outer.
std::vector<Vec2> bz_grid(int N, const KagomeGeometry& geom = {});

struct ChernReport {
  int band_index = 0;  // 1-based
  int chern = 0;
  int grid_N = 0;
  double curvature_sum_residual = 0.0;
};

// Link-variable (plaquette) discretization of the Berry curvature.
std::vector<ChernReport> chern_numbers(const OmParams& p, int grid_N, Exec exec = Exec::Parallel,
                                       const KagomeGeometry& geom = {});

// Same plaquette sum from precomputed eigenvectors on a bz_grid(N).
std::vector<ChernReport> chern_from_vectors(const std::vector<Mat6>& vectors, int grid_N,
                                            const KagomeGeometry& geom = {});

// Indirect gaps between the ascending bands 1-2 and 2-3. Negative gaps are
// clamped to zero and flagged. epsilon is the topological gap (bands 2-3),
// the one that opens at the Dirac points K and K'.
struct GapReport {
  double gap_12 = 0.0;
  double gap_23 = 0.0;
  bool closed_12 = false;
  bool closed_23 = false;
  double epsilon = 0.0;
  std::array<double, 3> band_min{};
  std::array<double, 3> band_max{};
};

GapReport numerical_gap(const OmParams& p, int grid_N, Exec exec = Exec::Parallel,
                        const KagomeGeometry& geom = {});

struct AnalyticGap {
  double epsilon = 0.0;
  bool above_critical = false;
};

// min[(d/2)(sqrt(1 + 4G^2/d^2) - 1), K] with d = delta_OM.
AnalyticGap analytic_gap(const OmParams& p);

// Smaller eigenvalue magnitude of the two-mode K-point model [[d, G], [G, 0]].
double kpoint_effective_gap(const OmParams& p);

// Levels of the three-mode M-point model measured from the Dirac energy
// omega_M + K: optical flat band at d, lowest phonon band at -3K, highest at
// +K, coupled with strengths G/2 and sqrt(3) G/2. Ascending.
std::array<double, 3> mpoint_effective_levels(const OmParams& p, double G);

struct CriticalCouplings {
  double G_c_analytic = 0.0;
  double G_c_numeric = 0.0;
  double G_min = 0.0;
};

// G_c_numeric is the coupling at which the highest M-point phonon level of
// the three-mode model is pushed below the Dirac energy, found by scan and
// bisection.
CriticalCouplings critical_coupling(const OmParams& p);

}  // namespace omk
