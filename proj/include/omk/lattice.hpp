#pragma once
/*
 * Kagome geometry, optomechanical crystal parameters and finite lattices.
 *
 * Units: the phonon hopping K is the frequency unit, 1/K the time unit and
 * the nearest-neighbour distance a the length unit.
 */

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace omk {

using cplx = std::complex<double>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const;
};

enum class Basis : int { A = 0, B = 1, C = 2 };

const char* basis_name(Basis s);
Basis basis_from_char(char c);

// Triangular Bravais lattice R1 = -(1, sqrt3) a, R2 = (2, 0) a with the three
// basis sites at the half lattice vectors (0, R1/2, (R1+R2)/2).
struct KagomeGeometry {
  double a = 1.0;

  Vec2 R1() const;
  Vec2 R2() const;
  Vec2 offset(Basis s) const;
  // Reciprocal vectors with R_i . b_j = 2 pi delta_ij.
  std::pair<Vec2, Vec2> reciprocal() const;
  Vec2 position(int m, int n, Basis s) const;
};

// Crystal-level parameters in units of K. Delta = omega_L - omega_C < 0.
struct OmParams {
  double omega_M = 460.0;
  double Delta = -(3.0 + 2.0 * 200.0 + 460.0 + 1.0);
  double G = 0.0;
  double J = 200.0;
  double K = 1.0;
  double kappa_C = 0.0;
  double kappa_M = 0.0;
  double delta_theta = 2.0 * std::numbers::pi / 3.0;

  // Detuning of the lowest (flat) optical band from the mechanical Dirac
  // points: -Delta - 2J - omega_M - K.
  double delta_OM() const { return -Delta - 2.0 * J - omega_M - K; }

  // Parameter set specified through delta_OM instead of Delta.
  static OmParams from_detuning(double G, double delta_OM, double J = 200.0,
                                double omega_M = 460.0, double K = 1.0);

  // Drive phase theta_s = s * delta_theta of basis site s.
  double drive_phase(Basis s) const { return static_cast<int>(s) * delta_theta; }

  OmParams lossless() const;

  // Throws InvalidArgument if K <= 0, J <= 0 or Delta >= 0.
  void validate() const;
};

// Decay rates from quality factors: kappa = omega / Q.
double decay_rate(double omega, double quality_factor);

struct SpinDriveParams {
  double g_s = 0.0;
  double Omega = 0.0;
  double delta_drive = 0.0;
  double omega_d = 0.0;
  double omega_B = 0.0;
};

struct Site {
  int m = 0;  // row index along R1 (m = 0 is the top row)
  int n = 0;  // column index along R2
  Basis s = Basis::A;
  Vec2 r;
  bool boundary = false;
};

// Parallelogram Nx R2 x Ny R1 of unit cells. Sites are ordered row-major by
// cell (m outer, n inner) and then by basis A, B, C; trimmed A sites of the
// top row are skipped.
struct FiniteLattice {
  int Nx = 0;
  int Ny = 0;
  bool removed_A_rows = false;
  KagomeGeometry geometry;
  std::vector<Site> sites;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j
  std::vector<bool> boundary_mask;

  std::size_t size() const { return sites.size(); }
  // Index of site (m, n, s); throws InvalidArgument if it does not exist.
  std::size_t index_of(int m, int n, Basis s) const;
  bool contains(int m, int n, Basis s) const;
  std::vector<std::vector<std::size_t>> neighbours() const;

 private:
  friend FiniteLattice build_finite_lattice(int, int, bool);
  std::vector<long> lookup_;  // (m*Nx + n)*3 + s -> site index or -1
};

FiniteLattice build_finite_lattice(int Nx, int Ny, bool trim_top_A);

// Synthetic flux through a basis triangle (closed form; the arctan singular
// point returns +-3 pi / 2).
double compute_flux(const OmParams& p);

struct InducedHopping {
  cplx K_opt;
  double validity_ratio;  // J / |omega_M + Delta|, should be << 1
};

InducedHopping optical_induced_hopping(const OmParams& p);

struct StabilityReport {
  double delta_K = 0.0;
  double required_kappa_M = 0.0;
  double margin_ratio = 0.0;  // kappa_M / required (infinite when required = 0)
  bool stable = true;
};

StabilityReport check_stability(const OmParams& p);

struct SpinCoupling {
  double g_sp = 0.0;
  double omega_0 = 0.0;
  std::vector<std::string> warnings;
};

SpinCoupling effective_spin_coupling(const SpinDriveParams& s);

void to_json(nlohmann::json& j, const OmParams& p);
void from_json(const nlohmann::json& j, OmParams& p);
void to_json(nlohmann::json& j, const SpinDriveParams& s);
void from_json(const nlohmann::json& j, SpinDriveParams& s);

}  // namespace omk
