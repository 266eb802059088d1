#include "omk/bloch.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>

#include "omk/errors.hpp"

namespace omk {

namespace {
constexpr double kPi = std::numbers::pi;
const cplx I{0.0, 1.0};

void fill_hopping_block(Mat6& H, int off, double t, const cplx& e1, const cplx& e12,
                        const cplx& e2) {
  const cplx ab = t * (1.0 + e1), ac = t * (1.0 + e12), bc = t * (1.0 + e2);
  H(off + 0, off + 1) = ab;
  H(off + 1, off + 0) = std::conj(ab);
  H(off + 0, off + 2) = ac;
  H(off + 2, off + 0) = std::conj(ac);
  H(off + 1, off + 2) = bc;
  H(off + 2, off + 1) = std::conj(bc);
}

std::array<double, 6> eigenvalues6(const Mat6& H) {
  Eigen::SelfAdjointEigenSolver<Mat6> es(H, Eigen::EigenvaluesOnly);
  std::array<double, 6> e{};
  for (int n = 0; n < 6; ++n) e[n] = es.eigenvalues()[n];
  return e;
}

Mat6 hermitian_part(const Mat6& H) { return 0.5 * (H + H.adjoint()); }
}  // namespace

BlochMatrix bloch_hamiltonian(const OmParams& p, Vec2 k, const KagomeGeometry& geom) {
  const Vec2 R1 = geom.R1(), R2 = geom.R2();
  const cplx e1 = std::exp(-I * k.dot(R1));
  const cplx e2 = std::exp(-I * k.dot(R2));
  const cplx e12 = std::exp(-I * k.dot(R1 + R2));

  BlochMatrix b{k, Mat6::Zero()};
  fill_hopping_block(b.H, 0, p.K, e1, e12, e2);
  fill_hopping_block(b.H, 3, p.J, e1, e12, e2);
  for (int s = 0; s < 3; ++s) {
    b.H(s, s) = cplx(p.omega_M, -0.5 * p.kappa_M);
    b.H(3 + s, 3 + s) = cplx(-p.Delta, -0.5 * p.kappa_C);
    const cplx g = std::polar(p.G, p.drive_phase(static_cast<Basis>(s)));
    b.H(3 + s, s) = g;
    b.H(s, 3 + s) = std::conj(g);
  }
  return b;
}

double BandStructure::phonon_weight(std::size_t i, int n) const {
  return vectors[i].col(n).head<3>().squaredNorm();
}

BandStructure band_structure(const OmParams& p, const std::vector<Vec2>& kpoints, Exec exec,
                             const KagomeGeometry& geom) {
  if (kpoints.empty()) throw InvalidArgument("band_structure needs at least one k-point");
  BandStructure bs;
  bs.kpoints = kpoints;
  bs.energies.resize(kpoints.size());
  bs.vectors.resize(kpoints.size());
  bs.labels.assign(kpoints.size(), "");
  for_each_index(kpoints.size(), exec, [&](std::size_t i) {
    const Mat6 H = hermitian_part(bloch_hamiltonian(p, kpoints[i], geom).H);
    Eigen::SelfAdjointEigenSolver<Mat6> es(H);
    for (int n = 0; n < 6; ++n) bs.energies[i][n] = es.eigenvalues()[n];
    bs.vectors[i] = es.eigenvectors();
  });
  return bs;
}

Vec2 high_symmetry_point(const std::string& name, const KagomeGeometry& geom) {
  const auto [b1, b2] = geom.reciprocal();
  if (name == "G" || name == "Gamma" || name == "Γ") return {0.0, 0.0};
  if (name == "K") return b1 * (-1.0 / 3.0) + b2 * (2.0 / 3.0);
  if (name == "K'") return b1 * (-2.0 / 3.0) + b2 * (1.0 / 3.0);
  if (name == "M" || name == "M1") return (b2 - b1) * 0.5;
  if (name == "M2") return b1 * -0.5;
  if (name == "M3") return b2 * -0.5;
  throw InvalidArgument("unknown high-symmetry point '" + name + "'");
}

KPath high_symmetry_path(const std::string& spec, int points_per_segment,
                         const KagomeGeometry& geom) {
  if (points_per_segment < 1) throw InvalidArgument("points_per_segment must be positive");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < spec.size();) {
    std::string tok(1, spec[i++]);
    while (i < spec.size() && (spec[i] == '\'' || std::isdigit(static_cast<unsigned char>(spec[i]))))
      tok += spec[i++];
    names.push_back(tok);
  }
  if (names.size() < 2) throw InvalidArgument("k-path needs at least two vertices");

  KPath path;
  double s = 0.0;
  for (std::size_t v = 0; v + 1 < names.size(); ++v) {
    const Vec2 a = high_symmetry_point(names[v], geom);
    const Vec2 b = high_symmetry_point(names[v + 1], geom);
    const double len = (b - a).norm();
    for (int i = 0; i < points_per_segment; ++i) {
      const double f = static_cast<double>(i) / points_per_segment;
      path.k.push_back(a + (b - a) * f);
      path.labels.push_back(i == 0 ? names[v] : "");
      path.distance.push_back(s + f * len);
    }
    s += len;
  }
  path.k.push_back(high_symmetry_point(names.back(), geom));
  path.labels.push_back(names.back());
  path.distance.push_back(s);
  return path;
}

std::vector<Vec2> bz_grid(int N, const KagomeGeometry& geom) {
  if (N < 1) throw InvalidArgument("grid size must be positive");
  const auto [b1, b2] = geom.reciprocal();
  std::vector<Vec2> ks;
  ks.reserve(static_cast<std::size_t>(N) * N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      ks.push_back(b1 * (static_cast<double>(i) / N) + b2 * (static_cast<double>(j) / N));
  return ks;
}

std::vector<ChernReport> chern_from_vectors(const std::vector<Mat6>& V, int N,
                                            const KagomeGeometry& geom) {
  if (V.size() != static_cast<std::size_t>(N) * N)
    throw InvalidArgument("eigenvector grid does not match grid_N");
  const auto [b1, b2] = geom.reciprocal();
  const double orient = (b1.x * b2.y - b1.y * b2.x) > 0.0 ? 1.0 : -1.0;
  auto at = [&](int i, int j) -> const Mat6& { return V[((i % N) * N) + (j % N)]; };

  std::vector<ChernReport> out;
  for (int n = 0; n < 6; ++n) {
    double total = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const auto u00 = at(i, j).col(n);
        const auto u10 = at(i + 1, j).col(n);
        const auto u11 = at(i + 1, j + 1).col(n);
        const auto u01 = at(i, j + 1).col(n);
        const cplx loop = u00.dot(u10) * u10.dot(u11) * u11.dot(u01) * u01.dot(u00);
        total += std::arg(loop);
      }
    const double c = orient * total / (2.0 * kPi);
    const double rounded = std::round(c);
    out.push_back({n + 1, static_cast<int>(rounded), N, std::abs(c - rounded)});
  }
  return out;
}

std::vector<ChernReport> chern_numbers(const OmParams& p, int grid_N, Exec exec,
                                       const KagomeGeometry& geom) {
  if (grid_N < 12) throw InvalidArgument("Chern grid needs grid_N >= 12");
  const auto ks = bz_grid(grid_N, geom);
  const BandStructure bs = band_structure(p, ks, exec, geom);
  const double tol = 1e-8 * p.K;
  for (std::size_t i = 0; i < ks.size(); ++i)
    for (int n = 0; n + 1 < 6; ++n)
      if (bs.energies[i][n + 1] - bs.energies[i][n] < tol) {
        std::ostringstream msg;
        msg << "bands " << n + 1 << " and " << n + 2 << " touch at k = (" << ks[i].x << ", "
            << ks[i].y << ")";
        throw DegeneracyError(msg.str());
      }
  return chern_from_vectors(bs.vectors, grid_N, geom);
}

GapReport numerical_gap(const OmParams& p, int grid_N, Exec exec, const KagomeGeometry& geom) {
  if (grid_N < 24) throw InvalidArgument("gap grid needs grid_N >= 24");
  auto ks = bz_grid(grid_N, geom);
  for (const char* name : {"K", "K'", "M1", "M2", "M3"}) ks.push_back(high_symmetry_point(name, geom));

  std::vector<std::array<double, 6>> E(ks.size());
  for_each_index(ks.size(), exec, [&](std::size_t i) {
    E[i] = eigenvalues6(hermitian_part(bloch_hamiltonian(p, ks[i], geom).H));
  });

  GapReport g;
  g.band_min.fill(std::numeric_limits<double>::infinity());
  g.band_max.fill(-std::numeric_limits<double>::infinity());
  for (const auto& e : E)
    for (int n = 0; n < 3; ++n) {
      g.band_min[n] = std::min(g.band_min[n], e[n]);
      g.band_max[n] = std::max(g.band_max[n], e[n]);
    }
  const double raw12 = g.band_min[1] - g.band_max[0];
  const double raw23 = g.band_min[2] - g.band_max[1];
  g.closed_12 = raw12 <= 0.0;
  g.closed_23 = raw23 <= 0.0;
  g.gap_12 = std::max(raw12, 0.0);
  g.gap_23 = std::max(raw23, 0.0);
  g.epsilon = g.gap_23;
  return g;
}

// Eigenvalues of [[d, G], [G, 0]] are l+ = d/2 + sqrt(d^2/4 + G^2) and
// l- = -G^2 / l+; the product form avoids cancellation at small G / d.
double kpoint_effective_gap(const OmParams& p) {
  const double d = p.delta_OM();
  if (!(d > 0.0)) throw RegimeError("K-point model needs delta_OM > 0");
  const double upper = 0.5 * d + std::hypot(0.5 * d, p.G);
  return p.G * p.G / upper;
}

AnalyticGap analytic_gap(const OmParams& p) {
  const double d = p.delta_OM();
  if (!(d > 0.0)) throw RegimeError("analytic gap needs delta_OM > 0");
  // (d/2)(sqrt(1 + x) - 1) written as (d/2) x / (sqrt(1 + x) + 1), x = 4 G^2 / d^2.
  const double x = 4.0 * p.G * p.G / (d * d);
  const double branch = 0.5 * d * x / (std::sqrt(1.0 + x) + 1.0);
  return {std::min(branch, p.K), p.G > std::sqrt(1.5 * d * p.K)};
}

std::array<double, 3> mpoint_effective_levels(const OmParams& p, double G) {
  const double s3 = std::numbers::sqrt3;
  Eigen::Matrix3d h;
  h << p.delta_OM(), 0.5 * G, 0.5 * s3 * G,
       0.5 * G, -3.0 * p.K, 0.0,
       0.5 * s3 * G, 0.0, p.K;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()[0], es.eigenvalues()[1], es.eigenvalues()[2]};
}

CriticalCouplings critical_coupling(const OmParams& p) {
  const double d = p.delta_OM();
  if (!(d > 0.0)) throw RegimeError("critical coupling needs delta_OM > 0");
  CriticalCouplings c;
  c.G_c_analytic = std::sqrt(1.5 * d * p.K);
  c.G_min = std::sqrt(p.K * p.K + d * p.K);

  // Middle level starts at +K and is pushed down monotonically.
  auto middle = [&](double G) { return mpoint_effective_levels(p, G)[1]; };
  const double step = 0.01 * std::sqrt(p.K * (p.K + d));
  double lo = 0.0, hi = step;
  while (middle(hi) > 0.0) {
    lo = hi;
    hi += step;
    if (hi > 1e3 * (p.K + d)) throw RegimeError("M-point level never crosses the Dirac energy");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (middle(mid) > 0.0 ? lo : hi) = mid;
  }
  c.G_c_numeric = 0.5 * (lo + hi);
  return c;
}

}  // namespace omk
