#pragma once
// Problem definition layer: system Hamiltonian, coupling spectral density
// families, reservoir occupation descriptions, initial states and the
// block form of the reduced density matrix.

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rwadyn/errors.hpp"
#include "rwadyn/linalg.hpp"

namespace rwadyn::model {

using Complex = std::complex<double>;

// Frequency interval; bounded == false means the profile has full-line
// support and lo/hi give the window holding all but a negligible tail.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool bounded = true;
};

// --- coupling spectral density J(w) ---------------------------------------

struct Lorentzian {
  double kappa;   // integrated weight / pi-normalization: total mass kappa*gamma
  double omega0;  // centre
  double gamma;   // half width
};

struct FlatWindow {
  double height;
  double omega_lo;
  double omega_hi;
};

struct Tabulated {
  Eigen::VectorXd grid;    // strictly increasing
  Eigen::VectorXd values;  // same length, nonnegative; linear in between
};

class SpectralDensity {
public:
  static SpectralDensity lorentzian(double kappa, double omega0, double gamma);
  static SpectralDensity flat_window(double height, double lo, double hi);
  static SpectralDensity tabulated(Eigen::VectorXd grid,
                                   Eigen::VectorXd values);

  double operator()(double w) const;
  double derivative(double w) const;
  // True when J is differentiable on the whole line (no edges or kinks).
  bool smooth() const;
  double total_integral() const;
  double mass_within(double lo, double hi) const;
  // Same family with all values multiplied by `factor` >= 0; the coupling
  // constant enters squared through here.
  SpectralDensity scaled(double factor) const;
  Interval support() const;
  // Frequencies where the density is not differentiable (window edges,
  // table nodes); empty for smooth families.
  std::vector<double> kink_points() const;
  const std::variant<Lorentzian, FlatWindow, Tabulated>& family() const {
    return fam_;
  }

private:
  explicit SpectralDensity(std::variant<Lorentzian, FlatWindow, Tabulated> f)
      : fam_(std::move(f)) {}
  std::variant<Lorentzian, FlatWindow, Tabulated> fam_;
};

// --- reservoir occupation -------------------------------------------------

// Identical diagonal occupation: every reservoir carries the same smooth
// density of excitation rho(w) over frequency, diagonal in the mode index.
struct GaussianBump {
  double amplitude;
  double center;
  double sigma;
};

struct ZeroOccupation {};

class OccupationProfile {
public:
  static OccupationProfile gaussian(double amplitude, double center,
                                    double sigma);
  static OccupationProfile window(double height, double lo, double hi);
  static OccupationProfile tabulated(Eigen::VectorXd grid,
                                     Eigen::VectorXd values);
  static OccupationProfile zero();

  double operator()(double w) const;
  double derivative(double w) const;
  bool smooth() const;
  bool is_zero() const;
  double total_integral() const;
  Interval support() const;
  std::vector<double> kink_points() const;
  const std::variant<GaussianBump, FlatWindow, Tabulated, ZeroOccupation>&
  family() const {
    return fam_;
  }

private:
  explicit OccupationProfile(
      std::variant<GaussianBump, FlatWindow, Tabulated, ZeroOccupation> f)
      : fam_(std::move(f)) {}
  std::variant<GaussianBump, FlatWindow, Tabulated, ZeroOccupation> fam_;
};

// General one-excitation bath state on a uniform frequency grid: rho is a
// PSD matrix over the composite index (reservoir j, grid point a) laid out
// as j * grid.size() + a, and rho * dk is the discrete density matrix.
struct GeneralGridOccupation {
  Eigen::VectorXd grid;
  Eigen::MatrixXcd rho;
  double dk = 0.0;
  int n_reservoirs = 0;

  Eigen::Index modes() const { return grid.size(); }
  Eigen::Index dim() const { return rho.rows(); }
};

// Checks the structural requirements of a general-grid occupation: uniform
// grid, matching dimensions, Hermitian PSD weight matrix.  Throws; never
// modifies.
void validate_occupation(const GeneralGridOccupation& occ);

using ReservoirOccupation =
    std::variant<OccupationProfile, GeneralGridOccupation>;

// --- system ----------------------------------------------------------------

// Hamiltonian on the excited manifold (the ground level has energy zero and
// does not couple).  Hermiticity is enforced on construction and the
// eigendecomposition is cached because every propagation method works in
// this eigenbasis.
class SystemHamiltonian {
public:
  explicit SystemHamiltonian(Eigen::MatrixXcd h);

  Eigen::Index levels() const { return h_.rows(); }
  const Eigen::MatrixXcd& matrix() const { return h_; }
  const Eigen::VectorXd& eigenvalues() const { return eig_.eigenvalues; }
  const Eigen::MatrixXcd& basis() const { return eig_.unitary; }

private:
  Eigen::MatrixXcd h_;
  linalg::HermitianEig eig_;
};

// --- states ----------------------------------------------------------------

// Initial condition: with weight p the system is in state sigma and the
// reservoirs are empty; with weight 1-p the system is in the ground level
// and the reservoirs hold one shared excitation described by `occupation`.
struct InitialState {
  double p = 1.0;
  Eigen::MatrixXcd sigma;  // (N+1) x (N+1); index 0 is the ground level
  ReservoirOccupation occupation = OccupationProfile::zero();
};

// Validates p in [0,1] and sigma Hermitian, unit trace, PSD (within
// tolerance); throws InvalidState otherwise.
void validate_initial_state(const InitialState& state,
                            Eigen::Index system_levels);

// One-excitation bath wavefunction on a uniform grid: amplitudes(a, j) is
// the amplitude of reservoir j at grid frequency a.
struct BathExcitationProfile {
  Eigen::VectorXd grid;
  Eigen::MatrixXcd amplitudes;
  double dk = 0.0;
};

// Reduced density matrix in block form over {ground} + excited manifold.
// Populations never leave this sector, so the blocks evolve autonomously.
struct BlockDensityMatrix {
  double t = 0.0;
  double rho00 = 1.0;
  Eigen::RowVectorXcd rho0e;  // 1 x N coherence row
  Eigen::MatrixXcd rhoee;     // N x N excited block

  Eigen::Index levels() const { return rhoee.rows(); }
  Eigen::MatrixXcd assemble() const;
  double trace() const;
  double trace_residual() const { return std::abs(trace() - 1.0); }
  double min_eigenvalue() const;
};

// Blocks of the reduced state at t = 0 for the mixture above:
// rho00 = p sigma00 + (1-p), rho0e = p sigma0e, rhoee = p sigmaee.
BlockDensityMatrix initial_blocks(const InitialState& state);

double block_trace_distance(const BlockDensityMatrix& a,
                            const BlockDensityMatrix& b);

// --- whole-problem diagnostics ---------------------------------------------

struct Diagnostics {
  // Deviation of the occupation normalization from the unit-excitation
  // convention (N * integral(rho) for diagonal profiles, trace(rho)*dk for
  // grid states); reported, never enforced.
  double normalization_deviation = 0.0;
  bool zero_occupation = false;
  std::vector<std::string> warnings;
};

Diagnostics validate_problem(const SystemHamiltonian& h,
                             const SpectralDensity& density,
                             const InitialState& state);

}  // namespace rwadyn::model
