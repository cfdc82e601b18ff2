#pragma once
// Weak-coupling semigroup for the excited block in van Hove rescaled time,
// with the second-order initial-state renormalization and the stationary
// state fed by the occupied reservoir.

#include <vector>

#include <Eigen/Dense>

#include "rwadyn/kernels.hpp"
#include "rwadyn/model.hpp"
#include "rwadyn/volterra.hpp"

namespace rwadyn::bvh {

enum class HypothesisCheck { strict, warn };

// Drift and renormalization acting on the excited block in rescaled time
// tau = coupling^2 t.  Both are functions of the system Hamiltonian, so they
// share its eigenbasis; the scalar spectra are kept for exact propagation.
struct Generator {
  double coupling = 0.0;
  Eigen::VectorXd frequencies;      // system eigenvalues
  Eigen::MatrixXcd basis;           // matching eigenvectors
  Eigen::MatrixXcd drift;           // semigroup generator on the excited block
  Eigen::MatrixXcd renormalization; // second-order initial-state correction
  Eigen::VectorXcd drift_eigs;      // drift scalars per system frequency
  Eigen::VectorXcd renorm_eigs;     // renormalization scalars
  Eigen::VectorXcd transform_eigs;  // kernel transform at the frequencies
};

// The kernel must carry the bare density; the coupling enters explicitly.
// Under `strict` the kernel transform must be strictly dissipative at every
// system frequency and the resulting drift must decay.
Generator build_generator(const model::SystemHamiltonian& system,
                          const kernels::MemoryKernel& kernel, double coupling,
                          HypothesisCheck check = HypothesisCheck::strict);

// Stationary excited block: solves drift Y + Y drift^dag = -2 pi r M r^dag,
// where M samples the occupied density at the drift-shifted system
// frequencies.  `occupied` carries the bare density as well.
Eigen::MatrixXcd stationary_excited_block(
    const Generator& gen, const kernels::NonvacuumDensity& occupied);

// Excited block at rescaled time tau >= 0, starting from sigma_ee with mixing
// weight p against the occupied reservoir whose stationary block is given.
Eigen::MatrixXcd semigroup_excited_block(const Generator& gen,
                                         const Eigen::MatrixXcd& sigma_ee,
                                         double p,
                                         const Eigen::MatrixXcd& stationary,
                                         double tau);

// Ground-excited coherence row at rescaled time tau (rotating frame).
Eigen::RowVectorXcd semigroup_coherence(const Generator& gen,
                                        const Eigen::RowVectorXcd& sigma_0e,
                                        double p, double tau);

// Full block state at rescaled time tau in the rotating frame; the ground
// population closes the trace.  The time label of the result is tau.
model::BlockDensityMatrix semigroup_blocks(const Generator& gen,
                                           const model::InitialState& state,
                                           const Eigen::MatrixXcd& stationary,
                                           double tau);

// tau -> infinity limit of semigroup_blocks.
model::BlockDensityMatrix asymptotic_blocks(const model::InitialState& state,
                                            const Eigen::MatrixXcd& stationary);

// Undo the free system rotation of a laboratory-frame block state at its own
// time label.  Block trace distances are invariant under this map, so states
// may be compared in either frame as long as both sides use the same one.
model::BlockDensityMatrix interaction_frame(
    const model::BlockDensityMatrix& state,
    const model::SystemHamiltonian& system);

// Sup over the rescaled-time grid of the entrywise gap between the
// coupling-scaled resolvent (laboratory time tau / coupling^2, read in the
// rotating frame) and its semigroup form exp(drift tau) * renormalization.
// `coupling` maps rescaled to laboratory time and may differ from the
// generator's (e.g. when scoring a zeroth-order generator against the same
// trajectory).  Rescaled times are snapped to the nearest solver sample;
// times beyond the trajectory horizon throw HorizonMismatch.
double resolvent_asymptotic_error(const volterra::ResolventTrajectory& traj,
                                  const Generator& gen, double coupling,
                                  const std::vector<double>& taus);

}  // namespace rwadyn::bvh
