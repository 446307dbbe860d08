#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spe/hamiltonian.hpp"
#include "spe/rng.hpp"
#include "spe/simulator.hpp"

namespace spe {

struct FoldedCircuit {
    LayeredCircuit circuit;
    int n = 0;      // fold count
    int lambda = 1; // 1 + 2n
};

// Replaces every CZ layer by 2n+1 consecutive copies with identity
// single-qubit layers interposed; the noiseless unitary is unchanged because
// CZ layers square to the identity.
FoldedCircuit fold(const LayeredCircuit& circuit, int n);

struct TwirledCircuit {
    LayeredCircuit merged;
    std::vector<std::vector<Pauli>> draws; // per CZ layer, per qubit
};

// Randomized compiling of a canonical circuit: uniform Paulis before each CZ
// layer, their CZ-conjugated corrections after, everything absorbed into the
// neighboring U3 layers. The unitary is preserved up to a global phase.
TwirledCircuit twirl(const LayeredCircuit& circuit, Rng& rng);

struct ZnePoint {
    double lambda = 0.0;
    double value = 0.0;
    double stderr_value = 0.0;
};

enum class FitKind { Exponential, Quadratic };

struct ZneFit {
    double extrapolated = 0.0;
    FitKind kind = FitKind::Exponential;
    double a = 0.0; // signed amplitude of a e^{-b lambda}
    double b = 0.0;
    Eigen::Vector3d quadratic = Eigen::Vector3d::Zero(); // c0 + c1 x + c2 x^2
};

// Signed exponential fit with b >= 0; falls back to a quadratic when the fit
// does not converge to a decaying model or |a| exceeds 1.2.
ZneFit zne_fit(const std::vector<ZnePoint>& points, bool inverse_variance_weights = false);

struct CalibrationMatrix {
    Eigen::MatrixXd A; // column-stochastic readout transition estimates
    long shots_per_state = 0;
};

// Prepares each basis state under the readout model and histograms the
// outcomes; bitflip_average mirrors the measurement-side symmetrization.
CalibrationMatrix estimate_calibration(int n_qubits, const std::vector<ReadoutNoise>& readout,
                                       long shots_per_state, Rng& rng,
                                       bool bitflip_average = false);

// A^{-1} counts; small negative entries are propagated rather than clipped.
Eigen::VectorXd apply_readout_mitigation(const Eigen::Ref<const Eigen::VectorXd>& counts,
                                         const CalibrationMatrix& cal);
Eigen::VectorXd apply_readout_mitigation(const ShotResult& counts, const CalibrationMatrix& cal);

} // namespace spe
