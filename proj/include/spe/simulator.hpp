#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spe/hamiltonian.hpp"
#include "spe/rng.hpp"

namespace spe {

// Euler triple of the native one-qubit gate,
// u3(theta, phi, lambda) = Rz(phi) Rx(-pi/2) Rz(theta) Rx(pi/2) Rz(lambda).
struct EulerAngles {
    double theta = 0.0;
    double phi = 0.0;
    double lambda = 0.0;

    bool is_identity() const { return theta == 0.0 && phi == 0.0 && lambda == 0.0; }
};

Eigen::Matrix2cd u3_matrix(double theta, double phi, double lambda);
inline Eigen::Matrix2cd u3_matrix(const EulerAngles& a) {
    return u3_matrix(a.theta, a.phi, a.lambda);
}

// Euler triple of a 2x2 unitary, discarding its global phase.
EulerAngles euler_from_matrix(const Eigen::Matrix2cd& u);

struct GateLayer {
    enum class Kind { SingleQubit, EntanglingCZ };

    Kind kind = Kind::SingleQubit;
    std::vector<EulerAngles> triples;          // one per qubit when SingleQubit
    std::vector<std::pair<int, int>> cz_pairs; // disjoint when EntanglingCZ

    static GateLayer identity(int n_qubits);
    static GateLayer single(std::vector<EulerAngles> triples);
    static GateLayer cz(std::vector<std::pair<int, int>> pairs);
};

// Gate layers applied in order to n_qubits qubits; qubit q is bit q of the
// basis-state index. Circuits built here place the ancilla on the highest
// index, but any assignment is allowed.
struct LayeredCircuit {
    int n_qubits = 0;
    int ancilla = 0;
    std::vector<GateLayer> layers;

    void validate() const;
    bool is_canonical() const; // single-qubit layers alternate with CZ layers
    int cz_layer_count() const;
    int cz_gate_count() const;

    // Merges runs of single-qubit layers and inserts identity layers so that
    // every CZ layer is surrounded by exactly one single-qubit layer.
    LayeredCircuit canonicalized() const;
};

struct ReadoutNoise {
    double p01 = 0.0; // P(read 1 | prepared 0)
    double p10 = 0.0; // P(read 0 | prepared 1)

    bool is_perfect() const { return p01 == 0.0 && p10 == 0.0; }
};

struct NoiseModel {
    double depolarizing_p = 0.0;    // two-qubit depolarizing channel per CZ gate
    double coherent_zz_theta = 0.0; // e^{-i(theta/2) ZZ} appended after each CZ gate
    std::vector<ReadoutNoise> readout; // per qubit; empty means perfect readout

    void validate(int n_qubits) const;
    bool needs_density() const { return depolarizing_p > 0.0; }
    ReadoutNoise readout_for(int qubit) const;
};

// Pure-state propagation. Rejects noise models that require a density
// operator; coherent ZZ errors stay on this path.
Eigen::VectorXcd apply_circuit(const LayeredCircuit& circuit, Eigen::VectorXcd state,
                               const NoiseModel* noise = nullptr);

// Density-operator propagation supporting every noise channel.
Eigen::MatrixXcd apply_circuit_density(const LayeredCircuit& circuit, Eigen::MatrixXcd rho,
                                       const NoiseModel* noise = nullptr);

struct ShotResult {
    // Keys are bitstrings; character i holds the outcome of the i-th
    // measured qubit.
    std::map<std::string, long> counts;
    long shots = 0;

    Eigen::VectorXd count_vector(int n_measured) const;
};

// Born probabilities of the listed qubits (bit i of the outcome index is the
// i-th listed qubit).
Eigen::VectorXd measurement_probabilities(const Eigen::Ref<const Eigen::VectorXcd>& state,
                                          const std::vector<int>& qubits, int n_qubits);
Eigen::VectorXd measurement_probabilities_density(const Eigen::Ref<const Eigen::MatrixXcd>& rho,
                                                  const std::vector<int>& qubits, int n_qubits);

// Samples shots outcomes, applies per-qubit readout confusion, and (when
// bitflip_average is set) runs the second half of the shots with all measured
// qubits flipped before confusion and the record unflipped afterwards.
ShotResult measure_shots(const Eigen::Ref<const Eigen::VectorXd>& probabilities,
                         const std::vector<ReadoutNoise>& readout, long shots, Rng& rng,
                         bool bitflip_average = false);

// <Z> of one measured qubit after the readout channel; bit-flip averaging
// cancels the additive term, leaving the (1 - p01 - p10) contraction.
double readout_adjusted_z(double z, const ReadoutNoise& ro, bool bitflip_average);

// Block-diagonal identity + e^{-i tau H k} with the ancilla on the highest
// index.
Eigen::MatrixXcd controlled_evolution_unitary(const PauliSum& h, double tau, int k,
                                              int max_qubits = 12);

enum class Basis { X, Y };

// Wraps a controlled unitary's circuit with the interference layers: H on
// the ancilla before, V then H after (V = 1 for X, S^dagger for Y).
LayeredCircuit hadamard_test_circuit(const LayeredCircuit& controlled_part, Basis basis);

// Ancilla marginal [p0, p1] of the Hadamard test, exact up to the configured
// gate noise (readout is left to the caller).
Eigen::VectorXd hadamard_test_probabilities(const LayeredCircuit& controlled_part,
                                            const Eigen::Ref<const Eigen::VectorXcd>& psi,
                                            Basis basis, const NoiseModel& noise);

// Exact noiseless expectation from a dense controlled unitary:
// Re / Im of <psi| U |psi> for basis X / Y.
double hadamard_test(const Eigen::Ref<const Eigen::MatrixXcd>& controlled_u,
                     const Eigen::Ref<const Eigen::VectorXcd>& psi, Basis basis);

// Circuit-path Hadamard test. shots == 0 returns the exact expectation with
// readout applied analytically; otherwise outcomes are sampled.
double hadamard_test(const LayeredCircuit& controlled_part,
                     const Eigen::Ref<const Eigen::VectorXcd>& psi, Basis basis,
                     const NoiseModel& noise, long shots = 0, Rng* rng = nullptr,
                     bool bitflip_average = false);

// One first-order Trotter step of H = c1 Z + c2 X on a data qubit plus
// ancilla, expressed in U3/CZ layers with CZ depth 4. The circuit equals
// controlled-[Rx(2 c2 tau) Rz(2 c1 tau)] up to a global phase.
LayeredCircuit trotter_step_circuit(double c1, double c2, double tau);

// Repeats the circuit k times, merging boundary single-qubit layers.
LayeredCircuit repeat_circuit(const LayeredCircuit& circuit, int k);

// Dense unitary of a circuit; intended for small test instances.
Eigen::MatrixXcd circuit_unitary(const LayeredCircuit& circuit);

// Embeds |psi> of the data register into the full register with the ancilla
// cleared.
Eigen::VectorXcd embed_with_ancilla(const Eigen::Ref<const Eigen::VectorXcd>& psi, int ancilla,
                                    int n_qubits);

// Text listing of layers (angles to 6 decimal places) for golden tests.
void dump_circuit(std::ostream& os, const LayeredCircuit& circuit);

} // namespace spe
