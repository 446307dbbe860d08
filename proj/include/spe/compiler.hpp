#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "spe/simulator.hpp"

namespace spe {

// Fixed-depth compilation ansatz: n_cz_layers + 1 single-qubit U3 layers
// alternating with brickwork CZ layers. Parameters are Euler triples in
// layer-major, qubit-major order.
struct BrickworkAnsatz {
    int n_qubits = 0;
    int n_cz_layers = 0;
    std::vector<std::vector<std::pair<int, int>>> cz_pattern; // one list per CZ layer

    // Brickwork pairing: even layers couple (0,1),(2,3),..., odd layers
    // couple (1,2),(3,4),...
    static BrickworkAnsatz standard(int n_qubits, int n_cz_layers);

    int n_single_layers() const { return n_cz_layers + 1; }
    int param_count() const { return 3 * n_qubits * (n_cz_layers + 1); }
    EulerAngles triple(const Eigen::Ref<const Eigen::VectorXd>& params, int layer,
                       int qubit) const;
    LayeredCircuit materialize(const Eigen::Ref<const Eigen::VectorXd>& params,
                               int ancilla = 0) const;
};

// Noiseless action of the ansatz on a state.
Eigen::VectorXcd ansatz_apply(const BrickworkAnsatz& ansatz,
                              const Eigen::Ref<const Eigen::VectorXd>& params,
                              const Eigen::Ref<const Eigen::VectorXcd>& state);

// L2 state-difference loss || U |Psi> - U~(p) |Psi> ||; phase-sensitive.
double loss(const BrickworkAnsatz& ansatz, const Eigen::Ref<const Eigen::VectorXd>& params,
            const Eigen::Ref<const Eigen::MatrixXcd>& target_unitary,
            const Eigen::Ref<const Eigen::VectorXcd>& input_state);

// Loss against a precomputed target state, with the analytic gradient filled
// in by adjoint back-propagation through the layers.
double loss_and_gradient(const BrickworkAnsatz& ansatz,
                         const Eigen::Ref<const Eigen::VectorXd>& params,
                         const Eigen::Ref<const Eigen::VectorXcd>& target_state,
                         const Eigen::Ref<const Eigen::VectorXcd>& input_state,
                         Eigen::VectorXd& gradient);

struct CompileOptions {
    int max_restarts = 10;
    double tol = 1e-6;         // loss target
    std::uint64_t seed = 1;    // restart initializations derive from this
    int max_iterations = 2000; // BFGS iterations per restart
    double grad_tol = 1e-10;
};

struct CompilationResult {
    Eigen::VectorXd params;
    double final_loss = 0.0;
    int iterations = 0;    // summed over restarts
    int restarts_used = 0;
    bool converged = false;
};

// BFGS with strong-Wolfe line search from random restarts; returns the best
// parameters found (flagged, not thrown, when the tolerance is not reached).
CompilationResult compile(const Eigen::Ref<const Eigen::MatrixXcd>& target_unitary,
                          const Eigen::Ref<const Eigen::VectorXcd>& input_state,
                          int n_cz_layers, const CompileOptions& options = {});

} // namespace spe
