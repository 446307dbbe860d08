#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "spe/compiler.hpp"
#include "spe/estimator.hpp"

using namespace spe;

namespace {

Eigen::VectorXd random_params(const BrickworkAnsatz& ansatz, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    Eigen::VectorXd p(ansatz.param_count());
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = angle(rng);
    return p;
}

Eigen::VectorXcd plus_tensor(const Eigen::VectorXcd& psi) {
    Eigen::VectorXcd full(2 * psi.size());
    full.head(psi.size()) = psi / std::sqrt(2.0);
    full.tail(psi.size()) = psi / std::sqrt(2.0);
    return full;
}

PauliSum random_two_qubit_sum(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::vector<std::pair<double, PauliString>> terms;
    for (int t = 0; t < 5; ++t) {
        std::vector<Pauli> letters(2);
        letters[0] = static_cast<Pauli>(rng() % 4);
        letters[1] = static_cast<Pauli>(rng() % 4);
        if (letters[0] == Pauli::I && letters[1] == Pauli::I) letters[0] = Pauli::X;
        terms.emplace_back(coeff(rng), PauliString(letters));
    }
    return PauliSum(2, terms);
}

} // namespace

TEST_CASE("brickwork ansatz: shape and parameter count") {
    const BrickworkAnsatz a = BrickworkAnsatz::standard(5, 4);
    CHECK(a.param_count() == 3 * 5 * 5);
    REQUIRE(a.cz_pattern.size() == 4);
    CHECK(a.cz_pattern[0] == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});
    CHECK(a.cz_pattern[1] == std::vector<std::pair<int, int>>{{1, 2}, {3, 4}});
    CHECK_THROWS_AS(BrickworkAnsatz::standard(1, 1), std::invalid_argument);
}

TEST_CASE("ansatz_apply: all-identity parameters leave the CZ action") {
    const BrickworkAnsatz a = BrickworkAnsatz::standard(2, 1);
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(a.param_count());
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
    psi[3] = 1.0; // |11> picks up the CZ sign
    const Eigen::VectorXcd out = ansatz_apply(a, zeros, psi);
    CHECK(std::abs(out[3] - cx(-1.0, 0.0)) < 1e-15);
}

TEST_CASE("ansatz_apply: unitary and consistent with materialize") {
    std::mt19937_64 rng(7);
    const BrickworkAnsatz a = BrickworkAnsatz::standard(3, 2);
    const Eigen::VectorXd p = random_params(a, rng);
    const LayeredCircuit circuit = a.materialize(p, 2);
    Eigen::MatrixXcd u(8, 8);
    for (int col = 0; col < 8; ++col) {
        Eigen::VectorXcd basis = Eigen::VectorXcd::Zero(8);
        basis[col] = 1.0;
        u.col(col) = ansatz_apply(a, p, basis);
    }
    CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((circuit_unitary(circuit) - u).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("loss: realizable, phase-flipped, and orthogonal targets") {
    std::mt19937_64 rng(8);
    const BrickworkAnsatz a = BrickworkAnsatz::standard(2, 1);
    const Eigen::VectorXd p = random_params(a, rng);
    Eigen::MatrixXcd u(4, 4);
    for (int col = 0; col < 4; ++col) {
        Eigen::VectorXcd basis = Eigen::VectorXcd::Zero(4);
        basis[col] = 1.0;
        u.col(col) = ansatz_apply(a, p, basis);
    }
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(2);
    psi[0] = 1.0;
    const Eigen::VectorXcd input = plus_tensor(psi);
    CHECK(loss(a, p, u, input) < 1e-14);
    CHECK(loss(a, p, -u, input) == doctest::Approx(2.0).epsilon(1e-13));

    // CZ-only ansatz on |00> stays |00>; X on the top qubit is orthogonal.
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(a.param_count());
    Eigen::MatrixXcd x_top = Eigen::MatrixXcd::Zero(4, 4);
    x_top(2, 0) = 1;
    x_top(3, 1) = 1;
    x_top(0, 2) = 1;
    x_top(1, 3) = 1;
    Eigen::VectorXcd zero_state = Eigen::VectorXcd::Zero(4);
    zero_state[0] = 1.0;
    CHECK(loss(a, zeros, x_top, zero_state) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("loss gradient matches central finite differences") {
    std::mt19937_64 rng(9);
    const BrickworkAnsatz a = BrickworkAnsatz::standard(3, 3);
    const PauliSum h = random_two_qubit_sum(rng);
    const double tau = select_tau(h, 1.2);
    const Eigen::MatrixXcd target = controlled_evolution_unitary(h, tau, 1);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
    psi[0] = 1.0;
    const Eigen::VectorXcd input = plus_tensor(psi);
    const Eigen::VectorXcd target_state = target * input;

    for (int point = 0; point < 50; ++point) {
        const Eigen::VectorXd p = random_params(a, rng);
        Eigen::VectorXd grad;
        loss_and_gradient(a, p, target_state, input, grad);
        const Eigen::VectorXd fd = oracle::finite_difference(
            [&](const Eigen::VectorXd& q) {
                Eigen::VectorXd unused;
                return loss_and_gradient(a, q, target_state, input, unused);
            },
            p);
        const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-8);
        CHECK((grad - fd).cwiseAbs().maxCoeff() / scale < 1e-5);
    }
}

TEST_CASE("loss is invariant under appending an identity layer") {
    std::mt19937_64 rng(10);
    const BrickworkAnsatz a = BrickworkAnsatz::standard(2, 2);
    const Eigen::VectorXd p = random_params(a, rng);
    const LayeredCircuit circuit = a.materialize(p, 1);
    LayeredCircuit extended = circuit;
    extended.layers.push_back(GateLayer::identity(2));
    const Eigen::VectorXcd psi = oracle::random_state(4, rng);
    CHECK((apply_circuit(circuit, psi) - apply_circuit(extended, psi)).norm() < 1e-14);
}

TEST_CASE("compile: realizable target reaches 1e-10") {
    std::mt19937_64 rng(12);
    const BrickworkAnsatz a = BrickworkAnsatz::standard(2, 2);
    const Eigen::VectorXd p = random_params(a, rng);
    Eigen::MatrixXcd u(4, 4);
    for (int col = 0; col < 4; ++col) {
        Eigen::VectorXcd basis = Eigen::VectorXcd::Zero(4);
        basis[col] = 1.0;
        u.col(col) = ansatz_apply(a, p, basis);
    }
    const Eigen::VectorXcd input = oracle::random_state(4, rng);
    CompileOptions options;
    options.tol = 1e-10;
    options.seed = 2024;
    const CompilationResult result = compile(u, input, 2, options);
    CHECK(result.converged);
    CHECK(result.final_loss < 1e-10);
}

TEST_CASE("compile: deterministic under a fixed seed") {
    std::mt19937_64 rng(14);
    const PauliSum h = random_two_qubit_sum(rng);
    const double tau = select_tau(h, 1.0);
    const Eigen::MatrixXcd target = controlled_evolution_unitary(h, tau, 1);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
    psi[0] = 1.0;
    const Eigen::VectorXcd input = plus_tensor(psi);
    CompileOptions options;
    options.tol = 1e-6;
    options.seed = 99;
    options.max_restarts = 2;
    const CompilationResult r1 = compile(target, input, 3, options);
    const CompilationResult r2 = compile(target, input, 3, options);
    CHECK(r1.final_loss == r2.final_loss);
    CHECK((r1.params - r2.params).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("compile: controlled evolution of a random two-qubit sum at depth 3") {
    std::mt19937_64 rng(15);
    const PauliSum h = random_two_qubit_sum(rng);
    const double tau = select_tau(h, 1.5);
    const Eigen::MatrixXcd target = controlled_evolution_unitary(h, tau, 1);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
    psi[0] = 1.0;
    CompileOptions options;
    options.tol = 1e-6;
    options.seed = 7;
    const CompilationResult result = compile(target, plus_tensor(psi), 3, options);
    CHECK(result.final_loss < 1e-6);
}

TEST_CASE("compile: five-qubit controlled evolution with seven CZ layers") {
    // Sparse 4-qubit Hamiltonian; the relaxed 1e-4 regime.
    std::vector<std::pair<double, PauliString>> terms;
    terms.emplace_back(0.31, PauliString::from_string("ZZII"));
    terms.emplace_back(-0.22, PauliString::from_string("IXXI"));
    terms.emplace_back(0.17, PauliString::from_string("IIZY"));
    const PauliSum h(4, terms);
    const double tau = select_tau(h, 1.2);
    const Eigen::MatrixXcd target = controlled_evolution_unitary(h, tau, 1);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(16);
    psi[0] = 1.0;
    CompileOptions options;
    options.tol = 1e-4;
    options.seed = 21;
    options.max_restarts = 4;
    options.max_iterations = 3000;
    const CompilationResult result = compile(target, plus_tensor(psi), 7, options);
    CHECK(result.final_loss < 1e-4);
}

TEST_CASE("compile: non-convergence is flagged, not thrown") {
    // One CZ layer cannot represent this 3-qubit evolution.
    std::mt19937_64 rng(16);
    const PauliSum h = random_two_qubit_sum(rng);
    const double tau = select_tau(h, 1.5);
    const Eigen::MatrixXcd target = controlled_evolution_unitary(h, tau, 3);
    Eigen::VectorXcd psi = oracle::random_state(4, rng);
    CompileOptions options;
    options.tol = 1e-10;
    options.max_restarts = 1;
    options.max_iterations = 60;
    const CompilationResult result = compile(target, plus_tensor(psi), 1, options);
    CHECK_FALSE(result.converged);
    CHECK(result.final_loss >= 1e-10);
    CHECK(result.restarts_used == 1);
}
