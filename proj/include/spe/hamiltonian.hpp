#pragma once

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace spe {

using cx = std::complex<double>;

enum class Pauli : unsigned char { I = 0, X = 1, Y = 2, Z = 3 };

char pauli_char(Pauli p);
Pauli pauli_from_char(char c);
Eigen::Matrix2cd pauli_matrix(Pauli p);

// One n-qubit Pauli word, letter i acting on qubit i.
struct PauliString {
    std::vector<Pauli> letters;

    PauliString() = default;
    explicit PauliString(std::vector<Pauli> ls) : letters(std::move(ls)) {}
    static PauliString from_string(const std::string& s);

    int n_qubits() const { return static_cast<int>(letters.size()); }
    std::string str() const;

    bool operator==(const PauliString& other) const { return letters == other.letters; }
    bool operator<(const PauliString& other) const { return letters < other.letters; }
};

// Weighted sum of Pauli words sharing a qubit count. Terms are kept
// canonical: sorted lexicographically, duplicates merged, zero coefficients
// (|c| <= merge_tolerance) dropped.
struct PauliSum {
    static constexpr double merge_tolerance = 1e-15;

    int n_qubits = 0;
    double constant_shift = 0.0;
    std::vector<std::pair<double, PauliString>> terms;

    PauliSum() = default;
    PauliSum(int nq, std::vector<std::pair<double, PauliString>> raw_terms,
             double shift = 0.0);

    std::size_t n_terms() const { return terms.size(); }
    double one_norm() const;
    std::string str() const; // file-format round trip
};

// File format: one term per line, "<coefficient> <letters in {I,X,Y,Z}>".
// '#' starts a comment; an optional "shift <value>" line sets the constant
// energy offset kept out of the qubit terms.
PauliSum parse_hamiltonian(std::istream& in);
PauliSum parse_hamiltonian(const std::string& text);

// Dense 2^n x 2^n matrix of the sum (shift excluded). Qubit q is bit q of
// the basis-state index.
Eigen::MatrixXcd to_dense(const PauliSum& h, int max_qubits = 12);

struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues; // ascending
    Eigen::VectorXd overlaps;    // |<Psi_i|psi>|^2
    double tau = 1.0;

    Eigen::VectorXd tau_lambdas() const { return tau * eigenvalues; }
};

// Eigenvalues of h with the reference state's weight on each eigenvector.
// psi must be normalized to 1e-10.
SpectralDecomposition spectral_measure(const PauliSum& h, double tau,
                                       const Eigen::Ref<const Eigen::VectorXcd>& psi,
                                       int max_qubits = 12);

// tau = bound / sum_l |c_l|, so that ||tau H|| <= bound for any spectrum.
double select_tau(const PauliSum& h, double bound);

// g_k = sum_i p_i e^{-i tau lambda_i k} for k = 0..k_max.
std::vector<cx> exact_gk(const SpectralDecomposition& sd, int k_max);

} // namespace spe
