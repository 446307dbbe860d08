#include "spe/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>

#include "spe/errors.hpp"

namespace spe {

char pauli_char(Pauli p) {
    switch (p) {
    case Pauli::I: return 'I';
    case Pauli::X: return 'X';
    case Pauli::Y: return 'Y';
    case Pauli::Z: return 'Z';
    }
    return '?';
}

Pauli pauli_from_char(char c) {
    switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default: throw data_error(std::string("invalid Pauli letter '") + c + "'");
    }
}

Eigen::Matrix2cd pauli_matrix(Pauli p) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    const cx i(0.0, 1.0);
    switch (p) {
    case Pauli::I: m(0, 0) = 1; m(1, 1) = 1; break;
    case Pauli::X: m(0, 1) = 1; m(1, 0) = 1; break;
    case Pauli::Y: m(0, 1) = -i; m(1, 0) = i; break;
    case Pauli::Z: m(0, 0) = 1; m(1, 1) = -1; break;
    }
    return m;
}

PauliString PauliString::from_string(const std::string& s) {
    std::vector<Pauli> ls;
    ls.reserve(s.size());
    for (char c : s) ls.push_back(pauli_from_char(c));
    return PauliString(std::move(ls));
}

std::string PauliString::str() const {
    std::string s;
    s.reserve(letters.size());
    for (Pauli p : letters) s.push_back(pauli_char(p));
    return s;
}

PauliSum::PauliSum(int nq, std::vector<std::pair<double, PauliString>> raw_terms,
                   double shift)
    : n_qubits(nq), constant_shift(shift) {
    if (nq <= 0) throw data_error("PauliSum requires a positive qubit count");
    std::map<PauliString, double> merged;
    for (auto& [c, s] : raw_terms) {
        if (s.n_qubits() != nq)
            throw data_error("inconsistent Pauli string length: expected " +
                             std::to_string(nq) + ", got " + std::to_string(s.n_qubits()));
        if (!std::isfinite(c)) throw data_error("non-finite coefficient");
        merged[s] += c;
    }
    for (auto& [s, c] : merged) {
        if (std::abs(c) > merge_tolerance) terms.emplace_back(c, s);
    }
}

double PauliSum::one_norm() const {
    double n = 0.0;
    for (const auto& [c, s] : terms) n += std::abs(c);
    return n;
}

std::string PauliSum::str() const {
    std::ostringstream os;
    char buf[64];
    if (constant_shift != 0.0) {
        std::snprintf(buf, sizeof(buf), "%.17g", constant_shift);
        os << "shift " << buf << "\n";
    }
    for (const auto& [c, s] : terms) {
        std::snprintf(buf, sizeof(buf), "%.17g", c);
        os << buf << " " << s.str() << "\n";
    }
    return os.str();
}

PauliSum parse_hamiltonian(std::istream& in) {
    std::vector<std::pair<double, PauliString>> raw;
    double shift = 0.0;
    int n_qubits = -1;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue; // blank or comment-only
        if (first == "shift") {
            if (!(ls >> shift) || !std::isfinite(shift))
                throw data_error("line " + std::to_string(line_no) + ": malformed shift");
            continue;
        }
        double coeff;
        try {
            std::size_t used = 0;
            coeff = std::stod(first, &used);
            if (used != first.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw data_error("line " + std::to_string(line_no) + ": malformed coefficient '" +
                             first + "'");
        }
        std::string word;
        if (!(ls >> word))
            throw data_error("line " + std::to_string(line_no) + ": missing Pauli string");
        std::string extra;
        if (ls >> extra)
            throw data_error("line " + std::to_string(line_no) + ": unexpected trailing token '" +
                             extra + "'");
        PauliString ps = PauliString::from_string(word);
        if (n_qubits < 0) n_qubits = ps.n_qubits();
        if (ps.n_qubits() != n_qubits)
            throw data_error("line " + std::to_string(line_no) +
                             ": inconsistent Pauli string length");
        raw.emplace_back(coeff, std::move(ps));
    }
    if (n_qubits < 0) throw data_error("empty Hamiltonian input");
    return PauliSum(n_qubits, std::move(raw), shift);
}

PauliSum parse_hamiltonian(const std::string& text) {
    std::istringstream is(text);
    return parse_hamiltonian(is);
}

Eigen::MatrixXcd to_dense(const PauliSum& h, int max_qubits) {
    if (h.n_qubits > max_qubits)
        throw capacity_error("dense matrix for " + std::to_string(h.n_qubits) +
                             " qubits exceeds the limit of " + std::to_string(max_qubits));
    const Eigen::Index dim = Eigen::Index(1) << h.n_qubits;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& [c, s] : h.terms) {
        // Pauli words are products of single-qubit factors, so each column
        // has exactly one nonzero entry; fill it directly.
        for (Eigen::Index col = 0; col < dim; ++col) {
            Eigen::Index row = col;
            cx val = c;
            for (int q = 0; q < h.n_qubits; ++q) {
                const int bit = static_cast<int>((col >> q) & 1);
                switch (s.letters[q]) {
                case Pauli::I: break;
                case Pauli::X: row ^= Eigen::Index(1) << q; break;
                case Pauli::Y:
                    row ^= Eigen::Index(1) << q;
                    val *= bit ? cx(0, -1) : cx(0, 1);
                    break;
                case Pauli::Z:
                    if (bit) val = -val;
                    break;
                }
            }
            m(row, col) += val;
        }
    }
    return m;
}

SpectralDecomposition spectral_measure(const PauliSum& h, double tau,
                                       const Eigen::Ref<const Eigen::VectorXcd>& psi,
                                       int max_qubits) {
    const double norm = psi.norm();
    if (std::abs(norm - 1.0) > 1e-10)
        throw std::invalid_argument("reference state is not normalized");
    Eigen::MatrixXcd m = to_dense(h, max_qubits);
    if (psi.size() != m.rows()) throw std::invalid_argument("state dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
    SpectralDecomposition sd;
    sd.tau = tau;
    sd.eigenvalues = solver.eigenvalues();
    sd.overlaps = (solver.eigenvectors().adjoint() * psi).cwiseAbs2();
    return sd;
}

double select_tau(const PauliSum& h, double bound) {
    if (!(bound > 0.0) || bound > M_PI / 2 + 1e-12)
        throw std::invalid_argument("tau bound must lie in (0, pi/2]");
    const double norm1 = h.one_norm();
    if (norm1 <= 0.0) throw std::invalid_argument("cannot scale a zero Hamiltonian");
    return bound / norm1;
}

std::vector<cx> exact_gk(const SpectralDecomposition& sd, int k_max) {
    std::vector<cx> g(static_cast<std::size_t>(k_max) + 1);
    const Eigen::Index n = sd.eigenvalues.size();
    for (int k = 0; k <= k_max; ++k) {
        cx acc(0.0, 0.0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double angle = -sd.tau * sd.eigenvalues[i] * k;
            acc += sd.overlaps[i] * cx(std::cos(angle), std::sin(angle));
        }
        g[static_cast<std::size_t>(k)] = acc;
    }
    return g;
}

} // namespace spe
