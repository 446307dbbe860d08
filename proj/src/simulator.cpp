#include "spe/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "spe/errors.hpp"

namespace spe {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInvSqrt2 = 0.70710678118654752440;

Eigen::Index insert_bit(Eigen::Index rest, int position, int bit) {
    const Eigen::Index low_mask = (Eigen::Index(1) << position) - 1;
    return ((rest >> position) << (position + 1)) | (Eigen::Index(bit) << position) |
           (rest & low_mask);
}

void apply_single(Eigen::VectorXcd& state, int qubit, const Eigen::Matrix2cd& u, int n_qubits) {
    const Eigen::Index half = Eigen::Index(1) << (n_qubits - 1);
    for (Eigen::Index r = 0; r < half; ++r) {
        const Eigen::Index i0 = insert_bit(r, qubit, 0);
        const Eigen::Index i1 = i0 | (Eigen::Index(1) << qubit);
        const cx a = state[i0];
        const cx b = state[i1];
        state[i0] = u(0, 0) * a + u(0, 1) * b;
        state[i1] = u(1, 0) * a + u(1, 1) * b;
    }
}

void apply_single_density(Eigen::MatrixXcd& rho, int qubit, const Eigen::Matrix2cd& u,
                          int n_qubits) {
    const Eigen::Index half = Eigen::Index(1) << (n_qubits - 1);
    // rho -> U rho U^dagger, done row-wise then column-wise.
    for (Eigen::Index r = 0; r < half; ++r) {
        const Eigen::Index i0 = insert_bit(r, qubit, 0);
        const Eigen::Index i1 = i0 | (Eigen::Index(1) << qubit);
        const Eigen::RowVectorXcd row0 = rho.row(i0);
        const Eigen::RowVectorXcd row1 = rho.row(i1);
        rho.row(i0) = u(0, 0) * row0 + u(0, 1) * row1;
        rho.row(i1) = u(1, 0) * row0 + u(1, 1) * row1;
    }
    const Eigen::Matrix2cd ud = u.adjoint();
    for (Eigen::Index r = 0; r < half; ++r) {
        const Eigen::Index i0 = insert_bit(r, qubit, 0);
        const Eigen::Index i1 = i0 | (Eigen::Index(1) << qubit);
        const Eigen::VectorXcd col0 = rho.col(i0);
        const Eigen::VectorXcd col1 = rho.col(i1);
        rho.col(i0) = col0 * ud(0, 0) + col1 * ud(1, 0);
        rho.col(i1) = col0 * ud(0, 1) + col1 * ud(1, 1);
    }
}

bool both_bits_set(Eigen::Index idx, int a, int b) {
    return ((idx >> a) & 1) && ((idx >> b) & 1);
}

void apply_cz(Eigen::VectorXcd& state, int a, int b) {
    for (Eigen::Index i = 0; i < state.size(); ++i)
        if (both_bits_set(i, a, b)) state[i] = -state[i];
}

void apply_cz_density(Eigen::MatrixXcd& rho, int a, int b) {
    const Eigen::Index dim = rho.rows();
    for (Eigen::Index r = 0; r < dim; ++r) {
        const bool sr = both_bits_set(r, a, b);
        for (Eigen::Index c = 0; c < dim; ++c) {
            if (sr != both_bits_set(c, a, b)) rho(r, c) = -rho(r, c);
        }
    }
}

cx zz_phase(Eigen::Index idx, int a, int b, double theta) {
    const int za = ((idx >> a) & 1) ? -1 : 1;
    const int zb = ((idx >> b) & 1) ? -1 : 1;
    const double angle = -0.5 * theta * za * zb;
    return cx(std::cos(angle), std::sin(angle));
}

void apply_zz(Eigen::VectorXcd& state, int a, int b, double theta) {
    for (Eigen::Index i = 0; i < state.size(); ++i) state[i] *= zz_phase(i, a, b, theta);
}

void apply_zz_density(Eigen::MatrixXcd& rho, int a, int b, double theta) {
    const Eigen::Index dim = rho.rows();
    for (Eigen::Index r = 0; r < dim; ++r) {
        const cx pr = zz_phase(r, a, b, theta);
        for (Eigen::Index c = 0; c < dim; ++c) rho(r, c) *= pr * std::conj(zz_phase(c, a, b, theta));
    }
}

// Two-qubit depolarizing channel on the pair (a, b):
// rho -> (1-p) rho + (p/4) I_{ab} (x) tr_{ab} rho.
void depolarize_pair(Eigen::MatrixXcd& rho, int a, int b, double p, int n_qubits) {
    const int lo = std::min(a, b);
    const int hi = std::max(a, b);
    const Eigen::Index rest_dim = Eigen::Index(1) << (n_qubits - 2);
    Eigen::MatrixXcd partial = Eigen::MatrixXcd::Zero(rest_dim, rest_dim);
    auto full_index = [&](Eigen::Index rest, int pair_bits) {
        const Eigen::Index with_lo = insert_bit(rest, lo, pair_bits & 1);
        return insert_bit(with_lo, hi, (pair_bits >> 1) & 1);
    };
    for (Eigen::Index r = 0; r < rest_dim; ++r)
        for (Eigen::Index c = 0; c < rest_dim; ++c)
            for (int bits = 0; bits < 4; ++bits)
                partial(r, c) += rho(full_index(r, bits), full_index(c, bits));
    rho *= (1.0 - p);
    const double quarter = 0.25 * p;
    for (Eigen::Index r = 0; r < rest_dim; ++r)
        for (Eigen::Index c = 0; c < rest_dim; ++c)
            for (int bits = 0; bits < 4; ++bits)
                rho(full_index(r, bits), full_index(c, bits)) += quarter * partial(r, c);
}

template <typename SingleFn, typename CzFn, typename ZzFn, typename DepolFn>
void run_layers(const LayeredCircuit& circuit, const NoiseModel* noise, SingleFn&& single,
                CzFn&& cz, ZzFn&& zz, DepolFn&& depol) {
    for (const GateLayer& layer : circuit.layers) {
        if (layer.kind == GateLayer::Kind::SingleQubit) {
            for (int q = 0; q < circuit.n_qubits; ++q) {
                const EulerAngles& t = layer.triples[static_cast<std::size_t>(q)];
                if (!t.is_identity()) single(q, u3_matrix(t));
            }
        } else {
            for (const auto& [a, b] : layer.cz_pairs) {
                cz(a, b);
                if (noise != nullptr && noise->coherent_zz_theta != 0.0)
                    zz(a, b, noise->coherent_zz_theta);
                if (noise != nullptr && noise->depolarizing_p > 0.0)
                    depol(a, b, noise->depolarizing_p);
            }
        }
    }
}

} // namespace

Eigen::Matrix2cd u3_matrix(double theta, double phi, double lambda) {
    if (!std::isfinite(theta) || !std::isfinite(phi) || !std::isfinite(lambda))
        throw std::invalid_argument("u3_matrix: angles must be finite");
    // Rz(phi) Rx(-pi/2) Rz(theta) Rx(pi/2) Rz(lambda) = Rz(phi) Ry(theta) Rz(lambda).
    const double ct = std::cos(0.5 * theta);
    const double st = std::sin(0.5 * theta);
    const cx ep = std::exp(cx(0.0, 0.5 * (phi + lambda)));
    const cx em = std::exp(cx(0.0, 0.5 * (phi - lambda)));
    Eigen::Matrix2cd u;
    u(0, 0) = ct * std::conj(ep);
    u(0, 1) = -st * std::conj(em);
    u(1, 0) = st * em;
    u(1, 1) = ct * ep;
    return u;
}

EulerAngles euler_from_matrix(const Eigen::Matrix2cd& u) {
    // Normalize to SU(2) first; the dropped determinant phase is global.
    const cx det = u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0);
    const cx phase = std::sqrt(det);
    Eigen::Matrix2cd a = u / phase;
    const double c = std::abs(a(0, 0));
    const double s = std::abs(a(1, 0));
    EulerAngles out;
    out.theta = 2.0 * std::atan2(s, c);
    if (s < 1e-14) {
        out.phi = -std::arg(a(0, 0));
        out.lambda = -std::arg(a(0, 0));
        out.theta = 0.0;
        // u3(0, x, x) reproduces Rz(2x); split evenly by convention.
    } else if (c < 1e-14) {
        out.theta = kPi;
        out.phi = std::arg(a(1, 0));
        out.lambda = -out.phi;
    } else {
        const double sum = -2.0 * std::arg(a(0, 0));
        const double diff = 2.0 * std::arg(a(1, 0));
        out.phi = 0.5 * (sum + diff);
        out.lambda = 0.5 * (sum - diff);
    }
    return out;
}

GateLayer GateLayer::identity(int n_qubits) {
    GateLayer layer;
    layer.kind = Kind::SingleQubit;
    layer.triples.assign(static_cast<std::size_t>(n_qubits), EulerAngles{});
    return layer;
}

GateLayer GateLayer::single(std::vector<EulerAngles> triples) {
    GateLayer layer;
    layer.kind = Kind::SingleQubit;
    layer.triples = std::move(triples);
    return layer;
}

GateLayer GateLayer::cz(std::vector<std::pair<int, int>> pairs) {
    GateLayer layer;
    layer.kind = Kind::EntanglingCZ;
    layer.cz_pairs = std::move(pairs);
    return layer;
}

void LayeredCircuit::validate() const {
    if (n_qubits <= 0) throw std::invalid_argument("circuit needs at least one qubit");
    if (ancilla < 0 || ancilla >= n_qubits)
        throw std::invalid_argument("ancilla index out of range");
    for (const GateLayer& layer : layers) {
        if (layer.kind == GateLayer::Kind::SingleQubit) {
            if (layer.triples.size() != static_cast<std::size_t>(n_qubits))
                throw std::invalid_argument("single-qubit layer has wrong triple count");
        } else {
            std::vector<bool> used(static_cast<std::size_t>(n_qubits), false);
            for (const auto& [a, b] : layer.cz_pairs) {
                if (a < 0 || b < 0 || a >= n_qubits || b >= n_qubits || a == b)
                    throw std::invalid_argument("CZ pair index out of range");
                if (used[static_cast<std::size_t>(a)] || used[static_cast<std::size_t>(b)])
                    throw std::invalid_argument("CZ pairs must be disjoint within a layer");
                used[static_cast<std::size_t>(a)] = used[static_cast<std::size_t>(b)] = true;
            }
        }
    }
}

bool LayeredCircuit::is_canonical() const {
    if (layers.empty()) return false;
    if (layers.front().kind != GateLayer::Kind::SingleQubit) return false;
    if (layers.back().kind != GateLayer::Kind::SingleQubit) return false;
    for (std::size_t i = 1; i < layers.size(); ++i)
        if (layers[i].kind == layers[i - 1].kind) return false;
    return true;
}

int LayeredCircuit::cz_layer_count() const {
    int n = 0;
    for (const GateLayer& layer : layers)
        if (layer.kind == GateLayer::Kind::EntanglingCZ) ++n;
    return n;
}

int LayeredCircuit::cz_gate_count() const {
    int n = 0;
    for (const GateLayer& layer : layers)
        if (layer.kind == GateLayer::Kind::EntanglingCZ)
            n += static_cast<int>(layer.cz_pairs.size());
    return n;
}

LayeredCircuit LayeredCircuit::canonicalized() const {
    validate();
    LayeredCircuit out;
    out.n_qubits = n_qubits;
    out.ancilla = ancilla;
    std::vector<Eigen::Matrix2cd> pending(static_cast<std::size_t>(n_qubits),
                                          Eigen::Matrix2cd::Identity());
    std::vector<bool> touched(static_cast<std::size_t>(n_qubits), false);
    auto flush = [&]() {
        std::vector<EulerAngles> triples(static_cast<std::size_t>(n_qubits));
        for (int q = 0; q < n_qubits; ++q) {
            if (touched[static_cast<std::size_t>(q)])
                triples[static_cast<std::size_t>(q)] =
                    euler_from_matrix(pending[static_cast<std::size_t>(q)]);
            pending[static_cast<std::size_t>(q)] = Eigen::Matrix2cd::Identity();
            touched[static_cast<std::size_t>(q)] = false;
        }
        out.layers.push_back(GateLayer::single(std::move(triples)));
    };
    for (const GateLayer& layer : layers) {
        if (layer.kind == GateLayer::Kind::SingleQubit) {
            for (int q = 0; q < n_qubits; ++q) {
                const EulerAngles& t = layer.triples[static_cast<std::size_t>(q)];
                if (t.is_identity()) continue;
                pending[static_cast<std::size_t>(q)] =
                    u3_matrix(t) * pending[static_cast<std::size_t>(q)];
                touched[static_cast<std::size_t>(q)] = true;
            }
        } else {
            flush();
            out.layers.push_back(layer);
        }
    }
    flush();
    return out;
}

void NoiseModel::validate(int n_qubits) const {
    if (depolarizing_p < 0.0 || depolarizing_p > 1.0)
        throw std::invalid_argument("depolarizing_p must lie in [0, 1]");
    if (!std::isfinite(coherent_zz_theta))
        throw std::invalid_argument("coherent_zz_theta must be finite");
    if (!readout.empty() && readout.size() != static_cast<std::size_t>(n_qubits))
        throw std::invalid_argument("readout noise must list every qubit or none");
    for (const ReadoutNoise& ro : readout)
        if (ro.p01 < 0.0 || ro.p01 > 1.0 || ro.p10 < 0.0 || ro.p10 > 1.0)
            throw std::invalid_argument("readout probabilities must lie in [0, 1]");
}

ReadoutNoise NoiseModel::readout_for(int qubit) const {
    if (readout.empty()) return ReadoutNoise{};
    return readout.at(static_cast<std::size_t>(qubit));
}

Eigen::VectorXcd apply_circuit(const LayeredCircuit& circuit, Eigen::VectorXcd state,
                               const NoiseModel* noise) {
    circuit.validate();
    if (state.size() != (Eigen::Index(1) << circuit.n_qubits))
        throw std::invalid_argument("state dimension does not match the circuit");
    if (noise != nullptr) {
        noise->validate(circuit.n_qubits);
        if (noise->needs_density())
            throw std::invalid_argument(
                "depolarizing noise requires the density-operator path");
    }
    run_layers(
        circuit, noise,
        [&](int q, const Eigen::Matrix2cd& u) { apply_single(state, q, u, circuit.n_qubits); },
        [&](int a, int b) { apply_cz(state, a, b); },
        [&](int a, int b, double theta) { apply_zz(state, a, b, theta); },
        [&](int, int, double) {});
    return state;
}

Eigen::MatrixXcd apply_circuit_density(const LayeredCircuit& circuit, Eigen::MatrixXcd rho,
                                       const NoiseModel* noise) {
    circuit.validate();
    if (rho.rows() != (Eigen::Index(1) << circuit.n_qubits) || rho.rows() != rho.cols())
        throw std::invalid_argument("density dimension does not match the circuit");
    if (noise != nullptr) noise->validate(circuit.n_qubits);
    run_layers(
        circuit, noise,
        [&](int q, const Eigen::Matrix2cd& u) {
            apply_single_density(rho, q, u, circuit.n_qubits);
        },
        [&](int a, int b) { apply_cz_density(rho, a, b); },
        [&](int a, int b, double theta) { apply_zz_density(rho, a, b, theta); },
        [&](int a, int b, double p) { depolarize_pair(rho, a, b, p, circuit.n_qubits); });
    return rho;
}

Eigen::VectorXd ShotResult::count_vector(int n_measured) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(Eigen::Index(1) << n_measured);
    for (const auto& [key, count] : counts) {
        Eigen::Index idx = 0;
        for (std::size_t i = 0; i < key.size(); ++i)
            if (key[i] == '1') idx |= Eigen::Index(1) << i;
        v[idx] += static_cast<double>(count);
    }
    return v;
}

namespace {

template <typename Accessor>
Eigen::VectorXd marginal_probabilities(Accessor&& diag_prob, Eigen::Index dim,
                                       const std::vector<int>& qubits) {
    Eigen::VectorXd probs = Eigen::VectorXd::Zero(Eigen::Index(1) << qubits.size());
    for (Eigen::Index i = 0; i < dim; ++i) {
        Eigen::Index outcome = 0;
        for (std::size_t b = 0; b < qubits.size(); ++b)
            if ((i >> qubits[b]) & 1) outcome |= Eigen::Index(1) << b;
        probs[outcome] += diag_prob(i);
    }
    return probs;
}

} // namespace

Eigen::VectorXd measurement_probabilities(const Eigen::Ref<const Eigen::VectorXcd>& state,
                                          const std::vector<int>& qubits, int n_qubits) {
    if (state.size() != (Eigen::Index(1) << n_qubits))
        throw std::invalid_argument("state dimension mismatch");
    return marginal_probabilities([&](Eigen::Index i) { return std::norm(state[i]); },
                                  state.size(), qubits);
}

Eigen::VectorXd measurement_probabilities_density(const Eigen::Ref<const Eigen::MatrixXcd>& rho,
                                                  const std::vector<int>& qubits, int n_qubits) {
    if (rho.rows() != (Eigen::Index(1) << n_qubits) || rho.rows() != rho.cols())
        throw std::invalid_argument("density dimension mismatch");
    return marginal_probabilities([&](Eigen::Index i) { return rho(i, i).real(); }, rho.rows(),
                                  qubits);
}

ShotResult measure_shots(const Eigen::Ref<const Eigen::VectorXd>& probabilities,
                         const std::vector<ReadoutNoise>& readout, long shots, Rng& rng,
                         bool bitflip_average) {
    if (shots < 1) throw std::invalid_argument("measure_shots: shots must be >= 1");
    if (bitflip_average && shots % 2 != 0)
        throw std::invalid_argument("measure_shots: bit-flip averaging needs an even shot count");
    const Eigen::Index dim = probabilities.size();
    int n_measured = 0;
    while ((Eigen::Index(1) << n_measured) < dim) ++n_measured;
    if ((Eigen::Index(1) << n_measured) != dim)
        throw std::invalid_argument("measure_shots: probabilities must have power-of-two size");
    if (!readout.empty() && readout.size() != static_cast<std::size_t>(n_measured))
        throw std::invalid_argument("measure_shots: readout list size mismatch");

    Eigen::VectorXd cumulative(dim);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        acc += std::max(probabilities[i], 0.0);
        cumulative[i] = acc;
    }

    const Eigen::Index all_ones = dim - 1;
    ShotResult result;
    result.shots = shots;
    for (long s = 0; s < shots; ++s) {
        const bool flipped = bitflip_average && s >= shots / 2;
        const double u = rng.uniform() * acc;
        Eigen::Index outcome = 0;
        while (outcome < dim - 1 && cumulative[outcome] < u) ++outcome;
        if (flipped) outcome ^= all_ones; // X before measurement
        if (!readout.empty()) {
            for (int b = 0; b < n_measured; ++b) {
                const ReadoutNoise& ro = readout[static_cast<std::size_t>(b)];
                const bool bit = (outcome >> b) & 1;
                const double flip_p = bit ? ro.p10 : ro.p01;
                if (flip_p > 0.0 && rng.bernoulli(flip_p)) outcome ^= Eigen::Index(1) << b;
            }
        }
        if (flipped) outcome ^= all_ones; // unflip the record
        std::string key(static_cast<std::size_t>(n_measured), '0');
        for (int b = 0; b < n_measured; ++b)
            if ((outcome >> b) & 1) key[static_cast<std::size_t>(b)] = '1';
        ++result.counts[key];
    }
    return result;
}

double readout_adjusted_z(double z, const ReadoutNoise& ro, bool bitflip_average) {
    const double contraction = 1.0 - ro.p01 - ro.p10;
    if (bitflip_average) return contraction * z;
    return contraction * z + (ro.p10 - ro.p01);
}

Eigen::MatrixXcd controlled_evolution_unitary(const PauliSum& h, double tau, int k,
                                              int max_qubits) {
    if (h.n_qubits + 1 > max_qubits)
        throw capacity_error("controlled unitary for " + std::to_string(h.n_qubits + 1) +
                             " qubits exceeds the limit of " + std::to_string(max_qubits));
    const Eigen::MatrixXcd dense = to_dense(h, max_qubits);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(dense);
    const Eigen::Index dim = dense.rows();
    Eigen::VectorXcd phases(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double angle = -tau * solver.eigenvalues()[i] * k;
        phases[i] = cx(std::cos(angle), std::sin(angle));
    }
    const Eigen::MatrixXcd evolution =
        solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Identity(2 * dim, 2 * dim);
    full.block(dim, dim, dim, dim) = evolution;
    return full;
}

LayeredCircuit hadamard_test_circuit(const LayeredCircuit& controlled_part, Basis basis) {
    LayeredCircuit c = controlled_part;
    const int n = c.n_qubits;
    const std::size_t a = static_cast<std::size_t>(c.ancilla);

    GateLayer pre = GateLayer::identity(n);
    pre.triples[a] = EulerAngles{kPi / 2, 0.0, kPi}; // H up to phase

    Eigen::Matrix2cd post = u3_matrix(pre.triples[a]);
    if (basis == Basis::Y) {
        Eigen::Matrix2cd sdag = Eigen::Matrix2cd::Identity();
        sdag(1, 1) = cx(0.0, -1.0);
        post = post * sdag; // V before the closing H
    }
    GateLayer post_layer = GateLayer::identity(n);
    post_layer.triples[a] = euler_from_matrix(post);

    c.layers.insert(c.layers.begin(), pre);
    c.layers.push_back(post_layer);
    return c.canonicalized();
}

Eigen::VectorXcd embed_with_ancilla(const Eigen::Ref<const Eigen::VectorXcd>& psi, int ancilla,
                                    int n_qubits) {
    if (psi.size() != (Eigen::Index(1) << (n_qubits - 1)))
        throw std::invalid_argument("data state dimension mismatch");
    Eigen::VectorXcd full = Eigen::VectorXcd::Zero(Eigen::Index(1) << n_qubits);
    for (Eigen::Index r = 0; r < psi.size(); ++r) full[insert_bit(r, ancilla, 0)] = psi[r];
    return full;
}

Eigen::VectorXd hadamard_test_probabilities(const LayeredCircuit& controlled_part,
                                            const Eigen::Ref<const Eigen::VectorXcd>& psi,
                                            Basis basis, const NoiseModel& noise) {
    const LayeredCircuit test = hadamard_test_circuit(controlled_part, basis);
    const Eigen::VectorXcd init = embed_with_ancilla(psi, test.ancilla, test.n_qubits);
    const std::vector<int> measured{test.ancilla};
    if (noise.needs_density()) {
        Eigen::MatrixXcd rho = init * init.adjoint();
        rho = apply_circuit_density(test, std::move(rho), &noise);
        return measurement_probabilities_density(rho, measured, test.n_qubits);
    }
    const Eigen::VectorXcd out = apply_circuit(test, init, &noise);
    return measurement_probabilities(out, measured, test.n_qubits);
}

double hadamard_test(const Eigen::Ref<const Eigen::MatrixXcd>& controlled_u,
                     const Eigen::Ref<const Eigen::VectorXcd>& psi, Basis basis) {
    const Eigen::Index dim = psi.size();
    if (controlled_u.rows() != 2 * dim || controlled_u.cols() != 2 * dim)
        throw std::invalid_argument("controlled unitary dimension mismatch");
    Eigen::VectorXcd full(2 * dim);
    full.head(dim) = kInvSqrt2 * psi;
    full.tail(dim) = kInvSqrt2 * psi;
    full = controlled_u * full;
    if (basis == Basis::Y) full.tail(dim) *= cx(0.0, -1.0);
    const Eigen::VectorXcd low = kInvSqrt2 * (full.head(dim) + full.tail(dim));
    const Eigen::VectorXcd high = kInvSqrt2 * (full.head(dim) - full.tail(dim));
    return low.squaredNorm() - high.squaredNorm();
}

double hadamard_test(const LayeredCircuit& controlled_part,
                     const Eigen::Ref<const Eigen::VectorXcd>& psi, Basis basis,
                     const NoiseModel& noise, long shots, Rng* rng, bool bitflip_average) {
    const Eigen::VectorXd probs = hadamard_test_probabilities(controlled_part, psi, basis, noise);
    const ReadoutNoise ro = noise.readout_for(controlled_part.ancilla);
    if (shots == 0) {
        const double z = probs[0] - probs[1];
        return readout_adjusted_z(z, ro, bitflip_average);
    }
    if (rng == nullptr) throw std::invalid_argument("hadamard_test: sampling needs an rng");
    const ShotResult result =
        measure_shots(probs, {ro}, shots, *rng, bitflip_average);
    const Eigen::VectorXd c = result.count_vector(1);
    return (c[0] - c[1]) / static_cast<double>(shots);
}

LayeredCircuit trotter_step_circuit(double c1, double c2, double tau) {
    if (!std::isfinite(c1) || !std::isfinite(c2) || !std::isfinite(tau))
        throw std::invalid_argument("trotter_step_circuit: constants must be finite");
    const int data = 0;
    const int anc = 1;
    const EulerAngles h{kPi / 2, 0.0, kPi};
    auto rx = [](double angle) { return EulerAngles{angle, -kPi / 2, kPi / 2}; };
    auto rz = [](double angle) { return EulerAngles{0.0, angle, 0.0}; };

    LayeredCircuit c;
    c.n_qubits = 2;
    c.ancilla = anc;
    std::vector<std::pair<int, int>> pair{{data, anc}};

    std::vector<EulerAngles> s0(2);
    s0[anc] = h;
    std::vector<EulerAngles> s1(2);
    s1[anc] = rx(-c1 * tau);
    s1[data] = rz(c1 * tau);
    std::vector<EulerAngles> s2(2);
    s2[data] = h;
    std::vector<EulerAngles> s3(2);
    s3[anc] = rx(-c2 * tau);
    s3[data] = rz(c2 * tau);
    std::vector<EulerAngles> s4(2);
    s4[anc] = h;
    s4[data] = h;

    c.layers.push_back(GateLayer::single(std::move(s0)));
    c.layers.push_back(GateLayer::cz(pair));
    c.layers.push_back(GateLayer::single(std::move(s1)));
    c.layers.push_back(GateLayer::cz(pair));
    c.layers.push_back(GateLayer::single(std::move(s2)));
    c.layers.push_back(GateLayer::cz(pair));
    c.layers.push_back(GateLayer::single(std::move(s3)));
    c.layers.push_back(GateLayer::cz(pair));
    c.layers.push_back(GateLayer::single(std::move(s4)));
    return c;
}

LayeredCircuit repeat_circuit(const LayeredCircuit& circuit, int k) {
    if (k < 1) throw std::invalid_argument("repeat_circuit: k must be >= 1");
    LayeredCircuit out = circuit;
    for (int rep = 1; rep < k; ++rep)
        out.layers.insert(out.layers.end(), circuit.layers.begin(), circuit.layers.end());
    return out.canonicalized();
}

Eigen::MatrixXcd circuit_unitary(const LayeredCircuit& circuit) {
    const Eigen::Index dim = Eigen::Index(1) << circuit.n_qubits;
    Eigen::MatrixXcd u(dim, dim);
    for (Eigen::Index col = 0; col < dim; ++col) {
        Eigen::VectorXcd basis = Eigen::VectorXcd::Zero(dim);
        basis[col] = 1.0;
        u.col(col) = apply_circuit(circuit, std::move(basis), nullptr);
    }
    return u;
}

void dump_circuit(std::ostream& os, const LayeredCircuit& circuit) {
    os << "qubits " << circuit.n_qubits << " ancilla " << circuit.ancilla << "\n";
    char buf[128];
    for (const GateLayer& layer : circuit.layers) {
        if (layer.kind == GateLayer::Kind::SingleQubit) {
            os << "u3";
            for (const EulerAngles& t : layer.triples) {
                std::snprintf(buf, sizeof(buf), " %.6f %.6f %.6f", t.theta, t.phi, t.lambda);
                os << buf;
            }
            os << "\n";
        } else {
            os << "cz";
            for (const auto& [a, b] : layer.cz_pairs) os << " " << a << "-" << b;
            os << "\n";
        }
    }
}

} // namespace spe
