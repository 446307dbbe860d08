#include "spe/mitigation.hpp"

#include <cmath>
#include <stdexcept>

namespace spe {

namespace {

bool has_x_component(Pauli p) { return p == Pauli::X || p == Pauli::Y; }

} // namespace

FoldedCircuit fold(const LayeredCircuit& circuit, int n) {
    if (n < 0) throw std::invalid_argument("fold: n must be nonnegative");
    FoldedCircuit out;
    out.n = n;
    out.lambda = 1 + 2 * n;
    LayeredCircuit base = circuit.canonicalized();
    out.circuit.n_qubits = base.n_qubits;
    out.circuit.ancilla = base.ancilla;
    for (const GateLayer& layer : base.layers) {
        out.circuit.layers.push_back(layer);
        if (layer.kind == GateLayer::Kind::EntanglingCZ) {
            for (int fold_i = 0; fold_i < n; ++fold_i) {
                out.circuit.layers.push_back(GateLayer::identity(base.n_qubits));
                out.circuit.layers.push_back(layer);
                out.circuit.layers.push_back(GateLayer::identity(base.n_qubits));
                out.circuit.layers.push_back(layer);
            }
        }
    }
    return out;
}

TwirledCircuit twirl(const LayeredCircuit& circuit, Rng& rng) {
    if (!circuit.is_canonical())
        throw std::invalid_argument("twirl: circuit must be canonical (single-qubit layers "
                                    "surrounding every CZ layer)");
    const int n = circuit.n_qubits;
    TwirledCircuit out;
    out.merged = circuit;

    // Accumulate the merges as matrices and extract Euler triples once.
    std::vector<std::vector<Eigen::Matrix2cd>> singles;
    for (const GateLayer& layer : circuit.layers) {
        if (layer.kind != GateLayer::Kind::SingleQubit) continue;
        std::vector<Eigen::Matrix2cd> mats(static_cast<std::size_t>(n));
        for (int q = 0; q < n; ++q)
            mats[static_cast<std::size_t>(q)] =
                u3_matrix(layer.triples[static_cast<std::size_t>(q)]);
        singles.push_back(std::move(mats));
    }

    static const Pauli alphabet[4] = {Pauli::I, Pauli::Z, Pauli::X, Pauli::Y};
    const Eigen::Matrix2cd z_mat = pauli_matrix(Pauli::Z);
    std::size_t single_index = 0;
    for (std::size_t li = 0; li < circuit.layers.size(); ++li) {
        const GateLayer& layer = circuit.layers[li];
        if (layer.kind == GateLayer::Kind::SingleQubit) {
            ++single_index;
            continue;
        }
        std::vector<Pauli> draw(static_cast<std::size_t>(n));
        for (int q = 0; q < n; ++q)
            draw[static_cast<std::size_t>(q)] = alphabet[rng.uniform_int(4)];

        // Correction after the layer: CZ conjugation sends an X component on
        // one side of a pair to an extra Z on the other side.
        std::vector<Eigen::Matrix2cd> correction(static_cast<std::size_t>(n));
        for (int q = 0; q < n; ++q)
            correction[static_cast<std::size_t>(q)] =
                pauli_matrix(draw[static_cast<std::size_t>(q)]);
        for (const auto& [a, b] : layer.cz_pairs) {
            if (has_x_component(draw[static_cast<std::size_t>(b)]))
                correction[static_cast<std::size_t>(a)] =
                    correction[static_cast<std::size_t>(a)] * z_mat;
            if (has_x_component(draw[static_cast<std::size_t>(a)]))
                correction[static_cast<std::size_t>(b)] =
                    correction[static_cast<std::size_t>(b)] * z_mat;
        }

        std::vector<Eigen::Matrix2cd>& before = singles[single_index - 1];
        std::vector<Eigen::Matrix2cd>& after = singles[single_index];
        for (int q = 0; q < n; ++q) {
            const std::size_t qi = static_cast<std::size_t>(q);
            before[qi] = pauli_matrix(draw[qi]) * before[qi];
            after[qi] = after[qi] * correction[qi];
        }
        out.draws.push_back(std::move(draw));
    }

    single_index = 0;
    for (GateLayer& layer : out.merged.layers) {
        if (layer.kind != GateLayer::Kind::SingleQubit) continue;
        for (int q = 0; q < n; ++q)
            layer.triples[static_cast<std::size_t>(q)] =
                euler_from_matrix(singles[single_index][static_cast<std::size_t>(q)]);
        ++single_index;
    }
    return out;
}

namespace {

Eigen::Vector3d fit_quadratic(const std::vector<ZnePoint>& points) {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = points[static_cast<std::size_t>(i)].lambda;
        design(i, 0) = 1.0;
        design(i, 1) = l;
        design(i, 2) = l * l;
        y[i] = points[static_cast<std::size_t>(i)].value;
    }
    return design.colPivHouseholderQr().solve(y);
}

struct ExpFitState {
    double a = 0.0;
    double b = 0.0;
    bool ok = false;
};

// Levenberg-Marquardt on the signed model a e^{-b lambda} with b clamped to
// [0, inf). The fit counts as converged only when the clamp is inactive or
// b = 0 is a genuine stationary point; data pushing toward growth falls
// through to the quadratic.
ExpFitState fit_exponential(const std::vector<ZnePoint>& points, bool weighted) {
    const std::size_t n = points.size();
    std::vector<double> w(n, 1.0);
    if (weighted) {
        for (std::size_t i = 0; i < n; ++i) {
            const double s = points[i].stderr_value;
            w[i] = s > 0.0 ? 1.0 / (s * s) : 1.0;
        }
    }

    // Log-linear initialization on |y|.
    double sl = 0.0, sy = 0.0, sll = 0.0, sly = 0.0;
    int m = 0;
    for (const ZnePoint& p : points) {
        if (std::abs(p.value) < 1e-300) continue;
        const double ly = std::log(std::abs(p.value));
        sl += p.lambda;
        sy += ly;
        sll += p.lambda * p.lambda;
        sly += p.lambda * ly;
        ++m;
    }
    ExpFitState state;
    if (m < 2) {
        state.a = points[0].value;
        state.b = 0.0;
    } else {
        const double denom = m * sll - sl * sl;
        const double slope = denom != 0.0 ? (m * sly - sl * sy) / denom : 0.0;
        state.b = std::max(-slope, 0.0);
        const double intercept = (sy - (-state.b) * sl) / m;
        double sign = points[0].value < 0.0 ? -1.0 : 1.0;
        state.a = sign * std::exp(intercept);
    }

    auto cost_of = [&](double a, double b) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = a * std::exp(-b * points[i].lambda) - points[i].value;
            c += w[i] * r * r;
        }
        return c;
    };

    double mu = 1e-3;
    double cost = cost_of(state.a, state.b);
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
        double jtj00 = 0.0, jtj01 = 0.0, jtj11 = 0.0, g0 = 0.0, g1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-state.b * points[i].lambda);
            const double r = state.a * e - points[i].value;
            const double ja = e;
            const double jb = -state.a * points[i].lambda * e;
            jtj00 += w[i] * ja * ja;
            jtj01 += w[i] * ja * jb;
            jtj11 += w[i] * jb * jb;
            g0 += w[i] * ja * r;
            g1 += w[i] * jb * r;
        }
        // Project the b-gradient when pinned at the b >= 0 boundary.
        const double g1_eff = (state.b <= 1e-12 && g1 > 0.0) ? 0.0 : g1;
        if (std::max(std::abs(g0), std::abs(g1_eff)) < 1e-10 * (1.0 + cost) ||
            cost < 1e-28) {
            converged = true;
            break;
        }
        bool stepped = false;
        for (int tries = 0; tries < 25; ++tries) {
            const double d00 = jtj00 + mu * std::max(jtj00, 1e-12);
            const double d11 = jtj11 + mu * std::max(jtj11, 1e-12);
            const double det = d00 * d11 - jtj01 * jtj01;
            if (det == 0.0 || !std::isfinite(det)) {
                mu *= 10.0;
                continue;
            }
            const double da = (-g0 * d11 + g1 * jtj01) / det;
            const double db = (-d00 * g1 + jtj01 * g0) / det;
            const double a_new = state.a + da;
            const double b_new = std::max(state.b + db, 0.0);
            const double c_new = cost_of(a_new, b_new);
            if (std::isfinite(c_new) && c_new < cost * (1.0 - 1e-14)) {
                state.a = a_new;
                state.b = b_new;
                cost = c_new;
                mu = std::max(mu * 0.3, 1e-12);
                stepped = true;
                break;
            }
            mu *= 10.0;
        }
        if (!stepped) {
            converged = true; // no further descent; stationary within precision
            break;
        }
    }
    // An exponential that leaves a large fraction of the signal unexplained
    // is the "unstable or poor quality" case; hand it to the quadratic.
    double signal = 0.0;
    for (std::size_t i = 0; i < n; ++i) signal += w[i] * points[i].value * points[i].value;
    const bool poor_quality = signal > 0.0 && cost > 0.0625 * signal; // 25% rms residual
    state.ok = converged && !poor_quality && std::isfinite(state.a) && std::isfinite(state.b);
    return state;
}

} // namespace

ZneFit zne_fit(const std::vector<ZnePoint>& points, bool inverse_variance_weights) {
    if (points.size() < 3)
        throw std::invalid_argument("zne_fit: at least 3 error-rate points are required");
    ZneFit fit;
    const ExpFitState exp_state = fit_exponential(points, inverse_variance_weights);
    if (exp_state.ok && std::abs(exp_state.a) <= 1.2) {
        fit.kind = FitKind::Exponential;
        fit.a = exp_state.a;
        fit.b = exp_state.b;
        fit.extrapolated = exp_state.a;
        return fit;
    }
    fit.kind = FitKind::Quadratic;
    fit.quadratic = fit_quadratic(points);
    fit.extrapolated = fit.quadratic[0];
    return fit;
}

CalibrationMatrix estimate_calibration(int n_qubits, const std::vector<ReadoutNoise>& readout,
                                       long shots_per_state, Rng& rng, bool bitflip_average) {
    if (n_qubits < 1 || n_qubits > 4)
        throw std::invalid_argument("estimate_calibration: qubit count must be in [1, 4]");
    if (shots_per_state < 1)
        throw std::invalid_argument("estimate_calibration: shots_per_state must be >= 1");
    const Eigen::Index dim = Eigen::Index(1) << n_qubits;
    CalibrationMatrix cal;
    cal.shots_per_state = shots_per_state;
    cal.A.resize(dim, dim);
    for (Eigen::Index prepared = 0; prepared < dim; ++prepared) {
        Eigen::VectorXd probs = Eigen::VectorXd::Zero(dim);
        probs[prepared] = 1.0;
        const ShotResult shots = measure_shots(probs, readout, shots_per_state, rng,
                                               bitflip_average);
        cal.A.col(prepared) =
            shots.count_vector(n_qubits) / static_cast<double>(shots_per_state);
    }
    return cal;
}

Eigen::VectorXd apply_readout_mitigation(const Eigen::Ref<const Eigen::VectorXd>& counts,
                                         const CalibrationMatrix& cal) {
    if (counts.size() != cal.A.rows())
        throw std::invalid_argument("apply_readout_mitigation: dimension mismatch");
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(cal.A);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double smax = svd.singularValues()(0);
    if (smin <= 0.0 || smax / smin > 1e6)
        throw std::runtime_error("apply_readout_mitigation: calibration matrix is singular or "
                                 "ill-conditioned");
    return cal.A.partialPivLu().solve(counts.eval());
}

Eigen::VectorXd apply_readout_mitigation(const ShotResult& counts, const CalibrationMatrix& cal) {
    int n_measured = 0;
    while ((Eigen::Index(1) << n_measured) < cal.A.rows()) ++n_measured;
    return apply_readout_mitigation(counts.count_vector(n_measured), cal);
}

} // namespace spe
