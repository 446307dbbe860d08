#include "spe/compiler.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "spe/rng.hpp"

namespace spe {

namespace {

constexpr double kPi = 3.14159265358979323846;

void apply_single_inplace(Eigen::VectorXcd& state, int qubit, const Eigen::Matrix2cd& u) {
    const Eigen::Index n = state.size();
    const Eigen::Index stride = Eigen::Index(1) << qubit;
    for (Eigen::Index base = 0; base < n; base += 2 * stride) {
        for (Eigen::Index offset = 0; offset < stride; ++offset) {
            const Eigen::Index i0 = base + offset;
            const Eigen::Index i1 = i0 + stride;
            const cx a = state[i0];
            const cx b = state[i1];
            state[i0] = u(0, 0) * a + u(0, 1) * b;
            state[i1] = u(1, 0) * a + u(1, 1) * b;
        }
    }
}

void apply_cz_pairs(Eigen::VectorXcd& state, const std::vector<std::pair<int, int>>& pairs) {
    for (const auto& [a, b] : pairs) {
        const Eigen::Index ma = Eigen::Index(1) << a;
        const Eigen::Index mb = Eigen::Index(1) << b;
        for (Eigen::Index i = 0; i < state.size(); ++i)
            if ((i & ma) && (i & mb)) state[i] = -state[i];
    }
}

// 2x2 cross matrix T(r, s) = sum_rest conj(chi[idx_r]) * f[idx_s] on one qubit;
// <chi| M_q |f> = sum_rs M(r,s) T(r,s) for any one-qubit operator M.
Eigen::Matrix2cd cross_matrix(const Eigen::VectorXcd& chi, const Eigen::VectorXcd& f,
                              int qubit) {
    Eigen::Matrix2cd t = Eigen::Matrix2cd::Zero();
    const Eigen::Index n = chi.size();
    const Eigen::Index stride = Eigen::Index(1) << qubit;
    for (Eigen::Index base = 0; base < n; base += 2 * stride) {
        for (Eigen::Index offset = 0; offset < stride; ++offset) {
            const Eigen::Index i0 = base + offset;
            const Eigen::Index i1 = i0 + stride;
            t(0, 0) += std::conj(chi[i0]) * f[i0];
            t(0, 1) += std::conj(chi[i0]) * f[i1];
            t(1, 0) += std::conj(chi[i1]) * f[i0];
            t(1, 1) += std::conj(chi[i1]) * f[i1];
        }
    }
    return t;
}

struct LossWorkspace {
    std::vector<Eigen::VectorXcd> before; // state entering each single layer
    std::vector<Eigen::VectorXcd> after;  // state leaving each single layer
};

// Squared loss and its gradient; the BFGS objective. The square keeps the
// surface smooth through the minimum.
double squared_loss_and_gradient(const BrickworkAnsatz& ansatz, const Eigen::VectorXd& params,
                                 const Eigen::VectorXcd& target, const Eigen::VectorXcd& input,
                                 Eigen::VectorXd* gradient, LossWorkspace& ws) {
    const int layers = ansatz.n_single_layers();
    ws.before.resize(static_cast<std::size_t>(layers));
    ws.after.resize(static_cast<std::size_t>(layers));

    Eigen::VectorXcd state = input;
    for (int l = 0; l < layers; ++l) {
        ws.before[static_cast<std::size_t>(l)] = state;
        for (int q = 0; q < ansatz.n_qubits; ++q)
            apply_single_inplace(state, q, u3_matrix(ansatz.triple(params, l, q)));
        ws.after[static_cast<std::size_t>(l)] = state;
        if (l < ansatz.n_cz_layers)
            apply_cz_pairs(state, ansatz.cz_pattern[static_cast<std::size_t>(l)]);
    }

    const cx overlap = target.dot(state); // <target|state>
    const double value = 2.0 - 2.0 * overlap.real();
    if (gradient == nullptr) return value;

    gradient->resize(ansatz.param_count());
    const cx half_i(0.0, 0.5); // derivative generators carry -i/2
    Eigen::VectorXcd chi = target;
    for (int l = layers - 1; l >= 0; --l) {
        if (l < ansatz.n_cz_layers)
            apply_cz_pairs(chi, ansatz.cz_pattern[static_cast<std::size_t>(l)]); // self-adjoint
        const Eigen::VectorXcd& f = ws.after[static_cast<std::size_t>(l)];
        for (int q = 0; q < ansatz.n_qubits; ++q) {
            const EulerAngles t = ansatz.triple(params, l, q);
            const Eigen::Matrix2cd cross = cross_matrix(chi, f, q);
            const Eigen::Matrix2cd u = u3_matrix(t);

            // d u3/d theta = D_theta u3 with D_theta = (-i/2) Rz(phi) Y Rz(-phi)
            // = [[0, -e^{-i phi}/2], [e^{i phi}/2, 0]].
            Eigen::Matrix2cd d_theta = Eigen::Matrix2cd::Zero();
            const cx eiphi = std::exp(cx(0.0, t.phi));
            d_theta(0, 1) = -0.5 * std::conj(eiphi);
            d_theta(1, 0) = 0.5 * eiphi;

            Eigen::Matrix2cd d_phi = Eigen::Matrix2cd::Zero();
            d_phi(0, 0) = -half_i;
            d_phi(1, 1) = half_i;

            Eigen::Matrix2cd zhalf = Eigen::Matrix2cd::Zero();
            zhalf(0, 0) = -half_i;
            zhalf(1, 1) = half_i;
            const Eigen::Matrix2cd d_lambda = u * zhalf * u.adjoint();

            const int base = 3 * (l * ansatz.n_qubits + q);
            auto inner = [&](const Eigen::Matrix2cd& m) {
                return (m(0, 0) * cross(0, 0) + m(0, 1) * cross(0, 1) + m(1, 0) * cross(1, 0) +
                        m(1, 1) * cross(1, 1))
                    .real();
            };
            (*gradient)[base + 0] = -2.0 * inner(d_theta);
            (*gradient)[base + 1] = -2.0 * inner(d_phi);
            (*gradient)[base + 2] = -2.0 * inner(d_lambda);
        }
        for (int q = 0; q < ansatz.n_qubits; ++q)
            apply_single_inplace(chi, q, u3_matrix(ansatz.triple(params, l, q)).adjoint().eval());
    }
    return value;
}

struct BfgsOutcome {
    Eigen::VectorXd x;
    double f = 0.0;
    int iterations = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Strong-Wolfe line search (Nocedal & Wright alg. 3.5/3.6).
double wolfe_line_search(const Objective& fn, const Eigen::VectorXd& x0, double f0,
                         const Eigen::VectorXd& g0, const Eigen::VectorXd& direction,
                         Eigen::VectorXd& x_out, double& f_out, Eigen::VectorXd& g_out) {
    constexpr double c1 = 1e-4;
    constexpr double c2 = 0.9;
    const double slope0 = g0.dot(direction);
    if (slope0 >= 0.0) return 0.0;

    Eigen::VectorXd g(x0.size());
    auto eval = [&](double alpha, double& f, double& slope) {
        x_out = x0 + alpha * direction;
        f = fn(x_out, g);
        slope = g.dot(direction);
    };

    auto zoom = [&](double lo, double flo, double slo, double hi, double fhi) -> double {
        double alpha = 0.0;
        for (int it = 0; it < 40; ++it) {
            // Quadratic interpolation with a bisection guard.
            const double denom = 2.0 * (fhi - flo - slo * (hi - lo));
            double cand = denom != 0.0 ? lo - slo * (hi - lo) * (hi - lo) / denom : 0.5 * (lo + hi);
            const double lo_b = std::min(lo, hi);
            const double hi_b = std::max(lo, hi);
            if (!(cand > lo_b + 0.1 * (hi_b - lo_b) && cand < hi_b - 0.1 * (hi_b - lo_b)))
                cand = 0.5 * (lo + hi);
            double f, slope;
            eval(cand, f, slope);
            if (f > f0 + c1 * cand * slope0 || f >= flo) {
                hi = cand;
                fhi = f;
            } else {
                if (std::abs(slope) <= -c2 * slope0) {
                    f_out = f;
                    g_out = g;
                    return cand;
                }
                if (slope * (hi - lo) >= 0.0) {
                    hi = lo;
                    fhi = flo;
                }
                lo = cand;
                flo = f;
                slo = slope;
            }
            alpha = cand;
        }
        double f, slope;
        eval(alpha, f, slope);
        f_out = f;
        g_out = g;
        return alpha;
    };

    double prev_alpha = 0.0;
    double prev_f = f0;
    double prev_slope = slope0;
    double alpha = 1.0;
    for (int it = 0; it < 30; ++it) {
        double f, slope;
        eval(alpha, f, slope);
        if (f > f0 + c1 * alpha * slope0 || (it > 0 && f >= prev_f))
            return zoom(prev_alpha, prev_f, prev_slope, alpha, f);
        if (std::abs(slope) <= -c2 * slope0) {
            f_out = f;
            g_out = g;
            return alpha;
        }
        if (slope >= 0.0) return zoom(alpha, f, slope, prev_alpha, prev_f);
        prev_alpha = alpha;
        prev_f = f;
        prev_slope = slope;
        alpha *= 2.0;
    }
    return 0.0;
}

BfgsOutcome bfgs_minimize(const Objective& fn, Eigen::VectorXd x, int max_iterations,
                          double grad_tol, double f_target) {
    const Eigen::Index n = x.size();
    Eigen::VectorXd g(n);
    double f = fn(x, g);
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    BfgsOutcome out;
    bool first = true;
    for (int it = 0; it < max_iterations; ++it) {
        out.iterations = it;
        if (g.lpNorm<Eigen::Infinity>() <= grad_tol || f <= f_target) break;
        Eigen::VectorXd direction = -(h_inv * g);
        Eigen::VectorXd x_new(n), g_new(n);
        double f_new = f;
        const double alpha = wolfe_line_search(fn, x, f, g, direction, x_new, f_new, g_new);
        if (alpha == 0.0 || !(f_new < f)) break;
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (first) {
                h_inv *= sy / y.squaredNorm();
                first = false;
            }
            const Eigen::VectorXd hy = h_inv * y;
            const double yhy = y.dot(hy);
            h_inv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
                     (hy * s.transpose() + s * hy.transpose()) / sy;
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }
    out.x = std::move(x);
    out.f = f;
    return out;
}

} // namespace

BrickworkAnsatz BrickworkAnsatz::standard(int n_qubits, int n_cz_layers) {
    if (n_qubits < 2) throw std::invalid_argument("brickwork ansatz needs at least 2 qubits");
    if (n_cz_layers < 1) throw std::invalid_argument("brickwork ansatz needs at least 1 CZ layer");
    BrickworkAnsatz a;
    a.n_qubits = n_qubits;
    a.n_cz_layers = n_cz_layers;
    a.cz_pattern.resize(static_cast<std::size_t>(n_cz_layers));
    for (int l = 0; l < n_cz_layers; ++l) {
        for (int q = l % 2; q + 1 < n_qubits; q += 2)
            a.cz_pattern[static_cast<std::size_t>(l)].emplace_back(q, q + 1);
    }
    return a;
}

EulerAngles BrickworkAnsatz::triple(const Eigen::Ref<const Eigen::VectorXd>& params, int layer,
                                    int qubit) const {
    const int base = 3 * (layer * n_qubits + qubit);
    return EulerAngles{params[base], params[base + 1], params[base + 2]};
}

LayeredCircuit BrickworkAnsatz::materialize(const Eigen::Ref<const Eigen::VectorXd>& params,
                                            int ancilla) const {
    if (params.size() != param_count())
        throw std::invalid_argument("parameter count does not match the ansatz");
    LayeredCircuit c;
    c.n_qubits = n_qubits;
    c.ancilla = ancilla;
    for (int l = 0; l < n_single_layers(); ++l) {
        std::vector<EulerAngles> triples(static_cast<std::size_t>(n_qubits));
        for (int q = 0; q < n_qubits; ++q) triples[static_cast<std::size_t>(q)] = triple(params, l, q);
        c.layers.push_back(GateLayer::single(std::move(triples)));
        if (l < n_cz_layers)
            c.layers.push_back(GateLayer::cz(cz_pattern[static_cast<std::size_t>(l)]));
    }
    return c;
}

Eigen::VectorXcd ansatz_apply(const BrickworkAnsatz& ansatz,
                              const Eigen::Ref<const Eigen::VectorXd>& params,
                              const Eigen::Ref<const Eigen::VectorXcd>& state) {
    if (state.size() != (Eigen::Index(1) << ansatz.n_qubits))
        throw std::invalid_argument("state dimension does not match the ansatz");
    Eigen::VectorXcd out = state;
    for (int l = 0; l < ansatz.n_single_layers(); ++l) {
        for (int q = 0; q < ansatz.n_qubits; ++q)
            apply_single_inplace(out, q, u3_matrix(ansatz.triple(params, l, q)));
        if (l < ansatz.n_cz_layers)
            apply_cz_pairs(out, ansatz.cz_pattern[static_cast<std::size_t>(l)]);
    }
    return out;
}

double loss(const BrickworkAnsatz& ansatz, const Eigen::Ref<const Eigen::VectorXd>& params,
            const Eigen::Ref<const Eigen::MatrixXcd>& target_unitary,
            const Eigen::Ref<const Eigen::VectorXcd>& input_state) {
    const Eigen::VectorXcd target = target_unitary * input_state;
    const Eigen::VectorXcd approx = ansatz_apply(ansatz, params, input_state);
    return (target - approx).norm();
}

double loss_and_gradient(const BrickworkAnsatz& ansatz,
                         const Eigen::Ref<const Eigen::VectorXd>& params,
                         const Eigen::Ref<const Eigen::VectorXcd>& target_state,
                         const Eigen::Ref<const Eigen::VectorXcd>& input_state,
                         Eigen::VectorXd& gradient) {
    LossWorkspace ws;
    const Eigen::VectorXd p = params;
    const Eigen::VectorXcd t = target_state;
    const Eigen::VectorXcd in = input_state;
    const double sq = squared_loss_and_gradient(ansatz, p, t, in, &gradient, ws);
    const double l = std::sqrt(std::max(sq, 0.0));
    if (l > 1e-150) gradient /= 2.0 * l; // chain rule from L^2 to L
    return l;
}

CompilationResult compile(const Eigen::Ref<const Eigen::MatrixXcd>& target_unitary,
                          const Eigen::Ref<const Eigen::VectorXcd>& input_state,
                          int n_cz_layers, const CompileOptions& options) {
    const Eigen::Index dim = input_state.size();
    int n_qubits = 0;
    while ((Eigen::Index(1) << n_qubits) < dim) ++n_qubits;
    if ((Eigen::Index(1) << n_qubits) != dim)
        throw std::invalid_argument("compile: state dimension must be a power of two");
    if (target_unitary.rows() != dim || target_unitary.cols() != dim)
        throw std::invalid_argument("compile: target dimension mismatch");

    const BrickworkAnsatz ansatz = BrickworkAnsatz::standard(n_qubits, n_cz_layers);
    const Eigen::VectorXcd target = target_unitary * input_state;
    const Eigen::VectorXcd input = input_state;

    LossWorkspace ws;
    const Objective objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
        return squared_loss_and_gradient(ansatz, p, target, input, &grad, ws);
    };

    CompilationResult best;
    best.final_loss = std::numeric_limits<double>::infinity();
    const double sq_target = options.tol * options.tol;
    for (int restart = 0; restart < std::max(options.max_restarts, 1); ++restart) {
        Rng rng = derived_rng(options.seed, static_cast<std::uint64_t>(restart), stream::compile);
        Eigen::VectorXd x0(ansatz.param_count());
        for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = rng.uniform_in(-kPi, kPi);
        const BfgsOutcome outcome =
            bfgs_minimize(objective, std::move(x0), options.max_iterations, options.grad_tol,
                          sq_target);
        best.iterations += outcome.iterations;
        const double l = std::sqrt(std::max(outcome.f, 0.0));
        if (l < best.final_loss) {
            best.final_loss = l;
            best.params = outcome.x;
        }
        best.restarts_used = restart + 1;
        if (best.final_loss < options.tol) break;
    }
    best.converged = best.final_loss < options.tol;
    return best;
}

} // namespace spe
