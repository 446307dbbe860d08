#include "spe/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "spe/compiler.hpp"
#include "spe/errors.hpp"
#include "spe/format.hpp"

namespace spe {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> cumulative_of(const Eigen::VectorXd& probabilities) {
    std::vector<double> cum(static_cast<std::size_t>(probabilities.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
        acc += probabilities[i];
        cum[static_cast<std::size_t>(i)] = acc;
    }
    return cum;
}

} // namespace

std::vector<int> draw_samples(const ImportanceDistribution& dist, long n_samples, Rng& rng) {
    if (n_samples < 1) throw std::invalid_argument("draw_samples: n_samples must be >= 1");
    const std::vector<double> cum = cumulative_of(dist.probabilities);
    const double total = cum.back();
    std::vector<int> out(static_cast<std::size_t>(n_samples));
    for (long i = 0; i < n_samples; ++i) {
        const double u = rng.uniform() * total;
        const auto it = std::lower_bound(cum.begin(), cum.end(), u);
        const std::size_t idx = std::min(static_cast<std::size_t>(it - cum.begin()),
                                         dist.ks.size() - 1);
        out[static_cast<std::size_t>(i)] = dist.ks[idx];
    }
    return out;
}

double cdf_value(const GkTable& table, double x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < table.ks.size(); ++i) {
        const double kx = table.ks[i] * x;
        const Eigen::Index e = static_cast<Eigen::Index>(i);
        acc += table.n_k[e] * (table.r[e] * std::sin(kx) + table.s[e] * std::cos(kx));
    }
    return 0.5 + 2.0 * table.normalization / table.total_samples * acc;
}

double cdf_derivative(const GkTable& table, double x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < table.ks.size(); ++i) {
        const double k = table.ks[i];
        const double kx = k * x;
        const Eigen::Index e = static_cast<Eigen::Index>(i);
        acc += table.n_k[e] * k * (table.r[e] * std::cos(kx) - table.s[e] * std::sin(kx));
    }
    return acc;
}

GkTable table_from_exact(const ImportanceDistribution& dist, const std::vector<cx>& gk_by_entry) {
    if (gk_by_entry.size() != dist.ks.size())
        throw std::invalid_argument("table_from_exact: g_k entry count mismatch");
    GkTable table;
    table.ks = dist.ks;
    table.n_k = dist.probabilities;
    table.total_samples = 1.0;
    table.normalization = dist.normalization;
    table.signs = dist.signs;
    table.r.resize(static_cast<Eigen::Index>(dist.ks.size()));
    table.s.resize(static_cast<Eigen::Index>(dist.ks.size()));
    for (std::size_t i = 0; i < dist.ks.size(); ++i) {
        table.r[static_cast<Eigen::Index>(i)] = gk_by_entry[i].real();
        table.s[static_cast<Eigen::Index>(i)] = gk_by_entry[i].imag();
    }
    return table;
}

GkTable AggregatedSamples::table(std::optional<double> lambda) const {
    GkTable t;
    t.ks = ks;
    t.n_k = n_k;
    t.total_samples = total_samples;
    t.normalization = normalization;
    t.signs = signs;
    if (!lambda.has_value()) {
        if (has_zne) {
            t.r = r_zne;
            t.s = s_zne;
            return t;
        }
        t.r = slices.front().r;
        t.s = slices.front().s;
        return t;
    }
    if (*lambda <= 0.0) {
        if (!has_zne) throw std::invalid_argument("no extrapolated column in this table");
        t.r = r_zne;
        t.s = s_zne;
        return t;
    }
    for (const LambdaSlice& slice : slices) {
        if (std::abs(slice.lambda - *lambda) < 1e-9) {
            t.r = slice.r;
            t.s = slice.s;
            return t;
        }
    }
    throw std::invalid_argument("no such error-rate column: " + format_g17(*lambda));
}

namespace {

struct SampleOutcome {
    int k = 0;
    std::vector<double> r, s; // per lambda
    bool failed = false;
    std::string message;
};

struct TrotterTerms {
    double c1 = 0.0;
    double c2 = 0.0;
};

TrotterTerms trotter_terms(const PauliSum& h) {
    if (h.n_qubits != 1)
        throw std::invalid_argument("trotter mode expects a single-qubit c1 Z + c2 X Hamiltonian");
    TrotterTerms t;
    for (const auto& [c, s] : h.terms) {
        if (s.letters[0] == Pauli::Z)
            t.c1 = c;
        else if (s.letters[0] == Pauli::X)
            t.c2 = c;
        else
            throw std::invalid_argument("trotter mode expects only Z and X terms");
    }
    return t;
}

double estimate_from_probs(const Eigen::VectorXd& probs, const ReadoutNoise& ro, long shots,
                           Rng& rng, bool bitflip, bool mitigate, const CalibrationMatrix* cal) {
    if (shots == 0) {
        const double z = probs[0] - probs[1];
        const double z_noisy = readout_adjusted_z(z, ro, bitflip);
        if (!mitigate) return z_noisy;
        Eigen::VectorXd noisy(2);
        noisy[0] = 0.5 * (1.0 + z_noisy);
        noisy[1] = 0.5 * (1.0 - z_noisy);
        const Eigen::VectorXd fixed = apply_readout_mitigation(noisy, *cal);
        return fixed[0] - fixed[1];
    }
    const ShotResult result = measure_shots(probs, {ro}, shots, rng, bitflip);
    Eigen::VectorXd counts = result.count_vector(1);
    if (mitigate) counts = apply_readout_mitigation(counts, *cal);
    return (counts[0] - counts[1]) / static_cast<double>(shots);
}

void validate_plan(const RunPlan& plan) {
    if (plan.n_samples < 1) throw std::invalid_argument("run plan needs n_samples >= 1");
    if (plan.shots_per_sample < 0) throw std::invalid_argument("negative shot count");
    if (plan.mitigation.bitflip_average && plan.shots_per_sample % 2 != 0)
        throw std::invalid_argument("bit-flip averaging needs an even shot count");
    const auto& lambdas = plan.mitigation.zne_lambdas;
    if (lambdas.empty()) throw std::invalid_argument("zne_lambdas must not be empty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (lambdas[i] < 1 || lambdas[i] % 2 == 0)
            throw std::invalid_argument("zne_lambdas must be odd and >= 1");
        if (i > 0 && lambdas[i] <= lambdas[i - 1])
            throw std::invalid_argument("zne_lambdas must be strictly ascending");
    }
    if (plan.mode == CircuitMode::Exact) {
        if (plan.mitigation.twirl)
            throw std::invalid_argument("twirling needs a layered circuit mode");
        if (lambdas.size() != 1 || lambdas[0] != 1)
            throw std::invalid_argument("folding needs a layered circuit mode");
        if (plan.noise.depolarizing_p != 0.0 || plan.noise.coherent_zz_theta != 0.0)
            throw std::invalid_argument("gate noise needs a layered circuit mode");
    }
}

} // namespace

ExperimentResult run_experiment(const PauliSum& h, double tau,
                                const Eigen::Ref<const Eigen::VectorXcd>& psi,
                                const ImportanceDistribution& dist, const RunPlan& plan) {
    validate_plan(plan);
    const int n_total = h.n_qubits + 1;
    const int ancilla = h.n_qubits;
    plan.noise.validate(n_total);
    if (psi.size() != (Eigen::Index(1) << h.n_qubits))
        throw std::invalid_argument("run_experiment: reference state dimension mismatch");

    ExperimentResult result;

    Rng draw_rng = derived_rng(plan.seed, 0, stream::draws);
    const std::vector<int> draws = draw_samples(dist, plan.n_samples, draw_rng);

    std::vector<int> unique_ks = draws;
    std::sort(unique_ks.begin(), unique_ks.end());
    unique_ks.erase(std::unique(unique_ks.begin(), unique_ks.end()), unique_ks.end());

    // Exact mode can evaluate g_k from the spectral oracle directly.
    std::optional<SpectralDecomposition> spectral;
    std::optional<TrotterTerms> trotter;
    std::unordered_map<int, LayeredCircuit> compiled;
    if (plan.mode == CircuitMode::Exact) {
        spectral = spectral_measure(h, tau, psi, plan.max_qubits);
    } else if (plan.mode == CircuitMode::Trotter) {
        trotter = trotter_terms(h);
        if (plan.trotter_steps_per_k < 1)
            throw std::invalid_argument("trotter_steps_per_k must be >= 1");
    } else {
        Eigen::VectorXcd input(Eigen::Index(2) * psi.size());
        input.head(psi.size()) = psi / std::sqrt(2.0);
        input.tail(psi.size()) = psi / std::sqrt(2.0);
        const BrickworkAnsatz ansatz = BrickworkAnsatz::standard(n_total, plan.compiled_depth);
        for (int k : unique_ks) {
            if (plan.compiled_params) {
                const auto it = plan.compiled_params->find(k);
                if (it != plan.compiled_params->end() &&
                    it->second.size() == ansatz.param_count()) {
                    compiled.emplace(k, ansatz.materialize(it->second, ancilla));
                    continue;
                }
            }
            const Eigen::MatrixXcd target =
                controlled_evolution_unitary(h, tau, k, plan.max_qubits);
            CompileOptions options;
            options.tol = plan.compile_tol;
            options.max_restarts = plan.compile_max_restarts;
            options.seed = derive_seed(plan.seed, static_cast<std::uint64_t>(k), stream::compile);
            const CompilationResult comp = compile(target, input, plan.compiled_depth, options);
            if (!comp.converged)
                result.failures.push_back(
                    {-1, "compilation for k = " + std::to_string(k) +
                             " stopped at loss " + format_g17(comp.final_loss)});
            compiled.emplace(k, ansatz.materialize(comp.params, ancilla));
        }
    }

    std::optional<CalibrationMatrix> calibration;
    if (plan.mitigation.readout) {
        Rng cal_rng = derived_rng(plan.seed, 0, stream::calibration);
        calibration = estimate_calibration(1, {plan.noise.readout_for(ancilla)},
                                           plan.mitigation.calibration_shots, cal_rng,
                                           plan.mitigation.bitflip_average);
    }

    const std::vector<int>& lambdas = plan.mitigation.zne_lambdas;
    const ReadoutNoise ancilla_ro = plan.noise.readout_for(ancilla);
    const Eigen::VectorXcd psi_copy = psi;

    std::vector<SampleOutcome> outcomes(static_cast<std::size_t>(plan.n_samples));
    std::atomic<long> cursor{0};
    auto worker = [&]() {
        for (;;) {
            const long i = cursor.fetch_add(1);
            if (i >= plan.n_samples) return;
            SampleOutcome& out = outcomes[static_cast<std::size_t>(i)];
            out.k = draws[static_cast<std::size_t>(i)];
            out.r.assign(lambdas.size(), 0.0);
            out.s.assign(lambdas.size(), 0.0);
            Rng rng = derived_rng(plan.seed, static_cast<std::uint64_t>(i), stream::sample);
            try {
                for (std::size_t li = 0; li < lambdas.size(); ++li) {
                    Eigen::VectorXd probs_x(2), probs_y(2);
                    if (plan.mode == CircuitMode::Exact) {
                        const double angle_unit = -tau;
                        cx g(0.0, 0.0);
                        for (Eigen::Index e = 0; e < spectral->eigenvalues.size(); ++e) {
                            const double angle = angle_unit * spectral->eigenvalues[e] * out.k;
                            g += spectral->overlaps[e] * cx(std::cos(angle), std::sin(angle));
                        }
                        probs_x << 0.5 * (1.0 + g.real()), 0.5 * (1.0 - g.real());
                        probs_y << 0.5 * (1.0 + g.imag()), 0.5 * (1.0 - g.imag());
                    } else {
                        LayeredCircuit circuit;
                        if (plan.mode == CircuitMode::Trotter) {
                            const LayeredCircuit step = trotter_step_circuit(
                                trotter->c1, trotter->c2, tau / plan.trotter_steps_per_k);
                            circuit = repeat_circuit(step, out.k * plan.trotter_steps_per_k);
                        } else {
                            circuit = compiled.at(out.k);
                        }
                        const int folds = (lambdas[li] - 1) / 2;
                        if (folds > 0) circuit = fold(circuit, folds).circuit;
                        if (plan.mitigation.twirl) circuit = twirl(circuit, rng).merged;
                        probs_x = hadamard_test_probabilities(circuit, psi_copy, Basis::X,
                                                              plan.noise);
                        probs_y = hadamard_test_probabilities(circuit, psi_copy, Basis::Y,
                                                              plan.noise);
                    }
                    out.r[li] = estimate_from_probs(
                        probs_x, ancilla_ro, plan.shots_per_sample, rng,
                        plan.mitigation.bitflip_average, plan.mitigation.readout,
                        calibration ? &*calibration : nullptr);
                    out.s[li] = estimate_from_probs(
                        probs_y, ancilla_ro, plan.shots_per_sample, rng,
                        plan.mitigation.bitflip_average, plan.mitigation.readout,
                        calibration ? &*calibration : nullptr);
                }
            } catch (const std::exception& e) {
                out.failed = true;
                out.message = e.what();
            }
        }
    };
    const int n_threads = std::max(plan.threads, 1);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    for (long i = 0; i < plan.n_samples; ++i) {
        const SampleOutcome& out = outcomes[static_cast<std::size_t>(i)];
        if (out.failed) result.failures.push_back({i, out.message});
    }

    // Aggregate per k: arithmetic means over repeated samples, then the
    // per-k extrapolation when enough error rates are present.
    std::map<int, std::vector<const SampleOutcome*>> by_k;
    for (const SampleOutcome& out : outcomes)
        if (!out.failed) by_k[out.k].push_back(&out);

    AggregatedSamples& agg = result.aggregated;
    const std::size_t n_unique = by_k.size();
    if (n_unique == 0) throw data_error("run_experiment: every sample failed");
    agg.ks.reserve(n_unique);
    agg.n_k.resize(static_cast<Eigen::Index>(n_unique));
    agg.signs.resize(static_cast<Eigen::Index>(n_unique));
    agg.normalization = dist.normalization;
    agg.slices.resize(lambdas.size());
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
        agg.slices[li].lambda = lambdas[li];
        agg.slices[li].r.resize(static_cast<Eigen::Index>(n_unique));
        agg.slices[li].s.resize(static_cast<Eigen::Index>(n_unique));
        agg.slices[li].r_err.resize(static_cast<Eigen::Index>(n_unique));
        agg.slices[li].s_err.resize(static_cast<Eigen::Index>(n_unique));
    }

    std::unordered_map<int, double> sign_of;
    for (std::size_t i = 0; i < dist.ks.size(); ++i)
        sign_of[dist.ks[i]] = dist.signs[static_cast<Eigen::Index>(i)];

    Eigen::Index row = 0;
    double total = 0.0;
    for (const auto& [k, records] : by_k) {
        agg.ks.push_back(k);
        const double n = static_cast<double>(records.size());
        agg.n_k[row] = n;
        total += n;
        agg.signs[row] = sign_of.at(k);
        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            double r_sum = 0.0, s_sum = 0.0;
            for (const SampleOutcome* rec : records) {
                r_sum += rec->r[li];
                s_sum += rec->s[li];
            }
            const double r_mean = r_sum / n;
            const double s_mean = s_sum / n;
            double r_var = 0.0, s_var = 0.0;
            for (const SampleOutcome* rec : records) {
                r_var += (rec->r[li] - r_mean) * (rec->r[li] - r_mean);
                s_var += (rec->s[li] - s_mean) * (rec->s[li] - s_mean);
            }
            agg.slices[li].r[row] = r_mean;
            agg.slices[li].s[row] = s_mean;
            agg.slices[li].r_err[row] =
                records.size() > 1 ? std::sqrt(r_var / (n * (n - 1.0))) : 0.0;
            agg.slices[li].s_err[row] =
                records.size() > 1 ? std::sqrt(s_var / (n * (n - 1.0))) : 0.0;
        }
        ++row;
    }
    agg.total_samples = total;

    if (lambdas.size() >= 3) {
        agg.has_zne = true;
        agg.r_zne.resize(static_cast<Eigen::Index>(n_unique));
        agg.s_zne.resize(static_cast<Eigen::Index>(n_unique));
        agg.r_fit.resize(n_unique);
        agg.s_fit.resize(n_unique);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n_unique); ++i) {
            std::vector<ZnePoint> pr, ps;
            for (std::size_t li = 0; li < lambdas.size(); ++li) {
                pr.push_back({static_cast<double>(lambdas[li]), agg.slices[li].r[i],
                              agg.slices[li].r_err[i]});
                ps.push_back({static_cast<double>(lambdas[li]), agg.slices[li].s[i],
                              agg.slices[li].s_err[i]});
            }
            const ZneFit fr = zne_fit(pr, plan.mitigation.weighted_fit);
            const ZneFit fs = zne_fit(ps, plan.mitigation.weighted_fit);
            agg.r_zne[i] = fr.extrapolated;
            agg.s_zne[i] = fs.extrapolated;
            agg.r_fit[static_cast<std::size_t>(i)] = fr.kind;
            agg.s_fit[static_cast<std::size_t>(i)] = fs.kind;
        }
    }
    return result;
}

EnergyEstimate estimate_energy(const GkTable& table, double bracket_lo, double bracket_hi,
                               double tau, int grid_points) {
    if (!(bracket_hi > bracket_lo))
        throw std::invalid_argument("estimate_energy: empty bracket");
    const int n = std::max(grid_points, 5);
    const double step = (bracket_hi - bracket_lo) / (n - 1);
    const double center = 0.5 * (bracket_lo + bracket_hi);
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double x = bracket_lo + i * step;
        const double v = cdf_derivative(table, x);
        const bool closer =
            std::abs(x - center) < std::abs(bracket_lo + best * step - center);
        if (v > best_value || (v == best_value && closer)) {
            best_value = v;
            best = i;
        }
    }
    EnergyEstimate est;
    est.bracket_lo = bracket_lo;
    est.bracket_hi = bracket_hi;
    est.on_boundary = best == 0 || best == n - 1;

    double lo = bracket_lo + std::max(best - 1, 0) * step;
    double hi = bracket_lo + std::min(best + 1, n - 1) * step;
    const double inv_gold = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - inv_gold * (hi - lo);
    double d = lo + inv_gold * (hi - lo);
    double fc = cdf_derivative(table, c);
    double fd = cdf_derivative(table, d);
    while (hi - lo > 1e-10) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_gold * (hi - lo);
            fc = cdf_derivative(table, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_gold * (hi - lo);
            fd = cdf_derivative(table, d);
        }
    }
    est.tau_lambda = 0.5 * (lo + hi);
    est.objective = cdf_derivative(table, est.tau_lambda);
    est.lambda = est.tau_lambda / tau;
    return est;
}

double jump_window_for_beta(double beta) {
    const double w = lambert_w(3.0 / (kPi * 0.1 * 0.1));
    const double arg = std::sqrt(std::min(w / (4.0 * beta), 1.0));
    return std::asin(arg);
}

std::vector<std::pair<double, double>> find_jump_brackets(const GkTable& table, double threshold,
                                                          double window, double x_lo,
                                                          double x_hi, int grid_points) {
    if (!(x_hi > x_lo)) throw std::invalid_argument("find_jump_brackets: empty range");
    const int n = std::max(grid_points, 16);
    const double step = (x_hi - x_lo) / (n - 1);
    const double w = window > 0.0 ? window : 50.0 * step;
    std::vector<std::pair<double, double>> brackets;
    bool in_run = false;
    double run_start = 0.0;
    double run_end = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = x_lo + i * step;
        const double rise = cdf_value(table, x + 0.5 * w) - cdf_value(table, x - 0.5 * w);
        if (rise > threshold) {
            if (!in_run) {
                in_run = true;
                run_start = x;
            }
            run_end = x;
        } else if (in_run) {
            brackets.emplace_back(std::max(run_start - w, x_lo), std::min(run_end + w, x_hi));
            in_run = false;
        }
    }
    if (in_run) brackets.emplace_back(std::max(run_start - w, x_lo), x_hi);
    // Merge overlaps introduced by the window padding.
    std::vector<std::pair<double, double>> merged;
    for (const auto& b : brackets) {
        if (!merged.empty() && b.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, b.second);
        else
            merged.push_back(b);
    }
    return merged;
}

Eigen::VectorXd qeea_probability_vector(const GkTable& table, const QeeaFourierSpec& spec) {
    const double pref = std::sqrt(2.0 / kPi) * table.normalization / table.total_samples;
    Eigen::VectorXd p(spec.M + 1);
    for (int j = 0; j <= spec.M; ++j) {
        const double c = spec.bin_center(j);
        double acc = 0.0;
        for (std::size_t i = 0; i < table.ks.size(); ++i) {
            const Eigen::Index e = static_cast<Eigen::Index>(i);
            const double kc = table.ks[i] * c;
            acc += table.n_k[e] * table.signs[e] *
                   (table.r[e] * std::cos(kc) - table.s[e] * std::sin(kc));
        }
        p[j] = spec.epsilon / (2.0 * kPi) + pref * acc;
    }
    return p;
}

CdfTrace trace_cdf(const GkTable& table, double x_lo, double x_hi, int points,
                   bool with_derivative) {
    if (points < 2 || !(x_hi > x_lo)) throw std::invalid_argument("trace_cdf: bad grid");
    CdfTrace trace;
    trace.x.resize(points);
    trace.value.resize(points);
    if (with_derivative) trace.derivative.resize(points);
    for (int i = 0; i < points; ++i) {
        const double x = x_lo + (x_hi - x_lo) * i / (points - 1);
        trace.x[i] = x;
        trace.value[i] = cdf_value(table, x);
        if (with_derivative) trace.derivative[i] = cdf_derivative(table, x);
    }
    return trace;
}

double distance_w(const CdfTrace& a, const CdfTrace& b) {
    if (a.x.size() != b.x.size()) throw std::invalid_argument("distance_w: grid size mismatch");
    for (Eigen::Index i = 0; i < a.x.size(); ++i)
        if (std::abs(a.x[i] - b.x[i]) > 1e-12)
            throw std::invalid_argument("distance_w: grids do not match");
    double acc = 0.0;
    for (Eigen::Index i = 0; i + 1 < a.x.size(); ++i) {
        const double d0 = std::abs(a.value[i] - b.value[i]);
        const double d1 = std::abs(a.value[i + 1] - b.value[i + 1]);
        acc += 0.5 * (d0 + d1) * (a.x[i + 1] - a.x[i]);
    }
    return acc;
}

void write_gk_csv(std::ostream& os, const AggregatedSamples& agg) {
    os << "# total_samples=" << format_g17(agg.total_samples)
       << " normalization=" << format_g17(agg.normalization) << "\n";
    os << "k,n_k,lambda,r_mean,r_stderr,s_mean,s_stderr\n";
    for (std::size_t i = 0; i < agg.ks.size(); ++i) {
        const Eigen::Index e = static_cast<Eigen::Index>(i);
        for (const LambdaSlice& slice : agg.slices) {
            os << agg.ks[i] << ',' << format_g17(agg.n_k[e]) << ',' << format_g17(slice.lambda)
               << ',' << format_g17(slice.r[e]) << ',' << format_g17(slice.r_err[e]) << ','
               << format_g17(slice.s[e]) << ',' << format_g17(slice.s_err[e]) << "\n";
        }
        if (agg.has_zne) {
            os << agg.ks[i] << ',' << format_g17(agg.n_k[e]) << ",0," << format_g17(agg.r_zne[e])
               << ",0," << format_g17(agg.s_zne[e]) << ",0\n";
        }
    }
}

AggregatedSamples read_gk_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# total_samples=", 0) != 0)
        throw data_error("g_k table: missing metadata line");
    double total = 0.0, normalization = 0.0;
    if (std::sscanf(line.c_str(), "# total_samples=%lf normalization=%lf", &total,
                    &normalization) != 2)
        throw data_error("g_k table: malformed metadata line");
    if (!std::getline(in, line) || line.rfind("k,", 0) != 0)
        throw data_error("g_k table: missing header line");

    struct Row {
        double n_k, lambda, r, r_err, s, s_err;
    };
    std::map<int, std::vector<Row>> rows;
    std::vector<double> lambda_order;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        Row row{};
        int k = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf", &k, &row.n_k, &row.lambda,
                        &row.r, &row.r_err, &row.s, &row.s_err) != 7)
            throw data_error("g_k table: malformed row '" + line + "'");
        rows[k].push_back(row);
        if (row.lambda > 0.0 &&
            std::none_of(lambda_order.begin(), lambda_order.end(),
                         [&](double l) { return std::abs(l - row.lambda) < 1e-9; }))
            lambda_order.push_back(row.lambda);
    }
    if (rows.empty()) throw data_error("g_k table: no data rows");
    std::sort(lambda_order.begin(), lambda_order.end());
    if (lambda_order.empty())
        throw data_error("g_k table: no positive error-rate rows");

    AggregatedSamples agg;
    agg.total_samples = total;
    agg.normalization = normalization;
    const std::size_t n_unique = rows.size();
    agg.n_k.resize(static_cast<Eigen::Index>(n_unique));
    agg.signs = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_unique));
    agg.slices.resize(lambda_order.size());
    for (std::size_t li = 0; li < lambda_order.size(); ++li) {
        agg.slices[li].lambda = lambda_order[li];
        agg.slices[li].r.resize(static_cast<Eigen::Index>(n_unique));
        agg.slices[li].s.resize(static_cast<Eigen::Index>(n_unique));
        agg.slices[li].r_err.resize(static_cast<Eigen::Index>(n_unique));
        agg.slices[li].s_err.resize(static_cast<Eigen::Index>(n_unique));
    }
    bool any_zne = false;
    for (const auto& [k, rvec] : rows)
        for (const Row& row : rvec)
            if (row.lambda == 0.0) any_zne = true;
    agg.has_zne = any_zne;
    if (any_zne) {
        agg.r_zne.resize(static_cast<Eigen::Index>(n_unique));
        agg.s_zne.resize(static_cast<Eigen::Index>(n_unique));
    }

    Eigen::Index row_i = 0;
    for (const auto& [k, rvec] : rows) {
        agg.ks.push_back(k);
        agg.n_k[row_i] = rvec.front().n_k;
        for (const Row& row : rvec) {
            if (row.n_k != agg.n_k[row_i])
                throw data_error("g_k table: inconsistent n_k for k = " + std::to_string(k));
            if (row.lambda == 0.0) {
                agg.r_zne[row_i] = row.r;
                agg.s_zne[row_i] = row.s;
                continue;
            }
            bool placed = false;
            for (std::size_t li = 0; li < lambda_order.size(); ++li) {
                if (std::abs(lambda_order[li] - row.lambda) < 1e-9) {
                    agg.slices[li].r[row_i] = row.r;
                    agg.slices[li].s[row_i] = row.s;
                    agg.slices[li].r_err[row_i] = row.r_err;
                    agg.slices[li].s_err[row_i] = row.s_err;
                    placed = true;
                    break;
                }
            }
            if (!placed) throw data_error("g_k table: stray lambda value");
        }
        ++row_i;
    }
    return agg;
}

void write_mitigation_csv(std::ostream& os, const AggregatedSamples& agg, bool imaginary_part) {
    os << "k,lambda,mean,stderr,n_twirls,fit_kind,extrapolated\n";
    for (std::size_t i = 0; i < agg.ks.size(); ++i) {
        const Eigen::Index e = static_cast<Eigen::Index>(i);
        std::string kind;
        std::string extrapolated;
        if (agg.has_zne) {
            const FitKind fk = imaginary_part ? agg.s_fit[i] : agg.r_fit[i];
            kind = fk == FitKind::Exponential ? "exponential" : "quadratic";
            extrapolated = format_g17(imaginary_part ? agg.s_zne[e] : agg.r_zne[e]);
        }
        for (const LambdaSlice& slice : agg.slices) {
            const double mean = imaginary_part ? slice.s[e] : slice.r[e];
            const double err = imaginary_part ? slice.s_err[e] : slice.r_err[e];
            os << agg.ks[i] << ',' << format_g17(slice.lambda) << ',' << format_g17(mean) << ','
               << format_g17(err) << ',' << format_g17(agg.n_k[e]) << ',' << kind << ','
               << extrapolated << "\n";
        }
    }
}

void write_trace_csv(std::ostream& os, const CdfTrace& trace) {
    os << "x,value,derivative\n";
    const bool has_deriv = trace.derivative.size() == trace.x.size();
    for (Eigen::Index i = 0; i < trace.x.size(); ++i) {
        os << format_g17(trace.x[i]) << ',' << format_g17(trace.value[i]) << ','
           << (has_deriv ? format_g17(trace.derivative[i]) : std::string()) << "\n";
    }
}

} // namespace spe
