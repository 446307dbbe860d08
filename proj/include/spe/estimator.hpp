#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "spe/fourier.hpp"
#include "spe/hamiltonian.hpp"
#include "spe/mitigation.hpp"
#include "spe/simulator.hpp"

namespace spe {

// i.i.d. draws from the importance distribution; entry i is k_i.
std::vector<int> draw_samples(const ImportanceDistribution& dist, long n_samples, Rng& rng);

// One lambda slice of the aggregated estimates: everything needed to
// evaluate the estimators at a point.
struct GkTable {
    std::vector<int> ks;     // ascending
    Eigen::VectorXd n_k;     // sample weights; integral for sampled runs
    double total_samples = 0.0;
    double normalization = 0.0; // S of the coefficient spec in use
    Eigen::VectorXd signs;      // +1 for the CDF method
    Eigen::VectorXd r, s;       // estimates of Re g_k, Im g_k
};

// G(x) = 1/2 + (2S/N_S) sum_k n_k [r_k sin(kx) + s_k cos(kx)].
double cdf_value(const GkTable& table, double x);

// G'(x) = sum_k n_k k [r_k cos(kx) - s_k sin(kx)], unnormalized.
double cdf_derivative(const GkTable& table, double x);

// Full (unsampled) sums: weights n_k = P_k with N_S = 1, so cdf_value
// reproduces the direct coefficient-weighted series.
GkTable table_from_exact(const ImportanceDistribution& dist, const std::vector<cx>& gk_by_entry);

struct LambdaSlice {
    double lambda = 1.0;
    Eigen::VectorXd r, s;
    Eigen::VectorXd r_err, s_err; // standard errors of the per-k means
};

struct AggregatedSamples {
    std::vector<int> ks; // unique sampled k, ascending
    Eigen::VectorXd n_k;
    double total_samples = 0.0;
    double normalization = 0.0;
    Eigen::VectorXd signs;
    std::vector<LambdaSlice> slices; // ascending lambda
    bool has_zne = false;
    Eigen::VectorXd r_zne, s_zne;
    std::vector<FitKind> r_fit, s_fit;

    // lambda <= 0 selects the extrapolated column when present; the default
    // picks the extrapolated column, falling back to the first slice.
    GkTable table(std::optional<double> lambda = std::nullopt) const;
};

enum class CircuitMode { Exact, Compiled, Trotter };

struct MitigationPlan {
    bool twirl = false;
    std::vector<int> zne_lambdas{1};
    bool readout = false;
    bool bitflip_average = true;
    bool weighted_fit = false;
    long calibration_shots = 10000;
};

struct RunPlan {
    CircuitMode mode = CircuitMode::Exact;
    int compiled_depth = 3;
    int trotter_steps_per_k = 1;
    long n_samples = 0;
    long shots_per_sample = 0; // 0 selects the exact-expectation path
    NoiseModel noise;
    MitigationPlan mitigation;
    std::uint64_t seed = 1;
    int threads = 1;
    double compile_tol = 1e-6;
    int compile_max_restarts = 10;
    int max_qubits = 12;
    // Precompiled ansatz parameters per k (validated by the caller); missing
    // entries are compiled on the fly.
    std::shared_ptr<const std::unordered_map<int, Eigen::VectorXd>> compiled_params;
};

struct SampleFailure {
    long index = 0;
    std::string message;
};

struct ExperimentResult {
    AggregatedSamples aggregated;
    std::vector<SampleFailure> failures;
};

// Runs the sampled pipeline: builds the per-k circuit, twirls once per
// sample, folds to each error rate, measures both Hadamard-test bases with
// bit-flip averaging, applies readout mitigation, aggregates per-k
// arithmetic means, and extrapolates when three or more error rates are
// configured.
// Per-sample randomness derives from (seed, sample index), so the thread
// count never changes the result.
ExperimentResult run_experiment(const PauliSum& h, double tau,
                                const Eigen::Ref<const Eigen::VectorXcd>& psi,
                                const ImportanceDistribution& dist, const RunPlan& plan);

struct EnergyEstimate {
    double tau_lambda = 0.0;
    double lambda = 0.0; // tau_lambda / tau
    double objective = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    bool on_boundary = false;
};

// Coarse grid scan plus golden-section refinement of the derivative
// objective inside the bracket.
EnergyEstimate estimate_energy(const GkTable& table, double bracket_lo, double bracket_hi,
                               double tau, int grid_points = 2001);

// Maximal intervals where the CDF rises by more than threshold across a
// window-wide step. The default window is the resolution delta that the
// beta-selection bound associates with beta at epsilon = 0.1.
std::vector<std::pair<double, double>> find_jump_brackets(const GkTable& table,
                                                          double threshold = 0.05,
                                                          double window = 0.0,
                                                          double x_lo = -1.5, double x_hi = 1.5,
                                                          int grid_points = 4001);

// Resolution window delta recovered from beta via the beta-selection bound.
double jump_window_for_beta(double beta);

// p_j = eps/2pi + sqrt(2/pi) (S/N_S) sum_k n_k sign_k [r cos(k c_j) - s sin(k c_j)]
// over bin centers c_j = -alpha + j eps.
Eigen::VectorXd qeea_probability_vector(const GkTable& table, const QeeaFourierSpec& spec);

struct CdfTrace {
    Eigen::VectorXd x;
    Eigen::VectorXd value;
    Eigen::VectorXd derivative;
};

CdfTrace trace_cdf(const GkTable& table, double x_lo, double x_hi, int points,
                   bool with_derivative = true);

// Trapezoid integral of |a - b| over the common grid.
double distance_w(const CdfTrace& a, const CdfTrace& b);

// CSV round trip of the aggregated table:
// columns k, n_k, lambda, r_mean, r_stderr, s_mean, s_stderr with lambda = 0
// rows holding the extrapolated column; a leading comment carries N_S and S.
void write_gk_csv(std::ostream& os, const AggregatedSamples& agg);
AggregatedSamples read_gk_csv(std::istream& in);

// Mitigation report (k, lambda, mean, stderr, n_twirls, fit_kind,
// extrapolated) for one component (r or s).
void write_mitigation_csv(std::ostream& os, const AggregatedSamples& agg, bool imaginary_part);

void write_trace_csv(std::ostream& os, const CdfTrace& trace);

} // namespace spe
