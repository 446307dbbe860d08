#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spe/estimator.hpp"

namespace spe {

struct EstimateOptions {
    double alpha_range = 1.5;
    int grid_points = 2001;
    double jump_threshold = 0.05;
    double jump_window = 0.0; // 0 derives the window from beta
    std::vector<std::pair<double, double>> brackets; // manual override
};

// Declarative description of one experiment; strict JSON schema, unknown
// keys rejected.
struct ExperimentConfig {
    std::string hamiltonian_path;
    std::optional<double> tau;
    std::optional<double> tau_bound;
    long initial_state = 0;

    std::string method = "cdf"; // "cdf" | "qeea"
    std::optional<double> beta;
    std::optional<double> delta;
    std::optional<double> epsilon;
    std::optional<int> d;
    std::optional<int> n_fourier; // QEEA truncation N
    int grid_size = 1 << 14;      // QEEA FFT grid
    double qeea_alpha = 0.5;

    long n_samples = 0;
    long shots_per_sample = 0;
    CircuitMode circuit_mode = CircuitMode::Exact;
    std::optional<int> compiled_depth;
    int trotter_steps_per_k = 1;

    double depolarizing_p = 0.0;
    double coherent_zz_theta = 0.0;
    std::optional<ReadoutNoise> readout_uniform;
    std::vector<ReadoutNoise> readout_list; // per circuit qubit, ancilla last

    MitigationPlan mitigation;
    EstimateOptions estimate;
    double compile_tol = 1e-6;
    int compile_max_restarts = 10;

    std::uint64_t seed = 1;
    int threads = 1;
    std::string output_dir = ".";
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

// Everything a command needs, resolved from the config: parsed Hamiltonian,
// tau, reference state, Fourier spec, and importance distribution.
struct ResolvedExperiment {
    PauliSum hamiltonian;
    double tau = 1.0;
    Eigen::VectorXcd psi;
    std::optional<CdfFourierSpec> cdf_spec;
    std::optional<QeeaFourierSpec> qeea_spec;
    ImportanceDistribution dist;
    NoiseModel noise; // sized for the circuit register (data + ancilla)
};

ResolvedExperiment resolve_experiment(const ExperimentConfig& config);

// FNV-1a 64-bit content hash, hex encoded; used by the manifest and the
// compiled-circuit cache keys.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

// Subcommand bodies; each writes its data files under config.output_dir and
// returns the process exit code.
int cmd_coeffs(const ExperimentConfig& config);
int cmd_compile(const ExperimentConfig& config);
int cmd_run(const ExperimentConfig& config);
int cmd_estimate(const ExperimentConfig& config, const std::string& table_path = "");
int cmd_qeea(const ExperimentConfig& config, const std::string& table_path = "");
int cmd_oracle(const ExperimentConfig& config);

} // namespace spe
