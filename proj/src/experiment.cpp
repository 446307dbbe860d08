#include "spe/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "spe/compiler.hpp"
#include "spe/errors.hpp"
#include "spe/format.hpp"

namespace spe {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        if (!allowed.count(key))
            throw config_error("unknown key '" + key + "' in " + where);
    }
}

double require_number(const json& object, const std::string& key) {
    if (!object.contains(key)) throw config_error("missing required key '" + key + "'");
    if (!object[key].is_number()) throw config_error("key '" + key + "' must be a number");
    return object[key].get<double>();
}

ReadoutNoise readout_from_json(const json& value, const std::string& where) {
    ReadoutNoise ro;
    if (value.is_object()) {
        reject_unknown_keys(value, {"p01", "p10"}, where);
        ro.p01 = value.value("p01", 0.0);
        ro.p10 = value.value("p10", 0.0);
    } else if (value.is_array() && value.size() == 2) {
        ro.p01 = value[0].get<double>();
        ro.p10 = value[1].get<double>();
    } else {
        throw config_error(where + " must be {p01, p10} or [p01, p10]");
    }
    return ro;
}

ExperimentConfig parse_config(const json& root) {
    if (!root.is_object()) throw config_error("config root must be a JSON object");
    reject_unknown_keys(root,
                        {"hamiltonian_path", "tau", "tau_bound", "initial_state", "method",
                         "beta", "delta", "epsilon", "d", "n_fourier", "grid_size", "alpha",
                         "n_samples", "shots_per_sample", "circuit_mode", "compiled_depth",
                         "trotter_steps_per_k", "noise", "mitigation", "estimate", "compile",
                         "seed", "threads", "output_dir"},
                        "config");
    ExperimentConfig cfg;
    if (!root.contains("hamiltonian_path") || !root["hamiltonian_path"].is_string())
        throw config_error("config needs a 'hamiltonian_path' string");
    cfg.hamiltonian_path = root["hamiltonian_path"].get<std::string>();

    if (root.contains("tau")) cfg.tau = require_number(root, "tau");
    if (root.contains("tau_bound")) cfg.tau_bound = require_number(root, "tau_bound");
    if (cfg.tau.has_value() == cfg.tau_bound.has_value())
        throw config_error("config needs exactly one of 'tau' and 'tau_bound'");

    cfg.initial_state = root.value("initial_state", 0L);
    cfg.method = root.value("method", std::string("cdf"));
    if (cfg.method != "cdf" && cfg.method != "qeea")
        throw config_error("method must be 'cdf' or 'qeea'");

    if (root.contains("beta")) cfg.beta = require_number(root, "beta");
    if (root.contains("delta")) cfg.delta = require_number(root, "delta");
    if (root.contains("epsilon")) cfg.epsilon = require_number(root, "epsilon");
    if (root.contains("d")) cfg.d = root["d"].get<int>();
    if (root.contains("n_fourier")) cfg.n_fourier = root["n_fourier"].get<int>();
    cfg.grid_size = root.value("grid_size", 1 << 14);
    cfg.qeea_alpha = root.value("alpha", 0.5);

    if (cfg.method == "cdf") {
        const bool direct = cfg.beta.has_value();
        const bool derived = cfg.delta.has_value() && cfg.epsilon.has_value();
        if (direct == derived)
            throw config_error("cdf method needs exactly one of 'beta' or 'delta'+'epsilon'");
        if (direct && !cfg.d.has_value())
            throw config_error("cdf method with explicit 'beta' also needs 'd'");
        if (cfg.n_fourier.has_value())
            throw config_error("'n_fourier' applies to the qeea method only");
    } else {
        if (cfg.beta.has_value() || cfg.delta.has_value())
            throw config_error("qeea method takes 'epsilon' and 'n_fourier', not beta/delta");
        if (!cfg.epsilon.has_value() || !cfg.n_fourier.has_value())
            throw config_error("qeea method needs 'epsilon' and 'n_fourier'");
    }

    cfg.n_samples = root.value("n_samples", 0L);
    cfg.shots_per_sample = root.value("shots_per_sample", 0L);

    const std::string mode = root.value("circuit_mode", std::string("exact"));
    if (mode == "exact")
        cfg.circuit_mode = CircuitMode::Exact;
    else if (mode == "compiled")
        cfg.circuit_mode = CircuitMode::Compiled;
    else if (mode == "trotter")
        cfg.circuit_mode = CircuitMode::Trotter;
    else
        throw config_error("circuit_mode must be exact, compiled, or trotter");
    if (root.contains("compiled_depth")) cfg.compiled_depth = root["compiled_depth"].get<int>();
    if (cfg.circuit_mode == CircuitMode::Compiled && !cfg.compiled_depth.has_value())
        throw config_error("compiled circuit_mode needs 'compiled_depth'");
    cfg.trotter_steps_per_k = root.value("trotter_steps_per_k", 1);

    if (root.contains("noise")) {
        const json& noise = root["noise"];
        reject_unknown_keys(noise, {"depolarizing_p", "coherent_zz_theta", "readout"},
                            "noise");
        cfg.depolarizing_p = noise.value("depolarizing_p", 0.0);
        cfg.coherent_zz_theta = noise.value("coherent_zz_theta", 0.0);
        if (noise.contains("readout")) {
            const json& ro = noise["readout"];
            if (ro.is_array() && !ro.empty() && (ro[0].is_array() || ro[0].is_object())) {
                for (const json& entry : ro)
                    cfg.readout_list.push_back(readout_from_json(entry, "noise.readout[]"));
            } else {
                cfg.readout_uniform = readout_from_json(ro, "noise.readout");
            }
        }
    }

    if (root.contains("mitigation")) {
        const json& mit = root["mitigation"];
        reject_unknown_keys(mit,
                            {"twirl", "zne_lambdas", "readout", "bitflip_average",
                             "weighted_fit", "calibration_shots"},
                            "mitigation");
        cfg.mitigation.twirl = mit.value("twirl", false);
        if (mit.contains("zne_lambdas"))
            cfg.mitigation.zne_lambdas = mit["zne_lambdas"].get<std::vector<int>>();
        cfg.mitigation.readout = mit.value("readout", false);
        cfg.mitigation.bitflip_average = mit.value("bitflip_average", true);
        cfg.mitigation.weighted_fit = mit.value("weighted_fit", false);
        cfg.mitigation.calibration_shots = mit.value("calibration_shots", 10000L);
    }

    if (root.contains("estimate")) {
        const json& est = root["estimate"];
        reject_unknown_keys(est,
                            {"alpha_range", "grid_points", "jump_threshold", "jump_window",
                             "brackets"},
                            "estimate");
        cfg.estimate.alpha_range = est.value("alpha_range", 1.5);
        cfg.estimate.grid_points = est.value("grid_points", 2001);
        cfg.estimate.jump_threshold = est.value("jump_threshold", 0.05);
        cfg.estimate.jump_window = est.value("jump_window", 0.0);
        if (est.contains("brackets")) {
            for (const json& b : est["brackets"]) {
                if (!b.is_array() || b.size() != 2)
                    throw config_error("estimate.brackets entries must be [lo, hi]");
                cfg.estimate.brackets.emplace_back(b[0].get<double>(), b[1].get<double>());
            }
        }
    }

    if (root.contains("compile")) {
        const json& comp = root["compile"];
        reject_unknown_keys(comp, {"tol", "max_restarts"}, "compile");
        cfg.compile_tol = comp.value("tol", 1e-6);
        cfg.compile_max_restarts = comp.value("max_restarts", 10);
    }

    cfg.seed = root.value("seed", 1UL);
    cfg.threads = root.value("threads", 1);
    if (!root.contains("output_dir") || !root["output_dir"].is_string())
        throw config_error("config needs an 'output_dir' string");
    cfg.output_dir = root["output_dir"].get<std::string>();

    // Cross-field checks mirrored from the run plan.
    for (std::size_t i = 0; i < cfg.mitigation.zne_lambdas.size(); ++i) {
        const int l = cfg.mitigation.zne_lambdas[i];
        if (l < 1 || l % 2 == 0) throw config_error("zne_lambdas must be odd and >= 1");
        if (i > 0 && l <= cfg.mitigation.zne_lambdas[i - 1])
            throw config_error("zne_lambdas must be strictly ascending");
    }
    if (cfg.circuit_mode == CircuitMode::Exact) {
        if (cfg.mitigation.twirl || cfg.mitigation.zne_lambdas != std::vector<int>{1})
            throw config_error("twirling and folding need a layered circuit_mode");
        if (cfg.depolarizing_p != 0.0 || cfg.coherent_zz_theta != 0.0)
            throw config_error("gate noise needs a layered circuit_mode");
    }
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["hamiltonian_path"] = cfg.hamiltonian_path;
    if (cfg.tau) j["tau"] = *cfg.tau;
    if (cfg.tau_bound) j["tau_bound"] = *cfg.tau_bound;
    j["initial_state"] = cfg.initial_state;
    j["method"] = cfg.method;
    if (cfg.beta) j["beta"] = *cfg.beta;
    if (cfg.delta) j["delta"] = *cfg.delta;
    if (cfg.epsilon) j["epsilon"] = *cfg.epsilon;
    if (cfg.d) j["d"] = *cfg.d;
    if (cfg.n_fourier) j["n_fourier"] = *cfg.n_fourier;
    j["grid_size"] = cfg.grid_size;
    j["alpha"] = cfg.qeea_alpha;
    j["n_samples"] = cfg.n_samples;
    j["shots_per_sample"] = cfg.shots_per_sample;
    j["circuit_mode"] = cfg.circuit_mode == CircuitMode::Exact      ? "exact"
                        : cfg.circuit_mode == CircuitMode::Compiled ? "compiled"
                                                                    : "trotter";
    if (cfg.compiled_depth) j["compiled_depth"] = *cfg.compiled_depth;
    j["trotter_steps_per_k"] = cfg.trotter_steps_per_k;
    j["noise"] = {{"depolarizing_p", cfg.depolarizing_p},
                  {"coherent_zz_theta", cfg.coherent_zz_theta}};
    if (cfg.readout_uniform)
        j["noise"]["readout"] = {{"p01", cfg.readout_uniform->p01},
                                 {"p10", cfg.readout_uniform->p10}};
    if (!cfg.readout_list.empty()) {
        json list = json::array();
        for (const ReadoutNoise& ro : cfg.readout_list) list.push_back({ro.p01, ro.p10});
        j["noise"]["readout"] = list;
    }
    j["mitigation"] = {{"twirl", cfg.mitigation.twirl},
                       {"zne_lambdas", cfg.mitigation.zne_lambdas},
                       {"readout", cfg.mitigation.readout},
                       {"bitflip_average", cfg.mitigation.bitflip_average},
                       {"weighted_fit", cfg.mitigation.weighted_fit},
                       {"calibration_shots", cfg.mitigation.calibration_shots}};
    j["estimate"] = {{"alpha_range", cfg.estimate.alpha_range},
                     {"grid_points", cfg.estimate.grid_points},
                     {"jump_threshold", cfg.estimate.jump_threshold},
                     {"jump_window", cfg.estimate.jump_window}};
    if (!cfg.estimate.brackets.empty()) {
        json list = json::array();
        for (const auto& [lo, hi] : cfg.estimate.brackets) list.push_back({lo, hi});
        j["estimate"]["brackets"] = list;
    }
    j["compile"] = {{"tol", cfg.compile_tol}, {"max_restarts", cfg.compile_max_restarts}};
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["output_dir"] = cfg.output_dir;
    return j;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& payload) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write file: " + path);
    out << payload;
}

struct ManifestBuilder {
    ManifestBuilder(std::string cmd, json cfg) : command(std::move(cmd)), config(std::move(cfg)) {}

    std::string command;
    json config;
    std::vector<json> files;
    std::vector<json> failures;
    json extra = json::object();
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void add_file(const std::string& directory, const std::string& name,
                  const std::string& payload) {
        write_file((std::filesystem::path(directory) / name).string(), payload);
        files.push_back({{"name", name},
                         {"bytes", payload.size()},
                         {"fnv1a64", fnv1a64_hex(payload)}});
    }

    void write(const std::string& directory) {
        json manifest;
        manifest["command"] = command;
        manifest["version"] = "0.1.0";
        manifest["config"] = config;
        manifest["files"] = files;
        manifest["failures"] = failures;
        for (const auto& [key, value] : extra.items()) manifest[key] = value;
        manifest["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_file((std::filesystem::path(directory) / "manifest.json").string(),
                   manifest.dump(2) + "\n");
    }
};

PauliSum load_hamiltonian(const ExperimentConfig& cfg) {
    std::ifstream in(cfg.hamiltonian_path);
    if (!in) throw data_error("cannot open Hamiltonian file: " + cfg.hamiltonian_path);
    return parse_hamiltonian(in);
}

RunPlan plan_from_config(const ExperimentConfig& cfg) {
    RunPlan plan;
    plan.mode = cfg.circuit_mode;
    plan.compiled_depth = cfg.compiled_depth.value_or(3);
    plan.trotter_steps_per_k = cfg.trotter_steps_per_k;
    plan.n_samples = cfg.n_samples;
    plan.shots_per_sample = cfg.shots_per_sample;
    plan.mitigation = cfg.mitigation;
    plan.seed = cfg.seed;
    plan.threads = cfg.threads;
    plan.compile_tol = cfg.compile_tol;
    plan.compile_max_restarts = cfg.compile_max_restarts;
    return plan;
}

std::string compile_cache_key(const PauliSum& h, double tau, int k, int depth,
                              std::uint64_t seed) {
    return h.str() + "|" + format_g17(tau) + "|" + std::to_string(k) + "|" +
           std::to_string(depth) + "|" + std::to_string(seed);
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(root);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

ResolvedExperiment resolve_experiment(const ExperimentConfig& cfg) {
    ResolvedExperiment rx;
    rx.hamiltonian = load_hamiltonian(cfg);
    rx.tau = cfg.tau ? *cfg.tau : select_tau(rx.hamiltonian, *cfg.tau_bound);

    const Eigen::Index dim = Eigen::Index(1) << rx.hamiltonian.n_qubits;
    if (cfg.initial_state < 0 || cfg.initial_state >= dim)
        throw config_error("initial_state index out of range for " +
                           std::to_string(rx.hamiltonian.n_qubits) + " qubits");
    rx.psi = Eigen::VectorXcd::Zero(dim);
    rx.psi[cfg.initial_state] = 1.0;

    if (cfg.method == "cdf") {
        double beta = 0.0;
        int d = 0;
        if (cfg.beta) {
            beta = *cfg.beta;
            d = *cfg.d;
        } else {
            beta = select_beta(*cfg.delta, *cfg.epsilon);
            d = cfg.d ? *cfg.d : select_d(beta, *cfg.epsilon, *cfg.delta);
        }
        rx.cdf_spec = wan_coefficients(beta, d);
        rx.dist = importance_distribution(*rx.cdf_spec);
    } else {
        rx.qeea_spec =
            qeea_coefficients(*cfg.epsilon, *cfg.n_fourier, cfg.grid_size, cfg.qeea_alpha);
        rx.dist = importance_distribution(*rx.qeea_spec);
    }

    rx.noise.depolarizing_p = cfg.depolarizing_p;
    rx.noise.coherent_zz_theta = cfg.coherent_zz_theta;
    const int n_total = rx.hamiltonian.n_qubits + 1;
    if (cfg.readout_uniform) {
        rx.noise.readout.assign(static_cast<std::size_t>(n_total), *cfg.readout_uniform);
    } else if (!cfg.readout_list.empty()) {
        if (cfg.readout_list.size() != static_cast<std::size_t>(n_total))
            throw config_error("noise.readout list must cover data qubits plus the ancilla (" +
                               std::to_string(n_total) + " entries)");
        rx.noise.readout = cfg.readout_list;
    }
    rx.noise.validate(n_total);
    return rx;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

int cmd_coeffs(const ExperimentConfig& cfg) {
    const ResolvedExperiment rx = resolve_experiment(cfg);
    ManifestBuilder manifest{"coeffs", config_to_json(cfg)};
    std::ostringstream csv;
    write_coefficients_csv(csv, rx.dist);
    manifest.add_file(cfg.output_dir, "coefficients.csv", csv.str());
    manifest.write(cfg.output_dir);
    return 0;
}

int cmd_compile(const ExperimentConfig& cfg) {
    if (cfg.circuit_mode != CircuitMode::Compiled)
        throw config_error("compile command needs circuit_mode = compiled");
    if (cfg.n_samples < 1) throw config_error("compile command needs n_samples >= 1");
    const ResolvedExperiment rx = resolve_experiment(cfg);
    ManifestBuilder manifest{"compile", config_to_json(cfg)};

    Rng draw_rng = derived_rng(cfg.seed, 0, stream::draws);
    std::vector<int> ks = draw_samples(rx.dist, cfg.n_samples, draw_rng);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    Eigen::VectorXcd input(2 * rx.psi.size());
    input.head(rx.psi.size()) = rx.psi / std::sqrt(2.0);
    input.tail(rx.psi.size()) = rx.psi / std::sqrt(2.0);

    std::ostringstream cache;
    cache << "# spe-compile-cache v1\n";
    for (int k : ks) {
        const Eigen::MatrixXcd target = controlled_evolution_unitary(rx.hamiltonian, rx.tau, k);
        CompileOptions options;
        options.tol = cfg.compile_tol;
        options.max_restarts = cfg.compile_max_restarts;
        options.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k), stream::compile);
        const CompilationResult comp = compile(target, input, *cfg.compiled_depth, options);
        if (!comp.converged)
            manifest.failures.push_back({{"k", k}, {"loss", comp.final_loss}});
        cache << fnv1a64_hex(compile_cache_key(rx.hamiltonian, rx.tau, k, *cfg.compiled_depth,
                                               cfg.seed))
              << ',' << k << ',' << *cfg.compiled_depth << ',' << format_g17(comp.final_loss);
        for (Eigen::Index i = 0; i < comp.params.size(); ++i)
            cache << ' ' << format_g17(comp.params[i]);
        cache << "\n";
    }
    manifest.add_file(cfg.output_dir, "compile_cache.csv", cache.str());
    manifest.write(cfg.output_dir);
    return 0;
}

namespace {

// Loads compile_cache.csv entries whose key hash matches this experiment.
std::shared_ptr<const std::unordered_map<int, Eigen::VectorXd>>
load_compile_cache(const ExperimentConfig& cfg, const ResolvedExperiment& rx) {
    const auto path = std::filesystem::path(cfg.output_dir) / "compile_cache.csv";
    std::ifstream in(path);
    if (!in) return nullptr;
    auto cache = std::make_shared<std::unordered_map<int, Eigen::VectorXd>>();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string hash_hex, k_str, depth_str, rest;
        if (!std::getline(row, hash_hex, ',') || !std::getline(row, k_str, ',') ||
            !std::getline(row, depth_str, ',') || !std::getline(row, rest))
            continue;
        const int k = std::stoi(k_str);
        const int depth = std::stoi(depth_str);
        if (depth != cfg.compiled_depth.value_or(-1)) continue;
        if (hash_hex != fnv1a64_hex(compile_cache_key(rx.hamiltonian, rx.tau, k, depth,
                                                      cfg.seed)))
            continue;
        std::istringstream values(rest);
        double loss_value = 0.0;
        values >> loss_value;
        std::vector<double> params;
        double v;
        while (values >> v) params.push_back(v);
        Eigen::VectorXd p(static_cast<Eigen::Index>(params.size()));
        for (std::size_t i = 0; i < params.size(); ++i)
            p[static_cast<Eigen::Index>(i)] = params[i];
        (*cache)[k] = std::move(p);
    }
    if (cache->empty()) return nullptr;
    return cache;
}

} // namespace

int cmd_run(const ExperimentConfig& cfg) {
    if (cfg.n_samples < 1) throw config_error("run command needs n_samples >= 1");
    const ResolvedExperiment rx = resolve_experiment(cfg);
    ManifestBuilder manifest{"run", config_to_json(cfg)};

    RunPlan plan = plan_from_config(cfg);
    plan.noise = rx.noise;
    if (cfg.circuit_mode == CircuitMode::Compiled)
        plan.compiled_params = load_compile_cache(cfg, rx);
    const ExperimentResult result =
        run_experiment(rx.hamiltonian, rx.tau, rx.psi, rx.dist, plan);

    std::ostringstream gk;
    write_gk_csv(gk, result.aggregated);
    manifest.add_file(cfg.output_dir, "gk_table.csv", gk.str());

    const int max_k = result.aggregated.ks.empty() ? 0 : result.aggregated.ks.back();
    manifest.extra["max_sampled_k"] = max_k;
    if (cfg.circuit_mode == CircuitMode::Trotter)
        manifest.extra["max_cz_depth"] = 4 * cfg.trotter_steps_per_k * max_k;
    else if (cfg.circuit_mode == CircuitMode::Compiled)
        manifest.extra["max_cz_depth"] = *cfg.compiled_depth;

    if (result.aggregated.has_zne) {
        std::ostringstream re_csv, im_csv;
        write_mitigation_csv(re_csv, result.aggregated, false);
        write_mitigation_csv(im_csv, result.aggregated, true);
        manifest.add_file(cfg.output_dir, "mitigation_report_re.csv", re_csv.str());
        manifest.add_file(cfg.output_dir, "mitigation_report_im.csv", im_csv.str());
    }
    for (const SampleFailure& f : result.failures)
        manifest.failures.push_back({{"index", f.index}, {"message", f.message}});
    manifest.write(cfg.output_dir);
    return 0;
}

namespace {

AggregatedSamples load_table(const ExperimentConfig& cfg, const ResolvedExperiment& rx,
                             const std::string& table_path) {
    const std::string path =
        table_path.empty()
            ? (std::filesystem::path(cfg.output_dir) / "gk_table.csv").string()
            : table_path;
    std::istringstream in(read_file(path));
    AggregatedSamples agg = read_gk_csv(in);
    if (agg.ks.empty()) throw data_error("g_k table is empty");
    // Reinstate the coefficient signs from the resolved spec.
    std::unordered_map<int, double> sign_of;
    for (std::size_t i = 0; i < rx.dist.ks.size(); ++i)
        sign_of[rx.dist.ks[i]] = rx.dist.signs[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < agg.ks.size(); ++i) {
        const auto it = sign_of.find(agg.ks[i]);
        if (it == sign_of.end())
            throw data_error("g_k table holds k = " + std::to_string(agg.ks[i]) +
                             " outside the configured spectrum spec");
        agg.signs[static_cast<Eigen::Index>(i)] = it->second;
    }
    return agg;
}

json energies_for_table(const GkTable& table, const ResolvedExperiment& rx,
                        const ExperimentConfig& cfg) {
    std::vector<std::pair<double, double>> brackets = cfg.estimate.brackets;
    double window = cfg.estimate.jump_window;
    if (window <= 0.0 && rx.cdf_spec) window = jump_window_for_beta(rx.cdf_spec->beta);
    if (brackets.empty())
        brackets = find_jump_brackets(table, cfg.estimate.jump_threshold, window,
                                      -cfg.estimate.alpha_range, cfg.estimate.alpha_range);
    json list = json::array();
    for (const auto& [lo, hi] : brackets) {
        const EnergyEstimate est =
            estimate_energy(table, lo, hi, rx.tau, cfg.estimate.grid_points);
        list.push_back({{"bracket", {est.bracket_lo, est.bracket_hi}},
                        {"tau_lambda", est.tau_lambda},
                        {"lambda", est.lambda},
                        {"lambda_shifted", est.lambda + rx.hamiltonian.constant_shift},
                        {"objective", est.objective},
                        {"on_boundary", est.on_boundary}});
    }
    return list;
}

} // namespace

int cmd_estimate(const ExperimentConfig& cfg, const std::string& table_path) {
    const ResolvedExperiment rx = resolve_experiment(cfg);
    ManifestBuilder manifest{"estimate", config_to_json(cfg)};
    const AggregatedSamples agg = load_table(cfg, rx, table_path);

    json out;
    out["tau"] = rx.tau;
    out["constant_shift"] = rx.hamiltonian.constant_shift;
    json slots = json::array();
    for (const LambdaSlice& slice : agg.slices) {
        slots.push_back({{"lambda", slice.lambda},
                         {"energies", energies_for_table(agg.table(slice.lambda), rx, cfg)}});
    }
    if (agg.has_zne)
        slots.push_back(
            {{"lambda", 0.0}, {"energies", energies_for_table(agg.table(0.0), rx, cfg)}});
    out["slots"] = slots;

    const CdfTrace trace = trace_cdf(agg.table(), -cfg.estimate.alpha_range,
                                     cfg.estimate.alpha_range, cfg.estimate.grid_points);
    std::ostringstream trace_csv;
    write_trace_csv(trace_csv, trace);
    manifest.add_file(cfg.output_dir, "cdf_trace.csv", trace_csv.str());
    manifest.add_file(cfg.output_dir, "energies.json", out.dump(2) + "\n");
    manifest.write(cfg.output_dir);
    return 0;
}

int cmd_qeea(const ExperimentConfig& cfg, const std::string& table_path) {
    if (cfg.method != "qeea") throw config_error("qeea command needs method = qeea");
    const ResolvedExperiment rx = resolve_experiment(cfg);
    ManifestBuilder manifest{"qeea", config_to_json(cfg)};
    const AggregatedSamples agg = load_table(cfg, rx, table_path);
    const Eigen::VectorXd p = qeea_probability_vector(agg.table(), *rx.qeea_spec);
    std::ostringstream csv;
    csv << "bin,center,probability\n";
    for (int j = 0; j <= rx.qeea_spec->M; ++j)
        csv << j << ',' << format_g17(rx.qeea_spec->bin_center(j)) << ',' << format_g17(p[j])
            << "\n";
    manifest.add_file(cfg.output_dir, "qeea_bins.csv", csv.str());
    manifest.write(cfg.output_dir);
    return 0;
}

int cmd_oracle(const ExperimentConfig& cfg) {
    const PauliSum h = load_hamiltonian(cfg);
    const double tau = cfg.tau ? *cfg.tau : select_tau(h, *cfg.tau_bound);
    const Eigen::Index dim = Eigen::Index(1) << h.n_qubits;
    if (cfg.initial_state < 0 || cfg.initial_state >= dim)
        throw config_error("initial_state index out of range");
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    psi[cfg.initial_state] = 1.0;
    const SpectralDecomposition sd = spectral_measure(h, tau, psi);

    ManifestBuilder manifest{"oracle", config_to_json(cfg)};
    json out;
    out["tau"] = tau;
    out["constant_shift"] = h.constant_shift;
    json eigenvalues = json::array();
    json shifted = json::array();
    json tau_lambdas = json::array();
    json overlaps = json::array();
    for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
        eigenvalues.push_back(sd.eigenvalues[i]);
        shifted.push_back(sd.eigenvalues[i] + h.constant_shift);
        tau_lambdas.push_back(tau * sd.eigenvalues[i]);
        overlaps.push_back(sd.overlaps[i]);
    }
    out["eigenvalues"] = eigenvalues;
    out["eigenvalues_shifted"] = shifted;
    out["tau_lambdas"] = tau_lambdas;
    out["overlaps"] = overlaps;
    manifest.add_file(cfg.output_dir, "spectral.json", out.dump(2) + "\n");
    manifest.write(cfg.output_dir);
    return 0;
}

} // namespace spe
