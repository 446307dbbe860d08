#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "spe/errors.hpp"
#include "spe/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string table_path;
    long seed = -1;
    int threads = 0;
    std::string out_dir;
};

spe::ExperimentConfig load_with_overrides(const CommonArgs& args) {
    spe::ExperimentConfig cfg = spe::load_config(args.config_path);
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (args.threads > 0) cfg.threads = args.threads;
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    return cfg;
}

void add_common(CLI::App* sub, CommonArgs& args, bool with_table = false) {
    sub->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", args.seed, "override the config seed");
    sub->add_option("--threads", args.threads, "override the worker count");
    sub->add_option("--out", args.out_dir, "override the output directory");
    if (with_table) sub->add_option("--table", args.table_path, "g_k table CSV to post-process");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"statistical phase estimation experiments against a noisy simulator"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* coeffs = app.add_subcommand("coeffs", "write the Fourier coefficient audit CSV");
    add_common(coeffs, args);
    CLI::App* compile_cmd =
        app.add_subcommand("compile", "precompile controlled-evolution circuits");
    add_common(compile_cmd, args);
    CLI::App* run = app.add_subcommand("run", "run the sampled experiment");
    add_common(run, args);
    CLI::App* estimate = app.add_subcommand("estimate", "build the CDF and estimate energies");
    add_common(estimate, args, true);
    CLI::App* qeea = app.add_subcommand("qeea", "build the bin probability vector");
    add_common(qeea, args, true);
    CLI::App* oracle = app.add_subcommand("oracle", "exact spectral data for verification");
    add_common(oracle, args);

    CLI11_PARSE(app, argc, argv);

    try {
        const spe::ExperimentConfig cfg = load_with_overrides(args);
        if (coeffs->parsed()) return spe::cmd_coeffs(cfg);
        if (compile_cmd->parsed()) return spe::cmd_compile(cfg);
        if (run->parsed()) return spe::cmd_run(cfg);
        if (estimate->parsed()) return spe::cmd_estimate(cfg, args.table_path);
        if (qeea->parsed()) return spe::cmd_qeea(cfg, args.table_path);
        if (oracle->parsed()) return spe::cmd_oracle(cfg);
    } catch (const spe::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const spe::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const spe::capacity_error& e) {
        std::fprintf(stderr, "capacity error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
