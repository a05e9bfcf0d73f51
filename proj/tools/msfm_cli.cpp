// Command-line front end: simulate, estimate, montecarlo, verify.

#include "msfm/driver.hpp"
#include "msfm/io.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

namespace {

struct Setting {
    const char* flag;
    const char* key;
    const char* help;
};

// flags shared by every subcommand; values go through the same parser as the
// config file so that a flag simply overrides the file entry
constexpr Setting kCommon[] = {
    {"--seed", "seed", "Base seed"},
    {"--out", "out", "Output directory"},
};
constexpr Setting kSim[] = {
    {"--n", "n", "Cross-section size"},
    {"--t", "t", "Number of periods"},
    {"--r", "r", "Factors per regime"},
    {"--p11", "p11", "P(stay in regime 1)"},
    {"--p22", "p22", "P(stay in regime 2)"},
    {"--rho-f", "rho_f", "Factor AR(1) coefficient"},
    {"--tau", "tau", "Idiosyncratic cross-correlation decay"},
    {"--rho-idio", "rho_idio", "Upper bound of idiosyncratic AR coefficients"},
    {"--noise-to-signal", "noise_to_signal", "Idiosyncratic to common variance ratio"},
};
constexpr Setting kEm[] = {
    {"--max-iter", "max_iter", "EM iteration cap"},
    {"--epsilon", "epsilon", "Relative log-likelihood tolerance"},
    {"--omega1", "omega1", "Initial P11 offset from 0.5"},
    {"--omega2", "omega2", "Initial P22 offset from 0.5"},
    {"--variance-update", "variance_update", "weighted or unweighted"},
};
constexpr Setting kEstimate[] = {
    {"--input", "input", "Panel CSV"},
    {"--k", "k", "Number of factors, or auto"},
    {"--k-max", "k_max", "Largest k considered by auto"},
    {"--demean", "demean", "Subtract column means (true/false)"},
};
constexpr Setting kMonteCarlo[] = {
    {"--reps", "reps", "Replications"},
    {"--threads", "threads", "Worker threads (0 = all cores)"},
};

struct Command {
    CLI::App* app = nullptr;
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
};

template <std::size_t N>
void add_settings(Command& cmd, const Setting (&settings)[N]) {
    for (const Setting& s : settings) cmd.options[s.key] = cmd.app->add_option(s.flag, cmd.values[s.key], s.help);
}

msfm::RunConfig build_config(const Command& cmd, msfm::Mode mode) {
    msfm::RunConfig cfg;
    cfg.mode = mode;
    if (!cmd.config_path.empty()) msfm::apply_settings(cfg, msfm::load_config_file(cmd.config_path));
    std::map<std::string, std::string> given;
    for (const auto& [key, opt] : cmd.options)
        if (opt->count() > 0) given[key] = cmd.values.at(key);
    msfm::apply_settings(cfg, given);
    cfg.validate();
    return cfg;
}

void print_params(const msfm::EstimateOutput& out) {
    const auto& p = out.em.params.trans;
    std::printf("k = %lld%s\n", static_cast<long long>(out.k), out.k_selected ? " (eigenvalue ratio)" : "");
    std::printf("P_hat = [[%.4f, %.4f], [%.4f, %.4f]]\n", p(0, 0), p(0, 1), p(1, 0), p(1, 1));
    std::printf("xi_bar = (%.4f, %.4f)\n", out.xi_bar[0], out.xi_bar[1]);
    std::printf("iterations = %d, converged = %s, loglik = %.6f\n", out.em.iterations,
                out.em.converged ? "yes" : "no", out.em.path.loglik);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-regime Markov switching factor model estimation"};
    app.require_subcommand(1);

    Command sim{app.add_subcommand("simulate", "Simulate a panel with known regimes")};
    Command est{app.add_subcommand("estimate", "Estimate the model on a panel CSV")};
    Command mc{app.add_subcommand("montecarlo", "Monte Carlo study on simulated panels")};
    Command ver{app.add_subcommand("verify", "Check the filter against exact path enumeration")};

    for (Command* cmd : {&sim, &est, &mc, &ver}) {
        cmd->app->add_option("--config", cmd->config_path, "key = value settings file");
        add_settings(*cmd, kCommon);
    }
    add_settings(sim, kSim);
    add_settings(est, kEm);
    add_settings(est, kEstimate);
    add_settings(mc, kSim);
    add_settings(mc, kEm);
    add_settings(mc, kMonteCarlo);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim.app) {
            const auto cfg = build_config(sim, msfm::Mode::Simulate);
            const auto truth = msfm::run_simulate(cfg);
            std::printf("wrote %lld x %lld panel to %s\n", static_cast<long long>(truth.panel.t_len()),
                        static_cast<long long>(truth.panel.n_len()), cfg.output_path.c_str());
        } else if (*est.app) {
            const auto cfg = build_config(est, msfm::Mode::Estimate);
            print_params(msfm::run_estimate(cfg));
        } else if (*mc.app) {
            const auto cfg = build_config(mc, msfm::Mode::MonteCarlo);
            const auto report = msfm::run_montecarlo(cfg);
            msfm::write_montecarlo_report(report, cfg.output_path);
            std::printf("%-10s %10s %10s\n", "column", "mean", "sd");
            for (const auto& [name, s] : report.columns) std::printf("%-10s %10.4f %10.4f\n", name.c_str(), s.mean, s.sd);
            std::printf("failures = %d, not converged = %d\n", report.failures, report.not_converged);
        } else if (*ver.app) {
            const auto cfg = build_config(ver, msfm::Mode::Verify);
            const auto rep = msfm::run_verify(cfg);
            std::printf("instances        %d\n", rep.instances);
            std::printf("loglik           %.3e\n", rep.worst.loglik);
            std::printf("smoothed         %.3e\n", rep.worst.smoothed);
            std::printf("cross            %.3e\n", rep.worst.cross);
            std::printf("expected loglik  %.3e\n", rep.worst.expected_loglik);
            return rep.worst.max() < 1e-9 ? 0 : 1;
        }
    } catch (const msfm::Error& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        if (err.row()) std::fprintf(stderr, "  at row %lld", static_cast<long long>(*err.row()));
        if (err.col()) std::fprintf(stderr, ", column %lld", static_cast<long long>(*err.col()));
        if (err.row()) std::fprintf(stderr, "\n");
        return 2;
    }
    return 0;
}
