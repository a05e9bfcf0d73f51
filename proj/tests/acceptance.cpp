// Acceptance runner. With no argument every criterion runs; with a number only
// that one. Prints one PASS/FAIL line per criterion and exits non-zero on any
// failure.
#include "msfm/driver.hpp"
#include "msfm/em.hpp"
#include "msfm/metrics.hpp"
#include "msfm/oracle.hpp"
#include "msfm/pca.hpp"
#include "msfm/simulate.hpp"
#include "oracles.hpp"

#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace msfm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

RunConfig mc_config(int r, double rho_f, double tau, double rho, Index t_len) {
    RunConfig cfg;
    cfg.mode = Mode::MonteCarlo;
    cfg.sim.n = 100;
    cfg.sim.t = t_len;
    cfg.sim.r = r;
    cfg.sim.rho_f = rho_f;
    cfg.sim.tau = tau;
    cfg.sim.rho_idio_max = rho;
    cfg.replications = 20;
    cfg.em.max_iter = 100;
    cfg.em.epsilon = 1e-6;
    cfg.seed = 1;
    return cfg;
}

RunConfig one_factor_design() { return mc_config(1, 0.0, 0.0, 0.0, 500); }
RunConfig correlated_design() { return mc_config(1, 0.7, 0.5, 0.5, 750); }
RunConfig two_factor_design(Index t_len) { return mc_config(2, 0.0, 0.0, 0.0, t_len); }

std::string failures(const MonteCarloReport& rep) {
    return " failed=" + std::to_string(rep.failures) + " not_converged=" + std::to_string(rep.not_converged);
}

Outcome criterion1() {
    const MonteCarloReport rep = run_montecarlo(one_factor_design());
    const double p11 = rep.column("p11_hat").mean, p22 = rep.column("p22_hat").mean;
    const double xi1 = rep.column("xi1_bar").mean, r2 = rep.column("r2_bstar").mean;
    const double mse = rep.column("mse_chi").mean;
    const bool ok = p11 >= 0.87 && p11 <= 0.93 && p22 >= 0.62 && p22 <= 0.72 && xi1 >= 0.72 && xi1 <= 0.79 &&
                    r2 >= 0.95 && mse <= 0.05 && rep.failures == 0;
    return {ok, "p11=" + fmt(p11) + " p22=" + fmt(p22) + " xi1=" + fmt(xi1) + " R2=" + fmt(r2) +
                    " MSE=" + fmt(mse) + " iter=" + fmt(rep.column("avg_iter").mean) + failures(rep)};
}

Outcome criterion2() {
    const MonteCarloReport rep = run_montecarlo(correlated_design());
    const double p11 = rep.column("p11_hat").mean, p22 = rep.column("p22_hat").mean;
    const double r2 = rep.column("r2_bstar").mean;
    const bool ok = p11 >= 0.87 && p11 <= 0.93 && p22 >= 0.63 && p22 <= 0.73 && r2 >= 0.94 && rep.failures == 0;
    return {ok, "p11=" + fmt(p11) + " p22=" + fmt(p22) + " R2=" + fmt(r2) + failures(rep)};
}

Outcome criterion3() {
    const MonteCarloReport small = run_montecarlo(two_factor_design(250));
    const MonteCarloReport large = run_montecarlo(two_factor_design(1000));
    const double a = small.column("p22_hat").mean, b = large.column("p22_hat").mean;
    return {b - a >= 0.10, "p22(T=250)=" + fmt(a) + " p22(T=1000)=" + fmt(b) + " gap=" + fmt(b - a) +
                               " (need >= 0.1) T=250:" + failures(small) + " T=1000:" + failures(large)};
}

Outcome criterion4() {
    const OracleSuiteReport rep = run_oracle_suite(200, 4, 8, 1);
    const OracleDeviation& w = rep.worst;
    const double worst = std::max({w.loglik, w.smoothed, w.cross});
    return {rep.instances == 200 && worst < 1e-9,
            "instances=" + std::to_string(rep.instances) + " loglik=" + fmt(w.loglik) + " smoothed=" +
                fmt(w.smoothed) + " cross=" + fmt(w.cross) + " Q=" + fmt(w.expected_loglik)};
}

std::vector<MonteCarloReport> criteria_runs() {
    std::vector<MonteCarloReport> out;
    for (const RunConfig& cfg :
         {one_factor_design(), correlated_design(), two_factor_design(250), two_factor_design(1000)})
        out.push_back(run_montecarlo(cfg));
    return out;
}

Outcome criterion5() {
    int violations = 0, runs = 0, failed = 0;
    double worst = 0.0;
    for (const MonteCarloReport& rep : criteria_runs()) {
        for (const ReplicationRecord& rec : rep.records) {
            if (!rec.ok) {
                ++failed;
                continue;
            }
            ++runs;
            worst = std::max(worst, rec.max_trace_drop);
            if (rec.max_trace_drop > 1e-6) ++violations;
        }
    }
    return {violations == 0 && failed == 0, "runs=" + std::to_string(runs) + " violations=" +
                                                std::to_string(violations) + " max_drop=" + fmt(worst) +
                                                " failed=" + std::to_string(failed)};
}

Outcome criterion6() {
    double row = 0.0, marg = 0.0;
    int runs = 0, failed = 0;
    for (const MonteCarloReport& rep : criteria_runs()) {
        for (const ReplicationRecord& rec : rep.records) {
            if (!rec.ok) {
                ++failed;
                continue;
            }
            ++runs;
            row = std::max(row, rec.max_row_sum_error);
            marg = std::max(marg, rec.max_marginal_error);
        }
    }
    return {row <= 1e-10 && marg <= 1e-10 && failed == 0,
            "runs=" + std::to_string(runs) + " row_sum=" + fmt(row) + " marginal=" + fmt(marg)};
}

Outcome criterion7() {
    Rng rng({7, 0});
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const Index n = 20 + static_cast<Index>(rng.uniform() * 80.0);
        const Index k = 1 + static_cast<Index>(rng.uniform() * 4.0);
        Matrix b_hat(n, k), b_star(n, k), m(k, k);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < k; ++j) {
                b_hat(i, j) = rng.normal();
                b_star(i, j) = rng.normal();
            }
        do {
            for (Index i = 0; i < k; ++i)
                for (Index j = 0; j < k; ++j) m(i, j) = rng.normal();
        } while (std::abs(m.determinant()) < 0.1);
        worst = std::max(worst, std::abs(r2_bstar(b_hat * m, b_star) - r2_bstar(b_hat, b_star)));
    }
    return {worst < 1e-10, "pairs=50 max_diff=" + fmt(worst)};
}

Outcome criterion8() {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        SimConfig sim;
        Rng rng({8, static_cast<std::uint64_t>(rep)});
        const SimTruth truth = simulate_panel(sim, rng);
        const FactorSpace fsp = estimate_factor_space(truth.panel, 2);
        const auto [b1, b2] = m_step_loadings(truth.panel, fsp.g_hat, truth.xi);
        std::vector<bool> in1, in2;
        for (int s : truth.states) {
            in1.push_back(s == 0);
            in2.push_back(s == 1);
        }
        worst = std::max(worst, (b1 - oracle::subsample_ols(truth.panel.data(), fsp.g_hat, in1)).cwiseAbs().maxCoeff());
        worst = std::max(worst, (b2 - oracle::subsample_ols(truth.panel.data(), fsp.g_hat, in2)).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-10, "panels=10 max_diff=" + fmt(worst)};
}

// ----------------------------------------------------------------------------

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "msfm_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(MSFM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Number of differing files between two output directories; -1 if the file
// sets differ or are empty.
int compare_dirs(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
    int count = 0;
    for (const auto& e : fs::directory_iterator(b)) {
        (void)e;
        ++count;
    }
    if (names.empty() || count != static_cast<int>(names.size())) return -1;
    int diff = 0;
    for (const auto& n : names) {
        if (!fs::exists(b / n)) return -1;
        if (slurp(a / n) != slurp(b / n)) ++diff;
    }
    return diff;
}

Outcome criterion9() {
    std::ostringstream detail;
    bool ok = true;
    auto check_pair = [&](const std::string& label, const std::string& args_a, const fs::path& dir_a,
                          const std::string& args_b, const fs::path& dir_b) {
        const int ra = cli(args_a + " --out " + dir_a.string());
        const int rb = cli(args_b + " --out " + dir_b.string());
        const int diff = (ra == 0 && rb == 0) ? compare_dirs(dir_a, dir_b) : -2;
        detail << label << "=" << (diff == 0 ? "same" : "differ(" + std::to_string(diff) + ")") << " ";
        ok = ok && diff == 0;
    };

    const fs::path sim_a = scratch("sim_a"), sim_b = scratch("sim_b");
    check_pair("simulate", "simulate --seed 5 --n 60 --t 300", sim_a, "simulate --seed 5 --n 60 --t 300", sim_b);

    const std::string est = "estimate --seed 5 --input " + (sim_a / "panel.csv").string();
    check_pair("estimate", est, scratch("est_a"), est, scratch("est_b"));

    const std::string mc = "montecarlo --seed 5 --n 60 --t 300 --reps 6";
    check_pair("montecarlo(serial/parallel)", mc + " --threads 1", scratch("mc_a"), mc + " --threads 4",
               scratch("mc_b"));
    return {ok, detail.str()};
}

Outcome criterion10() {
    const fs::path sim = scratch("smoke_sim"), est = scratch("smoke_est");
    if (cli("simulate --seed 10 --n 49 --t 630 --out " + sim.string()) != 0) return {false, "simulate failed"};
    if (cli("estimate --k auto --demean true --input " + (sim / "panel.csv").string() + " --out " + est.string()) != 0)
        return {false, "estimate failed"};
    for (const char* f : {"results.json", "probabilities.csv", "plot.csv"})
        if (!fs::exists(est / f)) return {false, std::string("missing ") + f};

    const nlohmann::json res = nlohmann::json::parse(slurp(est / "results.json"));
    const double p11 = res["transition"][0][0], p12 = res["transition"][0][1];
    const double p21 = res["transition"][1][0], p22 = res["transition"][1][1];
    const double xi1 = res["xi_bar"][0];
    const bool ok = res["n"] == 49 && res["t"] == 630 && std::abs(p11 + p12 - 1.0) < 1e-12 &&
                    std::abs(p21 + p22 - 1.0) < 1e-12 && xi1 >= 0.0 && xi1 <= 1.0;
    return {ok, "N=49 T=630 k=" + res["k"].dump() + " P11=" + fmt(p11) + " P22=" + fmt(p22) + " xi1=" + fmt(xi1) +
                    " iter=" + res["iterations"].dump()};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10};
    std::vector<int> which;
    if (argc > 1) {
        const int n = std::atoi(argv[1]);
        if (n < 1 || n > static_cast<int>(criteria.size())) {
            std::cerr << "criterion must be 1.." << criteria.size() << "\n";
            return 2;
        }
        which.push_back(n);
    } else {
        for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) which.push_back(n);
    }

    int failed = 0;
    for (int n : which) {
        Outcome out;
        try {
            out = criteria[static_cast<std::size_t>(n - 1)]();
        } catch (const std::exception& err) {
            out = {false, std::string("error: ") + err.what()};
        }
        std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << out.detail << std::endl;
        failed += out.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
