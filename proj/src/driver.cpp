#include "msfm/driver.hpp"

#include "msfm/io.hpp"
#include "msfm/pca.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <thread>

namespace msfm {

using nlohmann::json;

void RunConfig::validate() const {
    if (mode == Mode::Estimate && input_path.empty())
        throw Error(ErrorCode::InvalidArgument, "estimate needs an input panel");
    if (mode == Mode::MonteCarlo && replications < 1)
        throw Error(ErrorCode::InvalidArgument, "reps must be >= 1");
    if (k && *k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    if (k_max < 1) throw Error(ErrorCode::InvalidArgument, "k_max must be >= 1");
    if (threads < 0) throw Error(ErrorCode::InvalidArgument, "threads must be >= 0");
    em.validate();
    if (mode == Mode::Simulate || mode == Mode::MonteCarlo) sim.validate();
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw Error(ErrorCode::ParseError, "invalid value '" + value + "' for " + key);
}

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    if (!parse_double(value, v)) bad_value(key, value);
    return v;
}

long long to_integer(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &used);
    } catch (const std::exception&) {
        bad_value(key, value);
    }
    if (used != value.size()) bad_value(key, value);
    return v;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    bad_value(key, value);
}

} // namespace

void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& settings) {
    for (const auto& [key, value] : settings) {
        if (key == "seed") {
            std::size_t used = 0;
            try {
                cfg.seed = std::stoull(value, &used);
            } catch (const std::exception&) {
                bad_value(key, value);
            }
            if (used != value.size() || value.front() == '-') bad_value(key, value);
            cfg.sim.seed = cfg.seed;
        } else if (key == "n") {
            cfg.sim.n = to_integer(key, value);
        } else if (key == "t") {
            cfg.sim.t = to_integer(key, value);
        } else if (key == "r") {
            cfg.sim.r = static_cast<int>(to_integer(key, value));
        } else if (key == "p11") {
            cfg.sim.p11 = to_double(key, value);
        } else if (key == "p22") {
            cfg.sim.p22 = to_double(key, value);
        } else if (key == "rho_f") {
            cfg.sim.rho_f = to_double(key, value);
        } else if (key == "tau") {
            cfg.sim.tau = to_double(key, value);
        } else if (key == "rho_idio") {
            cfg.sim.rho_idio_max = to_double(key, value);
        } else if (key == "noise_to_signal") {
            cfg.sim.noise_to_signal = to_double(key, value);
        } else if (key == "max_iter") {
            cfg.em.max_iter = static_cast<int>(to_integer(key, value));
        } else if (key == "epsilon") {
            cfg.em.epsilon = to_double(key, value);
        } else if (key == "omega1") {
            cfg.em.omega1 = to_double(key, value);
        } else if (key == "omega2") {
            cfg.em.omega2 = to_double(key, value);
        } else if (key == "variance_update") {
            if (value == "weighted") cfg.em.variance_update = VarianceUpdate::Weighted;
            else if (value == "unweighted") cfg.em.variance_update = VarianceUpdate::Unweighted;
            else bad_value(key, value);
        } else if (key == "k") {
            if (value == "auto") cfg.k.reset();
            else cfg.k = to_integer(key, value);
        } else if (key == "k_max") {
            cfg.k_max = to_integer(key, value);
        } else if (key == "demean") {
            cfg.demean = to_bool(key, value);
        } else if (key == "reps") {
            cfg.replications = static_cast<int>(to_integer(key, value));
        } else if (key == "threads") {
            cfg.threads = static_cast<int>(to_integer(key, value));
        } else if (key == "input") {
            cfg.input_path = value;
        } else if (key == "out") {
            cfg.output_path = value;
        } else {
            throw Error(ErrorCode::InvalidArgument, "unknown setting '" + key + "'");
        }
    }
}

// ----------------------------------------------------------------------------

namespace {

std::string join_path(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
}

std::vector<std::string> numbered(const std::string& stem, Index count) {
    std::vector<std::string> out;
    for (Index i = 1; i <= count; ++i) out.push_back(stem + std::to_string(i));
    return out;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json sim_json(const SimConfig& s) {
    return {{"n", s.n},         {"t", s.t},         {"r", s.r},
            {"p11", s.p11},     {"p22", s.p22},     {"rho_f", s.rho_f},
            {"tau", s.tau},     {"rho_idio", s.rho_idio_max},
            {"noise_to_signal", s.noise_to_signal}, {"seed", s.seed}};
}

} // namespace

SimTruth run_simulate(const RunConfig& cfg) {
    cfg.validate();
    Rng rng({cfg.seed, 0});
    SimTruth truth = simulate_panel(cfg.sim, rng);
    ensure_dir(cfg.output_path);

    write_panel_csv(join_path(cfg.output_path, "panel.csv"), truth.panel.data(), numbered("x", cfg.sim.n));

    Matrix states(cfg.sim.t, 1 + cfg.sim.r);
    for (Index t = 0; t < cfg.sim.t; ++t) states(t, 0) = truth.states[static_cast<std::size_t>(t)] + 1;
    states.rightCols(cfg.sim.r) = truth.f;
    std::vector<std::string> state_headers{"regime"};
    for (const auto& h : numbered("f", cfg.sim.r)) state_headers.push_back(h);
    write_panel_csv(join_path(cfg.output_path, "states.csv"), states, state_headers);

    Matrix loadings(cfg.sim.n, 2 * cfg.sim.r);
    loadings << truth.lambda1, truth.lambda2;
    std::vector<std::string> load_headers = numbered("lambda1_", cfg.sim.r);
    for (const auto& h : numbered("lambda2_", cfg.sim.r)) load_headers.push_back(h);
    write_panel_csv(join_path(cfg.output_path, "loadings.csv"), loadings, load_headers);
    return truth;
}

// ----------------------------------------------------------------------------

EstimateOutput estimate_panel(const Panel& panel, const RunConfig& cfg) {
    cfg.em.validate();
    EstimateOutput out;
    if (cfg.k) {
        out.k = *cfg.k;
    } else {
        const Index cap = std::min({cfg.k_max, panel.n_len() - 1, panel.t_len() - 1});
        if (cap < 1) throw Error(ErrorCode::TooSmall, "panel too small to select the number of factors");
        out.k = select_num_factors_er(panel, cap);
        out.k_selected = true;
    }
    out.factors = estimate_factor_space(panel, out.k);
    out.em = run_em(panel, out.factors, cfg.em);
    const Vector avg = out.em.path.smoothed.colwise().mean();
    out.xi_bar = StateProbabilities(avg(0), 1.0 - avg(0));
    return out;
}

EstimateOutput run_estimate(const RunConfig& cfg) {
    cfg.validate();
    const LabeledPanel input = load_panel_csv(cfg.input_path);
    const Panel panel = cfg.demean ? demean_panel(input.panel) : input.panel;
    EstimateOutput out = estimate_panel(panel, cfg);
    ensure_dir(cfg.output_path);

    const ModelParams& p = out.em.params;
    const StateProbabilities stationary = unconditional_probs(p.trans);
    json res = {
        {"series", input.headers},
        {"t", panel.t_len()},
        {"n", panel.n_len()},
        {"demeaned", cfg.demean},
        {"k", out.k},
        {"k_selected", out.k_selected},
        {"eigenvalues", vector_json(out.factors.eigvals.head(std::min<Index>(out.factors.eigvals.size(), 20)))},
        {"transition", matrix_json(p.trans.matrix())},
        {"stationary_probabilities", {stationary[0], stationary[1]}},
        {"xi_bar", {out.xi_bar[0], out.xi_bar[1]}},
        {"b1", matrix_json(p.b1)},
        {"b2", matrix_json(p.b2)},
        {"sigma_e1", vector_json(p.sigma_e1_diag)},
        {"sigma_e2", vector_json(p.sigma_e2_diag)},
        {"iterations", out.em.iterations},
        {"converged", out.em.converged},
        {"loglik", out.em.path.loglik},
        {"initial_loglik", out.em.initial_loglik},
        {"loglik_trace", out.em.loglik_trace},
        {"expected_loglik_trace", out.em.expected_loglik_trace},
    };
    write_text_file(join_path(cfg.output_path, "results.json"), res.dump(2) + "\n");

    const ProbabilityPath& path = out.em.path;
    Matrix probs(panel.t_len(), 4);
    probs << path.filtered, path.smoothed;
    write_panel_csv(join_path(cfg.output_path, "probabilities.csv"), probs,
                    {"filtered_1", "filtered_2", "smoothed_1", "smoothed_2"}, input.dates);

    const Matrix& g = out.factors.g_hat;
    const Index k = out.k;
    Matrix plot(panel.t_len(), 2 + 3 * k);
    plot << path.smoothed, g, path.smoothed.col(0).asDiagonal() * g, path.smoothed.col(1).asDiagonal() * g;
    std::vector<std::string> headers{"xi_1", "xi_2"};
    for (const std::string stem : {"g_", "xi_1_g_", "xi_2_g_"})
        for (const auto& h : numbered(stem, k)) headers.push_back(h);
    write_panel_csv(join_path(cfg.output_path, "plot.csv"), plot, headers, input.dates);
    return out;
}

// ----------------------------------------------------------------------------

std::pair<double, double> path_normalization_errors(const ProbabilityPath& path) {
    double row = 0.0;
    for (const Matrix* m : {&path.predicted, &path.filtered, &path.smoothed, &path.cross})
        if (m->rows() > 0) row = std::max(row, (m->rowwise().sum().array() - 1.0).abs().maxCoeff());

    double marg = 0.0;
    for (Index t = 0; t < path.t_len(); ++t) {
        for (int j = 0; j < 2; ++j) {
            const double over_prev = path.cross(t, cross_index(j, 0)) + path.cross(t, cross_index(j, 1));
            marg = std::max(marg, std::abs(over_prev - path.smoothed(t, j)));
            if (t > 0) {
                const double over_next = path.cross(t, cross_index(0, j)) + path.cross(t, cross_index(1, j));
                marg = std::max(marg, std::abs(over_next - path.smoothed(t - 1, j)));
            }
        }
    }
    return {row, marg};
}

ReplicationRecord run_replication(const RunConfig& cfg, int index) {
    ReplicationRecord rec;
    rec.index = index;
    try {
        Rng rng({cfg.seed, static_cast<std::uint64_t>(index)});
        const SimTruth truth = simulate_panel(cfg.sim, rng);
        const FactorSpace fs = estimate_factor_space(truth.panel, 2 * cfg.sim.r);
        const EmResult em = run_em(truth.panel, fs, cfg.em);

        MetricsReport& m = rec.metrics;
        m.p11_hat = em.params.trans(0, 0);
        m.p22_hat = em.params.trans(1, 1);
        m.xi1_bar = em.path.smoothed.col(0).mean();
        m.xi2_bar = em.path.smoothed.col(1).mean();
        const Matrix i_xi = hat_I_xi(em.path.smoothed.col(0), truth.states, 0, fs.g_hat);
        m.r2_bstar = r2_bstar(em.params.b1, bias_adjusted_target(truth.b1(), truth.b2(), i_xi));
        m.mse_chi = mse_common(common_component(em.params.b1, em.params.b2, fs.g_hat, em.path.smoothed), truth.chi);
        m.iterations = em.iterations;
        m.converged = em.converged;

        double prev = em.initial_loglik;
        for (double ll : em.loglik_trace) {
            rec.max_trace_drop = std::max(rec.max_trace_drop, prev - ll);
            prev = ll;
        }
        std::tie(rec.max_row_sum_error, rec.max_marginal_error) = path_normalization_errors(em.path);
        rec.ok = true;
    } catch (const Error& err) {
        rec.error = err.what();
    }
    return rec;
}

const ColumnSummary& MonteCarloReport::column(const std::string& name) const {
    for (const auto& [key, summary] : columns)
        if (key == name) return summary;
    throw Error(ErrorCode::InvalidArgument, "no report column " + name);
}

MonteCarloReport run_montecarlo(const RunConfig& cfg) {
    cfg.validate();
    const int reps = cfg.replications;
    std::vector<ReplicationRecord> records(static_cast<std::size_t>(reps));

    int workers = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, reps);
    std::atomic<int> next{0};
    auto work = [&]() {
        for (int i = next++; i < reps; i = next++) records[static_cast<std::size_t>(i)] = run_replication(cfg, i);
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    MonteCarloReport report;
    report.sim = cfg.sim;
    report.replications = reps;
    std::vector<std::vector<double>> values(7);
    for (const auto& rec : records) {
        if (!rec.ok) {
            ++report.failures;
            continue;
        }
        if (!rec.metrics.converged) ++report.not_converged;
        const MetricsReport& m = rec.metrics;
        const double row[] = {m.p11_hat, m.p22_hat, m.xi1_bar, m.xi2_bar,
                              m.r2_bstar, m.mse_chi, static_cast<double>(m.iterations)};
        for (std::size_t c = 0; c < values.size(); ++c) values[c].push_back(row[c]);
    }
    const char* names[] = {"p11_hat", "p22_hat", "xi1_bar", "xi2_bar", "r2_bstar", "mse_chi", "avg_iter"};
    for (std::size_t c = 0; c < values.size(); ++c) {
        ColumnSummary s;
        const auto& v = values[c];
        if (v.empty()) {
            s.mean = s.sd = std::nan("");
        } else {
            for (double x : v) s.mean += x;
            s.mean /= static_cast<double>(v.size());
            if (v.size() > 1) {
                double ss = 0.0;
                for (double x : v) ss += (x - s.mean) * (x - s.mean);
                s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
            }
        }
        report.columns.emplace_back(names[c], s);
    }
    report.records = std::move(records);
    return report;
}

void write_montecarlo_report(const MonteCarloReport& report, const std::string& dir) {
    ensure_dir(dir);
    json cols = json::object();
    for (const auto& [name, s] : report.columns) cols[name] = {{"mean", s.mean}, {"sd", s.sd}};
    json failed = json::array();
    for (const auto& rec : report.records)
        if (!rec.ok) failed.push_back({{"replication", rec.index}, {"error", rec.error}});
    const json out = {{"design", sim_json(report.sim)},
                      {"replications", report.replications},
                      {"failures", report.failures},
                      {"not_converged", report.not_converged},
                      {"columns", cols},
                      {"failed", failed}};
    write_text_file(join_path(dir, "report.json"), out.dump(2) + "\n");

    std::ostringstream csv;
    csv << "replication,ok,p11_hat,p22_hat,xi1_bar,xi2_bar,r2_bstar,mse_chi,iterations,converged,"
           "max_trace_drop\n";
    for (const auto& rec : report.records) {
        const MetricsReport& m = rec.metrics;
        csv << rec.index << ',' << (rec.ok ? 1 : 0);
        for (double v : {m.p11_hat, m.p22_hat, m.xi1_bar, m.xi2_bar, m.r2_bstar, m.mse_chi})
            csv << ',' << format_double(v);
        csv << ',' << m.iterations << ',' << (m.converged ? 1 : 0) << ',' << format_double(rec.max_trace_drop)
            << '\n';
    }
    write_text_file(join_path(dir, "replications.csv"), csv.str());
}

OracleSuiteReport run_verify(const RunConfig& cfg, int instances) {
    return run_oracle_suite(instances, 4, 8, cfg.seed);
}

} // namespace msfm
