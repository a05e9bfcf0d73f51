#ifndef MSFM_DRIVER_HPP
#define MSFM_DRIVER_HPP

#include "msfm/em.hpp"
#include "msfm/metrics.hpp"
#include "msfm/oracle.hpp"
#include "msfm/simulate.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace msfm {

enum class Mode { Simulate, Estimate, MonteCarlo, Verify };

struct RunConfig {
    Mode mode = Mode::Estimate;
    SimConfig sim;
    EmConfig em;
    std::string input_path;
    std::optional<Index> k;  ///< nullopt selects k with the eigenvalue-ratio rule
    Index k_max = 8;
    bool demean = false;
    int replications = 20;
    int threads = 0;  ///< 0 uses the hardware concurrency
    std::string output_path = ".";
    std::uint64_t seed = 1;

    /// Mode-specific requirements: estimate needs input_path, montecarlo a
    /// positive replication count.
    void validate() const;
};

/// Applies "key = value" settings. Unknown keys raise InvalidArgument, bad
/// values ParseError. Recognised keys: seed n t r p11 p22 rho_f tau rho_idio
/// noise_to_signal max_iter epsilon omega1 omega2 variance_update
/// (weighted or unweighted) k (integer or "auto") k_max
/// demean reps threads input out.
void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& settings);

// ----------------------------------------------------------------------------

/// Writes panel.csv, states.csv (regime and factors per period) and
/// loadings.csv into cfg.output_path.
SimTruth run_simulate(const RunConfig& cfg);

struct EstimateOutput {
    Index k = 0;
    bool k_selected = false;  ///< chosen by the eigenvalue-ratio rule
    FactorSpace factors;
    EmResult em;
    StateProbabilities xi_bar{0.5, 0.5};  ///< time averages of the smoothed probabilities
};

/// Panel in memory -> factor space -> EM.
EstimateOutput estimate_panel(const Panel& panel, const RunConfig& cfg);

/// Loads cfg.input_path and writes results.json, probabilities.csv and
/// plot.csv into cfg.output_path.
EstimateOutput run_estimate(const RunConfig& cfg);

struct ReplicationRecord {
    int index = 0;
    bool ok = false;
    std::string error;
    MetricsReport metrics;
    double max_trace_drop = 0.0;    ///< largest decrease along the EM trace, from q^(0)
    double max_row_sum_error = 0.0; ///< worst |row sum - 1| over every probability series
    double max_marginal_error = 0.0;///< worst |sum_i cross(j, i) - smoothed_j|
};

struct ColumnSummary {
    double mean = 0.0;
    double sd = 0.0;  ///< sample standard deviation, 0 for a single replication
};

struct MonteCarloReport {
    SimConfig sim;
    int replications = 0;
    int failures = 0;
    int not_converged = 0;
    /// p11_hat p22_hat xi1_bar xi2_bar r2_bstar mse_chi avg_iter
    std::vector<std::pair<std::string, ColumnSummary>> columns;
    std::vector<ReplicationRecord> records;

    const ColumnSummary& column(const std::string& name) const;
};

/// One replication on stream `index` of cfg.seed.
ReplicationRecord run_replication(const RunConfig& cfg, int index);

/// Replications over a worker pool; the report does not depend on the
/// thread count.
MonteCarloReport run_montecarlo(const RunConfig& cfg);

/// Writes report.json and replications.csv into cfg.output_path.
void write_montecarlo_report(const MonteCarloReport& report, const std::string& dir);

/// Oracle suite with N <= 4, T <= 8.
OracleSuiteReport run_verify(const RunConfig& cfg, int instances = 200);

/// Worst row-sum and marginalization errors of a probability path.
std::pair<double, double> path_normalization_errors(const ProbabilityPath& path);

} // namespace msfm

#endif
