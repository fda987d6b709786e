// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo experiment harness: scheme/sweep specification, trial
// orchestration, aggregation and CSV/JSON emission. Trials are
// independent tasks; the parallel runner distributes them over OpenMP
// threads and gathers into preallocated slots, so its output is
// byte-identical to the serial reference runner kept for testing.

#pragma once

#include "noma/baselines.hpp"
#include "noma/channel.hpp"
#include "noma/maxmin.hpp"
#include "noma/powermin.hpp"
#include "noma/robust.hpp"

#include <string>
#include <vector>

namespace noma {

enum class Scheme {
    noma_sca,
    noma_sdr,
    noma_maxmin,
    noma_robust,
    noma_nonrobust,
    oma,
    zf,
    oma_robust,
    oma_nonrobust,
};

enum class SweepVariable { target_rate, num_users, num_antennas, p_max, error_variance };

const char* to_string(Scheme scheme);
const char* to_string(SweepVariable v);
Scheme scheme_from_string(const std::string& s);
SweepVariable sweep_from_string(const std::string& s);

/// Channel draw used by a recipe: the distance/pathloss model, or the
/// correlated small-cell scenario (common direction with a small
/// perturbation, geometric norm spread) used by the outage studies,
/// where a single chance constraint binds per user.
enum class ChannelScenario { pathloss, correlated };

struct ExperimentSpec {
    Scheme scheme = Scheme::noma_sdr;
    SweepVariable sweep = SweepVariable::target_rate;
    std::vector<double> sweep_values;
    int trials = 200;
    SystemConfig system;
    ChannelModelParams channel;
    ChannelScenario scenario = ChannelScenario::pathloss;
    double direction_noise = 0.05;  ///< correlated scenario
    double norm_spread = 4.0;       ///< correlated scenario
    double uniform_rate = 2.0;      ///< applied when target_rate is not swept
    double error_variance = 0.005;  ///< robust schemes
    double outage = 0.1;            ///< robust schemes
    int eval_samples = 1000;        ///< Monte-Carlo satisfaction samples, 0 disables
    std::string output_path;

    /// Scheme/sweep compatibility and field invariants; throws on
    /// violation.
    void validate() const;

    /// Flat dotted-key document, round-trips through from_document.
    std::string to_document() const;
    static ExperimentSpec from_document(const std::string& text);
};

struct ResultRow {
    std::string scheme;
    std::string sweep_variable;
    double sweep_value = 0.0;
    int trial = 0;            ///< -1 on aggregate rows
    std::string kind;         ///< "trial", "mean" or "stderr"
    std::string status;       ///< "ok" or a failure tag
    double total_power_w = std::numeric_limits<double>::quiet_NaN();
    double min_rate = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> per_user_power_w;
    std::vector<double> per_user_rate;
    std::vector<double> satisfaction;  ///< robust schemes, else empty
    int n_failed = 0;         ///< aggregate rows: failed trials at this point
};

struct ResultTable {
    int schema_version = 1;
    std::vector<ResultRow> rows;
};

/// Runs every (sweep point, trial) task; `parallel` switches between
/// the OpenMP runner and the serial reference (identical output).
ResultTable run_experiment(const ExperimentSpec& spec, bool parallel = true);

std::string to_csv(const ResultTable& table);
std::string to_json_string(const ResultTable& table);

/// Recomputes aggregate rows from the trial rows (used by tests to pin
/// aggregation correctness).
std::vector<ResultRow> aggregate_rows(const ResultTable& table);

// ---------------------------------------------------------------------------
// Cross-consistency checks and figure recipes
// ---------------------------------------------------------------------------

struct CheckOutcome {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// The table-style consistency checks: two-method power agreement,
/// max-min/power-min round trip, single-user closed form. `instances`
/// scales the first check (default matches the documented recipe).
std::vector<CheckOutcome> run_table_checks(std::uint64_t seed, int agreement_instances = 100,
                                           int roundtrip_instances = 10,
                                           bool parallel = true);
std::string checks_report(const std::vector<CheckOutcome>& outcomes);

/// Known figure identifiers (fig1 .. fig11).
std::vector<std::string> figure_ids();

/// Runs the documented recipe for one figure and writes its CSV files
/// under `out_dir`; returns the paths written. Throws on unknown ids.
std::vector<std::string> emit_figure_data(const std::string& figure_id, std::uint64_t seed,
                                          int trials, const std::string& out_dir,
                                          bool parallel = true);

/// Correlated small-cell channels for the outage studies: distinct
/// norms (geometric spread) around a common direction.
ChannelSet correlated_channel_fixture(const SystemConfig& config, double norm_spread,
                                      double direction_noise, std::uint64_t trial_index);

}  // namespace noma
