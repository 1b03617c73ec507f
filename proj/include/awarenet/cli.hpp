#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "awarenet/allocation.hpp"
#include "awarenet/graph.hpp"
#include "awarenet/sais.hpp"

namespace awarenet::cli {

/// Stable exit-code contract for scripting.
inline constexpr int kExitOk = 0;          // success / die-out
inline constexpr int kExitInfeasible = 1;  // infeasible instance / no die-out
inline constexpr int kExitInputError = 2;  // bad config, file, or arguments

/// Scalar-or-CSV-file parameter. A file holds n whitespace/comma-separated
/// values; a scalar broadcasts to every node.
struct ValueSpec {
    std::optional<double> scalar;
    std::string file;

    bool set() const { return scalar.has_value() || !file.empty(); }
    std::vector<double> resolve(std::size_t n, const std::string& base_dir) const;
};

/// Resolved run configuration. Parsed from line-based "key = value" text with
/// [section] headers, or recovered verbatim from a previous run's
/// manifest.json, which makes every run reproducible from its manifest.
struct RunConfig {
    // raw key/value pairs ("section.key" -> value), kept for the manifest echo
    std::map<std::string, std::string> raw;

    // [graph]
    std::string graph_file;
    std::optional<GraphSpec> graph_generate;

    // [params]
    ValueSpec beta, delta, r, kappa;
    double beta_recipe_ratio = 0.0;  // beta = recipe:<ratio> -> beta_i = ratio * delta_i / lambda1(A)

    // [cost]
    ValueSpec c_bar, kappa_lower, kappa_upper;

    // [solver]
    double tol = 1e-7;
    double epsilon_backoff = 0.0;
    bool epsilon_auto = false;  // epsilon = 1e-3 * min(delta)
    SolveForm form = SolveForm::automatic;

    // [simulate]
    std::string mode = "meanfield";
    double t_max = 100.0;
    std::size_t runs = 1;
    std::uint64_t seed = 0;
    double dt = 0.0;  // 0 = step-size rule
    std::size_t record_stride = 1;
    std::string initial_infected = "random:1";  // node list "0,3,5" or "random:<k>"
    ValueSpec p0, q0;
    std::string kappa_source = "config";  // config | allocation | compare
    std::string allocation_file;

    // [output]
    std::string out_dir = ".";

    static RunConfig from_key_values(std::map<std::string, std::string> kv,
                                     const std::string& base_dir = ".");
    static RunConfig load(const std::string& path);

    std::string base_dir = ".";
};

std::map<std::string, std::string> parse_config_text(std::istream& in);

/// Loaded graph plus fully resolved per-node parameters.
struct ResolvedInstance {
    Graph graph;
    SaisParams params;
    std::optional<double> recipe_lambda1;  // set when beta came from the recipe
};

ResolvedInstance resolve_instance(const RunConfig& config);
CostModel resolve_cost(const RunConfig& config, const Graph& g, const SaisParams& params);

/// Writes allocation.json, scatter.csv and manifest.json into out_dir.
/// Returns kExitOk, or kExitInfeasible with the attainable-range report.
int cmd_allocate(const RunConfig& config, std::ostream& log);

/// Prints margin, die-out verdict, diagonal thresholds and theta_c; writes
/// threshold.json + manifest.json. Exit code kExitOk iff die_out.
int cmd_threshold(const RunConfig& config, std::ostream& log);

/// Mean-field trajectory CSV or Gillespie ensemble JSON; kappa_source
/// "compare" emits baseline and allocated runs side by side.
int cmd_simulate(const RunConfig& config, std::ostream& log);

/// Writes the canonical edge-list file.
int cmd_gen_graph(const GraphSpec& spec, const std::string& out_path, std::ostream& log);

/// Atomic write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace awarenet::cli
