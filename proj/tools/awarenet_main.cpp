#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "awarenet/cli.hpp"

namespace {

using awarenet::cli::RunConfig;

struct CommonArgs {
    std::string config_path;
    std::string graph;
    std::string out;
    std::string epsilon;
    std::string mode;
    std::string kappa_source;
    std::string allocation;
    long long seed = -1;
    long long runs = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "config file (key = value text, or a manifest.json)");
    cmd->add_option("--graph", args.graph, "edge-list file (overrides [graph] section)");
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--seed", args.seed, "simulation seed override");
}

RunConfig build_config(const CommonArgs& args) {
    std::map<std::string, std::string> kv;
    std::string base_dir = ".";
    if (!args.config_path.empty()) {
        RunConfig from_file = RunConfig::load(args.config_path);
        kv = from_file.raw;
        base_dir = from_file.base_dir;
    }
    if (!args.graph.empty()) {
        kv["graph.file"] = args.graph;
        kv.erase("graph.generate");
        base_dir = ".";  // command-line paths are relative to the caller
    }
    if (!args.out.empty()) kv["output.dir"] = args.out;
    if (args.seed >= 0) kv["simulate.seed"] = std::to_string(args.seed);
    if (args.runs >= 0) kv["simulate.runs"] = std::to_string(args.runs);
    if (!args.mode.empty()) kv["simulate.mode"] = args.mode;
    if (!args.kappa_source.empty()) kv["simulate.kappa_source"] = args.kappa_source;
    if (!args.allocation.empty()) kv["simulate.allocation"] = args.allocation;
    if (!args.epsilon.empty()) kv["solver.epsilon_backoff"] = args.epsilon;
    return RunConfig::from_key_values(std::move(kv), base_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"awarenet: cost-optimal awareness allocation against network epidemics"};
    app.require_subcommand(1);

    CommonArgs alloc_args, thresh_args, sim_args;

    CLI::App* alloc = app.add_subcommand("allocate", "solve the optimal awareness investment");
    add_common(alloc, alloc_args);
    alloc->add_option("--epsilon-backoff", alloc_args.epsilon,
                      "stability backoff: enforce lambda1 <= -epsilon ('auto' = 1e-3 * min delta)");

    CLI::App* thresh = app.add_subcommand("threshold", "report spectral margin, die-out verdict, theta_c");
    add_common(thresh, thresh_args);

    CLI::App* sim = app.add_subcommand("simulate", "mean-field or Gillespie simulation");
    add_common(sim, sim_args);
    sim->add_option("--mode", sim_args.mode, "meanfield | gillespie");
    sim->add_option("--runs", sim_args.runs, "Gillespie ensemble size");
    sim->add_option("--kappa-source", sim_args.kappa_source, "config | allocation | compare");
    sim->add_option("--allocation", sim_args.allocation, "allocation.json from a prior allocate run");

    std::string gen_kind, gen_out;
    long long gen_n = 0, gen_m0 = 1, gen_seed = 0;
    double gen_p = 0.0;
    CLI::App* gen = app.add_subcommand("gen-graph", "write a generated graph as an edge list");
    gen->add_option("kind", gen_kind, "complete|star|cycle|path|erdos_renyi|preferential_attachment")
        ->required();
    gen->add_option("n", gen_n, "node count")->required();
    gen->add_option("--out", gen_out, "output edge-list file")->required();
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--p", gen_p, "edge probability (erdos_renyi)");
    gen->add_option("--m0", gen_m0, "edges per new node (preferential_attachment)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (alloc->parsed()) return awarenet::cli::cmd_allocate(build_config(alloc_args), std::cout);
        if (thresh->parsed()) return awarenet::cli::cmd_threshold(build_config(thresh_args), std::cout);
        if (sim->parsed()) return awarenet::cli::cmd_simulate(build_config(sim_args), std::cout);
        if (gen->parsed()) {
            awarenet::GraphSpec spec;
            spec.kind = awarenet::parse_graph_kind(gen_kind);
            spec.n = static_cast<std::size_t>(gen_n);
            spec.p = gen_p;
            spec.m0 = static_cast<std::size_t>(gen_m0);
            spec.seed = static_cast<std::uint64_t>(gen_seed);
            return awarenet::cli::cmd_gen_graph(spec, gen_out, std::cout);
        }
    } catch (const awarenet::AllocationSolveError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return awarenet::cli::kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return awarenet::cli::kExitInputError;
    }
    return awarenet::cli::kExitInputError;
}
