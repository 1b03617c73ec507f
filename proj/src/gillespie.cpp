#include "awarenet/gillespie.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace awarenet {

const char* transition_kind_name(TransitionKind kind) {
    switch (kind) {
        case TransitionKind::infect_susceptible: return "infect_susceptible";
        case TransitionKind::infect_alert: return "infect_alert";
        case TransitionKind::alert: return "alert";
        case TransitionKind::recover: return "recover";
    }
    return "unknown";
}

namespace {

// Strictly-inside-(0,1) uniform keeps event gaps finite and positive.
double uniform_open01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

EventLog gillespie_run(const Graph& g, const SaisParams& params, const std::vector<NodeState>& init,
                       double t_max, std::uint64_t seed) {
    const std::size_t n = g.num_nodes();
    params.validate(n);
    if (init.size() != n) throw std::invalid_argument("gillespie_run: init length mismatch");
    if (!(t_max > 0.0)) throw std::invalid_argument("gillespie_run: t_max must be positive");

    std::vector<NodeState> state = init;
    std::vector<std::uint32_t> infected_neighbors(n, 0);
    std::size_t infected_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (state[i] == NodeState::infected) {
            ++infected_count;
            for (std::uint32_t j : g.neighbors(static_cast<std::uint32_t>(i))) ++infected_neighbors[j];
        }
    }

    EventLog log;
    log.seed = seed;
    log.peak_infected = infected_count;
    std::mt19937_64 rng(seed);
    double t = 0.0;

    std::vector<double> node_rate(n, 0.0);
    const auto rate_of = [&](std::size_t i) -> double {
        const double y = static_cast<double>(infected_neighbors[i]);
        switch (state[i]) {
            case NodeState::susceptible: return (params.beta[i] + params.kappa[i]) * y;
            case NodeState::alert: return params.r[i] * params.beta[i] * y;
            case NodeState::infected: return params.delta[i];
        }
        return 0.0;
    };

    while (true) {
        if (infected_count == 0) {
            log.extinction_time = t;
            break;
        }
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            node_rate[i] = rate_of(i);
            total += node_rate[i];
        }

        const double dt = -std::log(uniform_open01(rng)) / total;
        if (t + dt > t_max) {
            t = t_max;
            break;
        }
        t += dt;

        // pick the node, then the transition within the node
        double target = uniform_open01(rng) * total;
        std::size_t node = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (target < node_rate[i]) {
                node = i;
                break;
            }
            target -= node_rate[i];
        }
        if (node == n) {
            // roundoff pushed target past the end; take the last active node
            node = n - 1;
            while (node_rate[node] == 0.0) --node;
            target = 0.5 * node_rate[node];
        }

        TransitionKind kind;
        switch (state[node]) {
            case NodeState::susceptible: {
                const double y = static_cast<double>(infected_neighbors[node]);
                kind = (target < params.beta[node] * y) ? TransitionKind::infect_susceptible
                                                        : TransitionKind::alert;
                break;
            }
            case NodeState::alert: kind = TransitionKind::infect_alert; break;
            case NodeState::infected: kind = TransitionKind::recover; break;
            default: throw std::logic_error("gillespie_run: bad state");
        }

        switch (kind) {
            case TransitionKind::infect_susceptible:
            case TransitionKind::infect_alert:
                state[node] = NodeState::infected;
                ++infected_count;
                for (std::uint32_t j : g.neighbors(static_cast<std::uint32_t>(node))) ++infected_neighbors[j];
                break;
            case TransitionKind::alert: state[node] = NodeState::alert; break;
            case TransitionKind::recover:
                state[node] = NodeState::susceptible;
                --infected_count;
                for (std::uint32_t j : g.neighbors(static_cast<std::uint32_t>(node))) --infected_neighbors[j];
                break;
        }
        log.events.push_back({t, static_cast<std::uint32_t>(node), kind});
        log.peak_infected = std::max(log.peak_infected, infected_count);
    }

    log.final_state = std::move(state);
    log.t_end = t;
    return log;
}

EnsembleSummary ensemble_extinction(const Graph& g, const SaisParams& params,
                                    const std::vector<NodeState>& init, double t_max, std::size_t runs,
                                    std::uint64_t seed) {
    if (runs < 1) throw std::invalid_argument("ensemble_extinction: runs must be >= 1");

    EnsembleSummary summary;
    summary.runs.reserve(runs);
    std::size_t extinct = 0;
    double peak_sum = 0.0;
    for (std::size_t k = 0; k < runs; ++k) {
        const EventLog log = gillespie_run(g, params, init, t_max, seed + k);
        RunSummary rs;
        rs.seed = log.seed;
        rs.extinct = log.extinction_time.has_value();
        rs.extinction_time = rs.extinct ? *log.extinction_time : t_max;
        rs.peak_infected = log.peak_infected;
        rs.event_count = log.events.size();
        for (NodeState s : log.final_state)
            if (s == NodeState::infected) ++rs.final_infected;
        if (rs.extinct) ++extinct;
        peak_sum += static_cast<double>(rs.peak_infected);
        summary.runs.push_back(rs);
    }
    summary.extinct_fraction = static_cast<double>(extinct) / static_cast<double>(runs);
    summary.mean_peak_infected = peak_sum / static_cast<double>(runs);
    return summary;
}

void write_event_log_csv(const EventLog& log, std::ostream& out) {
    out << "time,node,kind\n";
    const auto prev = out.precision(17);
    for (const Event& e : log.events)
        out << e.time << ',' << e.node << ',' << transition_kind_name(e.kind) << '\n';
    out.precision(prev);
}

std::string ensemble_to_json(const EnsembleSummary& summary) {
    nlohmann::json j;
    j["extinct_fraction"] = summary.extinct_fraction;
    j["mean_peak_infected"] = summary.mean_peak_infected;
    j["runs"] = nlohmann::json::array();
    for (const RunSummary& rs : summary.runs) {
        j["runs"].push_back({{"seed", rs.seed},
                             {"extinct", rs.extinct},
                             {"extinction_time", rs.extinction_time},
                             {"peak_infected", rs.peak_infected},
                             {"final_infected", rs.final_infected},
                             {"event_count", rs.event_count}});
    }
    return j.dump(2);
}

}  // namespace awarenet
