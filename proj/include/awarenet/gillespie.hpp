#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "awarenet/graph.hpp"
#include "awarenet/sais.hpp"

namespace awarenet {

enum class NodeState : std::uint8_t { susceptible, alert, infected };

enum class TransitionKind : std::uint8_t { infect_susceptible, infect_alert, alert, recover };

const char* transition_kind_name(TransitionKind kind);

struct Event {
    double time;
    std::uint32_t node;
    TransitionKind kind;
};

/// Exact CTMC sample path. Event times are strictly increasing; once no node
/// is infected the chain is absorbed and extinction_time is set.
struct EventLog {
    std::uint64_t seed = 0;
    std::vector<Event> events;
    std::vector<NodeState> final_state;
    std::optional<double> extinction_time;
    double t_end = 0.0;
    std::size_t peak_infected = 0;
};

/// Direct Gillespie simulation of the SAIS transitions. Per-node active rates
/// with Y_i = number of infected neighbors:
///   susceptible: beta_i Y_i (infection) and kappa_i Y_i (alerting),
///   alert:       r_i beta_i Y_i,
///   infected:    delta_i.
/// Randomness comes from a single mt19937_64 stream (53-bit uniforms), so a
/// run is bit-reproducible from (inputs, seed).
EventLog gillespie_run(const Graph& g, const SaisParams& params, const std::vector<NodeState>& init,
                       double t_max, std::uint64_t seed);

struct RunSummary {
    std::uint64_t seed = 0;
    bool extinct = false;
    double extinction_time = 0.0;  // t_max when not extinct
    std::size_t peak_infected = 0;
    std::size_t final_infected = 0;
    std::size_t event_count = 0;
};

struct EnsembleSummary {
    double extinct_fraction = 0.0;
    double mean_peak_infected = 0.0;
    std::vector<RunSummary> runs;
};

/// Independent runs with seeds seed..seed+runs-1.
EnsembleSummary ensemble_extinction(const Graph& g, const SaisParams& params,
                                    const std::vector<NodeState>& init, double t_max, std::size_t runs,
                                    std::uint64_t seed);

/// CSV rows "time,node,kind".
void write_event_log_csv(const EventLog& log, std::ostream& out);

/// JSON document with the aggregate fields and per-run summaries.
std::string ensemble_to_json(const EnsembleSummary& summary);

}  // namespace awarenet
