#pragma once

// Shared random-instance builders for the property and acceptance suites.

#include <random>

#include "awarenet/allocation.hpp"
#include "awarenet/graph.hpp"
#include "awarenet/sais.hpp"
#include "awarenet/spectra.hpp"

namespace testsupport {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline awarenet::Graph random_connected_er(std::size_t n, double p, std::uint64_t seed) {
    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
        awarenet::GraphSpec spec;
        spec.kind = awarenet::GraphKind::erdos_renyi;
        spec.n = n;
        spec.p = p;
        spec.seed = seed + attempt * 1000003ull;
        awarenet::Graph g = awarenet::generate(spec);
        if (g.connected()) return g;
    }
    throw std::runtime_error("random_connected_er: no connected sample (p too small?)");
}

/// Random valid SAIS parameters with infection pressure beta*lambda1/delta
/// around `stress` (> 1 means the plain SIS epidemic survives).
inline awarenet::SaisParams random_params(const awarenet::Graph& g, std::uint64_t seed, double stress_lo,
                                          double stress_hi, double kappa = 0.0) {
    std::mt19937_64 rng(seed);
    const std::size_t n = g.num_nodes();
    const double lambda1 =
        g.num_edges() == 0 ? 1.0 : awarenet::largest_eigenvalue(g.dense_adjacency(), 1e-10).lambda1;
    const double stress = uniform(rng, stress_lo, stress_hi);

    awarenet::SaisParams params;
    params.beta.resize(n);
    params.delta.resize(n);
    params.kappa.assign(n, kappa);
    params.r.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        params.delta[i] = uniform(rng, 0.5, 1.5);
        params.beta[i] = stress * params.delta[i] / lambda1 * uniform(rng, 0.9, 1.1);
        params.r[i] = uniform(rng, 0.2, 0.5);
    }
    return params;
}

/// Cost model with enough kappa headroom that the instance is (generically)
/// feasible: the per-node upper bound maps to y around `y_frac` of the way
/// from the SIS floor delta/beta to the supremum delta/(r beta).
inline awarenet::CostModel headroom_cost(const awarenet::Graph& g, const awarenet::SaisParams& params,
                                         double y_frac = 0.9) {
    const std::size_t n = g.num_nodes();
    std::vector<double> c_bar(n, 1.0), lo(n, 0.0), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y_floor = params.delta[i] / params.beta[i];
        const double y_sup = params.delta[i] / (params.r[i] * params.beta[i]);
        hi[i] = awarenet::kappa_from_y(params.beta[i], params.delta[i], params.r[i],
                                       y_floor + y_frac * (y_sup - y_floor));
    }
    return awarenet::fit_cost_params(c_bar, lo, hi, params);
}

/// Zero crossing of theta -> margin(theta * beta_bar) by bisection,
/// kappa_bar held fixed. Brackets must straddle the sign change.
inline double bisect_margin_zero(const awarenet::Graph& g, const awarenet::SaisParams& base,
                                 double theta_lo, double theta_hi, double tol = 1e-9) {
    const auto margin_at = [&](double theta) {
        return awarenet::spectral_margin(g, awarenet::scale_infection(base, theta)).margin;
    };
    double lo = theta_lo, hi = theta_hi;
    double m_lo = margin_at(lo);
    const double m_hi = margin_at(hi);
    if (!(m_lo < 0.0 && m_hi > 0.0)) throw std::runtime_error("bisect_margin_zero: bad bracket");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (margin_at(mid) < 0.0) {
            lo = mid;
            m_lo = margin_at(mid);
        } else {
            hi = mid;
        }
    }
    (void)m_lo;
    return 0.5 * (lo + hi);
}

}  // namespace testsupport
