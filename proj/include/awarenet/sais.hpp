#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include "awarenet/graph.hpp"
#include "awarenet/matrix.hpp"
#include "awarenet/spectra.hpp"

namespace awarenet {

/// Per-node rates of the heterogeneous SAIS process. beta/delta/kappa are
/// rates (1/time); r in (0,1) scales the infection rate of alert nodes.
/// kappa = 0 reduces the model to plain SIS.
struct SaisParams {
    std::vector<double> beta;
    std::vector<double> delta;
    std::vector<double> kappa;
    std::vector<double> r;

    static SaisParams homogeneous(std::size_t n, double beta, double delta, double kappa, double r);

    std::size_t size() const { return beta.size(); }
    double kappa_bar(std::size_t i) const { return kappa[i] / beta[i]; }

    /// Throws std::invalid_argument unless all vectors have length n,
    /// beta/delta > 0, kappa >= 0 and 0 < r < 1.
    void validate(std::size_t n) const;

    /// Returns a copy with kappa replaced (for allocation certificates).
    SaisParams with_kappa(std::vector<double> new_kappa) const;
};

/// Scales every infection rate by theta while holding kappa_bar = kappa/beta
/// fixed (kappa scales along). This is the reading under which the epidemic
/// threshold theta_c is exact.
SaisParams scale_infection(const SaisParams& base, double theta);

/// Mean-field state: p = infection probability, q = alertness probability.
struct StateVector {
    std::vector<double> p;
    std::vector<double> q;
    double t = 0.0;

    static StateVector zero(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0}; }
    void validate(std::size_t n) const;
};

/// Spectral die-out assessment. margin = lambda1(L B A - M D); die_out
/// requires the strict inequality margin < 0, so an exactly-marginal
/// instance reports die_out = false. diag_threshold holds the per-node
/// diagonal y_i = (r_i delta_i + kappa_i delta_i / beta_i) / (r_i beta_i + r_i kappa_i).
struct StabilityReport {
    double margin = 0.0;
    std::vector<double> diag_threshold;
    bool die_out = false;
    EigenReport eig;
};

/// The (nonsymmetric) stability matrix L B A - M D with
/// L = diag{r_i(kappa_bar_i + 1)}, M = diag{kappa_bar_i + r_i},
/// B = diag{beta_i}, D = diag{delta_i}.
Matrix build_stability_matrix(const Graph& g, const SaisParams& params);

/// Computes the margin through the symmetric similar form
/// (LB)^{1/2} A (LB)^{1/2} - M D, which shares the spectrum of the
/// nonsymmetric product and keeps the symmetric eigensolver applicable.
StabilityReport spectral_margin(const Graph& g, const SaisParams& params, double tol = 1e-10);

/// Per-node Lemma diagonal y_i (see StabilityReport).
std::vector<double> stability_diagonal(const SaisParams& params);

/// Epidemic threshold for the decomposition beta_i = theta * beta_bar_i with
/// kappa_bar held fixed: theta_c = 1 / lambda1(H A). An edgeless graph has no
/// transmission path and reports the +infinity sentinel.
struct ThetaReport {
    double theta_c = std::numeric_limits<double>::infinity();
    bool no_transmission = false;  // edgeless graph sentinel
    bool connected = true;         // Theorem assumes connectedness; warn otherwise
};

ThetaReport epidemic_threshold_theta(const Graph& g, const SaisParams& params_with_beta_bar,
                                     double tol = 1e-10);

/// Fixed-step RK4 trajectory. Samples every `record_stride` steps (plus the
/// final state). max_preclamp_violation records the worst invariant breach
/// seen before clamping; breaches beyond the clamp tolerance abort.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> p_samples;
    std::vector<std::vector<double>> q_samples;
    StateVector final_state;
    double dt = 0.0;
    double max_preclamp_violation = 0.0;
};

/// Step-size rule: 0.01 / rho with rho = max_i(beta_i d_max + delta_i + kappa_i d_max).
double default_mean_field_dt(const Graph& g, const SaisParams& params);

class IntegrationInstabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Trajectory integrate_mean_field(const Graph& g, const SaisParams& params, const StateVector& init,
                                double t_end, double dt, std::size_t record_stride = 1);

/// Residual of the endemic-equilibrium relation
/// p_i/(1-p_i) = (beta_i/delta_i) (r_i(kappa_bar_i+1)/(kappa_bar_i+r_i)) sum_j a_ij p_j.
/// Throws on p_i = 1 (singular).
std::vector<double> equilibrium_residual(const Graph& g, const SaisParams& params,
                                         const std::vector<double>& p_star);

/// CSV with header t,p_0..p_{n-1},q_0..q_{n-1}, one row per sample.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace awarenet
