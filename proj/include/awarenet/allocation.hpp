#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "awarenet/graph.hpp"
#include "awarenet/lp.hpp"
#include "awarenet/sais.hpp"

namespace awarenet {

/// Linear-fractional awareness cost f_i(k) = (c_i + s_i k) / (r_i beta_i + r_i k)
/// on [kappa_lower_i, kappa_upper_i], fitted so f_i(kappa_lower_i) = 0 and
/// f_i(kappa_upper_i) = C_bar_i.
struct CostModel {
    std::vector<double> c;
    std::vector<double> s;
    std::vector<double> C_bar;
    std::vector<double> kappa_lower;
    std::vector<double> kappa_upper;

    std::size_t size() const { return c.size(); }
    void validate(const SaisParams& params) const;

    /// Nodes whose fitted slope fails the narrower published condition
    /// s_i > C_bar_i / 2 (the general nondecreasing requirement s_i beta_i >= c_i
    /// is always enforced; this is informational).
    std::vector<std::size_t> half_cbar_slope_violations() const;
};

/// Fits (c_i, s_i) per node: s_i = C_bar_i r_i (beta_i + kappa_upper_i) / (kappa_upper_i - kappa_lower_i),
/// c_i = -s_i kappa_lower_i. Throws on a degenerate range kappa_upper == kappa_lower.
CostModel fit_cost_params(const std::vector<double>& C_bar, const std::vector<double>& kappa_lower,
                          const std::vector<double>& kappa_upper, const SaisParams& params);

/// Cost of node i at awareness level kappa; domain error outside the box.
double eval_cost(const CostModel& model, const SaisParams& params, std::size_t i, double kappa);

/// Forward diagonal transform y(k) = (r d + k d/b) / (r b + r k); strictly
/// increasing from d/b (k=0) toward d/(r b).
double y_from_kappa(double beta, double delta, double r, double kappa);

class InfeasibleTargetError : public std::runtime_error {
public:
    InfeasibleTargetError(std::string msg, double lo, double hi)
        : std::runtime_error(std::move(msg)), attainable_low(lo), attainable_high(hi) {}
    double attainable_low;
    double attainable_high;
};

/// Inverse transform k = (y r b - r d) / (d/b - y r); throws
/// InfeasibleTargetError when y is outside the open interval (d/b, d/(r b)).
double kappa_from_y(double beta, double delta, double r, double y);

struct CharnesCooperPoint {
    double u = 0.0;
    double w = 0.0;
};

/// u = k/(r b + r k), w = 1/(r b + r k); satisfies r b w + r u = 1 exactly.
CharnesCooperPoint charnes_cooper(double beta, double r, double kappa);

/// k = u / w; throws on w <= 0 (singular transform).
double recover_kappa(double u, double w);

/// Assembled optimization instance: the PSD row A - F W - G U <= 0 with
/// F = diag{r_i delta_i}, G = diag{delta_i / beta_i}, per-node box rows
/// kappa_lower_i w_i <= u_i <= kappa_upper_i w_i, positivity w_i >= 0 and the
/// normalization r_i beta_i w_i + r_i u_i = 1. Also records the reduced
/// (u-only) diagonal y_i(u) = diag0_i + diag1_i u obtained by eliminating w.
struct SdpInstance {
    Graph graph;
    SaisParams params;
    CostModel cost;
    std::vector<double> F_diag;  // r_i delta_i
    std::vector<double> G_diag;  // delta_i / beta_i
    std::vector<double> diag0;   // delta_i / beta_i
    std::vector<double> diag1;   // (delta_i / beta_i)(1 - r_i)
    std::vector<double> u_lower, u_upper;  // Charnes-Cooper images of the kappa box
    std::vector<double> y_lower, y_upper;  // forward-transform images of the kappa box

    std::size_t size() const { return F_diag.size(); }
};

SdpInstance assemble_sdp(const Graph& g, const SaisParams& params, const CostModel& cost);

enum class AllocationStatus { optimal, marginal, infeasible };

const char* allocation_status_name(AllocationStatus s);

struct AllocationResult {
    AllocationStatus status = AllocationStatus::infeasible;
    std::vector<double> kappa_star;
    std::vector<double> u_star;
    std::vector<double> w_star;
    std::vector<double> y_star;
    double total_cost = 0.0;
    /// Certified spectral margin lambda1(L B A - M D) at kappa_star,
    /// recomputed independently through sais dynamics.
    double margin = 0.0;
    /// lambda1(A - diag{y(kappa_star)}) — the solver-side constraint value.
    double psd_lambda = 0.0;
    std::size_t cut_rounds = 0;
    std::size_t lp_iterations = 0;
    /// max_i |r_i beta_i w_i + r_i u_i - 1| over every iterate's recovered point.
    double identity_residual_max = 0.0;
};

enum class SolveForm { automatic, full, reduced };

struct SolveOptions {
    double tol = 1e-7;            // feasibility tolerance on lambda1(A - diag y)
    double lp_tol = 1e-9;         // LP objective tolerance
    std::size_t max_rounds = 500; // cutting-plane iteration cap
    double margin_target = 0.0;   // epsilon backoff: enforce lambda1 <= -margin_target
    double cert_tol = 1e-6;       // certified-margin acceptance bound
    SolveForm form = SolveForm::automatic;
    std::size_t max_cuts_per_round = 8;
};

/// Thrown when the cutting-plane loop exhausts its round budget. Carries the
/// best iterate and its certified margin.
class AllocationSolveError : public std::runtime_error {
public:
    AllocationSolveError(std::string msg, AllocationResult best)
        : std::runtime_error(std::move(msg)), best_iterate(std::move(best)) {}
    AllocationResult best_iterate;
};

/// Cutting-plane outer approximation of the semidefinite program: linear cuts
/// v'(A - FW - GU)v <= -margin_target accumulate against an LP until the top
/// eigenvalue of A - diag{y} meets the tolerance. Infeasibility (even
/// kappa_upper cannot stabilize) is detected by a direct pre-pass.
AllocationResult solve_allocation(const SdpInstance& instance, const SolveOptions& options = {});

/// Independent recomputation of the spectral margin at a given allocation.
double certify(const Graph& g, const SaisParams& params, const std::vector<double>& kappa_star);

/// Brute-force oracle for n <= 4: exhaustive per-node kappa grid, feasibility
/// tested by a principal-minor positive-semidefiniteness check of
/// diag{y} - A (no eigensolver involved).
AllocationResult oracle_grid_solve(const Graph& g, const SaisParams& params, const CostModel& cost,
                                   std::size_t grid_points);

/// Full-vector JSON document (status, kappa/u/w/y vectors, cost, certificate).
std::string allocation_to_json(const AllocationResult& result, const SdpInstance& instance);

/// CSV rows "node,degree,kappa_star,investment".
void write_allocation_csv(const AllocationResult& result, const SdpInstance& instance, std::ostream& out);

}  // namespace awarenet
