#include "awarenet/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "awarenet/spectra.hpp"

namespace awarenet {

void CostModel::validate(const SaisParams& params) const {
    const std::size_t n = size();
    if (s.size() != n || C_bar.size() != n || kappa_lower.size() != n || kappa_upper.size() != n ||
        params.size() != n)
        throw std::invalid_argument("CostModel: vector length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(C_bar[i] > 0.0)) throw std::invalid_argument("CostModel: C_bar must be positive");
        if (!(kappa_lower[i] >= 0.0) || !(kappa_upper[i] >= kappa_lower[i]))
            throw std::invalid_argument("CostModel: requires 0 <= kappa_lower <= kappa_upper");
        // nondecreasing cost: d/dk f = r(s b - c)/(r b + r k)^2 >= 0
        if (s[i] * params.beta[i] < c[i] - 1e-12 * std::fabs(c[i]))
            throw std::invalid_argument("CostModel: cost not nondecreasing (needs s*beta >= c)");
    }
}

std::vector<std::size_t> CostModel::half_cbar_slope_violations() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i)
        if (!(s[i] > 0.5 * C_bar[i])) out.push_back(i);
    return out;
}

CostModel fit_cost_params(const std::vector<double>& C_bar, const std::vector<double>& kappa_lower,
                          const std::vector<double>& kappa_upper, const SaisParams& params) {
    const std::size_t n = params.size();
    if (C_bar.size() != n || kappa_lower.size() != n || kappa_upper.size() != n)
        throw std::invalid_argument("fit_cost_params: vector length mismatch");

    CostModel model;
    model.C_bar = C_bar;
    model.kappa_lower = kappa_lower;
    model.kappa_upper = kappa_upper;
    model.c.resize(n);
    model.s.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double range = kappa_upper[i] - kappa_lower[i];
        if (!(range > 0.0))
            throw std::invalid_argument("fit_cost_params: degenerate kappa range at node " +
                                        std::to_string(i));
        model.s[i] = C_bar[i] * params.r[i] * (params.beta[i] + kappa_upper[i]) / range;
        model.c[i] = -model.s[i] * kappa_lower[i];
    }
    model.validate(params);
    return model;
}

double eval_cost(const CostModel& model, const SaisParams& params, std::size_t i, double kappa) {
    const double slack = 1e-12 * (1.0 + std::fabs(model.kappa_upper[i]));
    if (kappa < model.kappa_lower[i] - slack || kappa > model.kappa_upper[i] + slack)
        throw std::domain_error("eval_cost: kappa outside [kappa_lower, kappa_upper]");
    return (model.c[i] + model.s[i] * kappa) / (params.r[i] * params.beta[i] + params.r[i] * kappa);
}

double y_from_kappa(double beta, double delta, double r, double kappa) {
    return (r * delta + kappa * delta / beta) / (r * beta + r * kappa);
}

double kappa_from_y(double beta, double delta, double r, double y) {
    const double lo = delta / beta;
    const double hi = delta / (r * beta);
    const double denom = delta / beta - y * r;
    if (!(denom > 0.0) || !(y >= lo))
        throw InfeasibleTargetError("kappa_from_y: target y outside attainable range (" +
                                        std::to_string(lo) + ", " + std::to_string(hi) + ")",
                                    lo, hi);
    return (y * r * beta - r * delta) / denom;
}

CharnesCooperPoint charnes_cooper(double beta, double r, double kappa) {
    const double denom = r * beta + r * kappa;
    if (!(denom > 0.0)) throw std::invalid_argument("charnes_cooper: r*beta + r*kappa must be positive");
    return {kappa / denom, 1.0 / denom};
}

double recover_kappa(double u, double w) {
    if (!(w > 0.0)) throw std::invalid_argument("recover_kappa: singular transform (w <= 0)");
    return u / w;
}

SdpInstance assemble_sdp(const Graph& g, const SaisParams& params, const CostModel& cost) {
    const std::size_t n = g.num_nodes();
    params.validate(n);
    cost.validate(params);

    SdpInstance inst;
    inst.graph = g;
    inst.params = params;
    inst.cost = cost;
    inst.F_diag.resize(n);
    inst.G_diag.resize(n);
    inst.diag0.resize(n);
    inst.diag1.resize(n);
    inst.u_lower.resize(n);
    inst.u_upper.resize(n);
    inst.y_lower.resize(n);
    inst.y_upper.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        inst.F_diag[i] = params.r[i] * params.delta[i];
        inst.G_diag[i] = params.delta[i] / params.beta[i];
        inst.diag0[i] = params.delta[i] / params.beta[i];
        inst.diag1[i] = (params.delta[i] / params.beta[i]) * (1.0 - params.r[i]);
        inst.u_lower[i] = charnes_cooper(params.beta[i], params.r[i], cost.kappa_lower[i]).u;
        inst.u_upper[i] = charnes_cooper(params.beta[i], params.r[i], cost.kappa_upper[i]).u;
        inst.y_lower[i] = y_from_kappa(params.beta[i], params.delta[i], params.r[i], cost.kappa_lower[i]);
        inst.y_upper[i] = y_from_kappa(params.beta[i], params.delta[i], params.r[i], cost.kappa_upper[i]);
    }
    return inst;
}

const char* allocation_status_name(AllocationStatus s) {
    switch (s) {
        case AllocationStatus::optimal: return "optimal";
        case AllocationStatus::marginal: return "marginal";
        case AllocationStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

double certify(const Graph& g, const SaisParams& params, const std::vector<double>& kappa_star) {
    return spectral_margin(g, params.with_kappa(kappa_star)).margin;
}

namespace {

struct EigenPair {
    double value;
    std::vector<double> vector;
};

// Top eigenpairs of A - diag{y}, descending. Dense at desk scale, shifted
// power (top-1 only) beyond.
std::vector<EigenPair> top_eigenpairs(const Graph& g, const std::vector<double>& y, std::size_t count) {
    const std::size_t n = g.num_nodes();
    std::vector<EigenPair> out;
    if (n <= kDenseEigenMaxN) {
        Matrix m = g.dense_adjacency();
        for (std::size_t i = 0; i < n; ++i) m(i, i) -= y[i];
        SymmetricSpectrum spec = dense_symmetric_eigen(m);
        const std::size_t take = std::min(count, n);
        for (std::size_t k = 0; k < take; ++k) {
            const std::size_t col = n - 1 - k;
            EigenPair p;
            p.value = spec.values[col];
            p.vector.resize(n);
            for (std::size_t i = 0; i < n; ++i) p.vector[i] = spec.vectors(i, col);
            out.push_back(std::move(p));
        }
    } else {
        double ymax = 0.0;
        for (double v : y) ymax = std::max(ymax, std::fabs(v));
        SymmetricOperator op{n, static_cast<double>(g.max_degree()) + ymax,
                             [&](std::span<const double> x, std::span<double> out_y) {
                                 g.adjacency_multiply(x, out_y);
                                 for (std::size_t i = 0; i < n; ++i) out_y[i] -= y[i] * x[i];
                             }};
        EigenReport rep = largest_eigenvalue(op, 1e-10);
        out.push_back({rep.lambda1, std::move(rep.eigvec)});
    }
    return out;
}

double quad_form_adjacency(const Graph& g, const std::vector<double>& v) {
    double acc = 0.0;
    for (std::uint32_t i = 0; i < g.num_nodes(); ++i)
        for (std::uint32_t j : g.neighbors(i)) acc += v[i] * v[j];
    return acc;
}

// top eigenvalue of A - diag{y} through the sparse operator; much cheaper
// than a full dense decomposition when called many times per round
double lambda_top_fast(const Graph& g, const std::vector<double>& y) {
    const std::size_t n = g.num_nodes();
    double ymax = 0.0;
    for (double v : y) ymax = std::max(ymax, std::fabs(v));
    SymmetricOperator op{n, static_cast<double>(g.max_degree()) + ymax,
                         [&](std::span<const double> x, std::span<double> out) {
                             g.adjacency_multiply(x, out);
                             for (std::size_t i = 0; i < n; ++i) out[i] -= y[i] * x[i];
                         }};
    return largest_eigenvalue(op, 1e-9).lambda1;
}

struct Cut {
    std::vector<double> v;
    double quad = 0.0;  // v'Av
};

struct IterateState {
    std::vector<double> kappa, u, w, y;
    double identity_residual = 0.0;
};

// Recover the exact Charnes-Cooper point from the LP's u/w estimate. The
// recovered point sits exactly on the normalization manifold, which is what
// the identity criterion and the certificate are evaluated on.
IterateState recover_iterate(const SdpInstance& inst, const std::vector<double>& u_raw,
                             const std::vector<double>& w_raw) {
    const std::size_t n = inst.size();
    IterateState st;
    st.kappa.resize(n);
    st.u.resize(n);
    st.w.resize(n);
    st.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // degenerate LP vertices can return w at roundoff scale below zero;
        // w -> 0+ maps to kappa -> +inf, which the box clamp absorbs
        double kappa = w_raw[i] > 1e-300 ? u_raw[i] / w_raw[i]
                                         : std::numeric_limits<double>::infinity();
        kappa = std::clamp(kappa, inst.cost.kappa_lower[i], inst.cost.kappa_upper[i]);
        const auto cc = charnes_cooper(inst.params.beta[i], inst.params.r[i], kappa);
        st.kappa[i] = kappa;
        st.u[i] = cc.u;
        st.w[i] = cc.w;
        st.y[i] = y_from_kappa(inst.params.beta[i], inst.params.delta[i], inst.params.r[i], kappa);
        const double identity =
            inst.params.r[i] * inst.params.beta[i] * cc.w + inst.params.r[i] * cc.u - 1.0;
        st.identity_residual = std::max(st.identity_residual, std::fabs(identity));
    }
    return st;
}

lp::Problem build_full_lp(const SdpInstance& inst, const std::vector<Cut>& cuts, double epsilon) {
    const std::size_t n = inst.size();
    lp::Problem prob;
    prob.nvars = 2 * n;  // [u_0..u_{n-1}, w_0..w_{n-1}]
    prob.objective.assign(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prob.objective[i] = inst.cost.s[i];
        prob.objective[n + i] = inst.cost.c[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> eq(2 * n, 0.0);
        eq[i] = inst.params.r[i];
        eq[n + i] = inst.params.r[i] * inst.params.beta[i];
        prob.add_row(std::move(eq), lp::RowSense::eq, 1.0);

        std::vector<double> lo(2 * n, 0.0);
        lo[i] = -1.0;
        lo[n + i] = inst.cost.kappa_lower[i];
        prob.add_row(std::move(lo), lp::RowSense::le, 0.0);

        std::vector<double> hi(2 * n, 0.0);
        hi[i] = 1.0;
        hi[n + i] = -inst.cost.kappa_upper[i];
        prob.add_row(std::move(hi), lp::RowSense::le, 0.0);
    }
    for (const Cut& cut : cuts) {
        std::vector<double> row(2 * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double vv = cut.v[i] * cut.v[i];
            row[i] = vv * inst.G_diag[i];
            row[n + i] = vv * inst.F_diag[i];
        }
        prob.add_row(std::move(row), lp::RowSense::ge, cut.quad + epsilon);
    }
    return prob;
}

lp::Problem build_reduced_lp(const SdpInstance& inst, const std::vector<Cut>& cuts, double epsilon) {
    const std::size_t n = inst.size();
    lp::Problem prob;
    prob.nvars = n;  // t_i = u_i - u_lower_i >= 0
    prob.objective.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        prob.objective[i] = inst.cost.s[i] - inst.cost.c[i] / inst.params.beta[i];
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> hi(n, 0.0);
        hi[i] = 1.0;
        prob.add_row(std::move(hi), lp::RowSense::le, inst.u_upper[i] - inst.u_lower[i]);
    }
    for (const Cut& cut : cuts) {
        std::vector<double> row(n, 0.0);
        double rhs = cut.quad + epsilon;
        for (std::size_t i = 0; i < n; ++i) {
            const double vv = cut.v[i] * cut.v[i];
            row[i] = vv * inst.diag1[i];
            rhs -= vv * (inst.diag0[i] + inst.diag1[i] * inst.u_lower[i]);
        }
        prob.add_row(std::move(row), lp::RowSense::ge, rhs);
    }
    return prob;
}

// Dense linear solve with partial pivoting; returns false when singular.
bool solve_linear(std::vector<std::vector<double>>& m, std::vector<double>& rhs) {
    const std::size_t k = rhs.size();
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < k; ++i)
            if (std::fabs(m[i][col]) > std::fabs(m[piv][col])) piv = i;
        if (std::fabs(m[piv][col]) < 1e-12) return false;
        std::swap(m[col], m[piv]);
        std::swap(rhs[col], rhs[piv]);
        for (std::size_t i = 0; i < k; ++i) {
            if (i == col) continue;
            const double f = m[i][col] / m[col][col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < k; ++j) m[i][j] -= f * m[col][j];
            rhs[i] -= f * rhs[col];
        }
    }
    for (std::size_t i = 0; i < k; ++i) rhs[i] /= m[i][i];
    return true;
}

// Active-set KKT refinement. At a boundary optimum with a simple top
// eigenvalue, stationarity fixes the interior components of the eigenvector
// to v_i = sqrt(g_i / d1_i) (g = reduced cost slope), the eigen-equation then
// determines the boundary components and the interior diagonal:
//   (A v)_i = (y_i - eps) v_i  =>  y_i = ((A v)_i + eps v_i) / v_i.
// This pins the exact optimizer independent of the cutting-plane path.
// Returns true and updates kappa when the polished point verifies.
bool kkt_polish(const SdpInstance& inst, double epsilon, double tol, std::vector<double>& kappa) {
    const std::size_t n = inst.size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = inst.cost.s[i] - inst.cost.c[i] / inst.params.beta[i];
        if (!(g[i] > 0.0) || !(inst.diag1[i] > 0.0)) return false;  // flat cost: ambiguous optimum
    }

    // 0 = at lower bound, 1 = interior, 2 = at upper bound
    std::vector<int> side(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double range = inst.cost.kappa_upper[i] - inst.cost.kappa_lower[i];
        const double band = 1e-4 * range;
        if (kappa[i] <= inst.cost.kappa_lower[i] + band) side[i] = 0;
        else if (kappa[i] >= inst.cost.kappa_upper[i] - band) side[i] = 2;
        else side[i] = 1;
    }

    std::vector<double> kap = kappa, v(n, 0.0), y(n, 0.0);
    const Matrix adj = inst.graph.dense_adjacency();
    bool settled = false;

    for (int pass = 0; pass < 60; ++pass) {
        std::vector<std::size_t> interior, boundary;
        for (std::size_t i = 0; i < n; ++i)
            (side[i] == 1 ? interior : boundary).push_back(i);
        if (interior.empty()) return false;  // bound-determined; nothing to refine

        for (std::size_t i : interior) v[i] = std::sqrt(g[i] / inst.diag1[i]);
        for (std::size_t i : boundary) {
            kap[i] = side[i] == 0 ? inst.cost.kappa_lower[i] : inst.cost.kappa_upper[i];
            y[i] = y_from_kappa(inst.params.beta[i], inst.params.delta[i], inst.params.r[i], kap[i]);
        }

        if (!boundary.empty()) {
            const std::size_t k = boundary.size();
            std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
            std::vector<double> rhs(k, 0.0);
            for (std::size_t a = 0; a < k; ++a) {
                const std::size_t i = boundary[a];
                m[a][a] = y[i] - epsilon;
                for (std::size_t b = 0; b < k; ++b)
                    if (a != b) m[a][b] -= adj(i, boundary[b]);
                for (std::size_t j : interior) rhs[a] += adj(i, j) * v[j];
            }
            if (!solve_linear(m, rhs)) return false;
            for (std::size_t a = 0; a < k; ++a) {
                if (rhs[a] < -1e-12) return false;  // lost Perron positivity
                v[boundary[a]] = std::max(rhs[a], 0.0);
            }
        }

        // interior diagonal from the eigen-equation, then box migration
        bool moved = false;
        double delta_max = 0.0;
        for (std::size_t i : interior) {
            double av = 0.0;
            for (std::size_t j = 0; j < n; ++j) av += adj(i, j) * v[j];
            const double yi = (av + epsilon * v[i]) / v[i];
            // a target beyond the transform supremum delta/(r beta) wants
            // more awareness than any kappa buys: that node sits at the
            // upper bound
            const double y_sup = inst.params.delta[i] / (inst.params.r[i] * inst.params.beta[i]);
            const double y_floor = inst.params.delta[i] / inst.params.beta[i];
            if (yi >= y_sup * (1.0 - 1e-12)) {
                side[i] = 2;
                moved = true;
                continue;
            }
            if (yi <= y_floor) {  // kappa = 0 already overshoots; pin at the lower bound
                side[i] = 0;
                moved = true;
                continue;
            }
            const double ki =
                kappa_from_y(inst.params.beta[i], inst.params.delta[i], inst.params.r[i], yi);
            if (ki < inst.cost.kappa_lower[i]) {
                side[i] = 0;
                moved = true;
            } else if (ki > inst.cost.kappa_upper[i]) {
                side[i] = 2;
                moved = true;
            } else {
                delta_max = std::max(delta_max, std::fabs(ki - kap[i]));
                kap[i] = ki;
            }
        }
        // multiplier signs: a bound coordinate whose eigenvector weight
        // crosses sqrt(g/d1) wants to re-enter the interior
        for (std::size_t i : boundary) {
            const double v_crit = std::sqrt(g[i] / inst.diag1[i]);
            if (side[i] == 0 && v[i] > v_crit * (1.0 + 1e-10)) {
                side[i] = 1;
                moved = true;
            } else if (side[i] == 2 && v[i] < v_crit * (1.0 - 1e-10)) {
                side[i] = 1;
                moved = true;
            }
        }
        if (!moved && delta_max <= 1e-12) {
            settled = true;
            break;
        }
    }
    if (!settled) return false;

    // verification: the polished point must sit on the shifted boundary and
    // not cost more than the unpolished one
    const double lambda = top_eigenpairs(inst.graph, [&] {
                              std::vector<double> yy(n);
                              for (std::size_t i = 0; i < n; ++i)
                                  yy[i] = y_from_kappa(inst.params.beta[i], inst.params.delta[i],
                                                       inst.params.r[i], kap[i]);
                              return yy;
                          }(),
                          1).front().value;
    if (std::fabs(lambda + epsilon) > std::max(tol, 1e-9)) return false;
    double cost_old = 0.0, cost_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cost_old += eval_cost(inst.cost, inst.params, i, kappa[i]);
        cost_new += eval_cost(inst.cost, inst.params, i, kap[i]);
    }
    if (cost_new > cost_old + 1e-7 * (1.0 + std::fabs(cost_old))) return false;

    kappa = kap;
    return true;
}

double total_cost_at(const SdpInstance& inst, const std::vector<double>& kappa) {
    double acc = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i) acc += eval_cost(inst.cost, inst.params, i, kappa[i]);
    return acc;
}

void fill_point(AllocationResult& res, const SdpInstance& inst, const std::vector<double>& kappa) {
    const std::size_t n = inst.size();
    res.kappa_star = kappa;
    res.u_star.resize(n);
    res.w_star.resize(n);
    res.y_star.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto cc = charnes_cooper(inst.params.beta[i], inst.params.r[i], kappa[i]);
        res.u_star[i] = cc.u;
        res.w_star[i] = cc.w;
        res.y_star[i] = y_from_kappa(inst.params.beta[i], inst.params.delta[i], inst.params.r[i], kappa[i]);
    }
    res.total_cost = total_cost_at(inst, kappa);

    // transformed objective must agree with the fractional cost
    double transformed = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        transformed += inst.cost.c[i] * res.w_star[i] + inst.cost.s[i] * res.u_star[i];
    if (std::fabs(transformed - res.total_cost) > 1e-9 * (1.0 + std::fabs(res.total_cost)))
        throw std::logic_error("solve_allocation: transformed cost mismatch");
}

}  // namespace

AllocationResult solve_allocation(const SdpInstance& inst, const SolveOptions& options) {
    const std::size_t n = inst.size();
    if (n == 0) throw std::invalid_argument("solve_allocation: empty instance");
    const double epsilon = options.margin_target;
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("solve_allocation: margin_target must be nonnegative");
    const double activity_band = std::max(10.0 * options.tol, 1e-6);

    // Infeasibility pre-pass: even maximum awareness cannot stabilize.
    const double lambda_up = top_eigenpairs(inst.graph, inst.y_upper, 1).front().value;
    if (lambda_up > -epsilon + options.tol) {
        AllocationResult res;
        res.status = AllocationStatus::infeasible;
        res.psd_lambda = lambda_up;
        res.margin = certify(inst.graph, inst.params, inst.cost.kappa_upper);
        res.total_cost = std::numeric_limits<double>::quiet_NaN();
        return res;
    }

    // If the cost floor is already stable the box minimum is optimal.
    const double lambda_lo = top_eigenpairs(inst.graph, inst.y_lower, 1).front().value;
    if (lambda_lo <= -epsilon) {
        AllocationResult res;
        fill_point(res, inst, inst.cost.kappa_lower);
        res.psd_lambda = lambda_lo;
        res.margin = certify(inst.graph, inst.params, res.kappa_star);
        res.status = (lambda_lo <= -epsilon - activity_band) ? AllocationStatus::optimal
                                                             : AllocationStatus::marginal;
        return res;
    }

    const bool reduced = options.form == SolveForm::reduced ||
                         (options.form == SolveForm::automatic && n > 60);

    lp::Options lp_opts;
    lp_opts.objective_tol = options.lp_tol;

    double y_scale = 1.0;
    for (double y : inst.y_upper) y_scale = std::max(y_scale, std::fabs(y));
    const std::size_t cut_cap = std::max<std::size_t>(60, n / 2);

    // reduced-objective slope and additive constant: cost = const + sum g_i u_i
    std::vector<double> g_slope(n);
    double cost_const = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        g_slope[i] = inst.cost.s[i] - inst.cost.c[i] / inst.params.beta[i];
        cost_const += inst.cost.c[i] / (inst.params.r[i] * inst.params.beta[i]);
    }

    const auto kappa_of_u = [&](double u, std::size_t i) {
        const double w = (1.0 - inst.params.r[i] * u) / (inst.params.r[i] * inst.params.beta[i]);
        return std::clamp(u / w, inst.cost.kappa_lower[i], inst.cost.kappa_upper[i]);
    };

    double round_tol = options.tol;
    AllocationResult best;
    for (int attempt = 0; attempt < 3; ++attempt) {
        std::vector<Cut> cuts;
        AllocationResult res;
        bool converged = false;
        // coarse feasibility first; the KKT polish turns a coarse iterate
        // into the exact boundary optimum, so deep Kelley tails are avoided
        double stage_tol = std::max(round_tol, 1e-3 * y_scale);

        double incumbent_cost = std::numeric_limits<double>::infinity();
        std::vector<double> incumbent_kappa;

        const auto try_finish = [&](const std::vector<double>& kappa_seed, double lambda_seed) {
            std::vector<double> kappa = kappa_seed;
            if (kkt_polish(inst, epsilon, options.tol, kappa)) {
                fill_point(res, inst, kappa);
                res.psd_lambda = lambda_top_fast(inst.graph, res.y_star);
                return true;
            }
            if (lambda_seed <= -epsilon + round_tol) {  // already good enough unpolished
                fill_point(res, inst, kappa_seed);
                res.psd_lambda = lambda_seed;
                return true;
            }
            return false;
        };

        for (std::size_t round = 0; round < options.max_rounds && !converged; ++round) {
            const lp::Problem prob =
                reduced ? build_reduced_lp(inst, cuts, epsilon) : build_full_lp(inst, cuts, epsilon);
            const lp::Solution sol = lp::solve(prob, lp_opts);
            res.lp_iterations += sol.iterations;
            if (sol.status != lp::Status::optimal)
                throw AllocationSolveError("solve_allocation: LP solve failed mid-loop", res);

            std::vector<double> u_raw(n), w_raw(n);
            double lower_bound = cost_const;
            if (reduced) {
                for (std::size_t i = 0; i < n; ++i) {
                    u_raw[i] = sol.x[i] + inst.u_lower[i];
                    w_raw[i] = (1.0 - inst.params.r[i] * u_raw[i]) /
                               (inst.params.r[i] * inst.params.beta[i]);
                    lower_bound += g_slope[i] * u_raw[i];
                }
            } else {
                lower_bound = sol.value;
                for (std::size_t i = 0; i < n; ++i) {
                    u_raw[i] = sol.x[i];
                    w_raw[i] = sol.x[n + i];
                }
            }
            const IterateState st = recover_iterate(inst, u_raw, w_raw);
            res.identity_residual_max = std::max(res.identity_residual_max, st.identity_residual);
            ++res.cut_rounds;

            const double lambda1 = lambda_top_fast(inst.graph, st.y);
            if (lambda1 <= -epsilon + stage_tol &&
                (converged = try_finish(st.kappa, lambda1)))
                break;
            if (lambda1 <= -epsilon + stage_tol && stage_tol > round_tol)
                stage_tol = std::max(round_tol, stage_tol * 1e-2);  // polish refused; cut deeper

            // supporting hyperplane: walk toward the feasible kappa_upper
            // point until the top eigenvalue crosses -epsilon (lambda_max is
            // convex along u-segments, so the crossing is unique), cut there
            // and keep the feasible end as an incumbent
            std::vector<double> u_t(n), y_t(n);
            double t_lo = 0.0, t_hi = 1.0;
            for (int step = 0; step < 18; ++step) {
                const double t = 0.5 * (t_lo + t_hi);
                for (std::size_t i = 0; i < n; ++i) {
                    u_t[i] = st.u[i] + t * (inst.u_upper[i] - st.u[i]);
                    y_t[i] = inst.diag0[i] + inst.diag1[i] * u_t[i];
                }
                (lambda_top_fast(inst.graph, y_t) > -epsilon ? t_lo : t_hi) = t;
            }
            for (std::size_t i = 0; i < n; ++i) {
                u_t[i] = st.u[i] + t_hi * (inst.u_upper[i] - st.u[i]);
                y_t[i] = inst.diag0[i] + inst.diag1[i] * u_t[i];
            }
            std::vector<double> kappa_b(n);
            double cost_b = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                kappa_b[i] = kappa_of_u(u_t[i], i);
                cost_b += eval_cost(inst.cost, inst.params, i, kappa_b[i]);
            }
            if (cost_b < incumbent_cost) {
                incumbent_cost = cost_b;
                incumbent_kappa = kappa_b;
            }
            // the boundary point carries a workable active-set guess; a
            // verified polish is a full KKT certificate, and KKT points of
            // this convex program are globally optimal, so accept directly
            {
                std::vector<double> kappa_try = kappa_b;
                if (kkt_polish(inst, epsilon, options.tol, kappa_try)) {
                    fill_point(res, inst, kappa_try);
                    res.psd_lambda = lambda_top_fast(inst.graph, res.y_star);
                    converged = true;
                    break;
                }
            }
            if (incumbent_cost - lower_bound <= 1e-7 * (1.0 + std::fabs(incumbent_cost)) &&
                (converged = try_finish(incumbent_kappa, lambda_top_fast(inst.graph, [&] {
                                            std::vector<double> yy(n);
                                            for (std::size_t i = 0; i < n; ++i)
                                                yy[i] = y_from_kappa(inst.params.beta[i],
                                                                     inst.params.delta[i],
                                                                     inst.params.r[i],
                                                                     incumbent_kappa[i]);
                                            return yy;
                                        }()))))
                break;

            // cuts from the LP point and from the boundary point
            const auto deep = top_eigenpairs(inst.graph, st.y, options.max_cuts_per_round);
            for (const EigenPair& p : deep) {
                if (p.value <= -epsilon + 0.5 * round_tol) break;
                cuts.push_back({p.vector, quad_form_adjacency(inst.graph, p.vector)});
            }
            const auto boundary = top_eigenpairs(inst.graph, y_t, options.max_cuts_per_round);
            const double spread = std::max(stage_tol, 0.05 * (boundary.front().value + epsilon +
                                                              y_scale * 1e-3));
            for (const EigenPair& p : boundary) {
                if (p.value < -epsilon - spread) break;
                cuts.push_back({p.vector, quad_form_adjacency(inst.graph, p.vector)});
            }

            if (cuts.size() > cut_cap) {
                // drop the slackest cuts at the current iterate
                std::vector<std::pair<double, std::size_t>> slack(cuts.size());
                for (std::size_t k = 0; k < cuts.size(); ++k) {
                    double lhs = 0.0;
                    for (std::size_t i = 0; i < n; ++i)
                        lhs += cuts[k].v[i] * cuts[k].v[i] * st.y[i];
                    slack[k] = {lhs - cuts[k].quad - epsilon, k};
                }
                std::sort(slack.begin(), slack.end());
                std::vector<Cut> kept;
                const double keep_below = 10.0 * stage_tol;
                for (const auto& [s, k] : slack)
                    if (kept.size() < (3 * cut_cap) / 4 || s < keep_below)
                        kept.push_back(std::move(cuts[k]));
                cuts = std::move(kept);
            }
        }

        if (!converged)
            throw AllocationSolveError("solve_allocation: cutting-plane round cap exceeded", res);

        res.margin = certify(inst.graph, inst.params, res.kappa_star);
        if (res.margin <= options.cert_tol) {
            res.status = (res.psd_lambda <= -epsilon - activity_band) ? AllocationStatus::optimal
                                                                      : AllocationStatus::marginal;
            return res;
        }
        best = res;
        round_tol /= 10.0;  // certificate too loose; tighten and rerun
    }
    throw AllocationSolveError("solve_allocation: certificate failed after tightening", best);
}

namespace {

// Sum of k x k principal minors for k = 1..n, n <= 4. A symmetric matrix is
// PSD exactly when all of them are nonnegative.
bool psd_by_minors(const Matrix& m, double tol) {
    const std::size_t n = m.rows();
    const auto det2 = [&](std::size_t a, std::size_t b) {
        return m(a, a) * m(b, b) - m(a, b) * m(b, a);
    };
    const auto det3 = [&](std::size_t a, std::size_t b, std::size_t c) {
        return m(a, a) * (m(b, b) * m(c, c) - m(b, c) * m(c, b)) -
               m(a, b) * (m(b, a) * m(c, c) - m(b, c) * m(c, a)) +
               m(a, c) * (m(b, a) * m(c, b) - m(b, b) * m(c, a));
    };

    double e1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) e1 += m(i, i);
    if (e1 < -tol) return false;
    if (n == 1) return true;

    double e2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) e2 += det2(i, j);
    if (e2 < -tol) return false;
    if (n == 2) return true;

    double e3 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) e3 += det3(i, j, k);
    if (e3 < -tol) return false;
    if (n == 3) return true;

    // n == 4: determinant by cofactor expansion along the first row
    double e4 = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        std::size_t cols[3];
        std::size_t w = 0;
        for (std::size_t j = 0; j < 4; ++j)
            if (j != c) cols[w++] = j;
        const double minor =
            m(1, cols[0]) * (m(2, cols[1]) * m(3, cols[2]) - m(2, cols[2]) * m(3, cols[1])) -
            m(1, cols[1]) * (m(2, cols[0]) * m(3, cols[2]) - m(2, cols[2]) * m(3, cols[0])) +
            m(1, cols[2]) * (m(2, cols[0]) * m(3, cols[1]) - m(2, cols[1]) * m(3, cols[0]));
        e4 += ((c % 2 == 0) ? 1.0 : -1.0) * m(0, c) * minor;
    }
    return e4 >= -tol;
}

}  // namespace

AllocationResult oracle_grid_solve(const Graph& g, const SaisParams& params, const CostModel& cost,
                                   std::size_t grid_points) {
    const std::size_t n = g.num_nodes();
    if (n > 4) throw std::invalid_argument("oracle_grid_solve: n must be <= 4");
    if (grid_points < 2) throw std::invalid_argument("oracle_grid_solve: need at least 2 grid points");
    params.validate(n);
    cost.validate(params);

    const SdpInstance inst = assemble_sdp(g, params, cost);
    const std::size_t G = grid_points;

    std::vector<std::vector<double>> kappa_grid(n), y_grid(n), f_grid(n);
    for (std::size_t i = 0; i < n; ++i) {
        kappa_grid[i].resize(G);
        y_grid[i].resize(G);
        f_grid[i].resize(G);
        const double lo = cost.kappa_lower[i], hi = cost.kappa_upper[i];
        for (std::size_t k = 0; k < G; ++k) {
            const double kap = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(G - 1);
            kappa_grid[i][k] = kap;
            y_grid[i][k] = y_from_kappa(params.beta[i], params.delta[i], params.r[i], kap);
            f_grid[i][k] = eval_cost(cost, params, i, kap);
        }
    }

    const Matrix adj = g.dense_adjacency();
    double minor_scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) minor_scale = std::max(minor_scale, y_grid[i].back());
    const double minor_tol = 1e-9 * std::pow(minor_scale, static_cast<double>(n));

    std::vector<std::size_t> idx(n, 0);
    Matrix nmat(n, n);
    const auto feasible = [&]() {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) nmat(a, b) = -adj(a, b);
            nmat(a, a) += y_grid[a][idx[a]];
        }
        return psd_by_minors(nmat, minor_tol);
    };

    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_idx;

    // the all-upper corner seeds the pruning bound when the instance is feasible
    for (std::size_t i = 0; i < n; ++i) idx[i] = G - 1;
    if (feasible()) {
        best_cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) best_cost += f_grid[i][G - 1];
        best_idx = idx;
    }

    // enumerate the first n-1 coordinates; the last one is monotone in both
    // cost and feasibility, so its minimal feasible level is found by bisection
    const std::size_t last = n - 1;
    const auto search_last = [&]() -> std::ptrdiff_t {
        idx[last] = G - 1;
        if (!feasible()) return -1;
        std::size_t lo = 0, hi = G - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            idx[last] = mid;
            if (feasible())
                hi = mid;
            else
                lo = mid + 1;
        }
        return static_cast<std::ptrdiff_t>(lo);
    };

    const std::function<void(std::size_t, double)> descend = [&](std::size_t depth, double prefix) {
        if (prefix >= best_cost) return;  // costs are nonnegative
        if (depth == last) {
            const std::ptrdiff_t k = search_last();
            if (k < 0) return;
            idx[last] = static_cast<std::size_t>(k);
            const double total = prefix + f_grid[last][idx[last]];
            if (total < best_cost) {
                best_cost = total;
                best_idx = idx;
            }
            return;
        }
        for (std::size_t k = 0; k < G; ++k) {
            idx[depth] = k;
            descend(depth + 1, prefix + f_grid[depth][k]);
        }
    };
    descend(0, 0.0);

    AllocationResult res;
    if (best_idx.empty()) {
        res.status = AllocationStatus::infeasible;
        res.psd_lambda = top_eigenpairs(g, inst.y_upper, 1).front().value;
        res.margin = certify(g, params, cost.kappa_upper);
        res.total_cost = std::numeric_limits<double>::quiet_NaN();
        return res;
    }
    std::vector<double> kappa(n);
    for (std::size_t i = 0; i < n; ++i) kappa[i] = kappa_grid[i][best_idx[i]];
    fill_point(res, inst, kappa);
    res.psd_lambda = top_eigenpairs(g, res.y_star, 1).front().value;
    res.margin = certify(g, params, kappa);
    res.status = AllocationStatus::optimal;
    return res;
}

std::string allocation_to_json(const AllocationResult& result, const SdpInstance& instance) {
    nlohmann::json j;
    j["status"] = allocation_status_name(result.status);
    j["n"] = instance.size();
    j["margin"] = result.margin;
    j["psd_lambda"] = result.psd_lambda;
    j["cut_rounds"] = result.cut_rounds;
    j["lp_iterations"] = result.lp_iterations;
    j["identity_residual_max"] = result.identity_residual_max;
    j["y_lower"] = instance.y_lower;
    j["y_upper"] = instance.y_upper;
    if (result.status == AllocationStatus::infeasible) {
        j["total_cost"] = nullptr;
        j["attainable"] = {{"psd_lambda_at_kappa_upper", result.psd_lambda},
                           {"margin_at_kappa_upper", result.margin}};
    } else {
        j["total_cost"] = result.total_cost;
        j["kappa_star"] = result.kappa_star;
        j["u_star"] = result.u_star;
        j["w_star"] = result.w_star;
        j["y_star"] = result.y_star;
        std::vector<double> investment(instance.size());
        for (std::size_t i = 0; i < instance.size(); ++i)
            investment[i] = eval_cost(instance.cost, instance.params, i, result.kappa_star[i]);
        j["investment"] = investment;
    }
    return j.dump(2);
}

void write_allocation_csv(const AllocationResult& result, const SdpInstance& instance,
                          std::ostream& out) {
    if (result.status == AllocationStatus::infeasible)
        throw std::logic_error("write_allocation_csv: no allocation on infeasible instance");
    out << "node,degree,kappa_star,investment\n";
    const auto prev = out.precision(17);
    for (std::size_t i = 0; i < instance.size(); ++i) {
        const double inv = eval_cost(instance.cost, instance.params, i, result.kappa_star[i]);
        out << i << ',' << instance.graph.degree(static_cast<std::uint32_t>(i)) << ','
            << result.kappa_star[i] << ',' << inv << '\n';
    }
    out.precision(prev);
}

}  // namespace awarenet
