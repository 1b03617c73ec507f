#include "awarenet/sais.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace awarenet {

SaisParams SaisParams::homogeneous(std::size_t n, double beta, double delta, double kappa, double r) {
    return {std::vector<double>(n, beta), std::vector<double>(n, delta), std::vector<double>(n, kappa),
            std::vector<double>(n, r)};
}

void SaisParams::validate(std::size_t n) const {
    if (beta.size() != n || delta.size() != n || kappa.size() != n || r.size() != n)
        throw std::invalid_argument("SaisParams: vector length does not match graph");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(beta[i] > 0.0)) throw std::invalid_argument("SaisParams: beta must be positive");
        if (!(delta[i] > 0.0)) throw std::invalid_argument("SaisParams: delta must be positive");
        if (!(kappa[i] >= 0.0)) throw std::invalid_argument("SaisParams: kappa must be nonnegative");
        if (!(r[i] > 0.0 && r[i] < 1.0)) throw std::invalid_argument("SaisParams: r must lie in (0,1)");
    }
}

SaisParams SaisParams::with_kappa(std::vector<double> new_kappa) const {
    SaisParams p = *this;
    p.kappa = std::move(new_kappa);
    return p;
}

SaisParams scale_infection(const SaisParams& base, double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("scale_infection: theta must be positive");
    SaisParams p = base;
    for (std::size_t i = 0; i < p.beta.size(); ++i) {
        p.beta[i] *= theta;
        p.kappa[i] *= theta;  // keeps kappa_bar fixed
    }
    return p;
}

void StateVector::validate(std::size_t n) const {
    if (p.size() != n || q.size() != n) throw std::invalid_argument("StateVector: length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(p[i] >= 0.0 && q[i] >= 0.0 && p[i] + q[i] <= 1.0))
            throw std::invalid_argument("StateVector: requires p,q >= 0 and p+q <= 1");
    }
}

std::vector<double> stability_diagonal(const SaisParams& params) {
    const std::size_t n = params.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double num = params.r[i] * params.delta[i] + params.kappa[i] * params.delta[i] / params.beta[i];
        const double den = params.r[i] * params.beta[i] + params.r[i] * params.kappa[i];
        y[i] = num / den;
    }
    return y;
}

Matrix build_stability_matrix(const Graph& g, const SaisParams& params) {
    const std::size_t n = g.num_nodes();
    params.validate(n);
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double kb = params.kappa_bar(i);
        const double lb = params.r[i] * (kb + 1.0) * params.beta[i];
        for (std::uint32_t j : g.neighbors(static_cast<std::uint32_t>(i))) m(i, j) = lb;
        m(i, i) -= (kb + params.r[i]) * params.delta[i];
    }
    return m;
}

StabilityReport spectral_margin(const Graph& g, const SaisParams& params, double tol) {
    const std::size_t n = g.num_nodes();
    params.validate(n);

    StabilityReport rep;
    rep.diag_threshold = stability_diagonal(params);

    std::vector<double> sqrt_lb(n), md(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double kb = params.kappa_bar(i);
        sqrt_lb[i] = std::sqrt(params.r[i] * (kb + 1.0) * params.beta[i]);
        md[i] = (kb + params.r[i]) * params.delta[i];
    }

    if (n <= kDenseEigenMaxN) {
        Matrix s(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::uint32_t j : g.neighbors(static_cast<std::uint32_t>(i)))
                s(i, j) = sqrt_lb[i] * sqrt_lb[j];
            s(i, i) -= md[i];
        }
        rep.eig = largest_eigenvalue(s, tol);
    } else {
        double bound = 0.0;
        std::vector<double> row_abs(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::uint32_t j : g.neighbors(static_cast<std::uint32_t>(i))) acc += sqrt_lb[i] * sqrt_lb[j];
            bound = std::max(bound, acc + md[i]);
        }
        std::vector<double> scratch(n);
        SymmetricOperator op{n, bound, [&](std::span<const double> x, std::span<double> y) {
                                 for (std::size_t i = 0; i < n; ++i) scratch[i] = sqrt_lb[i] * x[i];
                                 g.adjacency_multiply(scratch, y);
                                 for (std::size_t i = 0; i < n; ++i) y[i] = sqrt_lb[i] * y[i] - md[i] * x[i];
                             }};
        rep.eig = largest_eigenvalue(op, tol);
    }
    rep.margin = rep.eig.lambda1;
    rep.die_out = rep.margin < 0.0;
    return rep;
}

ThetaReport epidemic_threshold_theta(const Graph& g, const SaisParams& params_with_beta_bar, double tol) {
    const std::size_t n = g.num_nodes();
    params_with_beta_bar.validate(n);

    ThetaReport rep;
    rep.connected = g.connected();
    if (g.num_edges() == 0) {
        rep.no_transmission = true;
        return rep;
    }

    // H = diag{(beta_bar_i/delta_i) r_i(kb_i+1)/(kb_i+r_i)}; lambda1(HA) via
    // the symmetric similar form H^{1/2} A H^{1/2}.
    std::vector<double> sqrt_h(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double kb = params_with_beta_bar.kappa_bar(i);
        const double h = (params_with_beta_bar.beta[i] / params_with_beta_bar.delta[i]) *
                         (params_with_beta_bar.r[i] * (kb + 1.0) / (kb + params_with_beta_bar.r[i]));
        sqrt_h[i] = std::sqrt(h);
    }

    EigenReport eig;
    if (n <= kDenseEigenMaxN) {
        Matrix s(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::uint32_t j : g.neighbors(static_cast<std::uint32_t>(i))) s(i, j) = sqrt_h[i] * sqrt_h[j];
        eig = largest_eigenvalue(s, tol);
    } else {
        double bound = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::uint32_t j : g.neighbors(static_cast<std::uint32_t>(i))) acc += sqrt_h[i] * sqrt_h[j];
            bound = std::max(bound, acc);
        }
        std::vector<double> scratch(n);
        SymmetricOperator op{n, bound, [&](std::span<const double> x, std::span<double> y) {
                                 for (std::size_t i = 0; i < n; ++i) scratch[i] = sqrt_h[i] * x[i];
                                 g.adjacency_multiply(scratch, y);
                                 for (std::size_t i = 0; i < n; ++i) y[i] *= sqrt_h[i];
                             }};
        eig = largest_eigenvalue(op, tol);
    }
    rep.theta_c = 1.0 / eig.lambda1;
    return rep;
}

double default_mean_field_dt(const Graph& g, const SaisParams& params) {
    const double dmax = static_cast<double>(g.max_degree());
    double rho = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i)
        rho = std::max(rho, params.beta[i] * dmax + params.delta[i] + params.kappa[i] * dmax);
    return 0.01 / rho;
}

namespace {

constexpr double kClampTol = 1e-9;

// dp_i = beta_i (1-p_i-q_i) s_i + r_i beta_i q_i s_i - delta_i p_i
// dq_i = kappa_i (1-p_i-q_i) s_i - r_i beta_i q_i s_i
// with s_i = sum_j a_ij p_j.
void derivative(const Graph& g, const SaisParams& params, const std::vector<double>& p,
                const std::vector<double>& q, std::vector<double>& dp, std::vector<double>& dq,
                std::vector<double>& s) {
    const std::size_t n = g.num_nodes();
    g.adjacency_multiply(p, s);
    for (std::size_t i = 0; i < n; ++i) {
        const double free = 1.0 - p[i] - q[i];
        dp[i] = params.beta[i] * free * s[i] + params.r[i] * params.beta[i] * q[i] * s[i] -
                params.delta[i] * p[i];
        dq[i] = params.kappa[i] * free * s[i] - params.r[i] * params.beta[i] * q[i] * s[i];
    }
}

}  // namespace

Trajectory integrate_mean_field(const Graph& g, const SaisParams& params, const StateVector& init,
                                double t_end, double dt, std::size_t record_stride) {
    const std::size_t n = g.num_nodes();
    params.validate(n);
    init.validate(n);
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_mean_field: dt must be positive");
    if (record_stride == 0) record_stride = 1;

    Trajectory traj;
    traj.dt = dt;
    std::vector<double> p = init.p, q = init.q;
    double t = init.t;

    const auto record = [&](double at) {
        traj.times.push_back(at);
        traj.p_samples.push_back(p);
        traj.q_samples.push_back(q);
    };
    record(t);

    std::vector<double> k1p(n), k1q(n), k2p(n), k2q(n), k3p(n), k3q(n), k4p(n), k4q(n);
    std::vector<double> tp(n), tq(n), s(n);

    const std::size_t steps = static_cast<std::size_t>(std::ceil((t_end - init.t) / dt - 1e-12));
    for (std::size_t step = 0; step < steps; ++step) {
        derivative(g, params, p, q, k1p, k1q, s);
        for (std::size_t i = 0; i < n; ++i) {
            tp[i] = p[i] + 0.5 * dt * k1p[i];
            tq[i] = q[i] + 0.5 * dt * k1q[i];
        }
        derivative(g, params, tp, tq, k2p, k2q, s);
        for (std::size_t i = 0; i < n; ++i) {
            tp[i] = p[i] + 0.5 * dt * k2p[i];
            tq[i] = q[i] + 0.5 * dt * k2q[i];
        }
        derivative(g, params, tp, tq, k3p, k3q, s);
        for (std::size_t i = 0; i < n; ++i) {
            tp[i] = p[i] + dt * k3p[i];
            tq[i] = q[i] + dt * k3q[i];
        }
        derivative(g, params, tp, tq, k4p, k4q, s);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
            q[i] += dt / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
        }
        t = init.t + static_cast<double>(step + 1) * dt;

        // Clamp roundoff-scale violations; anything larger is instability.
        for (std::size_t i = 0; i < n; ++i) {
            double viol = std::max({-p[i], -q[i], p[i] - 1.0, q[i] - 1.0, p[i] + q[i] - 1.0, 0.0});
            traj.max_preclamp_violation = std::max(traj.max_preclamp_violation, viol);
            if (viol > kClampTol)
                throw IntegrationInstabilityError(
                    "integrate_mean_field: state left [0,1] beyond clamp tolerance at t=" +
                    std::to_string(t) + "; reduce dt");
            p[i] = std::clamp(p[i], 0.0, 1.0);
            q[i] = std::clamp(q[i], 0.0, 1.0);
            const double sum = p[i] + q[i];
            if (sum > 1.0) {
                p[i] /= sum;
                q[i] /= sum;
            }
        }

        if ((step + 1) % record_stride == 0 || step + 1 == steps) record(t);
    }

    traj.final_state = {p, q, t};
    return traj;
}

std::vector<double> equilibrium_residual(const Graph& g, const SaisParams& params,
                                         const std::vector<double>& p_star) {
    const std::size_t n = g.num_nodes();
    params.validate(n);
    if (p_star.size() != n) throw std::invalid_argument("equilibrium_residual: length mismatch");
    for (double v : p_star) {
        if (!(v >= 0.0 && v < 1.0))
            throw std::invalid_argument("equilibrium_residual: requires 0 <= p* < 1 (p*=1 is singular)");
    }

    std::vector<double> s(n), res(n);
    g.adjacency_multiply(p_star, s);
    for (std::size_t i = 0; i < n; ++i) {
        const double kb = params.kappa_bar(i);
        const double gain = (params.beta[i] / params.delta[i]) * (params.r[i] * (kb + 1.0) / (kb + params.r[i]));
        res[i] = p_star[i] / (1.0 - p_star[i]) - gain * s[i];
    }
    return res;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    const std::size_t n = traj.final_state.p.size();
    out << 't';
    for (std::size_t i = 0; i < n; ++i) out << ",p_" << i;
    for (std::size_t i = 0; i < n; ++i) out << ",q_" << i;
    out << '\n';
    const auto prev = out.precision(17);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        out << traj.times[k];
        for (std::size_t i = 0; i < n; ++i) out << ',' << traj.p_samples[k][i];
        for (std::size_t i = 0; i < n; ++i) out << ',' << traj.q_samples[k][i];
        out << '\n';
    }
    out.precision(prev);
}

}  // namespace awarenet
