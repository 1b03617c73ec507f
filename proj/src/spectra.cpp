#include "awarenet/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace awarenet {

namespace {

// Householder reduction of a symmetric matrix to tridiagonal form.
// On return `a` holds the accumulated orthogonal transform, `d` the diagonal
// and `e` the subdiagonal (e[0] unused).
void householder_tridiagonalize(Matrix& a, std::vector<double>& d, std::vector<double>& e) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.rows());
    d.assign(n, 0.0);
    e.assign(n, 0.0);

    for (std::ptrdiff_t i = n - 1; i >= 1; --i) {
        const std::ptrdiff_t l = i - 1;
        double h = 0.0;
        double scale = 0.0;
        if (l > 0) {
            for (std::ptrdiff_t k = 0; k <= l; ++k) scale += std::fabs(a(i, k));
            if (scale == 0.0) {
                e[i] = a(i, l);
            } else {
                for (std::ptrdiff_t k = 0; k <= l; ++k) {
                    a(i, k) /= scale;
                    h += a(i, k) * a(i, k);
                }
                double f = a(i, l);
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a(i, l) = f - g;
                f = 0.0;
                for (std::ptrdiff_t j = 0; j <= l; ++j) {
                    a(j, i) = a(i, j) / h;
                    g = 0.0;
                    for (std::ptrdiff_t k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
                    for (std::ptrdiff_t k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
                    e[j] = g / h;
                    f += e[j] * a(i, j);
                }
                const double hh = f / (h + h);
                for (std::ptrdiff_t j = 0; j <= l; ++j) {
                    f = a(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (std::ptrdiff_t k = 0; k <= j; ++k)
                        a(j, k) -= f * e[k] + g * a(i, k);
                }
            }
        } else {
            e[i] = a(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t l = i - 1;
        if (d[i] != 0.0) {
            for (std::ptrdiff_t j = 0; j <= l; ++j) {
                double g = 0.0;
                for (std::ptrdiff_t k = 0; k <= l; ++k) g += a(i, k) * a(k, j);
                for (std::ptrdiff_t k = 0; k <= l; ++k) a(k, j) -= g * a(k, i);
            }
        }
        d[i] = a(i, i);
        a(i, i) = 1.0;
        for (std::ptrdiff_t j = 0; j <= l; ++j) a(j, i) = a(i, j) = 0.0;
    }
}

// Implicit-shift QL on a tridiagonal (d, e) with eigenvector accumulation
// in z. Returns the total sweep count.
std::size_t ql_implicit_shift(std::vector<double>& d, std::vector<double>& e, Matrix& z) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(d.size());
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr int max_sweeps = 50;
    std::size_t total_iterations = 0;

    for (std::ptrdiff_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    for (std::ptrdiff_t l = 0; l < n; ++l) {
        int iter = 0;
        std::ptrdiff_t m = l;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == max_sweeps)
                    throw std::runtime_error("dense_symmetric_eigen: QL sweep cap exceeded");
                ++total_iterations;
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                std::ptrdiff_t i = m - 1;
                for (; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (std::ptrdiff_t k = 0; k < n; ++k) {
                        f = z(k, i + 1);
                        z(k, i + 1) = s * z(k, i) + c * f;
                        z(k, i) = c * z(k, i) - s * f;
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    return total_iterations;
}

double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

// Sign convention: component sum nonnegative. Gives the entrywise-positive
// Perron vector for connected adjacency matrices.
void fix_sign(std::vector<double>& v) {
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    if (s < 0.0)
        for (double& x : v) x = -x;
}

}  // namespace

SymmetricSpectrum dense_symmetric_eigen(const Matrix& m, std::size_t* iterations_out) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("dense_symmetric_eigen: matrix not square");
    const std::size_t n = m.rows();
    SymmetricSpectrum out;
    if (n == 0) {
        if (iterations_out) *iterations_out = 0;
        return out;
    }

    Matrix z = m;
    std::vector<double> d, e;
    householder_tridiagonalize(z, d, e);
    const std::size_t iters = ql_implicit_shift(d, e, z);
    if (iterations_out) *iterations_out = iters;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = d[order[k]];
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = z(i, order[k]);
    }
    return out;
}

EigenReport largest_eigenvalue(const Matrix& m, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("largest_eigenvalue: tol must be positive");
    if (m.rows() != m.cols()) throw std::invalid_argument("largest_eigenvalue: matrix not square");
    const std::size_t n = m.rows();
    if (n == 0) throw std::invalid_argument("largest_eigenvalue: empty matrix");

    if (n > kDenseEigenMaxN) {
        double bound = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += std::fabs(m(i, j));
            bound = std::max(bound, row);
        }
        SymmetricOperator op{n, bound,
                             [&m](std::span<const double> x, std::span<double> y) { m.multiply(x, y); }};
        return largest_eigenvalue(op, tol);
    }

    std::size_t iters = 0;
    SymmetricSpectrum spec = dense_symmetric_eigen(m, &iters);

    EigenReport rep;
    rep.lambda1 = spec.values.back();
    rep.eigvec.resize(n);
    const std::size_t top = n - 1;
    for (std::size_t i = 0; i < n; ++i) rep.eigvec[i] = spec.vectors(i, top);
    const double vn = norm2(rep.eigvec);
    for (double& x : rep.eigvec) x /= vn;
    fix_sign(rep.eigvec);
    rep.iterations = iters;

    std::vector<double> mv(n);
    m.multiply(rep.eigvec, mv);
    for (std::size_t i = 0; i < n; ++i) mv[i] -= rep.lambda1 * rep.eigvec[i];
    rep.residual = norm2(mv);
    if (rep.residual > tol)
        throw EigenConvergenceError("largest_eigenvalue: dense residual exceeds tolerance", rep);
    return rep;
}

EigenReport largest_eigenvalue(const SymmetricOperator& op, double tol, std::size_t max_iterations) {
    if (tol <= 0.0) throw std::invalid_argument("largest_eigenvalue: tol must be positive");
    const std::size_t n = op.n;
    if (n == 0) throw std::invalid_argument("largest_eigenvalue: empty operator");

    // Lanczos with full reorthogonalization and plain restarts; iterations
    // counts operator applications. The start vector is deterministic,
    // positive (Perron overlap) and almost surely not orthogonal to the top
    // eigenspace.
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::vector<double> q(n);
    for (double& x : q) x = 0.5 + static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double nq = norm2(q);
    for (double& x : q) x /= nq;

    const std::size_t basis_cap = std::min<std::size_t>(n, 300);
    const double breakdown_tol = 1e-14 * std::max(1.0, op.shift_bound);

    EigenReport best;
    best.residual = std::numeric_limits<double>::infinity();
    std::size_t matvecs = 0;

    std::vector<std::vector<double>> basis;
    std::vector<double> alphas, betas, w(n), ritz(n), mx(n);

    const auto ritz_top = [&](std::vector<double>& x_out) -> double {
        const std::size_t k = alphas.size();
        Matrix t(k, k);
        for (std::size_t i = 0; i < k; ++i) {
            t(i, i) = alphas[i];
            if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = betas[i];
        }
        const SymmetricSpectrum spec = dense_symmetric_eigen(t);
        const std::size_t top = k - 1;
        std::fill(x_out.begin(), x_out.end(), 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            const double s = spec.vectors(j, top);
            for (std::size_t i = 0; i < n; ++i) x_out[i] += s * basis[j][i];
        }
        const double vn = norm2(x_out);
        for (double& x : x_out) x /= vn;
        return spec.values.back();
    };

    // true residual check; spends one operator application
    const auto check_pair = [&](const std::vector<double>& x, double theta) -> double {
        op.apply(x, mx);
        ++matvecs;
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = mx[i] - theta * x[i];
            res += d * d;
        }
        res = std::sqrt(res);
        if (res < best.residual) {
            best.lambda1 = theta;
            best.eigvec = x;
            best.iterations = matvecs;
            best.residual = res;
        }
        return res;
    };

    while (matvecs < max_iterations) {
        basis.clear();
        alphas.clear();
        betas.clear();
        basis.push_back(q);

        bool exhausted = false;
        while (basis.size() <= basis_cap && matvecs < max_iterations) {
            const std::size_t k = alphas.size();
            op.apply(basis[k], w);
            ++matvecs;
            double alpha = 0.0;
            for (std::size_t i = 0; i < n; ++i) alpha += w[i] * basis[k][i];
            alphas.push_back(alpha);
            for (std::size_t i = 0; i < n; ++i) w[i] -= alpha * basis[k][i];
            if (k > 0)
                for (std::size_t i = 0; i < n; ++i) w[i] -= betas[k - 1] * basis[k - 1][i];
            for (const auto& b : basis) {
                double proj = 0.0;
                for (std::size_t i = 0; i < n; ++i) proj += w[i] * b[i];
                for (std::size_t i = 0; i < n; ++i) w[i] -= proj * b[i];
            }
            const double beta = norm2(w);

            const bool gated = (alphas.size() % 8 == 0) || beta <= breakdown_tol ||
                               basis.size() == basis_cap || matvecs >= max_iterations;
            if (gated) {
                const double theta = ritz_top(ritz);
                const double res = check_pair(ritz, theta);
                if (res <= tol) {
                    fix_sign(best.eigvec);
                    return best;
                }
            }
            if (beta <= breakdown_tol) {
                exhausted = true;
                break;
            }
            betas.push_back(beta);
            basis.push_back(w);
            for (double& x : basis.back()) x /= beta;
        }

        // restart from the current best Ritz direction; a tiny perturbation
        // escapes an exactly invariant subspace
        q = best.eigvec.empty() ? basis.front() : best.eigvec;
        if (exhausted)
            for (double& x : q) x += 1e-10 * (0.5 + static_cast<double>(rng() >> 11) * 0x1.0p-53);
        nq = norm2(q);
        for (double& x : q) x /= nq;
    }
    fix_sign(best.eigvec);
    throw EigenConvergenceError("largest_eigenvalue: Lanczos iteration cap exceeded", best);
}

}  // namespace awarenet
