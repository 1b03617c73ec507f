#include "awarenet/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace awarenet::lp {

namespace {

class Tableau {
public:
    Tableau(const Problem& p, const Options& opt) : opt_(opt), nvars_(p.nvars) {
        const std::size_t m = p.rows.size();

        // column layout: structural | slack/surplus | artificial
        std::size_t extra = 0, artificials = 0;
        for (const auto& row : p.rows) {
            if (row.sense != RowSense::eq) ++extra;
            const bool needs_artificial =
                row.sense == RowSense::eq || (row.sense == RowSense::ge ? row.b >= 0.0 : row.b < 0.0);
            if (needs_artificial) ++artificials;
        }
        ncols_ = nvars_ + extra + artificials;
        first_artificial_ = nvars_ + extra;
        width_ = ncols_ + 1;
        t_.assign(m * width_, 0.0);
        basis_.assign(m, static_cast<std::size_t>(-1));
        is_artificial_.assign(ncols_, false);

        std::size_t next_extra = nvars_;
        std::size_t next_art = first_artificial_;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& row = p.rows[i];
            if (row.a.size() != nvars_) throw std::invalid_argument("lp: row length mismatch");
            const double sign = row.b < 0.0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < nvars_; ++j) at(i, j) = sign * row.a[j];
            rhs(i) = sign * row.b;

            RowSense sense = row.sense;
            if (sign < 0.0) {
                if (sense == RowSense::le) sense = RowSense::ge;
                else if (sense == RowSense::ge) sense = RowSense::le;
            }
            if (sense == RowSense::le) {
                at(i, next_extra) = 1.0;
                basis_[i] = next_extra++;
            } else if (sense == RowSense::ge) {
                at(i, next_extra) = -1.0;
                ++next_extra;
                at(i, next_art) = 1.0;
                is_artificial_[next_art] = true;
                basis_[i] = next_art++;
            } else {
                at(i, next_art) = 1.0;
                is_artificial_[next_art] = true;
                basis_[i] = next_art++;
            }
        }
        rows_ = m;
        max_iter_ = opt.max_iterations ? opt.max_iterations : 400 * (rows_ + nvars_ + 16);
    }

    bool has_artificials() const { return first_artificial_ < ncols_; }

    // reduced-cost row for the given column costs (artificials priced out)
    void load_objective(const std::vector<double>& cost) {
        z_.assign(width_, 0.0);
        for (std::size_t j = 0; j < cost.size(); ++j) z_[j] = cost[j];
        for (std::size_t i = 0; i < rows_; ++i) {
            const double cb = basis_[i] < cost.size() ? cost[basis_[i]] : 0.0;
            if (cb != 0.0)
                for (std::size_t j = 0; j < width_; ++j) z_[j] -= cb * at(i, j);
        }
    }

    Status run(bool phase_one, std::size_t& iterations) {
        std::size_t degenerate_streak = 0;
        bool bland = false;
        while (true) {
            if (iterations >= max_iter_) return Status::iteration_limit;

            const std::size_t entering = pick_entering(phase_one, bland);
            if (entering == ncols_) return Status::optimal;

            const std::size_t leaving = pick_leaving(entering);
            if (leaving == rows_) return Status::unbounded;

            const double before = z_[ncols_];
            pivot(leaving, entering);
            ++iterations;

            if (std::fabs(z_[ncols_] - before) <= 1e-13 * (1.0 + std::fabs(before))) {
                if (++degenerate_streak > 2 * (rows_ + nvars_)) bland = true;
            } else {
                degenerate_streak = 0;
            }
        }
    }

    double objective_value() const { return -z_[ncols_]; }

    // Degenerate basic artificials are pivoted out on any nonzero element
    // (their rhs is zero, so feasibility is preserved); rows that cannot be
    // pivoted are redundant and get neutralized.
    void expel_artificials() {
        for (std::size_t i = 0; i < rows_; ++i) {
            if (basis_[i] == static_cast<std::size_t>(-1) || !is_artificial_[basis_[i]]) continue;
            std::size_t col = ncols_;
            for (std::size_t j = 0; j < first_artificial_; ++j) {
                if (std::fabs(at(i, j)) > opt_.pivot_tol) {
                    col = j;
                    break;
                }
            }
            if (col != ncols_) {
                pivot(i, col);
            } else {
                for (std::size_t j = 0; j < width_; ++j) at(i, j) = 0.0;
                basis_[i] = static_cast<std::size_t>(-1);
            }
        }
    }

    std::vector<double> extract() const {
        std::vector<double> x(nvars_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            if (basis_[i] < nvars_) x[basis_[i]] = rhs_const(i);
        return x;
    }

    std::size_t ncols() const { return ncols_; }
    std::size_t first_artificial() const { return first_artificial_; }

private:
    double& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
    double at(std::size_t i, std::size_t j) const { return t_[i * width_ + j]; }
    double& rhs(std::size_t i) { return t_[i * width_ + ncols_]; }
    double rhs_const(std::size_t i) const { return t_[i * width_ + ncols_]; }

    std::size_t pick_entering(bool phase_one, bool bland) const {
        const std::size_t limit = phase_one ? ncols_ : first_artificial_;
        std::size_t best = ncols_;
        double best_val = -opt_.objective_tol;
        for (std::size_t j = 0; j < limit; ++j) {
            if (!phase_one && is_artificial_[j]) continue;
            if (z_[j] < best_val) {
                best = j;
                best_val = z_[j];
                if (bland) break;  // first eligible index
            }
        }
        return best;
    }

    std::size_t pick_leaving(std::size_t entering) const {
        std::size_t best = rows_;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < rows_; ++i) {
            const double a = at(i, entering);
            if (a <= opt_.pivot_tol) continue;
            const double ratio = rhs_const(i) / a;
            if (ratio < best_ratio - 1e-12 ||
                (ratio < best_ratio + 1e-12 && best != rows_ && basis_[i] < basis_[best])) {
                best = i;
                best_ratio = ratio;
            }
        }
        return best;
    }

    void pivot(std::size_t row, std::size_t col) {
        const double piv = at(row, col);
        for (std::size_t j = 0; j < width_; ++j) at(row, j) /= piv;
        at(row, col) = 1.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            if (i == row) continue;
            const double factor = at(i, col);
            if (factor == 0.0) continue;
            for (std::size_t j = 0; j < width_; ++j) at(i, j) -= factor * at(row, j);
            at(i, col) = 0.0;
        }
        const double zf = z_[col];
        if (zf != 0.0) {
            for (std::size_t j = 0; j < width_; ++j) z_[j] -= zf * at(row, j);
            z_[col] = 0.0;
        }
        basis_[row] = col;
    }

    Options opt_;
    std::size_t nvars_ = 0, rows_ = 0, ncols_ = 0, width_ = 0, first_artificial_ = 0;
    std::size_t max_iter_ = 0;
    std::vector<double> t_;
    std::vector<double> z_;
    std::vector<std::size_t> basis_;
    std::vector<bool> is_artificial_;
};

}  // namespace

Solution solve(const Problem& problem, const Options& options) {
    if (problem.objective.size() != problem.nvars)
        throw std::invalid_argument("lp: objective length mismatch");

    Tableau tab(problem, options);
    Solution sol;

    if (tab.has_artificials()) {
        std::vector<double> phase1_cost(tab.ncols(), 0.0);
        for (std::size_t j = tab.first_artificial(); j < tab.ncols(); ++j) phase1_cost[j] = 1.0;
        tab.load_objective(phase1_cost);
        const Status s1 = tab.run(true, sol.iterations);
        if (s1 == Status::iteration_limit) {
            sol.status = s1;
            return sol;
        }
        if (s1 == Status::unbounded) throw std::logic_error("lp: phase 1 cannot be unbounded");
        double scale = 1.0;
        for (const auto& row : problem.rows) scale = std::max(scale, std::fabs(row.b));
        if (tab.objective_value() > options.feasibility_tol * scale) {
            sol.status = Status::infeasible;
            return sol;
        }
        tab.expel_artificials();
    }

    std::vector<double> cost(tab.ncols(), 0.0);
    for (std::size_t j = 0; j < problem.nvars; ++j) cost[j] = problem.objective[j];
    tab.load_objective(cost);
    sol.status = tab.run(false, sol.iterations);
    if (sol.status == Status::optimal) {
        sol.x = tab.extract();
        sol.value = 0.0;
        for (std::size_t j = 0; j < problem.nvars; ++j) sol.value += problem.objective[j] * sol.x[j];
    }
    return sol;
}

}  // namespace awarenet::lp
