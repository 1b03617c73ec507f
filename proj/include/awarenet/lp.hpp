#pragma once

#include <cstddef>
#include <vector>

namespace awarenet::lp {

enum class RowSense { le, ge, eq };

/// min c.x subject to rows and x >= 0.
struct Problem {
    std::size_t nvars = 0;
    std::vector<double> objective;

    struct Row {
        std::vector<double> a;
        double b = 0.0;
        RowSense sense = RowSense::le;
    };
    std::vector<Row> rows;

    void add_row(std::vector<double> a, RowSense sense, double b) {
        rows.push_back({std::move(a), b, sense});
    }
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Solution {
    Status status = Status::iteration_limit;
    std::vector<double> x;
    double value = 0.0;
    std::size_t iterations = 0;
};

struct Options {
    double objective_tol = 1e-9;   // entering-candidate threshold
    double pivot_tol = 1e-11;      // smallest usable pivot element
    double feasibility_tol = 1e-8; // phase-1 residual accepted as feasible
    std::size_t max_iterations = 0;  // 0 = automatic from problem size
};

/// Dense two-phase primal simplex. Dantzig pricing with a Bland fallback
/// after a degenerate stall, so it terminates on cycling instances.
Solution solve(const Problem& problem, const Options& options = {});

}  // namespace awarenet::lp
