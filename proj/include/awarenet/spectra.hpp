#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "awarenet/matrix.hpp"

namespace awarenet {

/// Result of a largest-eigenvalue computation.
/// Invariants: ||M v - lambda1 v||_2 <= residual and ||v||_2 = 1.
struct EigenReport {
    double lambda1 = 0.0;
    std::vector<double> eigvec;
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// Thrown when an iterative eigensolve hits its iteration cap. Carries the
/// best iterate so callers can inspect how far it got.
class EigenConvergenceError : public std::runtime_error {
public:
    EigenConvergenceError(std::string msg, EigenReport best)
        : std::runtime_error(std::move(msg)), best_iterate(std::move(best)) {}
    EigenReport best_iterate;
};

/// Full spectrum of a symmetric matrix, eigenvalues ascending, eigenvectors
/// as columns of `vectors` (vectors(i,k) is component i of eigenvector k).
struct SymmetricSpectrum {
    std::vector<double> values;
    Matrix vectors;
};

/// Dense symmetric eigendecomposition: Householder tridiagonalization
/// followed by implicit-shift QL with eigenvector accumulation.
/// `iterations_out`, when non-null, receives the total QL sweep count.
SymmetricSpectrum dense_symmetric_eigen(const Matrix& m, std::size_t* iterations_out = nullptr);

/// Matrix-free symmetric operator: apply(x, y) computes y = M x.
/// `shift_bound` must satisfy shift_bound >= |lambda| for every eigenvalue
/// (a Gershgorin row-sum bound works).
struct SymmetricOperator {
    std::size_t n = 0;
    double shift_bound = 0.0;
    std::function<void(std::span<const double>, std::span<double>)> apply;
};

/// Dense solves are exact at desk scale; above this the shifted power
/// iteration takes over.
inline constexpr std::size_t kDenseEigenMaxN = 512;

/// Algebraically largest eigenvalue of a symmetric matrix. Dense path for
/// n <= kDenseEigenMaxN, shifted power iteration beyond. The eigenvector sign
/// is fixed so its component sum is nonnegative (entrywise positive for
/// adjacency matrices of connected graphs).
EigenReport largest_eigenvalue(const Matrix& m, double tol);

/// Shifted power iteration on a matrix-free operator. Iterates on
/// M + shift_bound*I so the algebraically largest eigenvalue dominates.
EigenReport largest_eigenvalue(const SymmetricOperator& op, double tol,
                               std::size_t max_iterations = 100000);

}  // namespace awarenet
