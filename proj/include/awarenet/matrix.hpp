#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace awarenet {

/// Small dense row-major matrix. Everything in this toolkit is desk scale,
/// so no attempt is made at blocking or expression templates.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {a_.data() + i * cols_, cols_};
    }

    /// y = M x
    void multiply(std::span<const double> x, std::span<double> y) const {
        for (std::size_t i = 0; i < rows_; ++i) {
            double acc = 0.0;
            const double* r = a_.data() + i * cols_;
            for (std::size_t j = 0; j < cols_; ++j) acc += r[j] * x[j];
            y[i] = acc;
        }
    }

    const std::vector<double>& data() const { return a_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

}  // namespace awarenet
