#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcdrl {

/// Dense row-major matrix of doubles. Small sizes throughout (4x4 .. 25x25),
/// so no external linear algebra is pulled in here.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::span<const double> row(int r) const { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
    std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }
};

/// Checks that every row of `m` sums to 1 within `tol` and entries are >= 0.
bool is_row_stochastic(const Matrix& m, double tol = 1e-9);

/// b' = b^T * M for a row vector b.
std::vector<double> left_multiply(std::span<const double> b, const Matrix& m);

/// Formats a double with 17 significant digits (value round-trips through text).
std::string format_full(double v);

/// Joins fields with commas and a trailing newline.
std::string csv_line(const std::vector<std::string>& fields);

}  // namespace lcdrl
