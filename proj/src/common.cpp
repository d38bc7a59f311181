#include "lcdrl/common.hpp"

#include <cmath>
#include <cstdio>

namespace lcdrl {

bool is_row_stochastic(const Matrix& m, double tol) {
    for (int r = 0; r < m.rows; ++r) {
        double sum = 0.0;
        for (int c = 0; c < m.cols; ++c) {
            double v = m.at(r, c);
            if (v < 0.0 || !std::isfinite(v)) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

std::vector<double> left_multiply(std::span<const double> b, const Matrix& m) {
    if (static_cast<int>(b.size()) != m.rows) throw std::invalid_argument("left_multiply: size mismatch");
    std::vector<double> out(static_cast<std::size_t>(m.cols), 0.0);
    for (int r = 0; r < m.rows; ++r) {
        double br = b[r];
        if (br == 0.0) continue;
        const double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
        for (int c = 0; c < m.cols; ++c) out[c] += br * row[c];
    }
    return out;
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_line(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += fields[i];
    }
    line += '\n';
    return line;
}

}  // namespace lcdrl
