#pragma once

#include <cstddef>
#include <vector>

namespace fewshot {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

    bool operator==(const Matrix&) const = default;
};

/// y = W x + b
inline void affine(const Matrix& w, const Vec& x, const Vec& b, Vec& y) {
    y.assign(static_cast<size_t>(w.rows), 0.0);
    const double* wp = w.a.data();
    for (int r = 0; r < w.rows; ++r) {
        double acc = 0.0;
        const double* row = wp + static_cast<size_t>(r) * w.cols;
        for (int c = 0; c < w.cols; ++c) acc += row[c] * x[c];
        y[r] = acc + b[r];
    }
}

/// dx = W^T dy
inline void matvec_transposed(const Matrix& w, const Vec& dy, Vec& dx) {
    dx.assign(static_cast<size_t>(w.cols), 0.0);
    const double* wp = w.a.data();
    for (int r = 0; r < w.rows; ++r) {
        const double g = dy[r];
        if (g == 0.0) continue;
        const double* row = wp + static_cast<size_t>(r) * w.cols;
        for (int c = 0; c < w.cols; ++c) dx[c] += row[c] * g;
    }
}

/// dW += dy ⊗ x
inline void add_outer(Matrix& dw, const Vec& dy, const Vec& x) {
    double* dp = dw.a.data();
    for (int r = 0; r < dw.rows; ++r) {
        const double g = dy[r];
        if (g == 0.0) continue;
        double* row = dp + static_cast<size_t>(r) * dw.cols;
        for (int c = 0; c < dw.cols; ++c) row[c] += g * x[c];
    }
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace fewshot
