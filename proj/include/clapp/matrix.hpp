#pragma once

// Fixed-size dense real matrix, row-major.

#include <array>
#include <cmath>
#include <cstddef>

namespace clapp {

template <std::size_t N>
struct Matrix {
    std::array<std::array<double, N>, N> a{};

    static constexpr std::size_t rows = N;

    [[nodiscard]] constexpr double& operator()(std::size_t i, std::size_t j) { return a[i][j]; }
    [[nodiscard]] constexpr double operator()(std::size_t i, std::size_t j) const { return a[i][j]; }

    [[nodiscard]] static constexpr Matrix identity() {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i) m.a[i][i] = 1.0;
        return m;
    }

    [[nodiscard]] constexpr double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < N; ++i) t += a[i][i];
        return t;
    }

    [[nodiscard]] bool is_finite() const {
        for (const auto& row : a)
            for (double v : row)
                if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

using Matrix4 = Matrix<4>;

template <std::size_t N>
[[nodiscard]] constexpr std::array<double, N> operator*(const Matrix<N>& m, const std::array<double, N>& x) {
    std::array<double, N> y{};
    for (std::size_t i = 0; i < N; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < N; ++j) s += m.a[i][j] * x[j];
        y[i] = s;
    }
    return y;
}

/// Determinant by LU with partial pivoting.
template <std::size_t N>
[[nodiscard]] double determinant(Matrix<N> m) {
    double det = 1.0;
    for (std::size_t k = 0; k < N; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < N; ++i)
            if (std::abs(m.a[i][k]) > std::abs(m.a[p][k])) p = i;
        if (m.a[p][k] == 0.0) return 0.0;
        if (p != k) {
            std::swap(m.a[p], m.a[k]);
            det = -det;
        }
        det *= m.a[k][k];
        for (std::size_t i = k + 1; i < N; ++i) {
            const double f = m.a[i][k] / m.a[k][k];
            for (std::size_t j = k; j < N; ++j) m.a[i][j] -= f * m.a[k][j];
        }
    }
    return det;
}

}  // namespace clapp
