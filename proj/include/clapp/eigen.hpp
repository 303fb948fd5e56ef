#pragma once

// =============================================================================
// Dense real eigenvalues
// =============================================================================
// Parlett-Reinsch balancing, Hessenberg reduction by stabilized elementary
// similarity transforms, then Francis double-shift QR iterations on the
// Hessenberg matrix (EISPACK balanc/elmhes/hqr lineage). Sized for the small
// matrices of this library; no eigenvectors.
// =============================================================================

#include "clapp/error.hpp"
#include "clapp/matrix.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>

namespace clapp {

using Complex = std::complex<double>;

namespace detail {

template <std::size_t N>
void balance(Matrix<N>& m) {
    constexpr double radix = 2.0;
    constexpr double radix2 = radix * radix;
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < N; ++i) {
            double r = 0.0, c = 0.0;
            for (std::size_t j = 0; j < N; ++j) {
                if (j == i) continue;
                c += std::abs(m.a[j][i]);
                r += std::abs(m.a[i][j]);
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix2;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix2;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                const double inv = 1.0 / f;
                for (std::size_t j = 0; j < N; ++j) m.a[i][j] *= inv;
                for (std::size_t j = 0; j < N; ++j) m.a[j][i] *= f;
            }
        }
    }
}

template <std::size_t N>
void reduce_to_hessenberg(Matrix<N>& m) {
    for (std::size_t k = 1; k + 1 < N; ++k) {
        double pivot = 0.0;
        std::size_t p = k;
        for (std::size_t j = k; j < N; ++j) {
            if (std::abs(m.a[j][k - 1]) > std::abs(pivot)) {
                pivot = m.a[j][k - 1];
                p = j;
            }
        }
        if (p != k) {
            for (std::size_t j = k - 1; j < N; ++j) std::swap(m.a[p][j], m.a[k][j]);
            for (std::size_t j = 0; j < N; ++j) std::swap(m.a[j][p], m.a[j][k]);
        }
        if (pivot == 0.0) continue;
        for (std::size_t i = k + 1; i < N; ++i) {
            double y = m.a[i][k - 1];
            if (y == 0.0) continue;
            y /= pivot;
            m.a[i][k - 1] = 0.0;
            for (std::size_t j = k; j < N; ++j) m.a[i][j] -= y * m.a[k][j];
            for (std::size_t j = 0; j < N; ++j) m.a[j][k] += y * m.a[j][i];
        }
    }
    for (std::size_t i = 2; i < N; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j) m.a[i][j] = 0.0;
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroys `h`).
template <std::size_t N>
std::array<Complex, N> hessenberg_qr(Matrix<N>& h, int max_iter_per_eigenvalue) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    auto& a = h.a;
    std::array<Complex, N> w{};
    if constexpr (N == 0) return w;

    double anorm = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = (i == 0 ? 0 : i - 1); j < N; ++j) anorm += std::abs(a[i][j]);

    int nn = static_cast<int>(N) - 1;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l > 0; --l) {
                double s = std::abs(a[l - 1][l - 1]) + std::abs(a[l][l]);
                if (s == 0.0) s = anorm;
                if (std::abs(a[l][l - 1]) <= eps * s) {
                    a[l][l - 1] = 0.0;
                    break;
                }
            }
            double x = a[nn][nn];
            if (l == nn) {
                w[nn--] = Complex(x + t, 0.0);
            } else {
                double y = a[nn - 1][nn - 1];
                double ww = a[nn][nn - 1] * a[nn - 1][nn];
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + ww;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + std::copysign(z, p);
                        w[nn - 1] = w[nn] = Complex(x + z, 0.0);
                        if (z != 0.0) w[nn] = Complex(x - ww / z, 0.0);
                    } else {
                        w[nn] = Complex(x + p, -z);
                        w[nn - 1] = std::conj(w[nn]);
                    }
                    nn -= 2;
                } else {
                    if (its == max_iter_per_eigenvalue)
                        throw NumericError("eigenvalues: QR iteration did not converge");
                    if (its == 10 || its == 20) {
                        // exceptional shift
                        t += x;
                        for (int i = 0; i <= nn; ++i) a[i][i] -= x;
                        const double s = std::abs(a[nn][nn - 1]) + std::abs(a[nn - 1][nn - 2]);
                        y = x = 0.75 * s;
                        ww = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
                    for (; m >= l; --m) {
                        z = a[m][m];
                        r = x - z;
                        double s = y - z;
                        p = (r * s - ww) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a[m][m - 1]) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a[m - 1][m - 1]) + std::abs(z) +
                                                        std::abs(a[m + 1][m + 1]));
                        if (u <= eps * v) break;
                    }
                    for (int i = m; i < nn - 1; ++i) {
                        a[i + 2][i] = 0.0;
                        if (i != m) a[i + 2][i - 1] = 0.0;
                    }
                    for (int k = m; k < nn; ++k) {
                        if (k != m) {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if (k + 1 != nn) r = a[k + 2][k - 1];
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a[k][k - 1] = -a[k][k - 1];
                        } else {
                            a[k][k - 1] = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a[k][j] + q * a[k + 1][j];
                            if (k + 1 != nn) {
                                p += r * a[k + 2][j];
                                a[k + 2][j] -= p * z;
                            }
                            a[k + 1][j] -= p * y;
                            a[k][j] -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a[i][k] + y * a[i][k + 1];
                            if (k + 1 != nn) {
                                p += z * a[i][k + 2];
                                a[i][k + 2] -= p * r;
                            }
                            a[i][k + 1] -= p * q;
                            a[i][k] -= p;
                        }
                    }
                }
            }
        } while (l + 1 < nn);
    }
    return w;
}

}  // namespace detail

/// Descending real part, ties by descending imaginary part.
template <std::size_t N>
void sort_eigenvalues(std::array<Complex, N>& w) {
    std::sort(w.begin(), w.end(), [](const Complex& x, const Complex& y) {
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });
}

template <std::size_t N>
[[nodiscard]] std::array<Complex, N> eigenvalues(const Matrix<N>& m, int max_iter_per_eigenvalue = 60) {
    if (!m.is_finite()) throw InputError("eigenvalues: matrix has non-finite entries");
    Matrix<N> h = m;
    detail::balance(h);
    detail::reduce_to_hessenberg(h);
    auto w = detail::hessenberg_qr(h, max_iter_per_eigenvalue);
    sort_eigenvalues(w);
    return w;
}

}  // namespace clapp
