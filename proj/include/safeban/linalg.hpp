#pragma once

// Small dense linear algebra for fixed, low dimension (d <= kMaxDim).
// Storage is inline so vectors and matrices are cheap value types.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include "safeban/errors.hpp"

namespace safeban {

inline constexpr std::size_t kMaxDim = 8;

class Vec {
public:
    Vec() = default;
    explicit Vec(std::size_t d) : d_(d) {
        if (d > kMaxDim) throw std::invalid_argument("Vec: dimension " + std::to_string(d) + " exceeds kMaxDim");
    }
    Vec(std::initializer_list<double> xs) : Vec(xs.size()) { std::copy(xs.begin(), xs.end(), v_.begin()); }

    static Vec zeros(std::size_t d) { return Vec(d); }
    static Vec unit(std::size_t d, std::size_t j) {
        Vec e(d);
        e[j] = 1.0;
        return e;
    }

    std::size_t size() const noexcept { return d_; }
    double& operator[](std::size_t i) noexcept { return v_[i]; }
    double operator[](std::size_t i) const noexcept { return v_[i]; }
    double* begin() noexcept { return v_.data(); }
    double* end() noexcept { return v_.data() + d_; }
    const double* begin() const noexcept { return v_.data(); }
    const double* end() const noexcept { return v_.data() + d_; }

    Vec& operator+=(const Vec& o) noexcept {
        for (std::size_t i = 0; i < d_; ++i) v_[i] += o.v_[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) noexcept {
        for (std::size_t i = 0; i < d_; ++i) v_[i] -= o.v_[i];
        return *this;
    }
    Vec& operator*=(double s) noexcept {
        for (std::size_t i = 0; i < d_; ++i) v_[i] *= s;
        return *this;
    }
    friend Vec operator+(Vec a, const Vec& b) noexcept { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) noexcept { return a -= b; }
    friend Vec operator-(Vec a) noexcept { return a *= -1.0; }
    friend Vec operator*(Vec a, double s) noexcept { return a *= s; }
    friend Vec operator*(double s, Vec a) noexcept { return a *= s; }

    friend bool operator==(const Vec& a, const Vec& b) noexcept {
        return a.d_ == b.d_ && std::equal(a.begin(), a.end(), b.begin());
    }

private:
    std::array<double, kMaxDim> v_{};
    std::size_t d_ = 0;
};

// Square d x d matrix, row-major.
class Mat {
public:
    Mat() = default;
    explicit Mat(std::size_t d) : d_(d) {
        if (d > kMaxDim) throw std::invalid_argument("Mat: dimension " + std::to_string(d) + " exceeds kMaxDim");
    }
    Mat(std::initializer_list<std::initializer_list<double>> rows) : Mat(rows.size()) {
        std::size_t i = 0;
        for (const auto& r : rows) {
            if (r.size() != d_) throw std::invalid_argument("Mat: rows must form a square matrix");
            std::size_t j = 0;
            for (double x : r) (*this)(i, j++) = x;
            ++i;
        }
    }

    static Mat identity(std::size_t d, double scale = 1.0) {
        Mat m(d);
        for (std::size_t i = 0; i < d; ++i) m(i, i) = scale;
        return m;
    }
    static Mat diagonal(const Vec& diag) {
        Mat m(diag.size());
        for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
        return m;
    }

    std::size_t size() const noexcept { return d_; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * kMaxDim + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * kMaxDim + j]; }

    Vec row(std::size_t i) const {
        Vec r(d_);
        for (std::size_t j = 0; j < d_; ++j) r[j] = (*this)(i, j);
        return r;
    }
    Vec col(std::size_t j) const {
        Vec c(d_);
        for (std::size_t i = 0; i < d_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    Mat transpose() const {
        Mat t(d_);
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Mat& operator+=(const Mat& o) noexcept {
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j) (*this)(i, j) += o(i, j);
        return *this;
    }
    Mat& operator-=(const Mat& o) noexcept {
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j) (*this)(i, j) -= o(i, j);
        return *this;
    }
    Mat& operator*=(double s) noexcept {
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j) (*this)(i, j) *= s;
        return *this;
    }
    friend Mat operator+(Mat a, const Mat& b) noexcept { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) noexcept { return a -= b; }
    friend Mat operator*(Mat a, double s) noexcept { return a *= s; }
    friend Mat operator*(double s, Mat a) noexcept { return a *= s; }

    friend Mat operator*(const Mat& a, const Mat& b) noexcept {
        Mat c(a.d_);
        for (std::size_t i = 0; i < a.d_; ++i)
            for (std::size_t k = 0; k < a.d_; ++k) {
                const double aik = a(i, k);
                for (std::size_t j = 0; j < a.d_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }
    friend Vec operator*(const Mat& a, const Vec& x) noexcept {
        Vec y(a.d_);
        for (std::size_t i = 0; i < a.d_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < a.d_; ++j) s += a(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    double max_abs() const noexcept {
        double m = 0.0;
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j) m = std::max(m, std::abs((*this)(i, j)));
        return m;
    }
    double frobenius() const noexcept {
        double s = 0.0;
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j) s += (*this)(i, j) * (*this)(i, j);
        return std::sqrt(s);
    }
    bool is_symmetric(double tol = 1e-12) const noexcept {
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = i + 1; j < d_; ++j)
                if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
        return true;
    }
    void symmetrize() noexcept {
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = i + 1; j < d_; ++j) {
                const double m = 0.5 * ((*this)(i, j) + (*this)(j, i));
                (*this)(i, j) = m;
                (*this)(j, i) = m;
            }
    }

private:
    std::array<double, kMaxDim * kMaxDim> a_{};
    std::size_t d_ = 0;
};

inline double dot(const Vec& a, const Vec& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
inline double norm2(const Vec& v) noexcept { return std::sqrt(dot(v, v)); }
inline double norm1(const Vec& v) noexcept {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}
inline double norm_inf(const Vec& v) noexcept {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

inline Mat outer(const Vec& a, const Vec& b) {
    Mat m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) m(i, j) = a[i] * b[j];
    return m;
}

// vᵀ M v
inline double quad_form(const Vec& v, const Mat& m) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) r += m(i, j) * v[j];
        s += v[i] * r;
    }
    return s;
}

/// ‖v‖_M = √(vᵀMv). Rounding-level negative forms are clamped to zero;
/// anything clearly negative means M is not PSD and is reported.
inline double weighted_norm(const Vec& v, const Mat& m) {
    const double q = quad_form(v, m);
    if (q < 0.0) {
        const double scale = m.max_abs() * dot(v, v);
        if (q < -1e-12 * std::max(1.0, scale))
            throw NumericDomainError("weighted_norm: matrix is not positive definite");
        return 0.0;
    }
    return std::sqrt(q);
}

struct SymmetricEigen {
    Vec values;    // ascending
    Mat vectors;   // column k is the eigenvector of values[k]
};

inline constexpr double kJacobiTolerance = 1e-12;
inline constexpr int kJacobiMaxSweeps = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Stops when the off-diagonal Frobenius norm falls below 1e-12 (relative
/// to ‖M‖_F once that exceeds one) or after 100 sweeps.
inline SymmetricEigen jacobi_eigen(const Mat& m_in) {
    const std::size_t d = m_in.size();
    Mat a = m_in;
    a.symmetrize();
    Mat v = Mat::identity(d);
    const double stop = kJacobiTolerance * std::max(1.0, a.frobenius());

    for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off += 2.0 * a(p, q) * a(p, q);
        if (std::sqrt(off) < stop) break;

        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    // sort ascending
    std::array<std::size_t, kMaxDim> order{};
    for (std::size_t i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.begin() + d, [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
    SymmetricEigen out{Vec(d), Mat(d)};
    for (std::size_t k = 0; k < d; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < d; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

inline double min_eigenvalue(const Mat& m) { return jacobi_eigen(m).values[0]; }
inline double max_eigenvalue(const Mat& m) { return jacobi_eigen(m).values[m.size() - 1]; }

/// Largest singular value, from the eigenvalues of MᵀM.
inline double spectral_norm(const Mat& m) {
    return std::sqrt(std::max(0.0, max_eigenvalue(m.transpose() * m)));
}

// V f(Λ) Vᵀ for a symmetric PD matrix; f receives each (positive) eigenvalue.
template <typename F>
Mat spectral_apply(const Mat& m, F&& f, const char* what) {
    const auto eig = jacobi_eigen(m);
    const std::size_t d = m.size();
    Mat out(d);
    for (std::size_t k = 0; k < d; ++k) {
        const double lam = eig.values[k];
        if (!(lam > 0.0)) throw NumericDomainError(std::string(what) + ": matrix is not positive definite");
        const double fk = f(lam);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) out(i, j) += fk * eig.vectors(i, k) * eig.vectors(j, k);
    }
    out.symmetrize();
    return out;
}

/// M^{-1/2} of a symmetric PD matrix.
inline Mat inv_sqrt(const Mat& m) {
    return spectral_apply(m, [](double l) { return 1.0 / std::sqrt(l); }, "inv_sqrt");
}

/// M^{1/2} of a symmetric PD matrix.
inline Mat sqrt_spd(const Mat& m) {
    return spectral_apply(m, [](double l) { return std::sqrt(l); }, "sqrt_spd");
}

/// Inverse of a symmetric PD matrix via Cholesky.
inline Mat inverse_spd(const Mat& m) {
    const std::size_t d = m.size();
    Mat l(d);
    for (std::size_t j = 0; j < d; ++j) {
        double s = m(j, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
        if (!(s > 0.0)) throw NumericDomainError("inverse_spd: matrix is not positive definite");
        l(j, j) = std::sqrt(s);
        for (std::size_t i = j + 1; i < d; ++i) {
            double t = m(i, j);
            for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
            l(i, j) = t / l(j, j);
        }
    }
    // L^{-1} by forward substitution, then M^{-1} = L^{-T} L^{-1}
    Mat li(d);
    for (std::size_t j = 0; j < d; ++j) {
        li(j, j) = 1.0 / l(j, j);
        for (std::size_t i = j + 1; i < d; ++i) {
            double s = 0.0;
            for (std::size_t k = j; k < i; ++k) s -= l(i, k) * li(k, j);
            li(i, j) = s / l(i, i);
        }
    }
    Mat inv = li.transpose() * li;
    inv.symmetrize();
    return inv;
}

/// General inverse by Gauss-Jordan elimination with partial pivoting.
inline Mat inverse(const Mat& m) {
    const std::size_t d = m.size();
    Mat a = m;
    Mat inv = Mat::identity(d);
    const double scale = std::max(1.0, m.max_abs());
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < d; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < 1e-14 * scale) throw NumericDomainError("inverse: matrix is singular");
        if (piv != col)
            for (std::size_t j = 0; j < d; ++j) {
                std::swap(a(piv, j), a(col, j));
                std::swap(inv(piv, j), inv(col, j));
            }
        const double p = a(col, col);
        for (std::size_t j = 0; j < d; ++j) {
            a(col, j) /= p;
            inv(col, j) /= p;
        }
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j) {
                a(r, j) -= f * a(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

/// Ridge-regression sufficient statistics: A = λI + Σ x xᵀ, b = Σ ℓ x,
/// with A⁻¹ maintained by Sherman-Morrison and μ̂ = A⁻¹ b.
class GramState {
public:
    // Maintained inverse is recomputed from scratch this often to bound drift.
    static constexpr std::size_t kRefreshInterval = 10000;

    GramState() = default;
    GramState(std::size_t d, double lambda)
        : lambda_(lambda), a_(Mat::identity(d, lambda)), a_inv_(Mat::identity(d, 1.0 / lambda)), b_(d), mu_hat_(d) {
        if (!(lambda > 0.0)) throw std::invalid_argument("GramState: lambda must be positive");
    }

    std::size_t dim() const noexcept { return a_.size(); }
    double lambda() const noexcept { return lambda_; }
    const Mat& gram() const noexcept { return a_; }
    const Mat& gram_inv() const noexcept { return a_inv_; }
    const Vec& b() const noexcept { return b_; }
    const Vec& mu_hat() const noexcept { return mu_hat_; }
    std::size_t n_updates() const noexcept { return n_updates_; }

    void update(const Vec& x, double loss) {
        const std::size_t d = dim();
        for (std::size_t i = 0; i < d; ++i) {
            b_[i] += loss * x[i];
            for (std::size_t j = 0; j < d; ++j) a_(i, j) += x[i] * x[j];
        }
        ++n_updates_;
        if (n_updates_ % kRefreshInterval == 0) {
            a_inv_ = inverse_spd(a_);
        } else {
            const Vec ax = a_inv_ * x;
            const double denom = 1.0 + dot(x, ax);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) a_inv_(i, j) -= ax[i] * ax[j] / denom;
            a_inv_.symmetrize();
        }
        mu_hat_ = a_inv_ * b_;
    }

private:
    double lambda_ = 1.0;
    Mat a_;
    Mat a_inv_;
    Vec b_;
    Vec mu_hat_;
    std::size_t n_updates_ = 0;
};

inline GramState rank1_update(GramState state, const Vec& x, double loss) {
    state.update(x, loss);
    return state;
}

}  // namespace safeban
