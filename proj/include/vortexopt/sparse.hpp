#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vortexopt {

struct CsrMatrix {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;

    void multiply(const std::vector<double>& x, std::vector<double>& y) const {
        y.assign(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[static_cast<std::size_t>(col[k])];
            y[static_cast<std::size_t>(i)] = s;
        }
    }

    double quadratic_form(const std::vector<double>& x) const {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) row += val[k] * x[static_cast<std::size_t>(col[k])];
            s += x[static_cast<std::size_t>(i)] * row;
        }
        return s;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
                if (col[k] == i) d[static_cast<std::size_t>(i)] = val[k];
            }
        }
        return d;
    }
};

// Accumulates duplicate entries, then compresses.
class CsrBuilder {
public:
    explicit CsrBuilder(int n) : n_(n), heads_(static_cast<std::size_t>(n), -1) {}

    void add(int i, int j, double v) {
        for (int k = heads_[static_cast<std::size_t>(i)]; k >= 0; k = next_[static_cast<std::size_t>(k)]) {
            if (cols_[static_cast<std::size_t>(k)] == j) {
                vals_[static_cast<std::size_t>(k)] += v;
                return;
            }
        }
        cols_.push_back(j);
        vals_.push_back(v);
        next_.push_back(heads_[static_cast<std::size_t>(i)]);
        heads_[static_cast<std::size_t>(i)] = static_cast<int>(cols_.size()) - 1;
    }

    CsrMatrix build() const {
        CsrMatrix m;
        m.n = n_;
        m.row_ptr.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (int i = 0; i < n_; ++i) {
            int count = 0;
            for (int k = heads_[static_cast<std::size_t>(i)]; k >= 0; k = next_[static_cast<std::size_t>(k)]) ++count;
            m.row_ptr[static_cast<std::size_t>(i) + 1] = m.row_ptr[static_cast<std::size_t>(i)] + count;
        }
        m.col.resize(static_cast<std::size_t>(m.row_ptr.back()));
        m.val.resize(static_cast<std::size_t>(m.row_ptr.back()));
        for (int i = 0; i < n_; ++i) {
            int at = m.row_ptr[static_cast<std::size_t>(i)];
            for (int k = heads_[static_cast<std::size_t>(i)]; k >= 0; k = next_[static_cast<std::size_t>(k)]) {
                m.col[static_cast<std::size_t>(at)] = cols_[static_cast<std::size_t>(k)];
                m.val[static_cast<std::size_t>(at)] = vals_[static_cast<std::size_t>(k)];
                ++at;
            }
        }
        return m;
    }

private:
    int n_;
    std::vector<int> heads_;
    std::vector<int> cols_;
    std::vector<double> vals_;
    std::vector<int> next_;
};

struct CgResult {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

// Jacobi-preconditioned conjugate gradients, zero initial guess.
inline CgResult cg_solve(const CsrMatrix& A, const std::vector<double>& b, std::vector<double>& x,
                         double rel_tol = 1e-12, int max_iter = 20000) {
    const std::size_t n = static_cast<std::size_t>(A.n);
    x.assign(n, 0.0);

    double norm_b = 0.0;
    for (const double v : b) norm_b += v * v;
    norm_b = std::sqrt(norm_b);
    if (norm_b == 0.0) return {0, 0.0, true};

    const std::vector<double> diag = A.diagonal();
    std::vector<double> inv_diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (diag[i] <= 0.0) throw std::runtime_error("cg: matrix diagonal not positive");
        inv_diag[i] = 1.0 / diag[i];
    }

    std::vector<double> r = b, z(n), p(n), q(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];

    CgResult res;
    for (int it = 0; it < max_iter; ++it) {
        A.multiply(p, q);
        double pq = 0.0;
        for (std::size_t i = 0; i < n; ++i) pq += p[i] * q[i];
        if (pq <= 0.0) throw std::runtime_error("cg: matrix not positive definite");
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        double norm_r = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm_r += r[i] * r[i];
        norm_r = std::sqrt(norm_r);
        res.iterations = it + 1;
        res.rel_residual = norm_r / norm_b;
        if (res.rel_residual < rel_tol) {
            res.converged = true;
            break;
        }
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = inv_diag[i] * r[i];
            rz_new += r[i] * z[i];
        }
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + (rz_new / rz) * p[i];
        rz = rz_new;
    }

    // Recurrence residuals drift; report the true one.
    A.multiply(x, q);
    double norm_true = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = b[i] - q[i];
        norm_true += d * d;
    }
    res.rel_residual = std::sqrt(norm_true) / norm_b;
    return res;
}

} // namespace vortexopt
