#include "gloss/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gloss::kernels {

namespace {
// The parallel path only pays for its scheduling overhead when there is more
// than one thread to spread the work over; a single-threaded process gets the
// serial kernels by default. set_backend overrides either way.
Backend default_backend() {
#ifdef _OPENMP
    if (omp_get_max_threads() > 1) return Backend::parallel;
#endif
    return Backend::serial;
}

std::atomic<Backend> g_backend{default_backend()};
} // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }
void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

namespace serial {

void residual(const Matrix& X, const std::vector<int>& cols, const Matrix& B,
              const Matrix& T, Matrix& R) {
    assert(B.rows() == static_cast<Eigen::Index>(cols.size()));
    assert(B.cols() == T.cols() && X.rows() == T.rows());
    const Eigen::Index n = T.rows(), m = T.cols();
    R = -T;
    for (std::size_t t = 0; t < cols.size(); ++t) {
        const double* xj = X.col(cols[t]).data();
        for (Eigen::Index k = 0; k < m; ++k) {
            const double b = B(static_cast<Eigen::Index>(t), k);
            double* rk = R.col(k).data();
            for (Eigen::Index i = 0; i < n; ++i) rk[i] += xj[i] * b;
        }
    }
}

void column_gradient_norms(const Matrix& X, const Matrix& R, const Matrix* C,
                           const Vector& w, const std::vector<unsigned char>& skip,
                           Vector& out) {
    assert(X.rows() == R.rows());
    assert(w.size() == X.cols());
    assert(skip.empty() || skip.size() == static_cast<std::size_t>(X.cols()));
    const Eigen::Index n = X.rows(), p = X.cols(), m = R.cols();
    out.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!skip.empty() && skip[j]) {
            out[j] = 0.0;
            continue;
        }
        const double* xj = X.col(j).data();
        double ss = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) {
            const double* rk = R.col(k).data();
            double dot = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) dot += xj[i] * rk[i];
            if (C) dot -= (*C)(j, k);
            ss += dot * dot;
        }
        out[j] = std::sqrt(ss) / w[j];
    }
}

void gram_block(const Matrix& X, const std::vector<int>& cols, Matrix& G) {
    const Eigen::Index n = X.rows();
    const Eigen::Index s = static_cast<Eigen::Index>(cols.size());
    G.resize(s, s);
    for (Eigen::Index b = 0; b < s; ++b) {
        const double* xb = X.col(cols[b]).data();
        for (Eigen::Index a = 0; a < s; ++a) {
            const double* xa = X.col(cols[a]).data();
            double dot = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) dot += xa[i] * xb[i];
            G(a, b) = dot;
        }
    }
}

void gram_full(const Matrix& X, Matrix& G) {
    const Eigen::Index n = X.rows(), p = X.cols();
    G.resize(p, p);
    for (Eigen::Index b = 0; b < p; ++b) {
        const double* xb = X.col(b).data();
        for (Eigen::Index a = 0; a < p; ++a) {
            const double* xa = X.col(a).data();
            double dot = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) dot += xa[i] * xb[i];
            G(a, b) = dot;
        }
    }
}

void project_rows(const Matrix& Xnew, const Vector& mean, const Vector& scale,
                  const std::vector<int>& cols, const Matrix& B, Matrix& Z) {
    assert(B.rows() == static_cast<Eigen::Index>(cols.size()));
    const Eigen::Index nr = Xnew.rows(), m = B.cols();
    Z.setZero(nr, m);
    for (Eigen::Index r = 0; r < nr; ++r) {
        for (std::size_t t = 0; t < cols.size(); ++t) {
            const int j = cols[t];
            double v = Xnew(r, j) - mean[j];
            if (scale.size() > 0) v /= scale[j];
            for (Eigen::Index k = 0; k < m; ++k)
                Z(r, k) += v * B(static_cast<Eigen::Index>(t), k);
        }
    }
}

} // namespace serial

void residual(const Matrix& X, const std::vector<int>& cols, const Matrix& B,
              const Matrix& T, Matrix& R) {
    if (active_backend() == Backend::parallel)
        parallel::residual(X, cols, B, T, R);
    else
        serial::residual(X, cols, B, T, R);
}

void column_gradient_norms(const Matrix& X, const Matrix& R, const Matrix* C,
                           const Vector& w, const std::vector<unsigned char>& skip,
                           Vector& out) {
    if (active_backend() == Backend::parallel)
        parallel::column_gradient_norms(X, R, C, w, skip, out);
    else
        serial::column_gradient_norms(X, R, C, w, skip, out);
}

void gram_block(const Matrix& X, const std::vector<int>& cols, Matrix& G) {
    if (active_backend() == Backend::parallel)
        parallel::gram_block(X, cols, G);
    else
        serial::gram_block(X, cols, G);
}

void gram_full(const Matrix& X, Matrix& G) {
    if (active_backend() == Backend::parallel)
        parallel::gram_full(X, G);
    else
        serial::gram_full(X, G);
}

void project_rows(const Matrix& Xnew, const Vector& mean, const Vector& scale,
                  const std::vector<int>& cols, const Matrix& B, Matrix& Z) {
    if (active_backend() == Backend::parallel)
        parallel::project_rows(Xnew, mean, scale, cols, B, Z);
    else
        serial::project_rows(Xnew, mean, scale, cols, B, Z);
}

} // namespace gloss::kernels
