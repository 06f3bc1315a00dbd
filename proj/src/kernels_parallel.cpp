#include "gloss/kernels.hpp"

#include <cassert>
#include <cmath>

// OpenMP twins of the serial reference kernels. Parallelism is always over
// whole output elements (rows of R/Z, columns j of the norm vector, columns b
// of a Gram block) while the per-element accumulation loops keep the reference
// order, so results are bit-identical to gloss::kernels::serial for any thread
// count or schedule.

namespace gloss::kernels::parallel {

void residual(const Matrix& X, const std::vector<int>& cols, const Matrix& B,
              const Matrix& T, Matrix& R) {
    assert(B.rows() == static_cast<Eigen::Index>(cols.size()));
    assert(B.cols() == T.cols() && X.rows() == T.rows());
    const Eigen::Index n = T.rows(), m = T.cols();
    R.resize(n, m);
    const std::ptrdiff_t nc = static_cast<std::ptrdiff_t>(cols.size());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < m; ++k) R(i, k) = -T(i, k);
        for (std::ptrdiff_t t = 0; t < nc; ++t) {
            const double x = X(i, cols[t]);
            for (Eigen::Index k = 0; k < m; ++k)
                R(i, k) += x * B(static_cast<Eigen::Index>(t), k);
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
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for schedule(static)
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
    const std::ptrdiff_t nc = static_cast<std::ptrdiff_t>(cols.size());
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < nr; ++r) {
        for (std::ptrdiff_t t = 0; t < nc; ++t) {
            const int j = cols[t];
            double v = Xnew(r, j) - mean[j];
            if (scale.size() > 0) v /= scale[j];
            for (Eigen::Index k = 0; k < m; ++k)
                Z(r, k) += v * B(static_cast<Eigen::Index>(t), k);
        }
    }
}

} // namespace gloss::kernels::parallel
