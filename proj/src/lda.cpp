#include "gloss/lda.hpp"

#include "gloss/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gloss {

namespace {

LdaModel build(const OsFit& fit, const LabeledDataset& train, double alpha_tol,
               bool allow_empty) {
    const int K = train.n_classes();
    const auto n = static_cast<double>(train.n());

    int kept = 0;
    while (kept < fit.alpha.size() && fit.alpha[kept] > alpha_tol) ++kept;
    if (kept == 0 && !allow_empty)
        throw NumericalError(
            "no discriminative direction survives at this penalty "
            "(all alpha <= " + format_double(alpha_tol) + ")");

    LdaModel m;
    m.lambda = fit.lambda;
    m.alpha = fit.alpha.head(kept);

    // Direction k of the fit, rescaled by sqrt(n)/(alpha_k*sqrt(1-alpha_k^2)),
    // is unit-length in the metric of the penalty-shrunk within-class
    // covariance; distances in these coordinates are Mahalanobis distances.
    m.B_lda.resize(train.p(), kept);
    for (int k = 0; k < kept; ++k) {
        const double a = m.alpha[k];
        m.B_lda.col(k) =
            fit.B_star.col(k) * (std::sqrt(n) / (a * std::sqrt(1.0 - a * a)));
    }

    for (int j : fit.active_set)
        if (m.B_lda.row(j).norm() > 0.0) m.active_set.push_back(j);

    // Training rows are already centered, so class centroids in discriminant
    // space are just the projected class means.
    m.centroids = class_means(train) * m.B_lda;

    m.log_priors.resize(K);
    for (int k = 0; k < K; ++k)
        m.log_priors[k] = std::log(static_cast<double>(train.class_counts[k]) / n);
    return m;
}

} // namespace

LdaModel os_to_lda(const OsFit& fit, const LabeledDataset& train, double alpha_tol) {
    return build(fit, train, alpha_tol, false);
}

LdaModel os_to_lda_allow_empty(const OsFit& fit, const LabeledDataset& train,
                               double alpha_tol) {
    return build(fit, train, alpha_tol, true);
}

Matrix project(const LdaModel& m, const Matrix& X_raw, const CenteringStats& c) {
    if (X_raw.cols() != m.B_lda.rows())
        throw DataError("projection input has " + std::to_string(X_raw.cols()) +
                        " features, model expects " +
                        std::to_string(m.B_lda.rows()));
    Matrix B_act(static_cast<Eigen::Index>(m.active_set.size()), m.B_lda.cols());
    for (std::size_t t = 0; t < m.active_set.size(); ++t)
        B_act.row(static_cast<Eigen::Index>(t)) = m.B_lda.row(m.active_set[t]);
    Matrix Z;
    kernels::project_rows(X_raw, c.mean, c.scale, m.active_set, B_act, Z);
    return Z;
}

std::vector<int> classify(const LdaModel& m, const Matrix& X_raw,
                          const CenteringStats& c, bool use_priors) {
    const Matrix Z = project(m, X_raw, c);
    const int K = m.n_classes();
    std::vector<int> labels(static_cast<std::size_t>(Z.rows()));
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
            double score =
                -0.5 * (Z.row(i) - m.centroids.row(k)).squaredNorm();
            if (use_priors) score += m.log_priors[k];
            if (score > best_score) {
                best_score = score;
                best = k;
            }
        }
        labels[static_cast<std::size_t>(i)] = best;
    }
    return labels;
}

LdaModel truncate(const LdaModel& m, int dims) {
    if (dims < 0 || dims > m.m_eff())
        throw DataError("cannot keep " + std::to_string(dims) + " of " +
                        std::to_string(m.m_eff()) + " directions");
    LdaModel t;
    t.B_lda = m.B_lda.leftCols(dims);
    t.centroids = m.centroids.leftCols(dims);
    t.log_priors = m.log_priors;
    t.alpha = m.alpha.head(dims);
    t.lambda = m.lambda;
    for (int j : m.active_set)
        if (t.B_lda.row(j).norm() > 0.0) t.active_set.push_back(j);
    return t;
}

DimensionChoice choose_dimension(const LdaModel& m, const Matrix& X_val_raw,
                                 const std::vector<int>& y_val,
                                 const CenteringStats& c, bool use_priors) {
    if (y_val.size() != static_cast<std::size_t>(X_val_raw.rows()))
        throw DataError("validation labels do not match row count");
    const int M = m.m_eff();
    DimensionChoice out;
    if (M == 0) return out;

    const Matrix Z = project(m, X_val_raw, c);
    const int K = m.n_classes();
    const auto nv = Z.rows();

    // Squared distances to each centroid accumulate coordinate by coordinate,
    // so every cut dimension count is scored in one sweep.
    Matrix dist2 = Matrix::Zero(nv, K);
    std::vector<long> wrong(static_cast<std::size_t>(M), 0);
    for (int d = 0; d < M; ++d) {
        for (int k = 0; k < K; ++k)
            dist2.col(k) +=
                (Z.col(d).array() - m.centroids(k, d)).square().matrix();
        for (Eigen::Index i = 0; i < nv; ++i) {
            int best = 0;
            double best_score = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) {
                double score = -0.5 * dist2(i, k);
                if (use_priors) score += m.log_priors[k];
                if (score > best_score) {
                    best_score = score;
                    best = k;
                }
            }
            if (best != y_val[static_cast<std::size_t>(i)])
                ++wrong[static_cast<std::size_t>(d)];
        }
    }

    out.err_by_dim.resize(static_cast<std::size_t>(M));
    int best_d = 0;
    for (int d = 0; d < M; ++d) {
        out.err_by_dim[static_cast<std::size_t>(d)] =
            static_cast<double>(wrong[static_cast<std::size_t>(d)]) /
            static_cast<double>(nv);
        if (wrong[static_cast<std::size_t>(d)] <
            wrong[static_cast<std::size_t>(best_d)])
            best_d = d;
    }
    out.dims = best_d + 1;
    out.error = out.err_by_dim[static_cast<std::size_t>(best_d)];
    return out;
}

int select_dimension(const LdaModel& m, const Matrix& X_val_raw,
                     const std::vector<int>& y_val, const CenteringStats& c,
                     bool use_priors) {
    DimensionChoice ch = choose_dimension(m, X_val_raw, y_val, c, use_priors);
    if (ch.dims == 0)
        throw DataError("model has no directions to select among");
    return ch.dims;
}

} // namespace gloss
