#pragma once

#include "gloss/dataset.hpp"
#include "gloss/fit.hpp"

namespace gloss {

// Discriminant-space classifier derived from an optimal-scoring fit: projection
// directions whitened against the penalty-shrunk within-class covariance,
// class centroids in that space, and log-priors for the Gaussian decision rule.
struct LdaModel {
    Matrix B_lda;       // p×M_eff; rows outside active_set are zero
    Matrix centroids;   // K×M_eff class centroids of projected training data
    Vector log_priors;  // K
    Vector alpha;       // kept correlations, descending, length M_eff
    std::vector<int> active_set;  // ascending rows of B_lda with nonzero norm
    double lambda = 0.0;

    int n_classes() const { return static_cast<int>(centroids.rows()); }
    int m_eff() const { return static_cast<int>(B_lda.cols()); }
};

// Rescales the fitted directions onto discriminant coordinates, dropping
// directions with alpha <= alpha_tol. Throws NumericalError when no direction
// survives (nothing discriminative at this penalty).
LdaModel os_to_lda(const OsFit& fit, const LabeledDataset& train,
                   double alpha_tol = 1e-8);

// Same mapping but a fit with no usable direction yields a prior-only
// classifier (0 columns) instead of an error; used by the serialization and
// CLI paths where an empty model is still a valid artifact.
LdaModel os_to_lda_allow_empty(const OsFit& fit, const LabeledDataset& train,
                               double alpha_tol = 1e-8);

// Z = (X_raw - mean)/scale * B_lda, touching only active columns.
Matrix project(const LdaModel& m, const Matrix& X_raw, const CenteringStats& c);

// Nearest-centroid rule in discriminant space with optional log-prior shift;
// ties break toward the smallest class id.
std::vector<int> classify(const LdaModel& m, const Matrix& X_raw,
                          const CenteringStats& c, bool use_priors = true);

// First m columns of everything.
LdaModel truncate(const LdaModel& m, int dims);

// Smallest dimension count minimizing validation error.
int select_dimension(const LdaModel& m, const Matrix& X_val_raw,
                     const std::vector<int>& y_val, const CenteringStats& c,
                     bool use_priors = true);

// select_dimension plus the error it achieved (study/CV drivers need both);
// err_by_dim[d] is the validation error rate using d+1 directions.
struct DimensionChoice {
    int dims = 0;
    double error = 1.0;
    std::vector<double> err_by_dim;
};
DimensionChoice choose_dimension(const LdaModel& m, const Matrix& X_val_raw,
                                 const std::vector<int>& y_val,
                                 const CenteringStats& c, bool use_priors = true);

} // namespace gloss
