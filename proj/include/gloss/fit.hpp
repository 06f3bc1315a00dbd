#pragma once

#include "gloss/dataset.hpp"

namespace gloss {

enum class GramMode { standard, diagonal };

// Initial score matrix Theta0 (K×(K−1)): columns are orthonormal in the
// Y^T Y inner product and orthogonal to the constant score, built from a
// Householder completion of the class-count vector (deterministic).
Matrix init_theta0(const Matrix& Y);

// Dense effective Gram matrix for inspection and small problems: X^T X in
// standard mode, n*(S_b + diag(S_w)) in diagonal mode. O(p^2) storage — the
// fit path itself never materializes this (see GramFacts in fit.cpp).
Matrix effective_gram(const LabeledDataset& d, GramMode mode);

// Entry threshold of the path: max_j ||X_j^T Y Theta0||_2 / w_j. The fit at
// this value (and above) keeps every coefficient at zero.
double lambda_max(const LabeledDataset& d, const Matrix& Theta0,
                  const Vector& weights = Vector());

struct PathConfig {
    GramMode gram_mode = GramMode::standard;
    double halving_factor = 0.5;  // lambda_{t+1} = factor * lambda_t
    double lambda_min = 0.0;      // 0 disables the lower endpoint
    int max_active = 0;           // 0 means min(n, p)
    double tol = 1e-6;            // inner stationarity bound, relative to lambda
    double norm_change_tol = 1e-8;
    int max_inner_iter = 1000;
    int max_outer_iter = 1000;
    int max_path_points = 64;     // hard stop for degenerate grids
    Vector weights;               // per-feature penalty weights; empty = all ones
};

// One fitted point of the path, after the eigen post-processing that rotates
// scores and coefficients onto the discriminant directions.
struct OsFit {
    double lambda = 0.0;
    Matrix B_star;      // p×(K−1); rows outside active_set are exactly zero
    Matrix theta_star;  // K×(K−1), orthonormal in the Y^T Y metric
    Vector alpha;       // K−1 values in [0,1), descending
    std::vector<int> active_set;  // ascending feature indices
    bool converged = false;
    int n_outer_iters = 0;
    int n_inner_iters = 0;
    double objective = 0.0;  // quadratic term (mode Gram) + group penalty
};

struct EigenPost {
    Matrix theta_star;
    Matrix B_star;   // p×(K−1)
    Vector alpha;
    Vector s;        // eigenvalues of the score cross-product, descending
};

// Eigenanalysis of A = Theta0^T Y^T X_S B_S: rotates (Theta0, B) by the
// eigenvectors, embeds B into p rows, and converts eigenvalues to correlations
// alpha_k = sqrt(s_k) (negatives within round-off clamped to zero). When
// `converged` is set, asymmetry of A beyond 1e-6*||A|| is reported as an error
// since it signals an unfinished inner loop.
EigenPost eigen_postprocess(const Matrix& B_S, const std::vector<int>& S,
                            Eigen::Index p, const Matrix& Theta0, const Matrix& Y,
                            const Matrix& X_S, bool converged = true);

// Group-sparse optimal-scoring fit at one penalty value via the active-set
// algorithm (activate the worst violator, re-solve, retire zero rows).
// B_init (p×(K−1)) warm-starts the active set; pass nullptr to start empty.
OsFit fit(const LabeledDataset& d, double lambda, const Matrix& Theta0,
          const PathConfig& cfg, const Matrix* B_init = nullptr);

struct RegularizationPath {
    std::vector<double> lambdas;
    std::vector<OsFit> fits;
    Matrix Theta0;
    GramMode gram_mode = GramMode::standard;
};

// Geometric grid from lambda_max downward with warm starts; stops at
// lambda_min, or when the active count reaches max_active, or at
// max_path_points.
RegularizationPath solution_path(const LabeledDataset& d, const PathConfig& cfg);

// Same, over a caller-supplied decreasing grid (used for fold-shared grids).
RegularizationPath solution_path(const LabeledDataset& d, const PathConfig& cfg,
                                 const std::vector<double>& grid);

} // namespace gloss
