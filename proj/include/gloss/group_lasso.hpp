#pragma once

#include "gloss/common.hpp"

namespace gloss {

// Row-wise Euclidean norms ||beta^j||_2 of a coefficient matrix.
Vector group_norms(const Matrix& B);

// Gradient of the smooth half-squared residual term on the active columns:
// X_S^T (X_S B - T).
Matrix os_gradient(const Matrix& B, const Matrix& X_S, const Matrix& T);

// Solves (X_S^T X_S + lambda*diag(omega)) B = X_S^T T through one Cholesky
// factorization shared by all right-hand sides. lambda = 0 is allowed when the
// Gram block alone is positive definite.
Matrix penalized_ls_solve(const Matrix& X_S, const Matrix& T, const Vector& omega,
                          double lambda);

// Same system given a precomputed Gram block and linear term (the fit loop
// caches those); throws NumericalError when the factorization fails.
Matrix penalized_ls_solve_gram(const Matrix& G_SS, const Matrix& C_S,
                               const Vector& omega, double lambda);

// Stationarity diagnostics for the group-penalized objective at B supported on
// S: per-active-row residuals ||grad_j + lambda*w_j*beta^j/||beta^j|| ||_2 and
// per-inactive-column gradient norms ||grad_j||_2 / w_j. Active rows whose norm
// is below eps_norm are reported in `floored` and excluded from the residual
// maximum (their optimality is judged against the inactive-side bound instead).
struct KktInfo {
    std::vector<int> active;       // copy of S
    Vector active_residuals;       // aligned with `active`; 0 for floored rows
    std::vector<unsigned char> floored;
    std::vector<int> inactive;
    Vector inactive_norms;         // aligned with `inactive`
    double max_active_residual = 0.0;
    double max_inactive_norm = 0.0;
};
KktInfo kkt_residuals(const Matrix& X, const std::vector<int>& S, const Matrix& B_S,
                      const Matrix& T, double lambda, const Vector& weights,
                      double eps_norm = 1e-10);

// Quadratic split of the group penalty: J(B) + lambda * sum_j w_j^2
// ||beta^j||^2 / tau_j, with the conventions 0/0 = 0 and c/0 = +inf for c > 0.
// Over splits that are feasible for B — tau >= 0 with sum_j tau_j no larger
// than sum_j w_j*||beta^j|| — the value is minimized at tau_j = w_j*||beta^j||,
// where it equals J(B) plus the group penalty (Cauchy–Schwarz); the caller is
// responsible for feasibility, the function only evaluates.
double variational_objective(const Matrix& X, const Matrix& T, const Matrix& B,
                             const Vector& tau, double lambda, const Vector& weights);

// Auxiliary/penalty bookkeeping for the variational form: tau_j = w_j*||beta^j||
// (the minimizing split) and omega_j = w_j^2 / tau_j with a floor at tau = 0.
struct PenaltyState {
    double lambda = 0.0;
    Vector weights;
    Vector tau;
    Vector omega;
    static PenaltyState from_coefficients(const Matrix& B, double lambda,
                                          const Vector& weights, double eps_norm = 1e-10);
};

struct ReweightedOptions {
    double tol = 1e-6;              // KKT residual bound, relative to lambda
    double norm_change_tol = 1e-8;  // relative row-norm settling
    int max_iter = 1000;
    double eps_norm = 1e-10;        // row-norm floor; below it omega is capped
    // Stall recovery. A row whose norm sits near a boundary of the penalty
    // (entering at a tiny magnitude, or shrinking toward zero) moves by a
    // near-unit ratio per reweighted solve, so its stationarity residual can
    // block termination for thousands of iterations while every other row is
    // long converged. When enabled, one such row per iteration is advanced by
    // minimizing the objective exactly along its current direction: in the row
    // norm the objective is a quadratic plus a linear penalty term, so the
    // minimizer is closed-form, never increases the objective, and places rows
    // headed for zero exactly at zero instead of following a geometric tail.
    bool stall_recovery = true;
};

struct ReweightedResult {
    Matrix B;                        // |S|×M
    int iterations = 0;
    bool converged = false;
    std::vector<unsigned char> floored;  // rows pinned at the norm floor
    double objective = 0.0;          // quadratic part + group penalty at exit
    int ray_steps = 0;               // stall-recovery line minimizations taken
};

// Step-1 inner loop: iterates omega updates and shared-Cholesky ridge solves on
// a fixed active set until the active-side stationarity holds. Monotone descent
// on the group-penalized objective (majorize–minimize). Gram-form arguments:
// G_SS = effective Gram block, C_S = X_S^T T, c0 = ||T||_F^2 so that the
// quadratic part (c0 - 2 tr(C_S^T B) + tr(B^T G_SS B))/2 equals J(B) for the
// standard Gram.
ReweightedResult reweighted_fit_gram(const Matrix& G_SS, const Matrix& C_S, double c0,
                                     double lambda, const Vector& weights_S,
                                     Matrix B_init, const ReweightedOptions& opt);

// Convenience wrapper taking the design block directly.
ReweightedResult reweighted_fit(const Matrix& X_S, const Matrix& T, double lambda,
                                const Vector& weights_S, const Matrix& B_init,
                                const ReweightedOptions& opt = {});

} // namespace gloss
