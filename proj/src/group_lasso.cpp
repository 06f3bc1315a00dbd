#include "gloss/group_lasso.hpp"

#include "gloss/kernels.hpp"

#include <Eigen/Cholesky>
#include <cassert>
#include <cmath>
#include <limits>

namespace gloss {

Vector group_norms(const Matrix& B) { return B.rowwise().norm(); }

Matrix os_gradient(const Matrix& B, const Matrix& X_S, const Matrix& T) {
    assert(B.rows() == X_S.cols() && B.cols() == T.cols());
    return X_S.transpose() * (X_S * B - T);
}

Matrix penalized_ls_solve_gram(const Matrix& G_SS, const Matrix& C_S,
                               const Vector& omega, double lambda) {
    assert(G_SS.rows() == G_SS.cols() && G_SS.rows() == C_S.rows());
    assert(omega.size() == G_SS.rows());
    Matrix W = G_SS;
    W.diagonal() += lambda * omega;
    Eigen::LLT<Matrix> llt(W);
    if (llt.info() != Eigen::Success)
        throw NumericalError("penalized least-squares system is not positive definite "
                             "at factorization time");
    return llt.solve(C_S);
}

Matrix penalized_ls_solve(const Matrix& X_S, const Matrix& T, const Vector& omega,
                          double lambda) {
    Matrix G = X_S.transpose() * X_S;
    Matrix C = X_S.transpose() * T;
    return penalized_ls_solve_gram(G, C, omega, lambda);
}

KktInfo kkt_residuals(const Matrix& X, const std::vector<int>& S, const Matrix& B_S,
                      const Matrix& T, double lambda, const Vector& weights,
                      double eps_norm) {
    assert(weights.size() == X.cols());
    KktInfo info;
    info.active = S;
    std::vector<unsigned char> mask(static_cast<std::size_t>(X.cols()), 0);
    for (int j : S) mask[static_cast<std::size_t>(j)] = 1;

    Matrix R;
    kernels::residual(X, S, B_S, T, R);

    info.active_residuals.setZero(static_cast<Eigen::Index>(S.size()));
    info.floored.assign(S.size(), 0);
    for (std::size_t t = 0; t < S.size(); ++t) {
        const Eigen::Index ti = static_cast<Eigen::Index>(t);
        Eigen::RowVectorXd grad = X.col(S[t]).transpose() * R;
        const double nrm = B_S.row(ti).norm();
        if (nrm < eps_norm) {
            // A row pinned at the norm floor answers to the inactive-side bound.
            info.floored[t] = 1;
            continue;
        }
        const double w = weights[S[t]];
        double r = (grad + (lambda * w / nrm) * B_S.row(ti)).norm();
        info.active_residuals[ti] = r;
        info.max_active_residual = std::max(info.max_active_residual, r);
    }

    Vector norms;
    kernels::column_gradient_norms(X, R, nullptr, weights, mask, norms);
    info.inactive.reserve(static_cast<std::size_t>(X.cols()) - S.size());
    for (int j = 0; j < static_cast<int>(X.cols()); ++j)
        if (!mask[static_cast<std::size_t>(j)]) info.inactive.push_back(j);
    info.inactive_norms.resize(static_cast<Eigen::Index>(info.inactive.size()));
    for (std::size_t t = 0; t < info.inactive.size(); ++t) {
        info.inactive_norms[static_cast<Eigen::Index>(t)] = norms[info.inactive[t]];
        info.max_inactive_norm = std::max(info.max_inactive_norm, norms[info.inactive[t]]);
    }
    return info;
}

double variational_objective(const Matrix& X, const Matrix& T, const Matrix& B,
                             const Vector& tau, double lambda, const Vector& weights) {
    assert(B.rows() == X.cols() && tau.size() == B.rows());
    assert(weights.size() == B.rows());
    double penalty = 0.0;
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
        const double num = weights[j] * weights[j] * B.row(j).squaredNorm();
        if (num == 0.0) continue;                 // 0/0 counts as 0
        if (tau[j] == 0.0) return std::numeric_limits<double>::infinity();
        penalty += num / tau[j];
    }
    return 0.5 * (T - X * B).squaredNorm() + lambda * penalty;
}

PenaltyState PenaltyState::from_coefficients(const Matrix& B, double lambda,
                                             const Vector& weights, double eps_norm) {
    assert(weights.size() == B.rows());
    PenaltyState st;
    st.lambda = lambda;
    st.weights = weights;
    const Vector norms = group_norms(B);
    st.tau = weights.cwiseProduct(norms);
    st.omega.resize(B.rows());
    for (Eigen::Index j = 0; j < B.rows(); ++j)
        st.omega[j] = weights[j] / std::max(norms[j], eps_norm);
    return st;
}

ReweightedResult reweighted_fit_gram(const Matrix& G_SS, const Matrix& C_S, double c0,
                                     double lambda, const Vector& weights_S,
                                     Matrix B_init, const ReweightedOptions& opt) {
    const Eigen::Index s = G_SS.rows();
    assert(C_S.rows() == s && weights_S.size() == s && B_init.rows() == s);

    ReweightedResult res;
    res.B = std::move(B_init);
    res.floored.assign(static_cast<std::size_t>(s), 0);

    auto objective = [&](const Matrix& B, const Vector& norms) {
        const double quad = c0 - 2.0 * (C_S.array() * B.array()).sum() +
                            (B.array() * (G_SS * B).array()).sum();
        return 0.5 * quad + lambda * weights_S.dot(norms);
    };

    Vector norms = group_norms(res.B);

    if (lambda == 0.0) {
        // The penalty vanishes; one shared-factorization solve is exact.
        res.B = penalized_ls_solve_gram(G_SS, C_S, Vector::Ones(s), 0.0);
        norms = group_norms(res.B);
        res.iterations = 1;
        res.converged = true;
        res.objective = objective(res.B, norms);
        return res;
    }

    Vector omega(s), row_res(s);
    for (int it = 1; it <= opt.max_iter; ++it) {
        for (Eigen::Index j = 0; j < s; ++j)
            omega[j] = weights_S[j] / std::max(norms[j], opt.eps_norm);

        Matrix B_new = penalized_ls_solve_gram(G_SS, C_S, omega, lambda);
        if (!B_new.allFinite())
            throw NumericalError("non-finite iterate at inner iteration " +
                                 std::to_string(it));

        Vector norms_new = group_norms(B_new);

        bool settled = true;
        for (Eigen::Index j = 0; j < s; ++j) {
            const double big = std::max(norms[j], norms_new[j]);
            if (big < opt.eps_norm) continue;
            if (std::abs(norms_new[j] - norms[j]) >
                opt.norm_change_tol * std::max(norms_new[j], opt.eps_norm)) {
                settled = false;
                break;
            }
        }

        // Active-side stationarity, measured only on rows above the norm floor.
        const Matrix grad = G_SS * B_new - C_S;
        double max_res = 0.0;
        for (Eigen::Index j = 0; j < s; ++j) {
            res.floored[static_cast<std::size_t>(j)] = norms_new[j] < opt.eps_norm;
            row_res[j] = -1.0;
            if (res.floored[static_cast<std::size_t>(j)]) continue;
            row_res[j] = (grad.row(j) +
                          (lambda * weights_S[j] / norms_new[j]) * B_new.row(j))
                             .norm();
            max_res = std::max(max_res, row_res[j]);
        }

        if (max_res <= opt.tol * lambda && settled) {
            res.B = std::move(B_new);
            norms = std::move(norms_new);
            res.iterations = it;
            res.converged = true;
            break;
        }

        // Stall recovery (see ReweightedOptions): among rows moving at a
        // near-unit norm ratio and blocking either exit test, advance the
        // worst one to the exact minimizer of the objective along its current
        // direction. The returned iterate is never post-edited: the loop only
        // exits through the tests above, on a plain reweighted solve.
        if (opt.stall_recovery) {
            Eigen::Index jbest = -1;
            double sbest = 0.0;
            for (Eigen::Index j = 0; j < s; ++j) {
                if (norms[j] < opt.eps_norm || norms_new[j] < opt.eps_norm) continue;
                if (std::abs(1.0 - norms_new[j] / norms[j]) > 0.1) continue;
                const double relchange =
                    std::abs(norms_new[j] - norms[j]) / norms_new[j];
                if (row_res[j] <= opt.tol * lambda &&
                    relchange <= opt.norm_change_tol)
                    continue;  // this row is not blocking termination
                const double score =
                    std::max(row_res[j], lambda * weights_S[j] * relchange);
                if (jbest < 0 || score > sbest) {
                    sbest = score;
                    jbest = j;
                }
            }
            if (jbest >= 0 && G_SS(jbest, jbest) > 0.0) {
                const double n1 = norms_new[jbest];
                const double along = grad.row(jbest).dot(B_new.row(jbest)) / n1;
                const double tstar =
                    std::max(0.0, n1 - (along + lambda * weights_S[jbest]) /
                                           G_SS(jbest, jbest));
                B_new.row(jbest) *= tstar / n1;
                norms_new[jbest] = tstar;
                ++res.ray_steps;
            }
        }

        res.B = std::move(B_new);
        norms = std::move(norms_new);
        res.iterations = it;
    }
    res.objective = objective(res.B, norms);
    return res;
}

ReweightedResult reweighted_fit(const Matrix& X_S, const Matrix& T, double lambda,
                                const Vector& weights_S, const Matrix& B_init,
                                const ReweightedOptions& opt) {
    std::vector<int> all(static_cast<std::size_t>(X_S.cols()));
    for (std::size_t t = 0; t < all.size(); ++t) all[t] = static_cast<int>(t);
    Matrix G;
    kernels::gram_block(X_S, all, G);
    Matrix C = X_S.transpose() * T;
    return reweighted_fit_gram(G, C, T.squaredNorm(), lambda, weights_S, B_init, opt);
}

} // namespace gloss
