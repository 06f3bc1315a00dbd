#include "gloss/fit.hpp"

#include "gloss/group_lasso.hpp"
#include "gloss/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <iostream>
#include <numeric>

namespace gloss {

namespace {

constexpr double kEpsNorm = 1e-10;      // row-norm floor shared with the inner loop
constexpr double kRemoveSlack = 1e-9;   // relative slack on the retirement bound
constexpr double kAlphaCap = 1e-8;      // alpha is kept below 1 - kAlphaCap

// Everything about the quadratic form that does not depend on lambda or the
// active set. In standard mode gradients flow through the n×M residual; in
// diagonal mode through the K×M class-mean residual plus the cached linear
// term, so nothing p×p is ever formed.
struct GramFacts {
    GramMode mode;
    const Matrix* X;
    Matrix T;        // n×M target Y*Theta0
    double c0;       // ||T||_F^2
    Vector colsq;    // ||X_j||^2
    Matrix H;        // K×p rows sqrt(n_k) * classmean_k (diagonal mode)
    Vector dvec;     // n * S_w(j,j) (diagonal mode)
    Matrix C;        // p×M linear term X^T T (diagonal mode)
    Matrix G_full;   // cached X^T X for moderate p (standard mode)
    bool has_full = false;

    double diag(int j) const {
        return mode == GramMode::standard ? colsq[j] : H.col(j).squaredNorm() + dvec[j];
    }
};

GramFacts make_facts(const LabeledDataset& d, const Matrix& Theta0, GramMode mode) {
    GramFacts f;
    f.mode = mode;
    f.X = &d.X;
    f.T = d.Y * Theta0;
    f.c0 = f.T.squaredNorm();
    f.colsq = d.X.colwise().squaredNorm();
    if (mode == GramMode::diagonal) {
        const Matrix mu = class_means(d);
        f.H.resize(mu.rows(), mu.cols());
        for (Eigen::Index k = 0; k < mu.rows(); ++k)
            f.H.row(k) = std::sqrt(static_cast<double>(
                             d.class_counts[static_cast<std::size_t>(k)])) *
                         mu.row(k);
        f.dvec = f.colsq - f.H.colwise().squaredNorm().transpose();
        f.dvec = f.dvec.cwiseMax(0.0);  // round-off guard; exact value is >= 0
        f.C = d.X.transpose() * f.T;
    } else if (d.p() <= 2048 &&
               static_cast<double>(d.n()) * static_cast<double>(d.p()) *
                       static_cast<double>(d.p()) <=
                   4e9) {
        kernels::gram_full(d.X, f.G_full);
        f.has_full = true;
    }
    return f;
}

// Active-set state kept in activation order; sorted only when packaging the fit.
struct ActiveState {
    std::vector<int> S;
    std::vector<unsigned char> mask;
    Matrix B;     // |S|×M
    Matrix G;     // |S|×|S| effective Gram block
    Matrix C;     // |S|×M linear term
    Vector w;     // |S| penalty weights

    void reserve_p(Eigen::Index p) { mask.assign(static_cast<std::size_t>(p), 0); }

    void append(int j, const GramFacts& f, const Vector& weights,
                const Eigen::RowVectorXd& b_init) {
        const Eigen::Index s = static_cast<Eigen::Index>(S.size());
        const Matrix& X = *f.X;
        Matrix G2(s + 1, s + 1);
        G2.topLeftCorner(s, s) = G;
        for (Eigen::Index t = 0; t < s; ++t) {
            double g;
            if (f.mode == GramMode::standard)
                g = f.has_full ? f.G_full(S[static_cast<std::size_t>(t)], j)
                               : X.col(S[static_cast<std::size_t>(t)]).dot(X.col(j));
            else
                g = f.H.col(S[static_cast<std::size_t>(t)]).dot(f.H.col(j));
            G2(t, s) = g;
            G2(s, t) = g;
        }
        G2(s, s) = f.diag(j);
        G = std::move(G2);

        C.conservativeResize(s + 1, Eigen::NoChange_t{});
        if (C.cols() == 0) C.resize(s + 1, f.T.cols());
        C.row(s) = f.mode == GramMode::standard ? (X.col(j).transpose() * f.T).eval()
                                                : f.C.row(j).eval();
        B.conservativeResize(s + 1, Eigen::NoChange_t{});
        if (B.cols() == 0) B.resize(s + 1, f.T.cols());
        B.row(s) = b_init;
        w.conservativeResize(s + 1);
        w[s] = weights[j];
        S.push_back(j);
        mask[static_cast<std::size_t>(j)] = 1;
    }

    void remove(std::size_t t) {
        const Eigen::Index s = static_cast<Eigen::Index>(S.size());
        const Eigen::Index ti = static_cast<Eigen::Index>(t);
        mask[static_cast<std::size_t>(S[t])] = 0;
        S.erase(S.begin() + static_cast<std::ptrdiff_t>(t));
        // Shift rows/cols past t up by one.
        for (Eigen::Index r = ti; r + 1 < s; ++r) {
            B.row(r) = B.row(r + 1);
            C.row(r) = C.row(r + 1);
            w[r] = w[r + 1];
        }
        B.conservativeResize(s - 1, Eigen::NoChange_t{});
        C.conservativeResize(s - 1, Eigen::NoChange_t{});
        w.conservativeResize(s - 1);
        Matrix G2(s - 1, s - 1);
        for (Eigen::Index a = 0, ar = 0; a < s; ++a) {
            if (a == ti) continue;
            for (Eigen::Index b = 0, br = 0; b < s; ++b) {
                if (b == ti) continue;
                G2(ar, br) = G(a, b);
                ++br;
            }
            ++ar;
        }
        G = std::move(G2);
    }
};

Eigen::RowVectorXd prox_row_init(const Eigen::RowVectorXd& grad, double h,
                                 double lambda, double w) {
    const double gn = grad.norm();
    if (!(gn > lambda * w) || h <= 0.0) return Eigen::RowVectorXd::Zero(grad.cols());
    return (-(1.0 - lambda * w / gn) / h) * grad;
}

} // namespace

Matrix init_theta0(const Matrix& Y) {
    const Eigen::Index K = Y.cols();
    if (K < 2) throw DataError("init_theta0: need at least two classes");
    Vector counts = Y.colwise().sum();
    for (Eigen::Index k = 0; k < K; ++k)
        if (counts[k] <= 0.0)
            throw DataError("init_theta0: class " + std::to_string(k) + " is empty");

    // Householder completion: reflect e_1 onto -u, take the remaining columns as
    // an orthonormal basis of the complement of u = sqrt(counts).
    Vector unit = counts.cwiseSqrt();
    unit /= unit.norm();
    Vector v = unit;
    v[0] += 1.0;
    Matrix Hh = Matrix::Identity(K, K) - (2.0 / v.squaredNorm()) * v * v.transpose();
    Matrix theta = Hh.rightCols(K - 1);
    for (Eigen::Index k = 0; k < K; ++k) theta.row(k) /= std::sqrt(counts[k]);
    return theta;
}

Matrix effective_gram(const LabeledDataset& d, GramMode mode) {
    Matrix G;
    if (mode == GramMode::standard) {
        kernels::gram_full(d.X, G);
        return G;
    }
    const Matrix mu = class_means(d);
    Matrix H(mu.rows(), mu.cols());
    for (Eigen::Index k = 0; k < mu.rows(); ++k)
        H.row(k) =
            std::sqrt(static_cast<double>(d.class_counts[static_cast<std::size_t>(k)])) *
            mu.row(k);
    G.noalias() = H.transpose() * H;  // n * S_b
    Vector dvec = d.X.colwise().squaredNorm().transpose() - G.diagonal();
    G.diagonal() += dvec.cwiseMax(0.0);
    return G;
}

double lambda_max(const LabeledDataset& d, const Matrix& Theta0, const Vector& weights) {
    Vector w = weights.size() ? weights : Vector::Ones(d.p());
    if (w.size() != d.p()) throw DataError("lambda_max: weight vector has wrong length");
    const Matrix T = d.Y * Theta0;
    Matrix R;
    kernels::residual(d.X, {}, Matrix(0, T.cols()), T, R);
    Vector norms;
    kernels::column_gradient_norms(d.X, R, nullptr, w, {}, norms);
    return norms.maxCoeff();
}

EigenPost eigen_postprocess(const Matrix& B_S, const std::vector<int>& S,
                            Eigen::Index p, const Matrix& Theta0, const Matrix& Y,
                            const Matrix& X_S, bool converged) {
    const Eigen::Index M = Theta0.cols();
    assert(B_S.cols() == M && B_S.rows() == static_cast<Eigen::Index>(S.size()));

    Matrix A;
    if (S.empty()) {
        A = Matrix::Zero(M, M);
    } else {
        const Matrix U = X_S * B_S;          // n×M fitted scores
        A = Theta0.transpose() * (Y.transpose() * U);
    }

    const double scale = A.norm();
    const double asym = (A - A.transpose()).norm();
    if (converged && asym > 1e-6 * std::max(scale, 1e-12))
        throw NumericalError("score cross-product is asymmetric beyond tolerance; "
                             "the inner loop did not converge");

    Matrix As = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(As);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigendecomposition of the score cross-product failed");

    // Descending order, sign fixed so each eigenvector's first sizable entry is
    // positive — keeps rotations reproducible across runs.
    EigenPost out;
    out.s.resize(M);
    Matrix V(M, M);
    for (Eigen::Index k = 0; k < M; ++k) {
        out.s[k] = es.eigenvalues()[M - 1 - k];
        V.col(k) = es.eigenvectors().col(M - 1 - k);
        for (Eigen::Index r = 0; r < M; ++r) {
            if (std::abs(V(r, k)) > 1e-12) {
                if (V(r, k) < 0.0) V.col(k) = -V.col(k);
                break;
            }
        }
    }
    out.s = out.s.cwiseMax(0.0);  // clamp round-off negatives

    out.alpha.resize(M);
    for (Eigen::Index k = 0; k < M; ++k) {
        double a = std::sqrt(out.s[k]);
        if (a > 1.0 - kAlphaCap) {
            std::cerr << "warning: direction " << k
                      << " is essentially perfectly fit (alpha ~ 1); clamping\n";
            a = 1.0 - kAlphaCap;
        }
        out.alpha[k] = a;
    }

    out.theta_star = Theta0 * V;
    out.B_star = Matrix::Zero(p, M);
    if (!S.empty()) {
        const Matrix BV = B_S * V;
        for (std::size_t t = 0; t < S.size(); ++t)
            out.B_star.row(S[t]) = BV.row(static_cast<Eigen::Index>(t));
    }
    return out;
}

OsFit fit(const LabeledDataset& d, double lambda, const Matrix& Theta0,
          const PathConfig& cfg, const Matrix* B_init) {
    if (!(lambda > 0.0)) throw DataError("fit: lambda must be positive");
    if (d.n_classes() < 2) throw DataError("fit: need at least two classes");
    const Eigen::Index p = d.p();
    const Eigen::Index M = Theta0.cols();
    if (M != d.n_classes() - 1 || Theta0.rows() != d.n_classes())
        throw DataError("fit: score matrix has wrong shape");

    Vector w = cfg.weights.size() ? cfg.weights : Vector::Ones(p);
    if (w.size() != p) throw DataError("fit: weight vector has wrong length");
    if ((w.array() <= 0.0).any()) throw DataError("fit: weights must be positive");

    GramFacts facts = make_facts(d, Theta0, cfg.gram_mode);
    const Matrix& X = d.X;

    ActiveState st;
    st.reserve_p(p);
    st.B.resize(0, M);
    st.C.resize(0, M);
    st.G.resize(0, 0);
    if (B_init) {
        assert(B_init->rows() == p && B_init->cols() == M);
        for (int j = 0; j < static_cast<int>(p); ++j)
            if (B_init->row(j).norm() > 0.0) st.append(j, facts, w, B_init->row(j));
    }

    ReweightedOptions ropt;
    ropt.tol = cfg.tol;
    ropt.norm_change_tol = cfg.norm_change_tol;
    ropt.max_iter = cfg.max_inner_iter;
    ropt.eps_norm = kEpsNorm;

    bool converged = false;
    int outer = 0, inner_total = 0;
    Matrix R, RH;  // mode-specific residuals reused by the scans
    Vector norms;

    while (outer < cfg.max_outer_iter) {
        ++outer;
        bool inner_ok = true;
        if (!st.S.empty()) {
            ReweightedResult rr =
                reweighted_fit_gram(st.G, st.C, facts.c0, lambda, st.w, st.B, ropt);
            st.B = std::move(rr.B);
            inner_total += rr.iterations;
            inner_ok = rr.converged;
        }

        // Step 2: rows at the norm floor either satisfy the inactive-side bound
        // (retire them) or get re-kicked along their gradient for the next pass.
        bool kept_violator = false;
        if (!st.S.empty()) {
            const Matrix grad = st.G * st.B - st.C;
            for (std::size_t t = st.S.size(); t-- > 0;) {
                const Eigen::Index ti = static_cast<Eigen::Index>(t);
                if (st.B.row(ti).norm() >= kEpsNorm) continue;
                const double gn = grad.row(ti).norm() / st.w[ti];
                if (gn <= lambda * (1.0 + kRemoveSlack)) {
                    st.remove(t);
                } else {
                    st.B.row(ti) =
                        prox_row_init(grad.row(ti), st.G(ti, ti), lambda, st.w[ti]);
                    kept_violator = true;
                }
            }
        }

        // Step 3: scan the complement for the worst gradient norm. With an empty
        // active set both modes reduce to the same expression used by
        // lambda_max(), keeping the path-entry anchor exact.
        const bool use_standard_route =
            facts.mode == GramMode::standard || st.S.empty();
        if (use_standard_route) {
            kernels::residual(X, st.S, st.B, facts.T, R);
            kernels::column_gradient_norms(X, R, nullptr, w, st.mask, norms);
        } else {
            RH.resize(facts.H.rows(), M);
            kernels::residual(facts.H, st.S, st.B, Matrix::Zero(facts.H.rows(), M), RH);
            kernels::column_gradient_norms(facts.H, RH, &facts.C, w, st.mask, norms);
        }
        int jstar = -1;
        double vstar = 0.0;
        for (int j = 0; j < static_cast<int>(p); ++j) {
            if (st.mask[static_cast<std::size_t>(j)]) continue;
            if (jstar < 0 || norms[j] > vstar) {
                jstar = j;
                vstar = norms[j];
            }
        }

        if (jstar >= 0 && vstar > lambda) {
            Eigen::RowVectorXd g(M);
            if (use_standard_route)
                g = X.col(jstar).transpose() * R;
            else
                g = (facts.H.col(jstar).transpose() * RH) - facts.C.row(jstar);
            st.append(jstar, facts, w, prox_row_init(g, facts.diag(jstar), lambda,
                                                     w[jstar]));
            continue;
        }
        if (kept_violator) continue;
        converged = inner_ok;
        break;
    }

    // Package: ascending active set, rows permuted to match.
    std::vector<std::size_t> order(st.S.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return st.S[a] < st.S[b]; });
    std::vector<int> S_sorted(st.S.size());
    Matrix B_sorted(static_cast<Eigen::Index>(st.S.size()), M);
    Matrix XS(d.n(), static_cast<Eigen::Index>(st.S.size()));
    for (std::size_t t = 0; t < order.size(); ++t) {
        S_sorted[t] = st.S[order[t]];
        B_sorted.row(static_cast<Eigen::Index>(t)) =
            st.B.row(static_cast<Eigen::Index>(order[t]));
        XS.col(static_cast<Eigen::Index>(t)) = X.col(S_sorted[t]);
    }

    EigenPost post =
        eigen_postprocess(B_sorted, S_sorted, p, Theta0, d.Y, XS, converged);

    OsFit out;
    out.lambda = lambda;
    out.B_star = std::move(post.B_star);
    out.theta_star = std::move(post.theta_star);
    out.alpha = std::move(post.alpha);
    out.active_set = std::move(S_sorted);
    out.converged = converged;
    out.n_outer_iters = outer;
    out.n_inner_iters = inner_total;

    double quad = facts.c0;
    double penalty = 0.0;
    if (!st.S.empty()) {
        quad += -2.0 * (st.C.array() * st.B.array()).sum() +
                (st.B.array() * (st.G * st.B).array()).sum();
        for (std::size_t t = 0; t < st.S.size(); ++t)
            penalty += st.w[static_cast<Eigen::Index>(t)] *
                       st.B.row(static_cast<Eigen::Index>(t)).norm();
    }
    out.objective = 0.5 * quad + lambda * penalty;
    return out;
}

RegularizationPath solution_path(const LabeledDataset& d, const PathConfig& cfg,
                                 const std::vector<double>& grid) {
    RegularizationPath path;
    path.gram_mode = cfg.gram_mode;
    path.Theta0 = init_theta0(d.Y);
    const Matrix* warm = nullptr;
    for (double lam : grid) {
        path.fits.push_back(fit(d, lam, path.Theta0, cfg, warm));
        path.lambdas.push_back(lam);
        warm = &path.fits.back().B_star;
    }
    return path;
}

RegularizationPath solution_path(const LabeledDataset& d, const PathConfig& cfg) {
    if (!(cfg.halving_factor > 0.0 && cfg.halving_factor < 1.0))
        throw DataError("solution_path: shrink factor must lie in (0,1)");
    RegularizationPath path;
    path.gram_mode = cfg.gram_mode;
    path.Theta0 = init_theta0(d.Y);

    Vector w = cfg.weights.size() ? cfg.weights : Vector::Ones(d.p());
    const int max_active =
        cfg.max_active > 0 ? cfg.max_active
                           : static_cast<int>(std::min(d.n(), d.p()));

    double lam = lambda_max(d, path.Theta0, w);
    const Matrix* warm = nullptr;
    for (int t = 0; t < cfg.max_path_points; ++t) {
        path.fits.push_back(fit(d, lam, path.Theta0, cfg, warm));
        path.lambdas.push_back(lam);
        warm = &path.fits.back().B_star;
        if (static_cast<int>(path.fits.back().active_set.size()) >= max_active) break;
        if (cfg.lambda_min > 0.0 && lam <= cfg.lambda_min * (1.0 + 1e-12)) break;
        lam *= cfg.halving_factor;
    }
    return path;
}

} // namespace gloss
