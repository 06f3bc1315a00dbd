#include "gloss/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gloss {

SupportMetrics support_metrics(const std::vector<int>& selected,
                               const std::vector<int>& truth, Eigen::Index p) {
    if (truth.empty()) throw DataError("true support set is empty");
    std::vector<char> is_true(static_cast<std::size_t>(p), 0);
    for (int j : truth) {
        if (j < 0 || j >= p) throw DataError("support index out of range");
        is_true[static_cast<std::size_t>(j)] = 1;
    }
    long hits = 0, misses = 0;
    for (int j : selected) {
        if (j < 0 || j >= p) throw DataError("selected index out of range");
        if (is_true[static_cast<std::size_t>(j)])
            ++hits;
        else
            ++misses;
    }
    SupportMetrics m;
    m.tpr = static_cast<double>(hits) / static_cast<double>(truth.size());
    const auto negatives = static_cast<double>(p) - static_cast<double>(truth.size());
    m.fpr = negatives > 0 ? static_cast<double>(misses) / negatives : 0.0;
    return m;
}

namespace {

// Per-class shuffle then round-robin: every fold gets floor or ceil of each
// class, and every example lands in exactly one fold.
std::vector<int> stratified_folds(const std::vector<int>& y, int K, int folds,
                                  std::uint64_t seed) {
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(K));
    for (std::size_t i = 0; i < y.size(); ++i)
        by_class[static_cast<std::size_t>(y[i])].push_back(static_cast<int>(i));

    std::vector<int> fold_of(y.size(), -1);
    Rng rng(mix_seed(seed, 0xF01D5ull));
    for (int k = 0; k < K; ++k) {
        auto& idx = by_class[static_cast<std::size_t>(k)];
        if (static_cast<int>(idx.size()) < folds)
            throw DataError("class " + std::to_string(k) + " has " +
                            std::to_string(idx.size()) +
                            " examples, too few to stratify into " +
                            std::to_string(folds) + " folds");
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
            std::swap(idx[i - 1], idx[j]);
        }
        for (std::size_t t = 0; t < idx.size(); ++t)
            fold_of[static_cast<std::size_t>(idx[t])] =
                static_cast<int>(t % static_cast<std::size_t>(folds));
    }
    return fold_of;
}

double error_rate(const std::vector<int>& pred, const std::vector<int>& truth) {
    long wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (pred[i] != truth[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

StudyAggregate aggregate(const std::vector<double>& xs) {
    StudyAggregate a;
    const auto n = static_cast<double>(xs.size());
    for (double x : xs) a.mean += x;
    a.mean /= n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - a.mean) * (x - a.mean);
        a.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return a;
}

} // namespace

CvResult cross_validate(const LabeledDataset& d, int folds,
                        const std::vector<double>& grid, const PathConfig& cfg,
                        std::uint64_t seed, bool use_priors) {
    if (folds < 2) throw DataError("need at least 2 folds");
    if (grid.empty()) throw DataError("empty lambda grid");
    for (std::size_t t = 1; t < grid.size(); ++t)
        if (!(grid[t] < grid[t - 1]))
            throw DataError("lambda grid must be strictly decreasing");

    const int K = d.n_classes();
    const auto T = static_cast<Eigen::Index>(grid.size());
    const std::vector<int> fold_of = stratified_folds(d.y, K, folds, seed);

    CvResult out;
    out.lambdas = grid;
    out.fold_errors.resize(folds, T);

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(folds));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int f = 0; f < folds; ++f) {
        try {
            std::vector<int> train_rows, val_rows;
            for (std::size_t i = 0; i < fold_of.size(); ++i)
                (fold_of[i] == f ? val_rows : train_rows)
                    .push_back(static_cast<int>(i));

            Matrix X_tr(static_cast<Eigen::Index>(train_rows.size()), d.p());
            std::vector<int> y_tr(train_rows.size());
            for (std::size_t t = 0; t < train_rows.size(); ++t) {
                X_tr.row(static_cast<Eigen::Index>(t)) = d.X.row(train_rows[t]);
                y_tr[t] = d.y[static_cast<std::size_t>(train_rows[t])];
            }
            Matrix X_va(static_cast<Eigen::Index>(val_rows.size()), d.p());
            std::vector<int> y_va(val_rows.size());
            for (std::size_t t = 0; t < val_rows.size(); ++t) {
                X_va.row(static_cast<Eigen::Index>(t)) = d.X.row(val_rows[t]);
                y_va[t] = d.y[static_cast<std::size_t>(val_rows[t])];
            }

            // The fold's training half gets its own centering; the held-out
            // rows are mapped through it at prediction time.
            LoadedData sub = make_dataset(X_tr, y_tr, K, false);
            RegularizationPath path = solution_path(sub.data, cfg, grid);
            for (Eigen::Index t = 0; t < T; ++t) {
                LdaModel clf = os_to_lda_allow_empty(path.fits[static_cast<std::size_t>(t)],
                                                     sub.data);
                std::vector<int> pred =
                    classify(clf, X_va, sub.centering, use_priors);
                out.fold_errors(f, t) = error_rate(pred, y_va);
            }
        } catch (...) {
            errors[static_cast<std::size_t>(f)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    out.mean_error = out.fold_errors.colwise().mean();
    out.se_error.resize(T);
    const double nf = static_cast<double>(folds);
    for (Eigen::Index t = 0; t < T; ++t) {
        double ss = (out.fold_errors.col(t).array() - out.mean_error[t])
                        .square()
                        .sum();
        out.se_error[t] = std::sqrt(ss / (nf - 1.0)) / std::sqrt(nf);
    }

    out.best_index = 0;
    for (Eigen::Index t = 1; t < T; ++t)
        if (out.mean_error[t] <
            out.mean_error[static_cast<Eigen::Index>(out.best_index)])
            out.best_index = static_cast<std::size_t>(t);
    out.best_lambda = grid[out.best_index];
    return out;
}

namespace {

StudyRow run_replicate(const SimulationSpec& rep_spec, const PathConfig& cfg,
                       bool use_priors) {
    SimulatedData sim = simulate(rep_spec);
    const auto t0 = std::chrono::steady_clock::now();

    LoadedData train = make_dataset(sim.X_train, sim.y_train, sim.K, false);
    RegularizationPath path = solution_path(train.data, cfg);

    // Joint (lambda, dimension) selection on the validation split. Strict
    // improvement keeps the earlier grid point (larger lambda) on ties, and
    // choose_dimension already prefers fewer directions within a fit.
    double best_err = std::numeric_limits<double>::infinity();
    std::size_t best_t = 0;
    int best_dims = 0;
    for (std::size_t t = 0; t < path.fits.size(); ++t) {
        LdaModel clf = os_to_lda_allow_empty(path.fits[t], train.data);
        double err;
        int dims;
        if (clf.m_eff() == 0) {
            std::vector<int> pred =
                classify(clf, sim.X_val, train.centering, use_priors);
            err = error_rate(pred, sim.y_val);
            dims = 0;
        } else {
            DimensionChoice ch = choose_dimension(clf, sim.X_val, sim.y_val,
                                                  train.centering, use_priors);
            err = ch.error;
            dims = ch.dims;
        }
        if (err < best_err) {
            best_err = err;
            best_t = t;
            best_dims = dims;
        }
    }

    LdaModel chosen = os_to_lda_allow_empty(path.fits[best_t], train.data);
    if (best_dims < chosen.m_eff()) chosen = truncate(chosen, best_dims);
    std::vector<int> pred = classify(chosen, sim.X_test, train.centering, use_priors);

    StudyRow row;
    row.err_pct = 100.0 * error_rate(pred, sim.y_test);
    row.n_vars = static_cast<double>(chosen.active_set.size());
    row.n_dirs = static_cast<double>(best_dims);
    row.lambda = path.lambdas[best_t];
    SupportMetrics sm = chosen.active_set.empty()
                            ? SupportMetrics{}
                            : support_metrics(chosen.active_set, sim.support,
                                              rep_spec.p);
    row.tpr = sm.tpr;
    row.fpr = sm.fpr;
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return row;
}

} // namespace

StudySummary run_study(const SimulationSpec& spec0, int repeats,
                       const PathConfig& cfg, bool use_priors) {
    if (repeats < 1) throw DataError("need at least 1 repetition");
    SimulationSpec spec = resolve(spec0);

    StudySummary out;
    out.scenario = scenario_name(spec.scenario);
    out.method = cfg.gram_mode == GramMode::diagonal ? "gloss-d" : "gloss";
    out.repeats = repeats;
    out.rows.resize(static_cast<std::size_t>(repeats));

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(repeats));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int r = 0; r < repeats; ++r) {
        try {
            SimulationSpec rep = spec;
            rep.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(r) + 1);
            out.rows[static_cast<std::size_t>(r)] =
                run_replicate(rep, cfg, use_priors);
        } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    auto collect = [&out](double StudyRow::*field) {
        std::vector<double> xs;
        xs.reserve(out.rows.size());
        for (const StudyRow& r : out.rows) xs.push_back(r.*field);
        return aggregate(xs);
    };
    out.err_pct = collect(&StudyRow::err_pct);
    out.n_vars = collect(&StudyRow::n_vars);
    out.n_dirs = collect(&StudyRow::n_dirs);
    out.tpr = collect(&StudyRow::tpr);
    out.fpr = collect(&StudyRow::fpr);
    out.seconds = collect(&StudyRow::seconds);
    return out;
}

void write_study_csv(const std::string& path,
                     const std::vector<StudySummary>& summaries,
                     bool zero_timing) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "scenario,method,err_mean,err_se,nvars_mean,nvars_se,"
           "ndirs_mean,ndirs_se,tpr_mean,fpr_mean,seconds_mean\n";
    for (const StudySummary& s : summaries) {
        out << s.scenario << ',' << s.method << ','
            << format_double(s.err_pct.mean) << ',' << format_double(s.err_pct.se)
            << ',' << format_double(s.n_vars.mean) << ','
            << format_double(s.n_vars.se) << ',' << format_double(s.n_dirs.mean)
            << ',' << format_double(s.n_dirs.se) << ','
            << format_double(s.tpr.mean) << ',' << format_double(s.fpr.mean)
            << ',' << format_double(zero_timing ? 0.0 : s.seconds.mean) << '\n';
    }
    if (!out) throw DataError("write to " + path + " failed");
}

} // namespace gloss
