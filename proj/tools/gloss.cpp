// Command-line front end: fit, path, cv, predict, project, simulate, study.
// Exit codes: 0 success, 1 usage/data error, 2 numerical failure.

#include "CLI11.hpp"

#include "gloss/dataset.hpp"
#include "gloss/eval.hpp"
#include "gloss/fit.hpp"
#include "gloss/kernels.hpp"
#include "gloss/lda.hpp"
#include "gloss/model_io.hpp"
#include "gloss/simulate.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace gloss;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string gram = "standard";
    double tol = 1e-6;
    bool verbose = false;
    bool no_timestamp = false;
    bool no_timing = false;
};

GramMode parse_gram(const std::string& s, bool allow_both, bool* both = nullptr) {
    if (both) *both = false;
    if (s == "standard") return GramMode::standard;
    if (s == "diagonal") return GramMode::diagonal;
    if (s == "both" && allow_both) {
        *both = true;
        return GramMode::standard;
    }
    throw DataError("invalid --gram value '" + s + "'" +
                    (allow_both ? " (expected standard, diagonal, or both)"
                                : " (expected standard or diagonal)"));
}

std::uint64_t env_seed() {
    const char* s = std::getenv("GLOSS_SEED");
    if (!s || !*s) return 1;
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (errno != 0 || end == s || *end != '\0')
        throw DataError(std::string("GLOSS_SEED is not an integer: '") + s + "'");
    return static_cast<std::uint64_t>(v);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

std::string two_dec(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// ---- fit ----------------------------------------------------------------

struct FitOpts {
    std::string data, label, out;
    double lambda = 0.0;
    bool standardize = false;
};

int cmd_fit(const GlobalOpts& g, const FitOpts& o) {
    LoadedData ld = load_csv(o.data, {o.label, o.standardize});
    const GramMode mode = parse_gram(g.gram, false);
    Matrix Theta0 = init_theta0(ld.data.Y);
    PathConfig cfg;
    cfg.gram_mode = mode;
    cfg.tol = g.tol;
    OsFit res = fit(ld.data, o.lambda, Theta0, cfg);
    if (!res.converged)
        std::cerr << "warning: fit did not converge within iteration limits\n";
    save_model(o.out, make_saved(res, ld.data, ld.centering, mode), !g.no_timestamp);
    std::cout << res.active_set.size() << " active variables\n";
    if (g.verbose)
        std::cout << "lambda " << format_double(res.lambda) << ", objective "
                  << format_double(res.objective) << ", outer iterations "
                  << res.n_outer_iters << "\n";
    return 0;
}

// ---- path ---------------------------------------------------------------

struct PathOpts {
    std::string data, label, out;
    double factor = 0.5;
    double lambda_min = 0.0;
    int max_active = 0;
    int max_points = 64;
    bool standardize = false;
};

int cmd_path(const GlobalOpts& g, const PathOpts& o) {
    LoadedData ld = load_csv(o.data, {o.label, o.standardize});
    const GramMode mode = parse_gram(g.gram, false);
    PathConfig cfg;
    cfg.gram_mode = mode;
    cfg.tol = g.tol;
    cfg.halving_factor = o.factor;
    cfg.lambda_min = o.lambda_min;
    cfg.max_active = o.max_active;
    cfg.max_path_points = o.max_points;
    RegularizationPath rp = solution_path(ld.data, cfg);

    ensure_dir(o.out);
    std::ofstream csv(fs::path(o.out) / "path.csv");
    if (!csv) throw DataError("cannot open " + o.out + "/path.csv for writing");
    csv << "index,lambda,n_active,n_dirs,objective,converged,file\n";
    for (std::size_t t = 0; t < rp.fits.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "point_%04zu.model", t + 1);
        SavedModel sm = make_saved(rp.fits[t], ld.data, ld.centering, mode);
        save_model((fs::path(o.out) / name).string(), sm, !g.no_timestamp);
        csv << t + 1 << ',' << format_double(rp.lambdas[t]) << ','
            << rp.fits[t].active_set.size() << ',' << sm.m_eff << ','
            << format_double(rp.fits[t].objective) << ','
            << (rp.fits[t].converged ? 1 : 0) << ',' << name << '\n';
    }
    if (!csv) throw DataError("write to " + o.out + "/path.csv failed");
    std::cout << rp.fits.size() << " path points written to " << o.out << "\n";
    return 0;
}

// ---- cv -----------------------------------------------------------------

struct CvOpts {
    std::string data, label, out, table;
    int folds = 10;
    double factor = 0.9;
    double lambda_min = 0.0;
    int max_active = 0;
    int max_points = 64;
    bool standardize = false;
    bool no_priors = false;
};

int cmd_cv(const GlobalOpts& g, const CvOpts& o) {
    LoadedData ld = load_csv(o.data, {o.label, o.standardize});
    const GramMode mode = parse_gram(g.gram, false);
    PathConfig cfg;
    cfg.gram_mode = mode;
    cfg.tol = g.tol;
    cfg.halving_factor = o.factor;
    cfg.lambda_min = o.lambda_min;
    cfg.max_active = o.max_active;
    cfg.max_path_points = o.max_points;

    RegularizationPath rp = solution_path(ld.data, cfg);
    CvResult cv = cross_validate(ld.data, o.folds, rp.lambdas, cfg, g.seed,
                                 !o.no_priors);

    if (!o.table.empty()) {
        std::ofstream tab(o.table);
        if (!tab) throw DataError("cannot open " + o.table + " for writing");
        tab << "lambda,mean_error,se_error,n_active\n";
        for (std::size_t t = 0; t < cv.lambdas.size(); ++t)
            tab << format_double(cv.lambdas[t]) << ','
                << format_double(cv.mean_error[static_cast<Eigen::Index>(t)]) << ','
                << format_double(cv.se_error[static_cast<Eigen::Index>(t)]) << ','
                << rp.fits[t].active_set.size() << '\n';
        if (!tab) throw DataError("write to " + o.table + " failed");
    }

    const OsFit& best = rp.fits[cv.best_index];
    save_model(o.out, make_saved(best, ld.data, ld.centering, mode), !g.no_timestamp);
    std::cout << "best lambda " << format_double(cv.best_lambda)
              << " (mean cv error "
              << format_double(cv.mean_error[static_cast<Eigen::Index>(cv.best_index)])
              << ")\n";
    std::cout << best.active_set.size() << " active variables\n";
    return 0;
}

// ---- predict / project ---------------------------------------------------

struct PredictOpts {
    std::string model, data, label, out;
    int dirs = -1;
    bool no_priors = false;
};

struct Scored {
    SavedModel sm;
    LdaModel clf;
    RawFile rf;
    std::vector<int> pred;
    std::vector<int> truth;  // empty when no labels given
};

Scored score_file(const PredictOpts& o) {
    Scored s;
    s.sm = load_model(o.model);
    s.clf = to_classifier(s.sm);
    if (o.dirs >= 0) {
        if (o.dirs > s.clf.m_eff())
            throw DataError("--dirs " + std::to_string(o.dirs) + " exceeds the " +
                            std::to_string(s.clf.m_eff()) +
                            " directions in the model");
        s.clf = truncate(s.clf, o.dirs);
    }
    s.rf = load_raw_csv(o.data, o.label);
    if (s.rf.X.cols() != s.sm.p)
        throw DataError(o.data + " has " + std::to_string(s.rf.X.cols()) +
                        " feature columns, model expects " + std::to_string(s.sm.p));
    s.pred = classify(s.clf, s.rf.X, centering_of(s.sm), !o.no_priors);
    if (!s.rf.labels.empty()) {
        s.truth.reserve(s.rf.labels.size());
        for (const std::string& lbl : s.rf.labels) {
            int id = -1;
            for (std::size_t k = 0; k < s.sm.class_labels.size(); ++k)
                if (s.sm.class_labels[k] == lbl) {
                    id = static_cast<int>(k);
                    break;
                }
            if (id < 0)
                throw DataError("label '" + lbl + "' in " + o.data +
                                " is not among the model's classes");
            s.truth.push_back(id);
        }
    }
    return s;
}

void report_error_rate(const Scored& s) {
    if (s.truth.empty()) return;
    long wrong = 0;
    for (std::size_t i = 0; i < s.truth.size(); ++i)
        if (s.pred[i] != s.truth[i]) ++wrong;
    std::cout << "error rate "
              << format_double(static_cast<double>(wrong) /
                               static_cast<double>(s.truth.size()))
              << "\n";
}

int cmd_predict(const PredictOpts& o) {
    Scored s = score_file(o);
    std::ofstream out(o.out);
    if (!out) throw DataError("cannot open " + o.out + " for writing");
    out << (s.truth.empty() ? "id,predicted_label\n"
                            : "id,true_label,predicted_label\n");
    for (std::size_t i = 0; i < s.pred.size(); ++i) {
        out << i << ',';
        if (!s.truth.empty()) out << s.rf.labels[i] << ',';
        out << s.sm.class_labels[static_cast<std::size_t>(s.pred[i])] << '\n';
    }
    if (!out) throw DataError("write to " + o.out + " failed");
    report_error_rate(s);
    return 0;
}

int cmd_project(const PredictOpts& o) {
    Scored s = score_file(o);
    const Matrix Z = project(s.clf, s.rf.X, centering_of(s.sm));
    std::ofstream out(o.out);
    if (!out) throw DataError("cannot open " + o.out + " for writing");
    out << "id";
    for (Eigen::Index d = 0; d < Z.cols(); ++d) out << ",z_" << d + 1;
    if (!s.truth.empty()) out << ",true_label";
    out << ",predicted_label\n";
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        out << i;
        for (Eigen::Index d = 0; d < Z.cols(); ++d)
            out << ',' << format_double(Z(i, d));
        if (!s.truth.empty()) out << ',' << s.rf.labels[static_cast<std::size_t>(i)];
        out << ',' << s.sm.class_labels[static_cast<std::size_t>(
                          s.pred[static_cast<std::size_t>(i)])]
            << '\n';
    }
    if (!out) throw DataError("write to " + o.out + " failed");
    report_error_rate(s);
    return 0;
}

// ---- simulate / study ----------------------------------------------------

struct SimOpts {
    std::string scenario = "sim1";
    int p = 500;
    int n_relevant = 100;
    int n_train = 100;
    int n_val = 100;
    int n_test = 1000;
    double shift = 0.0;
    double correlation = -1.0;
};

SimulationSpec to_spec(const SimOpts& o, std::uint64_t seed) {
    SimulationSpec s;
    s.scenario = scenario_from_string(o.scenario);
    s.p = o.p;
    s.n_relevant = o.n_relevant;
    s.n_train = o.n_train;
    s.n_val = o.n_val;
    s.n_test = o.n_test;
    s.shift = o.shift;
    s.correlation = o.correlation;
    s.seed = seed;
    return s;
}

std::vector<std::string> label_strings(const std::vector<int>& y) {
    std::vector<std::string> out;
    out.reserve(y.size());
    for (int v : y) out.push_back(std::to_string(v));
    return out;
}

int cmd_simulate(const GlobalOpts& g, const SimOpts& o, const std::string& out_dir) {
    SimulatedData sim = simulate(to_spec(o, g.seed));
    ensure_dir(out_dir);
    write_labeled_csv((fs::path(out_dir) / "train.csv").string(), sim.X_train,
                      label_strings(sim.y_train));
    write_labeled_csv((fs::path(out_dir) / "val.csv").string(), sim.X_val,
                      label_strings(sim.y_val));
    write_labeled_csv((fs::path(out_dir) / "test.csv").string(), sim.X_test,
                      label_strings(sim.y_test));
    std::ofstream sup(fs::path(out_dir) / "support.txt");
    if (!sup) throw DataError("cannot open " + out_dir + "/support.txt for writing");
    for (int j : sim.support) sup << j << '\n';
    if (!sup) throw DataError("write to " + out_dir + "/support.txt failed");
    std::cout << scenario_name(sim.spec.scenario) << " (shift "
              << format_double(sim.spec.shift) << ", correlation "
              << format_double(sim.spec.correlation) << ", seed " << g.seed
              << ") written to " << out_dir << "\n";
    return 0;
}

struct StudyOpts {
    SimOpts sim;
    int repeats = 25;
    double factor = 0.9;
    int max_active = 0;
    int max_points = 64;
    std::string out;
    bool no_priors = false;
};

int cmd_study(const GlobalOpts& g, const StudyOpts& o) {
    bool both = false;
    const GramMode first = parse_gram(g.gram, true, &both);
    std::vector<GramMode> modes =
        both ? std::vector<GramMode>{GramMode::standard, GramMode::diagonal}
             : std::vector<GramMode>{first};

    SimulationSpec spec = to_spec(o.sim, g.seed);
    std::vector<StudySummary> summaries;
    for (GramMode m : modes) {
        PathConfig cfg;
        cfg.gram_mode = m;
        cfg.tol = g.tol;
        cfg.halving_factor = o.factor;
        cfg.max_active = o.max_active;
        cfg.max_path_points = o.max_points;
        summaries.push_back(run_study(spec, o.repeats, cfg, !o.no_priors));
        const StudySummary& s = summaries.back();
        std::cout << s.scenario << ' ' << s.method << ": err "
                  << two_dec(s.err_pct.mean) << "% (se " << two_dec(s.err_pct.se)
                  << "), vars " << two_dec(s.n_vars.mean) << " (se "
                  << two_dec(s.n_vars.se) << "), dirs " << two_dec(s.n_dirs.mean)
                  << ", tpr " << two_dec(s.tpr.mean) << ", fpr "
                  << two_dec(s.fpr.mean) << ", " << two_dec(s.seconds.mean)
                  << " s/rep\n";
        if (g.verbose)
            for (std::size_t r = 0; r < s.rows.size(); ++r)
                std::cout << "  rep " << r + 1 << ": err "
                          << two_dec(s.rows[r].err_pct) << "%, vars "
                          << s.rows[r].n_vars << ", dirs " << s.rows[r].n_dirs
                          << ", lambda " << format_double(s.rows[r].lambda)
                          << "\n";
    }
    write_study_csv(o.out, summaries, g.no_timing);
    std::cout << "summary written to " << o.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    GlobalOpts g;
    FitOpts fo;
    PathOpts po;
    CvOpts co;
    PredictOpts pro, jo;
    SimOpts so;
    std::string sim_out;
    StudyOpts sto;

    CLI::App app{"group-sparse discriminant analysis toolkit"};
    app.require_subcommand(1);

    try {
        g.seed = env_seed();
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    app.add_option("--seed", g.seed, "random seed (default: GLOSS_SEED or 1)");
    app.add_option("--threads", g.threads,
                   "worker threads for folds/repetitions (0 = library default)");
    app.add_option("--gram", g.gram,
                   "within-class structure: standard, diagonal (study: both)");
    app.add_option("--tol", g.tol, "stationarity tolerance, relative to lambda");
    app.add_flag("--verbose", g.verbose, "chatty progress output");
    app.add_flag("--no-timestamp", g.no_timestamp,
                 "omit the creation-time comment in model files");
    app.add_flag("--no-timing", g.no_timing,
                 "write 0 for timing columns (byte-stable reruns)");

    CLI::App* c_fit = app.add_subcommand("fit", "fit one penalty value");
    c_fit->add_option("--data", fo.data, "training CSV")->required();
    c_fit->add_option("--label", fo.label, "label column (name or 0-based index)")
        ->required();
    c_fit->add_option("--lambda", fo.lambda, "penalty value")
        ->required()
        ->check(CLI::PositiveNumber);
    c_fit->add_flag("--standardize", fo.standardize, "scale features to unit variance");
    c_fit->add_option("--out", fo.out, "model file to write")->required();

    CLI::App* c_path = app.add_subcommand("path", "fit a geometric penalty path");
    c_path->add_option("--data", po.data, "training CSV")->required();
    c_path->add_option("--label", po.label, "label column")->required();
    c_path->add_option("--factor", po.factor, "geometric step (0,1)");
    c_path->add_option("--lambda-min", po.lambda_min, "lower endpoint (0 = none)");
    c_path->add_option("--max-active", po.max_active,
                       "stop when this many variables are active (0 = min(n,p))");
    c_path->add_option("--max-points", po.max_points, "hard cap on path length");
    c_path->add_flag("--standardize", po.standardize, "scale features to unit variance");
    c_path->add_option("--out", po.out, "output directory")->required();

    CLI::App* c_cv = app.add_subcommand("cv", "select lambda by cross-validation");
    c_cv->add_option("--data", co.data, "training CSV")->required();
    c_cv->add_option("--label", co.label, "label column")->required();
    c_cv->add_option("--folds", co.folds, "fold count")->check(CLI::Range(2, 1000));
    c_cv->add_option("--factor", co.factor, "geometric step (0,1)");
    c_cv->add_option("--lambda-min", co.lambda_min, "lower endpoint (0 = none)");
    c_cv->add_option("--max-active", co.max_active, "active-set stop (0 = min(n,p))");
    c_cv->add_option("--max-points", co.max_points, "hard cap on grid length");
    c_cv->add_flag("--standardize", co.standardize, "scale features to unit variance");
    c_cv->add_flag("--no-priors", co.no_priors, "ignore class priors when scoring");
    c_cv->add_option("--out", co.out, "model file (refit at best lambda)")->required();
    c_cv->add_option("--table", co.table, "also write the CV error table CSV");

    CLI::App* c_pred = app.add_subcommand("predict", "classify new data");
    c_pred->add_option("--model", pro.model, "model file")->required();
    c_pred->add_option("--data", pro.data, "CSV to classify")->required();
    c_pred->add_option("--label", pro.label,
                       "label column with ground truth (optional)");
    c_pred->add_option("--dirs", pro.dirs, "use only the leading directions");
    c_pred->add_flag("--no-priors", pro.no_priors, "ignore class priors");
    c_pred->add_option("--out", pro.out, "predictions CSV")->required();

    CLI::App* c_proj = app.add_subcommand("project", "export discriminant coordinates");
    c_proj->add_option("--model", jo.model, "model file")->required();
    c_proj->add_option("--data", jo.data, "CSV to project")->required();
    c_proj->add_option("--label", jo.label, "label column (optional)");
    c_proj->add_option("--dirs", jo.dirs, "use only the leading directions");
    c_proj->add_flag("--no-priors", jo.no_priors, "ignore class priors");
    c_proj->add_option("--out", jo.out, "coordinates CSV")->required();

    auto add_sim_options = [](CLI::App* c, SimOpts& s) {
        c->add_option("--scenario", s.scenario, "sim1, sim2, sim3, or sim4");
        c->add_option("--p", s.p, "feature count");
        c->add_option("--n-relevant", s.n_relevant, "features with class signal");
        c->add_option("--n-train", s.n_train, "training rows");
        c->add_option("--n-val", s.n_val, "validation rows");
        c->add_option("--n-test", s.n_test, "test rows");
        c->add_option("--shift", s.shift, "mean shift (0 = calibrated default)");
        c->add_option("--correlation", s.correlation,
                      "feature correlation (-1 = scenario default)");
    };

    CLI::App* c_sim = app.add_subcommand("simulate", "write synthetic datasets");
    add_sim_options(c_sim, so);
    c_sim->add_option("--out", sim_out, "output directory")->required();

    CLI::App* c_study = app.add_subcommand("study", "run the benchmark protocol");
    add_sim_options(c_study, sto.sim);
    c_study->add_option("--repeats", sto.repeats, "replicate count")
        ->check(CLI::PositiveNumber);
    c_study->add_option("--factor", sto.factor, "geometric step (0,1)");
    c_study->add_option("--max-active", sto.max_active,
                        "active-set stop (0 = min(n,p))");
    c_study->add_option("--max-points", sto.max_points, "hard cap on grid length");
    c_study->add_flag("--no-priors", sto.no_priors, "ignore class priors");
    c_study->add_option("--out", sto.out, "summary CSV")->required();

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return 1;
    }

#ifdef _OPENMP
    if (g.threads > 0) omp_set_num_threads(g.threads);
    // Re-pick the kernel backend now that the thread budget is final; the
    // parallel path only helps with more than one thread.
    gloss::kernels::set_backend(omp_get_max_threads() > 1
                                    ? gloss::kernels::Backend::parallel
                                    : gloss::kernels::Backend::serial);
#endif

    try {
        if (c_fit->parsed()) return cmd_fit(g, fo);
        if (c_path->parsed()) return cmd_path(g, po);
        if (c_cv->parsed()) return cmd_cv(g, co);
        if (c_pred->parsed()) return cmd_predict(pro);
        if (c_proj->parsed()) return cmd_project(jo);
        if (c_sim->parsed()) return cmd_simulate(g, so, sim_out);
        if (c_study->parsed()) return cmd_study(g, sto);
        std::cerr << "error: no subcommand given\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
}
