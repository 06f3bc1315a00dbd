#include "doctest.h"

#include "gloss/eval.hpp"
#include "helpers.hpp"

#include <cmath>
#include <string>
#include <vector>

using gloss::Matrix;
using gloss::SimulationSpec;
using gloss::Vector;

namespace {

// Small well-separated two-class problem: CV should drive the error to zero
// once the penalty is small enough to admit the informative columns.
gloss::LoadedData separable_data() {
    SimulationSpec spec;
    spec.scenario = gloss::Scenario::sim2;
    spec.p = 20;
    spec.n_relevant = 5;
    spec.n_train = 60;
    spec.n_val = 4;
    spec.n_test = 4;
    spec.shift = 3.0;  // far apart
    spec.seed = 17;
    gloss::SimulatedData d = gloss::simulate(spec);
    return testutil::make_labeled(d.X_train, d.y_train, d.K);
}

SimulationSpec small_study_spec(std::uint64_t seed) {
    SimulationSpec spec;
    spec.scenario = gloss::Scenario::sim1;
    spec.p = 60;
    spec.n_relevant = 20;
    spec.n_train = 40;
    spec.n_val = 40;
    spec.n_test = 200;
    spec.seed = seed;
    return spec;
}

} // namespace

TEST_CASE("support metrics count hits and false alarms with safe denominators") {
    gloss::SupportMetrics m = gloss::support_metrics({0, 1, 5}, {0, 1, 2}, 10);
    CHECK(m.tpr == doctest::Approx(2.0 / 3.0));
    CHECK(m.fpr == doctest::Approx(1.0 / 7.0));

    gloss::SupportMetrics none = gloss::support_metrics({}, {0, 1}, 10);
    CHECK(none.tpr == 0.0);
    CHECK(none.fpr == 0.0);

    gloss::SupportMetrics all = gloss::support_metrics({0, 1, 2}, {0, 1, 2}, 3);
    CHECK(all.tpr == 1.0);
    CHECK(all.fpr == 0.0);  // no negatives to false-alarm on

    CHECK_THROWS_AS(gloss::support_metrics({0}, {}, 5), gloss::DataError);
    CHECK_THROWS_AS(gloss::support_metrics({7}, {0}, 5), gloss::DataError);
    CHECK_THROWS_AS(gloss::support_metrics({0}, {9}, 5), gloss::DataError);
}

TEST_CASE("cross-validation rejects impossible fold layouts and broken grids") {
    gloss::LoadedData ld = separable_data();
    gloss::PathConfig cfg;
    const std::vector<double> grid{1.0, 0.5};

    CHECK_THROWS_AS(gloss::cross_validate(ld.data, 1, grid, cfg, 1), gloss::DataError);
    CHECK_THROWS_AS(gloss::cross_validate(ld.data, 31, grid, cfg, 1), gloss::DataError);
    CHECK_THROWS_AS(gloss::cross_validate(ld.data, 3, {}, cfg, 1), gloss::DataError);
    CHECK_THROWS_AS(gloss::cross_validate(ld.data, 3, {0.5, 0.5}, cfg, 1), gloss::DataError);
    CHECK_THROWS_AS(gloss::cross_validate(ld.data, 3, {0.5, 1.0}, cfg, 1), gloss::DataError);
}

TEST_CASE("cross-validation finds the separating penalty and reports the grid faithfully") {
    gloss::LoadedData ld = separable_data();
    Matrix theta0 = gloss::init_theta0(ld.data.Y);
    const double lmax = gloss::lambda_max(ld.data, theta0);
    std::vector<double> grid;
    for (double f = 1.0; f > 0.05; f *= 0.5) grid.push_back(f * lmax);

    gloss::PathConfig cfg;
    gloss::CvResult cv = gloss::cross_validate(ld.data, 3, grid, cfg, 42);

    CHECK(cv.lambdas == grid);
    CHECK(cv.fold_errors.rows() == 3);
    CHECK(cv.fold_errors.cols() == static_cast<Eigen::Index>(grid.size()));
    CHECK(cv.mean_error.size() == static_cast<Eigen::Index>(grid.size()));
    CHECK(cv.best_lambda == grid[cv.best_index]);

    // The all-zero model at lambda_max cannot beat chance; the best point can
    // barely miss on data this separated.
    CHECK(cv.mean_error[0] > 0.2);
    CHECK(cv.mean_error[static_cast<Eigen::Index>(cv.best_index)] < 0.05);

    // Fold means and standard errors recompute from the fold table.
    for (Eigen::Index t = 0; t < cv.mean_error.size(); ++t) {
        const double mean = cv.fold_errors.col(t).mean();
        CHECK(cv.mean_error[t] == doctest::Approx(mean).epsilon(1e-12));
        const double sd = std::sqrt((cv.fold_errors.col(t).array() - mean).square().sum() /
                                    (static_cast<double>(cv.fold_errors.rows()) - 1.0));
        CHECK(cv.se_error[t] ==
              doctest::Approx(sd / std::sqrt(static_cast<double>(cv.fold_errors.rows())))
                  .epsilon(1e-12));
    }

    // Ties resolve toward the larger penalty: nothing before best_index may
    // already attain the minimum.
    const double best = cv.mean_error[static_cast<Eigen::Index>(cv.best_index)];
    for (std::size_t t = 0; t < cv.best_index; ++t)
        CHECK(cv.mean_error[static_cast<Eigen::Index>(t)] > best);

    // Same seed, same folds, same table.
    gloss::CvResult again = gloss::cross_validate(ld.data, 3, grid, cfg, 42);
    CHECK(testutil::same_bits(again.fold_errors, cv.fold_errors));
    CHECK(again.best_index == cv.best_index);
}

TEST_CASE("study replicates are deterministic given the scenario settings and aggregate correctly") {
    gloss::PathConfig cfg;
    cfg.max_path_points = 16;

    gloss::StudySummary s = gloss::run_study(small_study_spec(7), 2, cfg);
    CHECK(s.scenario == "sim1");
    CHECK(s.method == "gloss");
    CHECK(s.repeats == 2);
    REQUIRE(s.rows.size() == 2);

    gloss::StudySummary t = gloss::run_study(small_study_spec(7), 2, cfg);
    for (std::size_t r = 0; r < 2; ++r) {
        CHECK(s.rows[r].err_pct == t.rows[r].err_pct);
        CHECK(s.rows[r].n_vars == t.rows[r].n_vars);
        CHECK(s.rows[r].n_dirs == t.rows[r].n_dirs);
        CHECK(s.rows[r].tpr == t.rows[r].tpr);
        CHECK(s.rows[r].fpr == t.rows[r].fpr);
        CHECK(s.rows[r].lambda == t.rows[r].lambda);
    }
    // Different replicates see different data.
    CHECK(s.rows[0].lambda != s.rows[1].lambda);

    for (const gloss::StudyRow& row : s.rows) {
        CHECK(row.err_pct >= 0.0);
        CHECK(row.err_pct <= 100.0);
        CHECK(row.tpr >= 0.0);
        CHECK(row.tpr <= 1.0);
        CHECK(row.fpr >= 0.0);
        CHECK(row.fpr <= 1.0);
        CHECK(row.n_dirs >= 1.0);
        CHECK(row.n_dirs <= 3.0);  // four classes
        CHECK(row.lambda > 0.0);
        CHECK(row.seconds >= 0.0);
    }

    // Aggregates are the plain mean and standard error of the rows.
    const double mean = 0.5 * (s.rows[0].err_pct + s.rows[1].err_pct);
    CHECK(s.err_pct.mean == doctest::Approx(mean).epsilon(1e-12));
    const double sd = std::sqrt((std::pow(s.rows[0].err_pct - mean, 2) +
                                 std::pow(s.rows[1].err_pct - mean, 2)) /
                                1.0);
    CHECK(s.err_pct.se == doctest::Approx(sd / std::sqrt(2.0)).epsilon(1e-12));

    gloss::StudySummary solo = gloss::run_study(small_study_spec(8), 1, cfg);
    CHECK(solo.err_pct.se == 0.0);
    CHECK(solo.n_vars.se == 0.0);
}

TEST_CASE("study summaries serialize to a stable CSV when timing is zeroed") {
    gloss::PathConfig cfg;
    cfg.max_path_points = 12;
    gloss::StudySummary s = gloss::run_study(small_study_spec(9), 1, cfg);

    testutil::TempDir tmp;
    const std::string a = tmp.file("a.csv");
    const std::string b = tmp.file("b.csv");
    gloss::write_study_csv(a, {s}, true);
    gloss::write_study_csv(b, {s}, true);
    const std::string text = testutil::read_file(a);
    CHECK(text == testutil::read_file(b));
    CHECK(text.rfind("scenario,method,err_mean", 0) == 0);
    CHECK(text.find("sim1,gloss,") != std::string::npos);
    // Timing zeroed: the row ends in ",0".
    CHECK(text.find(",0\n") != std::string::npos);

    // With timing enabled the measured value lands in the file instead.
    const std::string c = tmp.file("c.csv");
    gloss::write_study_csv(c, {s}, false);
    CHECK(testutil::read_file(c).size() >= text.size());
}
