#include "doctest.h"

#include "gloss/dataset.hpp"
#include "gloss/fit.hpp"
#include "gloss/lda.hpp"
#include "gloss/model_io.hpp"
#include "helpers.hpp"

#include <cstdlib>
#include <string>
#include <vector>

#include <sys/wait.h>

using testutil::TempDir;

namespace {

struct CliResult {
    int code = -1;
    std::string output;  // stdout + stderr
};

CliResult run_cli(const TempDir& tmp, const std::string& args) {
    static int counter = 0;
    const std::string capture = tmp.file("cli-out-" + std::to_string(counter++) + ".txt");
    const std::string cmd =
        std::string(GLOSS_CLI_PATH) + " " + args + " >" + capture + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = testutil::read_file(capture);
    return r;
}

// Everything below shares one generated dataset; regenerating per test case
// would only re-run the same code path.
struct CliWorld {
    TempDir tmp;
    std::string simdir, train, model;
    double lambda = 0.0;

    CliWorld() {
        simdir = tmp.file("sim");
        CliResult sim = run_cli(tmp,
                                "simulate --scenario sim1 --p 60 --n-relevant 20 "
                                "--n-train 40 --n-val 40 --n-test 100 --seed 3 --out " +
                                    simdir);
        REQUIRE(sim.code == 0);
        train = simdir + "/train.csv";

        // Pick a penalty with substance: a third of the entry threshold.
        gloss::LoadedData ld = gloss::load_csv(train, {"0", false});
        lambda = 0.3 * gloss::lambda_max(ld.data, gloss::init_theta0(ld.data.Y));

        model = tmp.file("model.txt");
        CliResult fit = run_cli(tmp, "fit --data " + train + " --label 0 --lambda " +
                                         gloss::format_double(lambda) +
                                         " --no-timestamp --out " + model);
        REQUIRE(fit.code == 0);
        REQUIRE(fit.output.find("active variables") != std::string::npos);
    }
};

CliWorld& world() {
    static CliWorld w;
    return w;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::string::size_type start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

} // namespace

TEST_CASE("simulate writes the three splits and the true support") {
    CliWorld& w = world();
    for (const char* name : {"train.csv", "val.csv", "test.csv"})
        CHECK(std::filesystem::exists(std::filesystem::path(w.simdir) / name));

    const auto support = lines_of(testutil::read_file(w.simdir + "/support.txt"));
    REQUIRE(support.size() == 20);
    for (int j = 0; j < 20; ++j) CHECK(support[static_cast<std::size_t>(j)] == std::to_string(j));

    gloss::RawFile rf = gloss::load_raw_csv(w.train, "0");
    CHECK(rf.X.rows() == 40);
    CHECK(rf.X.cols() == 60);
}

TEST_CASE("fitting twice without timestamps is byte-identical") {
    CliWorld& w = world();
    const std::string again = w.tmp.file("model-again.txt");
    CliResult r = run_cli(w.tmp, "fit --data " + w.train + " --label 0 --lambda " +
                                     gloss::format_double(w.lambda) +
                                     " --no-timestamp --out " + again);
    REQUIRE(r.code == 0);
    CHECK(testutil::read_file(again) == testutil::read_file(w.model));
}

TEST_CASE("predictions agree with the library round trip and report the error rate") {
    CliWorld& w = world();
    const std::string preds = w.tmp.file("preds.csv");
    CliResult r = run_cli(w.tmp, "predict --model " + w.model + " --data " + w.train +
                                     " --label 0 --out " + preds);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("error rate") != std::string::npos);

    const auto rows = lines_of(testutil::read_file(preds));
    REQUIRE(rows.size() == 41);
    CHECK(rows[0] == "id,true_label,predicted_label");

    // Recompute in-process from the same artifacts.
    gloss::SavedModel sm = gloss::load_model(w.model);
    gloss::LdaModel clf = gloss::to_classifier(sm);
    gloss::RawFile rf = gloss::load_raw_csv(w.train, "0");
    std::vector<int> expected = gloss::classify(clf, rf.X, gloss::centering_of(sm), true);
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const std::string& line = rows[i + 1];
        const std::string want =
            std::to_string(i) + "," + rf.labels[i] + "," +
            sm.class_labels[static_cast<std::size_t>(expected[i])];
        CHECK(line == want);
    }
}

TEST_CASE("unlabeled data predicts without a truth column") {
    CliWorld& w = world();
    gloss::RawFile rf = gloss::load_raw_csv(w.train, "0");

    // Write the first five rows without labels.
    std::string text;
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index j = 0; j < rf.X.cols(); ++j) {
            if (j) text += ',';
            text += gloss::format_double(rf.X(i, j));
        }
        text += '\n';
    }
    const std::string unlabeled = w.tmp.file("unlabeled.csv");
    testutil::write_file(unlabeled, text);

    const std::string preds = w.tmp.file("preds-unlabeled.csv");
    CliResult r = run_cli(w.tmp,
                          "predict --model " + w.model + " --data " + unlabeled +
                              " --out " + preds);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("error rate") == std::string::npos);
    const auto rows = lines_of(testutil::read_file(preds));
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == "id,predicted_label");
}

TEST_CASE("projection exports one coordinate column per kept direction") {
    CliWorld& w = world();
    gloss::SavedModel sm = gloss::load_model(w.model);
    REQUIRE(sm.m_eff >= 2);

    const std::string coords = w.tmp.file("coords.csv");
    CliResult r = run_cli(w.tmp, "project --model " + w.model + " --data " + w.train +
                                     " --label 0 --out " + coords);
    REQUIRE(r.code == 0);
    const auto rows = lines_of(testutil::read_file(coords));
    REQUIRE(rows.size() == 41);
    std::string header = "id";
    for (int d = 1; d <= sm.m_eff; ++d) header += ",z_" + std::to_string(d);
    header += ",true_label,predicted_label";
    CHECK(rows[0] == header);

    // Restricting the direction count narrows the file.
    const std::string one = w.tmp.file("coords-1.csv");
    CliResult r1 = run_cli(w.tmp, "project --model " + w.model + " --data " + w.train +
                                      " --label 0 --dirs 1 --out " + one);
    REQUIRE(r1.code == 0);
    CHECK(lines_of(testutil::read_file(one))[0] == "id,z_1,true_label,predicted_label");

    // Asking for more directions than the model kept is a data error.
    CliResult bad = run_cli(w.tmp, "project --model " + w.model + " --data " + w.train +
                                       " --label 0 --dirs 99 --out " + one);
    CHECK(bad.code == 1);
    CHECK(bad.output.find("exceeds") != std::string::npos);
}

TEST_CASE("path emits an index CSV plus one loadable model per point") {
    CliWorld& w = world();
    const std::string pathdir = w.tmp.file("path");
    CliResult r = run_cli(w.tmp, "path --data " + w.train +
                                     " --label 0 --max-points 6 --no-timestamp --out " +
                                     pathdir);
    REQUIRE(r.code == 0);

    const auto rows = lines_of(testutil::read_file(pathdir + "/path.csv"));
    REQUIRE(rows.size() >= 3);
    CHECK(rows[0] == "index,lambda,n_active,n_dirs,objective,converged,file");

    // First point is the empty model at the entry threshold.
    CHECK(rows[1].find("1,") == 0);
    CHECK(rows[1].find(",0,0,") != std::string::npos);

    gloss::SavedModel first = gloss::load_model(pathdir + "/point_0001.model");
    CHECK(first.active.empty());
    gloss::SavedModel second = gloss::load_model(pathdir + "/point_0002.model");
    CHECK(second.lambda < first.lambda);
}

TEST_CASE("cross-validation picks a penalty and can export the error table") {
    CliWorld& w = world();
    const std::string cvmodel = w.tmp.file("cv-model.txt");
    const std::string table = w.tmp.file("cv-table.csv");
    CliResult r = run_cli(w.tmp, "cv --data " + w.train +
                                     " --label 0 --folds 4 --factor 0.5 --max-points 8 "
                                     "--no-timestamp --out " +
                                     cvmodel + " --table " + table);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("best lambda") != std::string::npos);

    const auto rows = lines_of(testutil::read_file(table));
    REQUIRE(rows.size() >= 3);
    CHECK(rows[0] == "lambda,mean_error,se_error,n_active");
    CHECK_NOTHROW(gloss::load_model(cvmodel));
}

TEST_CASE("studies rerun byte-identically with timing suppressed and cover both variants") {
    CliWorld& w = world();
    const std::string base =
        "study --scenario sim1 --p 60 --n-relevant 20 --n-train 40 --n-val 40 "
        "--n-test 100 --repeats 1 --seed 12 --no-timing --out ";
    const std::string a = w.tmp.file("study-a.csv");
    const std::string b = w.tmp.file("study-b.csv");

    CliResult ra = run_cli(w.tmp, base + a);
    REQUIRE(ra.code == 0);
    CliResult rb = run_cli(w.tmp, base + b);
    REQUIRE(rb.code == 0);
    CHECK(testutil::read_file(a) == testutil::read_file(b));

    const std::string both = w.tmp.file("study-both.csv");
    CliResult rboth = run_cli(w.tmp, "--gram both " + base + both);
    REQUIRE(rboth.code == 0);
    const auto rows = lines_of(testutil::read_file(both));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].find("sim1,gloss,") == 0);
    CHECK(rows[2].find("sim1,gloss-d,") == 0);
}

TEST_CASE("failures exit with the documented codes") {
    CliWorld& w = world();

    CliResult missing = run_cli(w.tmp, "fit --data /nonexistent.csv --label 0 "
                                       "--lambda 1 --out " +
                                           w.tmp.file("x.txt"));
    CHECK(missing.code == 1);
    CHECK(missing.output.find("error") != std::string::npos);

    CliResult badflag = run_cli(w.tmp, "fit --data " + w.train + " --label 0 --out " +
                                           w.tmp.file("y.txt"));
    CHECK(badflag.code == 1);  // --lambda is required

    CliResult badgram = run_cli(w.tmp, "--gram bogus fit --data " + w.train +
                                           " --label 0 --lambda 1 --out " +
                                           w.tmp.file("z.txt"));
    CHECK(badgram.code == 1);
    CHECK(badgram.output.find("gram") != std::string::npos);

    CliResult badseed =
        run_cli(w.tmp, "simulate --out " + w.tmp.file("s"));
    CHECK(badseed.code == 0);  // baseline: the same command succeeds...
    const std::string withenv = "GLOSS_SEED=notanumber " + std::string(GLOSS_CLI_PATH) +
                                " simulate --out " + w.tmp.file("s2") +
                                " > /dev/null 2>&1";
    const int status = std::system(withenv.c_str());
    CHECK((WIFEXITED(status) ? WEXITSTATUS(status) : -1) == 1);
}

TEST_CASE("the environment seed matches the explicit flag") {
    CliWorld& w = world();
    const std::string d1 = w.tmp.file("env-seed");
    const std::string d2 = w.tmp.file("flag-seed");
    const std::string envcmd = "GLOSS_SEED=123 " + std::string(GLOSS_CLI_PATH) +
                               " simulate --scenario sim2 --p 20 --n-relevant 5 "
                               "--n-train 12 --n-val 8 --n-test 8 --out " +
                               d1 + " > /dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(envcmd.c_str())) == 0);
    CliResult flag = run_cli(w.tmp,
                             "simulate --scenario sim2 --p 20 --n-relevant 5 "
                             "--n-train 12 --n-val 8 --n-test 8 --seed 123 --out " +
                                 d2);
    REQUIRE(flag.code == 0);
    CHECK(testutil::read_file(d1 + "/train.csv") == testutil::read_file(d2 + "/train.csv"));
    CHECK(testutil::read_file(d1 + "/test.csv") == testutil::read_file(d2 + "/test.csv"));
}

TEST_CASE("a penalty at the entry threshold still yields a scoreable model") {
    CliWorld& w = world();
    gloss::LoadedData ld = gloss::load_csv(w.train, {"0", false});
    const double lmax = gloss::lambda_max(ld.data, gloss::init_theta0(ld.data.Y));

    const std::string empty_model = w.tmp.file("empty-model.txt");
    CliResult r = run_cli(w.tmp, "fit --data " + w.train + " --label 0 --lambda " +
                                     gloss::format_double(1.01 * lmax) +
                                     " --no-timestamp --out " + empty_model);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("0 active variables") != std::string::npos);

    const std::string preds = w.tmp.file("empty-preds.csv");
    CliResult p = run_cli(w.tmp, "predict --model " + empty_model + " --data " + w.train +
                                     " --label 0 --out " + preds);
    CHECK(p.code == 0);  // prior-only predictions are still predictions
}
