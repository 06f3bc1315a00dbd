#pragma once

#include "gloss/fit.hpp"
#include "gloss/lda.hpp"
#include "gloss/simulate.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gloss {

struct SupportMetrics {
    double tpr = 0.0;  // |selected ∩ truth| / |truth|
    double fpr = 0.0;  // |selected \ truth| / (p − |truth|)
};

// Both index lists must be ascending subsets of 0..p-1; truth must be
// nonempty.
SupportMetrics support_metrics(const std::vector<int>& selected,
                               const std::vector<int>& truth, Eigen::Index p);

struct CvResult {
    std::vector<double> lambdas;  // the grid, descending
    Matrix fold_errors;           // folds × grid size, validation error rates
    Vector mean_error;            // per grid point, averaged over folds
    Vector se_error;              // sd over folds / sqrt(folds)
    std::size_t best_index = 0;   // first (= largest-lambda) minimizer
    double best_lambda = 0.0;
};

// Stratified k-fold selection of lambda over a shared descending grid. Folds
// are class-stratified (per-class shuffle, round-robin), deterministic given
// seed; each fold's training half is re-centered before fitting. Ties in mean
// error resolve toward the larger lambda.
CvResult cross_validate(const LabeledDataset& d, int folds,
                        const std::vector<double>& grid, const PathConfig& cfg,
                        std::uint64_t seed, bool use_priors = true);

// One replicate of the simulation benchmark.
struct StudyRow {
    double err_pct = 0.0;  // test error, percent
    double n_vars = 0.0;   // selected variables (nonzero rows after truncation)
    double n_dirs = 0.0;   // selected discriminant directions
    double tpr = 0.0;
    double fpr = 0.0;
    double seconds = 0.0;  // wall time: path fit + selection + test scoring
    double lambda = 0.0;   // chosen penalty
};

struct StudyAggregate {
    double mean = 0.0;
    double se = 0.0;  // sd / sqrt(repeats); 0 for a single repeat
};

struct StudySummary {
    std::string scenario;
    std::string method;  // "gloss" or "gloss-d"
    int repeats = 0;
    std::vector<StudyRow> rows;  // per replicate, in replicate order
    StudyAggregate err_pct, n_vars, n_dirs, tpr, fpr, seconds;
};

// Full benchmark protocol, one (scenario, method) pair: per replicate draw
// fresh train/val/test sets (seed derived from spec.seed and the replicate
// index), fit the path on train, pick (lambda, dimension count) minimizing
// validation error (ties: larger lambda, then fewer directions), report test
// metrics. Replicates may run in parallel; aggregation order is fixed.
StudySummary run_study(const SimulationSpec& spec, int repeats,
                       const PathConfig& cfg, bool use_priors = true);

// CSV with one row per summary. zero_timing writes 0 in seconds_mean so two
// runs with identical arguments produce identical bytes.
void write_study_csv(const std::string& path,
                     const std::vector<StudySummary>& summaries,
                     bool zero_timing = false);

} // namespace gloss
