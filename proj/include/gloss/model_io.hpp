#pragma once

#include "gloss/dataset.hpp"
#include "gloss/fit.hpp"
#include "gloss/lda.hpp"

#include <string>
#include <vector>

namespace gloss {

// On-disk model: everything needed to rebuild the classifier exactly and to
// re-apply the training centering to new data. Stored in a line-oriented text
// format ("gloss-model/1") with shortest-round-trip doubles, so save/load is
// bit-exact.
struct SavedModel {
    double lambda = 0.0;
    GramMode gram_mode = GramMode::standard;
    bool converged = true;
    int n = 0;  // training rows (the discriminant rescaling depends on it)
    int p = 0;
    int K = 0;
    int n_dirs = 0;  // columns of B_star / theta_star
    int m_eff = 0;   // directions kept by the classifier
    bool standardize = false;
    std::vector<std::string> class_labels;  // K
    Vector class_priors;                    // K
    Vector centering_mean;                  // p
    Vector centering_scale;                 // p when standardize, else empty
    std::vector<int> active;                // ascending, 0-based
    Matrix B_star_active;                   // n_active × n_dirs
    Matrix theta_star;                      // K × n_dirs
    Vector alpha;                           // n_dirs, descending
    Matrix centroids;                       // K × m_eff
};

SavedModel make_saved(const OsFit& fit, const LabeledDataset& train,
                      const CenteringStats& centering, GramMode mode,
                      double alpha_tol = 1e-8);

// with_timestamp adds a "# created <UTC>" comment line; suppress it when
// byte-identical reruns matter.
void save_model(const std::string& path, const SavedModel& m,
                bool with_timestamp = true);

SavedModel load_model(const std::string& path);

// Deterministic rebuild: identical arithmetic to os_to_lda on the original
// fit, so predictions survive a save/load round trip unchanged.
LdaModel to_classifier(const SavedModel& m);

CenteringStats centering_of(const SavedModel& m);

} // namespace gloss
