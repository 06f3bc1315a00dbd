#pragma once

#include "gloss/common.hpp"

namespace gloss {

// A design matrix ready for fitting: columns centered (and scaled when
// standardization was requested), labels mapped to dense ids in order of first
// appearance.
struct LabeledDataset {
    Matrix X;                                // n×p, centered
    std::vector<int> y;                      // n class ids in [0, K)
    Matrix Y;                                // n×K indicator matrix
    std::vector<long> class_counts;          // per class id
    std::vector<std::string> class_labels;   // id -> original label text
    std::vector<std::string> feature_names;  // empty when the file had no header

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
    int n_classes() const { return static_cast<int>(class_counts.size()); }
};

// Training-column statistics needed to put new data into model coordinates.
// scale is empty unless standardization was applied.
struct CenteringStats {
    Vector mean;
    Vector scale;
};

// Sample scatter decomposition total = between + within, all computed from the
// centered design and per-class means (the class-indicator projector is never
// materialized).
struct ScatterMatrices {
    Matrix total;        // p×p, n^{-1} X^T X
    Matrix between;      // p×p
    Matrix within;       // p×p
    Matrix class_means;  // K×p means of the centered rows by class
};

struct LoadOptions {
    std::string label_column;  // column name (needs a header) or 0-based index
    bool standardize = false;
};

struct LoadedData {
    LabeledDataset data;
    CenteringStats centering;
};

// Reads a comma-separated file with numeric feature columns and one label
// column. A header row is assumed when the label is given by name, and
// auto-detected otherwise (header iff any first-row feature cell is not a
// number). Cells must be plain finite numbers; empty or malformed cells are
// reported with their row/column.
LoadedData load_csv(const std::string& path, const LoadOptions& opts);

// Same file dialect, but rows are kept raw (no centering): what prediction
// needs, since new data goes through the model's stored centering. An empty
// label selector reads every column as a feature and leaves labels empty.
struct RawFile {
    Matrix X;
    std::vector<std::string> labels;  // empty when no label column was named
    std::vector<std::string> feature_names;
};
RawFile load_raw_csv(const std::string& path, const std::string& label_column);

// Writes "label,x0,...,x{p-1}" with shortest-round-trip numbers.
void write_labeled_csv(const std::string& path, const Matrix& X,
                       const std::vector<std::string>& labels);

// Same pipeline starting from an in-memory raw matrix and label strings.
LoadedData make_dataset(const Matrix& X_raw, const std::vector<std::string>& labels,
                        bool standardize = false);

// Convenience for callers that already hold dense ids.
LoadedData make_dataset(const Matrix& X_raw, const std::vector<int>& ids, int K,
                        bool standardize = false);

// y[i] in [0, K) -> n×K 0/1 indicator matrix.
Matrix encode_indicators(const std::vector<int>& y, int K);

// Row-wise argmax (ties to the smallest class id); inverse of encode_indicators.
std::vector<int> decode_indicators(const Matrix& Y);

ScatterMatrices scatter_matrices(const LabeledDataset& d);

// K×p class means of the centered rows, plus helpers shared with the fit path.
Matrix class_means(const LabeledDataset& d);

} // namespace gloss
