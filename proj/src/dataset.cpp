#include "gloss/dataset.hpp"

#include "gloss/kernels.hpp"

#include <cassert>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace gloss {

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

bool parse_double(const std::string& s, double& out) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return false;
    std::size_t e = s.find_last_not_of(" \t\r") + 1;
    const char* begin = s.data() + b;
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end != s.data() + e || errno == ERANGE || !std::isfinite(v)) return false;
    out = v;
    return true;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r") + 1;
    return s.substr(b, e - b);
}

bool parse_int(const std::string& s, int& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* b = t.data();
    const char* e = b + t.size();
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e;
}

} // namespace

Matrix encode_indicators(const std::vector<int>& y, int K) {
    if (K < 1) throw DataError("encode_indicators: class count must be positive");
    Matrix Y = Matrix::Zero(static_cast<Eigen::Index>(y.size()), K);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || y[i] >= K)
            throw DataError("encode_indicators: class id out of range at row " +
                            std::to_string(i));
        Y(static_cast<Eigen::Index>(i), y[i]) = 1.0;
    }
    return Y;
}

std::vector<int> decode_indicators(const Matrix& Y) {
    std::vector<int> y(static_cast<std::size_t>(Y.rows()));
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        int best = 0;
        for (Eigen::Index k = 1; k < Y.cols(); ++k)
            if (Y(i, k) > Y(i, best)) best = static_cast<int>(k);
        y[static_cast<std::size_t>(i)] = best;
    }
    return y;
}

LoadedData make_dataset(const Matrix& X_raw, const std::vector<int>& ids, int K,
                        bool standardize) {
    const Eigen::Index n = X_raw.rows(), p = X_raw.cols();
    if (static_cast<Eigen::Index>(ids.size()) != n)
        throw DataError("make_dataset: label count does not match row count");
    if (n < 2) throw DataError("make_dataset: need at least two rows");
    if (K < 2) throw DataError("make_dataset: need at least two classes");

    LoadedData out;
    LabeledDataset& d = out.data;
    d.X = X_raw;
    d.y = ids;
    d.class_counts.assign(static_cast<std::size_t>(K), 0);
    for (int id : ids) {
        if (id < 0 || id >= K) throw DataError("make_dataset: class id out of range");
        ++d.class_counts[static_cast<std::size_t>(id)];
    }
    for (int k = 0; k < K; ++k)
        if (d.class_counts[static_cast<std::size_t>(k)] == 0)
            throw DataError("make_dataset: class " + std::to_string(k) + " is empty");

    // Dense ids carry no label text; default to the decimal ids so that
    // downstream consumers (model files need one label per class) stay valid.
    // The string-label overload overwrites these with the original text.
    d.class_labels.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) d.class_labels.push_back(std::to_string(k));

    out.centering.mean = d.X.colwise().mean();
    d.X.rowwise() -= out.centering.mean.transpose();
    if (standardize) {
        Vector sd(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double ss = d.X.col(j).squaredNorm();
            if (ss == 0.0)
                throw DataError("make_dataset: feature " + std::to_string(j) +
                                " has zero variance; cannot standardize");
            sd[j] = std::sqrt(ss / static_cast<double>(n - 1));
        }
        d.X.array().rowwise() /= sd.transpose().array();
        out.centering.scale = sd;
    }
    d.Y = encode_indicators(d.y, K);
    return out;
}

LoadedData make_dataset(const Matrix& X_raw, const std::vector<std::string>& labels,
                        bool standardize) {
    std::map<std::string, int> seen;
    std::vector<int> ids(labels.size());
    std::vector<std::string> order;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = seen.find(labels[i]);
        if (it == seen.end()) {
            it = seen.emplace(labels[i], static_cast<int>(order.size())).first;
            order.push_back(labels[i]);
        }
        ids[i] = it->second;
    }
    if (order.size() < 2)
        throw DataError("make_dataset: need at least two distinct labels, found " +
                        std::to_string(order.size()));
    LoadedData out = make_dataset(X_raw, ids, static_cast<int>(order.size()), standardize);
    out.data.class_labels = std::move(order);
    return out;
}

RawFile load_raw_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw DataError("'" + path + "' is empty");

    const std::size_t ncols = rows[0].size();
    for (std::size_t r = 1; r < rows.size(); ++r)
        if (rows[r].size() != ncols)
            throw DataError(path + ": row " + std::to_string(r + 1) + " has " +
                            std::to_string(rows[r].size()) + " cells, expected " +
                            std::to_string(ncols));
    const bool want_label = !label_column.empty();
    if (want_label && ncols < 2)
        throw DataError(path + ": no feature columns besides the label");

    // Resolve the label column; an integer-looking selector means a 0-based index.
    int label_idx = -1;
    bool header = false;
    int idx_value = 0;
    if (!want_label || parse_int(label_column, idx_value)) {
        if (want_label) {
            if (idx_value < 0 || static_cast<std::size_t>(idx_value) >= ncols)
                throw DataError(path + ": label column index " +
                                std::to_string(idx_value) + " out of range (file has " +
                                std::to_string(ncols) + " columns)");
            label_idx = idx_value;
        }
        // Header auto-detection: a header is present iff some first-row feature
        // cell does not parse as a number.
        double tmp;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (static_cast<int>(c) == label_idx) continue;
            if (!parse_double(rows[0][c], tmp)) {
                header = true;
                break;
            }
        }
    } else {
        header = true;  // selecting by name requires a header row
        for (std::size_t c = 0; c < ncols; ++c)
            if (trim(rows[0][c]) == label_column) {
                label_idx = static_cast<int>(c);
                break;
            }
        if (label_idx < 0)
            throw DataError(path + ": no column named '" + label_column + "'");
    }

    RawFile out;
    if (header) {
        for (std::size_t c = 0; c < ncols; ++c)
            if (static_cast<int>(c) != label_idx)
                out.feature_names.push_back(trim(rows[0][c]));
    }
    const std::size_t first = header ? 1 : 0;
    const std::size_t n = rows.size() - first;
    if (n < 1) throw DataError(path + ": no data rows");

    const auto pf = static_cast<Eigen::Index>(want_label ? ncols - 1 : ncols);
    out.X.resize(static_cast<Eigen::Index>(n), pf);
    if (want_label) out.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& cells = rows[r + first];
        Eigen::Index jc = 0;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (static_cast<int>(c) == label_idx) {
                out.labels[r] = trim(cells[c]);
                if (out.labels[r].empty())
                    throw DataError(path + ": empty label at row " +
                                    std::to_string(r + first + 1));
                continue;
            }
            double v;
            if (!parse_double(cells[c], v))
                throw DataError(path + ": cell at row " + std::to_string(r + first + 1) +
                                ", column " + std::to_string(c + 1) +
                                " is not a finite number: '" + trim(cells[c]) + "'");
            out.X(static_cast<Eigen::Index>(r), jc++) = v;
        }
    }
    return out;
}

LoadedData load_csv(const std::string& path, const LoadOptions& opts) {
    if (opts.label_column.empty())
        throw DataError("label column selector is empty");
    RawFile rf = load_raw_csv(path, opts.label_column);
    if (rf.X.rows() < 2) throw DataError(path + ": need at least two data rows");
    LoadedData out = make_dataset(rf.X, rf.labels, opts.standardize);
    out.data.feature_names = std::move(rf.feature_names);
    return out;
}

void write_labeled_csv(const std::string& path, const Matrix& X,
                       const std::vector<std::string>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != X.rows())
        throw DataError("write_labeled_csv: label count does not match rows");
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "label";
    for (Eigen::Index j = 0; j < X.cols(); ++j) out << ",x" << j;
    out << '\n';
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        out << labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            out << ',' << format_double(X(i, j));
        out << '\n';
    }
    if (!out) throw DataError("write to " + path + " failed");
}

Matrix class_means(const LabeledDataset& d) {
    const int K = d.n_classes();
    Matrix M = Matrix::Zero(K, d.p());
    for (Eigen::Index i = 0; i < d.n(); ++i) M.row(d.y[static_cast<std::size_t>(i)]) += d.X.row(i);
    for (int k = 0; k < K; ++k) M.row(k) /= static_cast<double>(d.class_counts[static_cast<std::size_t>(k)]);
    return M;
}

ScatterMatrices scatter_matrices(const LabeledDataset& d) {
    const double n = static_cast<double>(d.n());
    ScatterMatrices s;
    kernels::gram_full(d.X, s.total);
    s.total /= n;
    s.class_means = class_means(d);
    s.between = Matrix::Zero(d.p(), d.p());
    for (int k = 0; k < d.n_classes(); ++k) {
        const double nk = static_cast<double>(d.class_counts[static_cast<std::size_t>(k)]);
        s.between.noalias() += (nk / n) * s.class_means.row(k).transpose() * s.class_means.row(k);
    }
    s.within = s.total - s.between;
    return s;
}

} // namespace gloss
