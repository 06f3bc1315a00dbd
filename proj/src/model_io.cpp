#include "gloss/model_io.hpp"

#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

namespace gloss {

namespace {

constexpr const char* kMagic = "gloss-model/1";

std::string join_row(const double* vals, Eigen::Index count) {
    std::string out;
    for (Eigen::Index i = 0; i < count; ++i) {
        if (i) out += ' ';
        out += format_double(vals[i]);
    }
    return out;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Cursor over the file's lines with location-aware errors.
class LineReader {
  public:
    LineReader(std::vector<std::string> lines, std::string path)
        : lines_(std::move(lines)), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw DataError(path_ + ":" + std::to_string(pos_) + ": " + what);
    }

    const std::string& next() {
        while (pos_ < lines_.size() && !lines_[pos_].empty() &&
               lines_[pos_][0] == '#')
            ++pos_;  // comment lines are ignorable anywhere
        if (pos_ >= lines_.size()) fail("unexpected end of model file");
        return lines_[pos_++];
    }

    // "keyword value" line
    std::string field(const std::string& keyword) {
        const std::string& line = next();
        if (line.size() <= keyword.size() ||
            line.compare(0, keyword.size(), keyword) != 0 ||
            line[keyword.size()] != ' ')
            fail("expected '" + keyword + " <value>', got '" + line + "'");
        return line.substr(keyword.size() + 1);
    }

    void section(const std::string& keyword) {
        const std::string& line = next();
        if (line != keyword)
            fail("expected section '" + keyword + "', got '" + line + "'");
    }

    double number(const std::string& keyword) {
        double v;
        std::string s = field(keyword);
        if (!parse_double(s, v)) fail("bad number for " + keyword + ": " + s);
        return v;
    }

    int integer(const std::string& keyword) {
        double v = number(keyword);
        if (v != std::floor(v) || std::abs(v) > 1e15)
            fail(keyword + " must be an integer");
        return static_cast<int>(v);
    }

    std::vector<double> row(Eigen::Index expected) {
        const std::string& line = next();
        std::vector<double> vals;
        std::istringstream iss(line);
        std::string tok;
        while (iss >> tok) {
            double v;
            if (!parse_double(tok, v)) fail("bad number '" + tok + "'");
            vals.push_back(v);
        }
        if (expected >= 0 && static_cast<Eigen::Index>(vals.size()) != expected)
            fail("expected " + std::to_string(expected) + " values, got " +
                 std::to_string(vals.size()));
        return vals;
    }

  private:
    std::vector<std::string> lines_;
    std::string path_;
    std::size_t pos_ = 0;
};

Vector to_vector(const std::vector<double>& v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

} // namespace

SavedModel make_saved(const OsFit& fit, const LabeledDataset& train,
                      const CenteringStats& centering, GramMode mode,
                      double alpha_tol) {
    LdaModel clf = os_to_lda_allow_empty(fit, train, alpha_tol);

    SavedModel m;
    m.lambda = fit.lambda;
    m.gram_mode = mode;
    m.converged = fit.converged;
    m.n = train.n();
    m.p = train.p();
    m.K = train.n_classes();
    m.n_dirs = static_cast<int>(fit.B_star.cols());
    m.m_eff = clf.m_eff();
    m.standardize = centering.scale.size() > 0;
    m.class_labels = train.class_labels;
    m.class_priors.resize(m.K);
    for (int k = 0; k < m.K; ++k)
        m.class_priors[k] = static_cast<double>(train.class_counts[k]) /
                            static_cast<double>(train.n());
    m.centering_mean = centering.mean;
    m.centering_scale = centering.scale;
    m.active = fit.active_set;
    m.B_star_active.resize(static_cast<Eigen::Index>(m.active.size()), m.n_dirs);
    for (std::size_t t = 0; t < m.active.size(); ++t)
        m.B_star_active.row(static_cast<Eigen::Index>(t)) =
            fit.B_star.row(m.active[t]);
    m.theta_star = fit.theta_star;
    m.alpha = fit.alpha;
    m.centroids = clf.centroids;
    return m;
}

void save_model(const std::string& path, const SavedModel& m,
                bool with_timestamp) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");

    out << kMagic << '\n';
    if (with_timestamp) out << "# created " << utc_now() << '\n';
    out << "lambda " << format_double(m.lambda) << '\n';
    out << "gram_mode "
        << (m.gram_mode == GramMode::diagonal ? "diagonal" : "standard") << '\n';
    out << "converged " << (m.converged ? 1 : 0) << '\n';
    out << "n " << m.n << '\n';
    out << "p " << m.p << '\n';
    out << "K " << m.K << '\n';
    out << "n_dirs " << m.n_dirs << '\n';
    out << "m_eff " << m.m_eff << '\n';
    out << "n_active " << m.active.size() << '\n';
    out << "standardize " << (m.standardize ? 1 : 0) << '\n';

    out << "class_labels\n";
    for (const auto& lbl : m.class_labels) out << lbl << '\n';
    out << "class_priors\n"
        << join_row(m.class_priors.data(), m.class_priors.size()) << '\n';
    out << "centering_mean\n"
        << join_row(m.centering_mean.data(), m.centering_mean.size()) << '\n';
    if (m.standardize)
        out << "centering_scale\n"
            << join_row(m.centering_scale.data(), m.centering_scale.size())
            << '\n';

    out << "active_indices\n";
    {
        std::string line;
        for (std::size_t t = 0; t < m.active.size(); ++t) {
            if (t) line += ' ';
            line += std::to_string(m.active[t]);
        }
        out << line << '\n';
    }

    // Matrices are row-major text: one line per row. Eigen storage is
    // column-major, so rows are materialized before joining.
    auto write_matrix = [&out](const char* name, const Matrix& mat) {
        out << name << '\n';
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            Eigen::RowVectorXd r = mat.row(i);
            out << join_row(r.data(), r.size()) << '\n';
        }
    };
    write_matrix("B_star", m.B_star_active);
    write_matrix("theta_star", m.theta_star);
    out << "alpha\n" << join_row(m.alpha.data(), m.alpha.size()) << '\n';
    write_matrix("centroids", m.centroids);
    out << "end\n";
    if (!out) throw DataError("write to " + path + " failed");
}

SavedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    LineReader r(std::move(lines), path);

    if (r.next() != kMagic)
        r.fail(std::string("not a ") + kMagic + " file");

    SavedModel m;
    m.lambda = r.number("lambda");
    std::string mode = r.field("gram_mode");
    if (mode == "standard")
        m.gram_mode = GramMode::standard;
    else if (mode == "diagonal")
        m.gram_mode = GramMode::diagonal;
    else
        r.fail("unknown gram_mode '" + mode + "'");
    m.converged = r.integer("converged") != 0;
    m.n = r.integer("n");
    m.p = r.integer("p");
    m.K = r.integer("K");
    m.n_dirs = r.integer("n_dirs");
    m.m_eff = r.integer("m_eff");
    const int n_active = r.integer("n_active");
    m.standardize = r.integer("standardize") != 0;

    if (m.n < 1 || m.p < 1 || m.K < 2) r.fail("invalid dimensions");
    if (m.n_dirs < 0 || m.n_dirs > m.K - 1) r.fail("invalid n_dirs");
    if (m.m_eff < 0 || m.m_eff > m.n_dirs) r.fail("invalid m_eff");
    if (n_active < 0 || n_active > m.p) r.fail("invalid n_active");
    if (m.lambda <= 0.0 || !std::isfinite(m.lambda)) r.fail("invalid lambda");

    r.section("class_labels");
    m.class_labels.reserve(static_cast<std::size_t>(m.K));
    for (int k = 0; k < m.K; ++k) {
        const std::string& lbl = r.next();
        if (lbl.empty()) r.fail("empty class label");
        m.class_labels.push_back(lbl);
    }

    r.section("class_priors");
    m.class_priors = to_vector(r.row(m.K));
    for (int k = 0; k < m.K; ++k)
        if (!(m.class_priors[k] > 0.0) || !std::isfinite(m.class_priors[k]))
            r.fail("class priors must be positive");

    r.section("centering_mean");
    m.centering_mean = to_vector(r.row(m.p));
    if (m.standardize) {
        r.section("centering_scale");
        m.centering_scale = to_vector(r.row(m.p));
        for (Eigen::Index j = 0; j < m.centering_scale.size(); ++j)
            if (!(m.centering_scale[j] > 0.0)) r.fail("scales must be positive");
    }

    r.section("active_indices");
    {
        std::vector<double> vals = r.row(n_active);
        m.active.reserve(vals.size());
        int prev = -1;
        for (double v : vals) {
            if (v != std::floor(v) || v < 0 || v >= m.p)
                r.fail("active index out of range");
            int idx = static_cast<int>(v);
            if (idx <= prev) r.fail("active indices must be strictly ascending");
            m.active.push_back(idx);
            prev = idx;
        }
    }

    auto read_matrix = [&r](const char* name, Eigen::Index rows,
                            Eigen::Index cols) {
        r.section(name);
        Matrix mat(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            std::vector<double> vals = r.row(cols);
            for (Eigen::Index j = 0; j < cols; ++j)
                mat(i, j) = vals[static_cast<std::size_t>(j)];
        }
        return mat;
    };
    m.B_star_active = read_matrix("B_star", n_active, m.n_dirs);
    m.theta_star = read_matrix("theta_star", m.K, m.n_dirs);
    r.section("alpha");
    m.alpha = to_vector(r.row(m.n_dirs));
    m.centroids = read_matrix("centroids", m.K, m.m_eff);
    if (r.next() != "end") r.fail("missing end marker");
    return m;
}

LdaModel to_classifier(const SavedModel& m) {
    LdaModel clf;
    clf.lambda = m.lambda;
    clf.alpha = m.alpha.head(m.m_eff);

    // Same rescaling arithmetic as the in-memory mapping, applied to the
    // round-tripped doubles, so the rebuilt projection is bit-identical.
    const double n = static_cast<double>(m.n);
    clf.B_lda = Matrix::Zero(m.p, m.m_eff);
    for (int k = 0; k < m.m_eff; ++k) {
        const double a = clf.alpha[k];
        if (!(a > 0.0 && a < 1.0))
            throw DataError("kept alpha values must lie in (0,1)");
        const double scale = std::sqrt(n) / (a * std::sqrt(1.0 - a * a));
        for (std::size_t t = 0; t < m.active.size(); ++t)
            clf.B_lda(m.active[t], k) =
                m.B_star_active(static_cast<Eigen::Index>(t), k) * scale;
    }

    for (int j : m.active)
        if (clf.B_lda.row(j).norm() > 0.0) clf.active_set.push_back(j);

    clf.centroids = m.centroids;
    clf.log_priors.resize(m.K);
    for (int k = 0; k < m.K; ++k)
        clf.log_priors[k] = std::log(m.class_priors[k]);
    return clf;
}

CenteringStats centering_of(const SavedModel& m) {
    CenteringStats c;
    c.mean = m.centering_mean;
    c.scale = m.centering_scale;
    return c;
}

} // namespace gloss
