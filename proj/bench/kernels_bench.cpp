// Times the serial reference kernels against the OpenMP variants on
// solver-realistic shapes and verifies bit-identical outputs while at it.
// Speedup ~1x on a single-core machine is expected and fine; the point of the
// serial reference is testability, the point of this harness is honesty.

#include "gloss/kernels.hpp"
#include "gloss/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace gloss;

namespace {

double seconds_of(const std::function<void()>& body, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) body();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (a(i, j) != b(i, j)) return false;
    return true;
}

struct Case {
    const char* name;
    double t_serial;
    double t_parallel;
    bool equal;
};

} // namespace

int main() {
    const Eigen::Index n = 400, p = 2000, M = 3;
    const int active = 150;

    Rng rng(20260819);
    Matrix X(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) X(i, j) = rng.normal();
    Matrix T(n, M), B(active, M);
    for (Eigen::Index k = 0; k < M; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) T(i, k) = rng.normal();
        for (Eigen::Index t = 0; t < active; ++t) B(t, k) = rng.normal();
    }
    std::vector<int> cols;
    for (int t = 0; t < active; ++t) cols.push_back(t * 13 % static_cast<int>(p));
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    B.conservativeResize(static_cast<Eigen::Index>(cols.size()), M);
    Vector w = Vector::Ones(p);
    std::vector<unsigned char> skip(static_cast<std::size_t>(p), 0);
    Vector mean = Vector::Zero(p), scale;

    std::vector<Case> cases;
    Matrix Rs, Rp;

    {
        auto s = [&] { kernels::serial::residual(X, cols, B, T, Rs); };
        auto q = [&] { kernels::parallel::residual(X, cols, B, T, Rp); };
        s();
        q();
        cases.push_back({"residual", seconds_of(s, 20), seconds_of(q, 20),
                         bit_equal(Rs, Rp)});
    }
    {
        Vector os, op;
        auto s = [&] { kernels::serial::column_gradient_norms(X, Rs, nullptr, w, skip, os); };
        auto q = [&] { kernels::parallel::column_gradient_norms(X, Rp, nullptr, w, skip, op); };
        s();
        q();
        cases.push_back({"column_gradient_norms", seconds_of(s, 20),
                         seconds_of(q, 20), bit_equal(os, op)});
    }
    {
        Matrix Gs, Gp;
        auto s = [&] { kernels::serial::gram_block(X, cols, Gs); };
        auto q = [&] { kernels::parallel::gram_block(X, cols, Gp); };
        s();
        q();
        cases.push_back({"gram_block", seconds_of(s, 10), seconds_of(q, 10),
                         bit_equal(Gs, Gp)});
    }
    {
        Matrix Zs, Zp;
        auto s = [&] { kernels::serial::project_rows(X, mean, scale, cols, B, Zs); };
        auto q = [&] { kernels::parallel::project_rows(X, mean, scale, cols, B, Zp); };
        s();
        q();
        cases.push_back({"project_rows", seconds_of(s, 20), seconds_of(q, 20),
                         bit_equal(Zs, Zp)});
    }

    int threads = 1;
#ifdef _OPENMP
#pragma omp parallel
    {
#pragma omp single
        threads = omp_get_num_threads();
    }
#endif
    std::printf("kernel benchmark: n=%d p=%d |S|=%zu M=%d, %d thread(s)\n",
                static_cast<int>(n), static_cast<int>(p), cols.size(),
                static_cast<int>(M), threads);
    std::printf("%-24s %12s %12s %9s %s\n", "kernel", "serial (ms)",
                "openmp (ms)", "speedup", "bitwise");
    bool all_equal = true;
    for (const Case& c : cases) {
        std::printf("%-24s %12.3f %12.3f %8.2fx %s\n", c.name, 1e3 * c.t_serial,
                    1e3 * c.t_parallel, c.t_serial / c.t_parallel,
                    c.equal ? "equal" : "DIFFER");
        all_equal = all_equal && c.equal;
    }
    if (!all_equal) {
        std::printf("FAIL: backends disagree\n");
        return 1;
    }
    return 0;
}
