#include "doctest.h"

#include "gloss/kernels.hpp"
#include "gloss/simulate.hpp"
#include "helpers.hpp"

#include <vector>

using gloss::Matrix;
using gloss::Vector;
using testutil::same_bits;

namespace {

Matrix random_matrix(gloss::Rng& rng, Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
    return m;
}

struct KernelFixture {
    Matrix X, B, T, C;
    std::vector<int> cols{1, 4, 5, 11, 22};
    Vector w;
    std::vector<unsigned char> skip;
    Vector mean, scale;

    KernelFixture() {
        gloss::Rng rng(20240817);
        X = random_matrix(rng, 37, 23);
        B = random_matrix(rng, static_cast<Eigen::Index>(cols.size()), 3);
        T = random_matrix(rng, 37, 3);
        C = random_matrix(rng, 23, 3);
        w = Vector::Ones(23);
        for (Eigen::Index j = 0; j < 23; ++j) w[j] = 0.5 + rng.uniform();
        skip.assign(23, 0);
        skip[4] = skip[9] = 1;
        mean = random_matrix(rng, 23, 1).col(0);
        scale = Vector::Ones(23);
        for (Eigen::Index j = 0; j < 23; ++j) scale[j] = 0.5 + rng.uniform();
    }

    Matrix x_cols() const {
        Matrix out(X.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t t = 0; t < cols.size(); ++t) out.col(static_cast<Eigen::Index>(t)) = X.col(cols[t]);
        return out;
    }
};

} // namespace

TEST_CASE("residual kernel matches the dense expression and both backends agree bitwise") {
    KernelFixture f;
    Matrix r_serial, r_parallel;
    gloss::kernels::serial::residual(f.X, f.cols, f.B, f.T, r_serial);
    gloss::kernels::parallel::residual(f.X, f.cols, f.B, f.T, r_parallel);

    const Matrix expected = f.x_cols() * f.B - f.T;
    CHECK((r_serial - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(same_bits(r_serial, r_parallel));
}

TEST_CASE("column gradient norms handle the linear term, weights, and skip mask") {
    KernelFixture f;
    Matrix R;
    gloss::kernels::serial::residual(f.X, f.cols, f.B, f.T, R);

    Vector out_serial, out_parallel;
    gloss::kernels::serial::column_gradient_norms(f.X, R, &f.C, f.w, f.skip, out_serial);
    gloss::kernels::parallel::column_gradient_norms(f.X, R, &f.C, f.w, f.skip, out_parallel);
    CHECK(same_bits(out_serial, out_parallel));

    for (Eigen::Index j = 0; j < f.X.cols(); ++j) {
        if (f.skip[static_cast<std::size_t>(j)]) {
            CHECK(out_serial[j] == 0.0);
            continue;
        }
        const double expected = (f.X.col(j).transpose() * R - f.C.row(j)).norm() / f.w[j];
        CHECK(out_serial[j] == doctest::Approx(expected).epsilon(1e-12));
    }

    // Without the linear term the -C_j contribution must vanish.
    Vector plain;
    gloss::kernels::serial::column_gradient_norms(f.X, R, nullptr, f.w, f.skip, plain);
    const Eigen::Index j0 = 2;
    const double expected0 = (f.X.col(j0).transpose() * R).norm() / f.w[j0];
    CHECK(plain[j0] == doctest::Approx(expected0).epsilon(1e-12));
}

TEST_CASE("gram block is exactly symmetric and equal across backends") {
    KernelFixture f;
    Matrix g_serial, g_parallel;
    gloss::kernels::serial::gram_block(f.X, f.cols, g_serial);
    gloss::kernels::parallel::gram_block(f.X, f.cols, g_parallel);
    CHECK(same_bits(g_serial, g_parallel));

    const Matrix xs = f.x_cols();
    const Matrix expected = xs.transpose() * xs;
    CHECK((g_serial - expected).cwiseAbs().maxCoeff() < 1e-10);

    for (Eigen::Index i = 0; i < g_serial.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            CHECK(g_serial(i, j) == g_serial(j, i));  // bitwise symmetry
}

TEST_CASE("full gram matches the block kernel on the identity column list") {
    KernelFixture f;
    Matrix g_full_serial, g_full_parallel;
    gloss::kernels::serial::gram_full(f.X, g_full_serial);
    gloss::kernels::parallel::gram_full(f.X, g_full_parallel);
    CHECK(same_bits(g_full_serial, g_full_parallel));

    std::vector<int> all(static_cast<std::size_t>(f.X.cols()));
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
    Matrix g_block;
    gloss::kernels::serial::gram_block(f.X, all, g_block);
    CHECK(same_bits(g_full_serial, g_block));
}

TEST_CASE("row projection applies centering and optional scaling to listed columns only") {
    KernelFixture f;
    Matrix z_serial, z_parallel;
    gloss::kernels::serial::project_rows(f.X, f.mean, f.scale, f.cols, f.B, z_serial);
    gloss::kernels::parallel::project_rows(f.X, f.mean, f.scale, f.cols, f.B, z_parallel);
    CHECK(same_bits(z_serial, z_parallel));

    Matrix expected = Matrix::Zero(f.X.rows(), f.B.cols());
    for (std::size_t t = 0; t < f.cols.size(); ++t) {
        const int j = f.cols[t];
        expected += ((f.X.col(j).array() - f.mean[j]) / f.scale[j]).matrix() *
                    f.B.row(static_cast<Eigen::Index>(t));
    }
    CHECK((z_serial - expected).cwiseAbs().maxCoeff() < 1e-12);

    // Empty scale means centering only.
    Matrix z_unscaled;
    Vector no_scale;
    gloss::kernels::serial::project_rows(f.X, f.mean, no_scale, f.cols, f.B, z_unscaled);
    Matrix expected2 = Matrix::Zero(f.X.rows(), f.B.cols());
    for (std::size_t t = 0; t < f.cols.size(); ++t) {
        const int j = f.cols[t];
        expected2 += (f.X.col(j).array() - f.mean[j]).matrix() *
                     f.B.row(static_cast<Eigen::Index>(t));
    }
    CHECK((z_unscaled - expected2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backend dispatcher routes to the selected implementation") {
    KernelFixture f;
    const gloss::kernels::Backend saved = gloss::kernels::active_backend();

    gloss::kernels::set_backend(gloss::kernels::Backend::serial);
    CHECK(gloss::kernels::active_backend() == gloss::kernels::Backend::serial);
    Matrix r1;
    gloss::kernels::residual(f.X, f.cols, f.B, f.T, r1);

    gloss::kernels::set_backend(gloss::kernels::Backend::parallel);
    CHECK(gloss::kernels::active_backend() == gloss::kernels::Backend::parallel);
    Matrix r2;
    gloss::kernels::residual(f.X, f.cols, f.B, f.T, r2);

    CHECK(same_bits(r1, r2));  // backends are interchangeable bit for bit
    gloss::kernels::set_backend(saved);
}
