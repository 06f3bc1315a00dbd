#pragma once

// Dense column-loop kernels behind the solver hot paths. Each kernel has a
// plain serial reference implementation and an OpenMP variant; the parallel
// code assigns every output element to exactly one thread and accumulates in
// the same order as the reference, so the two produce bit-identical results
// regardless of schedule or thread count. Unit tests assert exact equality and
// the bench target compares their timings.

#include "gloss/common.hpp"

namespace gloss::kernels {

enum class Backend { serial, parallel };

Backend active_backend();
void set_backend(Backend b);

namespace serial {

// R = X(:,cols) * B - T.  B has one row per entry of cols; R is resized to T's shape.
void residual(const Matrix& X, const std::vector<int>& cols, const Matrix& B,
              const Matrix& T, Matrix& R);

// out[j] = || X_j^T R - C_j ||_2 / w[j] for every j with skip[j] == 0 (masked
// entries are set to 0).  C may be null, in which case the -C_j term is dropped.
void column_gradient_norms(const Matrix& X, const Matrix& R, const Matrix* C,
                           const Vector& w, const std::vector<unsigned char>& skip,
                           Vector& out);

// G = X(:,cols)^T X(:,cols).  Every entry is computed independently; exact
// symmetry follows from the commutativity of IEEE multiplication.
void gram_block(const Matrix& X, const std::vector<int>& cols, Matrix& G);

// G = X^T X, all p^2 entries.
void gram_full(const Matrix& X, Matrix& G);

// Z(r,:) = sum_t ((Xnew(r,cols[t]) - mean[cols[t]]) / scale[cols[t]]) * B(t,:).
// scale may be empty (no standardization).  Only the listed columns are touched.
void project_rows(const Matrix& Xnew, const Vector& mean, const Vector& scale,
                  const std::vector<int>& cols, const Matrix& B, Matrix& Z);

} // namespace serial

namespace parallel {

void residual(const Matrix& X, const std::vector<int>& cols, const Matrix& B,
              const Matrix& T, Matrix& R);
void column_gradient_norms(const Matrix& X, const Matrix& R, const Matrix* C,
                           const Vector& w, const std::vector<unsigned char>& skip,
                           Vector& out);
void gram_block(const Matrix& X, const std::vector<int>& cols, Matrix& G);
void gram_full(const Matrix& X, Matrix& G);
void project_rows(const Matrix& Xnew, const Vector& mean, const Vector& scale,
                  const std::vector<int>& cols, const Matrix& B, Matrix& Z);

} // namespace parallel

// Dispatchers honoring the module-wide backend setting.
void residual(const Matrix& X, const std::vector<int>& cols, const Matrix& B,
              const Matrix& T, Matrix& R);
void column_gradient_norms(const Matrix& X, const Matrix& R, const Matrix* C,
                           const Vector& w, const std::vector<unsigned char>& skip,
                           Vector& out);
void gram_block(const Matrix& X, const std::vector<int>& cols, Matrix& G);
void gram_full(const Matrix& X, Matrix& G);
void project_rows(const Matrix& Xnew, const Vector& mean, const Vector& scale,
                  const std::vector<int>& cols, const Matrix& B, Matrix& Z);

} // namespace gloss::kernels
