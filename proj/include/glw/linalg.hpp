#pragma once

#include <cstdint>
#include <vector>

#include "glw/tensor.hpp"

namespace glw {

// Small dense routines for the matrix sizes used here (<= ~64). All are
// deterministic with fixed iteration orders.

// C = A * B (no accumulation), plain matrices.
Tensor mat_mul(const Tensor& a, const Tensor& b);
Tensor mat_transpose(const Tensor& a);

// Random matrix with orthonormal columns (rows >= cols): modified
// Gram-Schmidt on a seeded Gaussian draw, with one re-orthogonalization pass.
Tensor random_orthonormal(std::size_t rows, std::size_t cols, std::uint64_t seed);

// Symmetric eigendecomposition by cyclic Jacobi. Returns eigenvalues
// ascending; eigenvectors are the columns of `vectors`.
struct EigenSym {
    std::vector<double> values;
    Tensor vectors;
};
EigenSym eigen_symmetric(const Tensor& a);

// Thin SVD of a square matrix by one-sided Jacobi: a = U * diag(s) * V^T.
// U columns for zero singular values are completed to an orthonormal basis so
// U and V are always fully orthogonal.
struct Svd {
    Tensor u;
    std::vector<double> s;  // descending
    Tensor v;
    bool rank_deficient = false;
};
Svd svd_square(const Tensor& a);

// Orthogonal Procrustes: W = U V^T from the SVD of X^T Y, minimizing
// ||X W - Y||_F over orthogonal W. Warns (flag) when X^T Y is rank-deficient,
// in which case W is not unique but still orthogonal.
struct ProcrustesResult {
    Tensor w;
    bool rank_deficient = false;
};
ProcrustesResult procrustes(const Tensor& x, const Tensor& y);

// Moore-Penrose pseudo-inverse of a tall full-column-rank matrix via normal
// equations and the symmetric eigensolver.
Tensor pinv_tall(const Tensor& g);

}  // namespace glw
