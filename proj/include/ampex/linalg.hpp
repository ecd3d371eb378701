#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace ampex {

/// Dense real matrix, row-major. All heavy numerics in the project go through
/// the operations below so that sign conventions and error behavior are fixed
/// in one place.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct SvdResult {
    Matrix u;  ///< m x m orthogonal
    Vector s;  ///< min(m,n) singular values, non-increasing
    Matrix vt; ///< n x n orthogonal; a = u * diag(s) * vt
};

/// Full SVD with a deterministic sign convention: the largest-magnitude entry
/// of every left singular vector is made non-negative (first index wins ties),
/// so repeated factorizations of the same matrix are bit-identical.
SvdResult svd(const Matrix& a);

/// Economy SVD (u: m x k, vt: k x n with k = min(m,n)), same sign convention.
SvdResult svd_econ(const Matrix& a);

/// Cholesky factor L (lower-triangular, positive diagonal) with L*L^T = r.
/// Throws NumericError naming the offending pivot if r is not positive
/// definite, ConfigError if r is not symmetric to 1e-12.
Matrix cholesky(const Matrix& r);

/// Extends a matrix with orthonormal columns to a full orthogonal matrix.
/// The first b.cols() columns of the result equal b; the remaining ones are
/// obtained by orthogonalizing canonical basis vectors against the columns
/// accumulated so far, in index order, skipping near-dependent ones. Fully
/// deterministic given b.
Matrix complete_to_unitary(const Matrix& b);

/// As complete_to_unitary, but the given columns are placed at caller-chosen
/// column positions and the free positions are filled with the completion
/// vectors in index order. `positions` must be strictly increasing is not
/// required, but entries must be distinct and in range.
Matrix complete_to_unitary_at(const Matrix& b, const std::vector<Eigen::Index>& positions);

/// Haar-distributed random orthogonal matrix; identical output for identical
/// seed (own RNG, no std:: distributions).
Matrix haar_random_orthogonal(Eigen::Index m, std::uint64_t seed);

/// max |a^T a - I|, handy for test assertions.
double orthogonality_deviation(const Matrix& a);

} // namespace ampex
