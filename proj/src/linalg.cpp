#include "ampex/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "ampex/errors.hpp"
#include "ampex/rng.hpp"

namespace ampex {

namespace {

// Largest-magnitude entry of each left singular vector is made non-negative;
// the paired right vector flips with it so the product is unchanged.
void fix_signs(Matrix& u, Matrix& vt) {
    const Eigen::Index paired = std::min<Eigen::Index>(u.cols(), vt.rows());
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        Eigen::Index arg = 0;
        u.col(k).cwiseAbs().maxCoeff(&arg);
        if (u(arg, k) < 0.0) {
            u.col(k) = -u.col(k);
            if (k < paired) vt.row(k) = -vt.row(k);
        }
    }
    for (Eigen::Index k = paired; k < vt.rows(); ++k) {
        Eigen::Index arg = 0;
        vt.row(k).cwiseAbs().maxCoeff(&arg);
        if (vt(k, arg) < 0.0) vt.row(k) = -vt.row(k);
    }
}

template <typename Solver>
SvdResult run_svd(const Matrix& a, unsigned options) {
    if (!a.allFinite()) throw NumericError("svd: input contains non-finite entries");
    Solver solver(a, options);
    if (solver.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "svd: did not converge after the backend iteration cap ("
            << a.rows() << "x" << a.cols() << " input)";
        throw NumericError(msg.str());
    }
    SvdResult out;
    out.u = solver.matrixU();
    out.s = solver.singularValues();
    out.vt = solver.matrixV().transpose();
    fix_signs(out.u, out.vt);
    return out;
}

SvdResult svd_impl(const Matrix& a, unsigned options) {
    // Jacobi is the accuracy reference at small sizes; the divide-and-conquer
    // kernel takes over where Jacobi's O(n^3) sweeps start to hurt.
    if (std::max(a.rows(), a.cols()) <= 32)
        return run_svd<Eigen::JacobiSVD<Matrix>>(a, options);
    return run_svd<Eigen::BDCSVD<Matrix>>(a, options);
}

} // namespace

SvdResult svd(const Matrix& a) {
    return svd_impl(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

SvdResult svd_econ(const Matrix& a) {
    return svd_impl(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

Matrix cholesky(const Matrix& r) {
    if (r.rows() != r.cols()) throw ConfigError("cholesky: matrix is not square");
    const Eigen::Index n = r.rows();
    const double asym = (r - r.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) {
        std::ostringstream msg;
        msg << "cholesky: matrix not symmetric (max |r - r^T| = " << asym << ")";
        throw ConfigError(msg.str());
    }
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double diag = r(j, j);
        for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0)) {
            std::ostringstream msg;
            msg << "cholesky: non-positive pivot at index " << j << " (value " << diag
                << "); matrix is not positive definite";
            throw NumericError(msg.str());
        }
        l(j, j) = std::sqrt(diag);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double acc = r(i, j);
            for (Eigen::Index k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            l(i, j) = acc / l(j, j);
        }
    }
    return l;
}

Matrix complete_to_unitary_at(const Matrix& b, const std::vector<Eigen::Index>& positions) {
    const Eigen::Index m = b.rows();
    const Eigen::Index k = b.cols();
    if (k > m) throw ConfigError("complete_to_unitary: more columns than rows");
    if (static_cast<Eigen::Index>(positions.size()) != k)
        throw ConfigError("complete_to_unitary: one position per column required");
    const double gram_dev = orthogonality_deviation(b);
    if (gram_dev > 1e-10) {
        std::ostringstream msg;
        msg << "complete_to_unitary: columns not orthonormal (max Gram deviation "
            << gram_dev << ")";
        throw NumericError(msg.str());
    }

    Matrix basis(m, m); // accumulated orthonormal columns, fill order
    basis.leftCols(k) = b;
    Eigen::Index have = k;
    for (Eigen::Index i = 0; i < m && have < m; ++i) {
        Vector v = Vector::Zero(m);
        v(i) = 1.0;
        // Two projection passes keep the completion orthogonal to ~1e-15 even
        // when the residual after the first pass is small.
        v -= basis.leftCols(have) * (basis.leftCols(have).transpose() * v);
        const double res = v.norm();
        if (res < 1e-6) continue; // e_i (numerically) dependent on current span
        v -= basis.leftCols(have) * (basis.leftCols(have).transpose() * v);
        basis.col(have++) = v / v.norm();
    }
    if (have < m) throw NumericError("complete_to_unitary: failed to complete the basis");

    Matrix out(m, m);
    std::vector<bool> taken(static_cast<std::size_t>(m), false);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index pos = positions[static_cast<std::size_t>(j)];
        if (pos < 0 || pos >= m || taken[static_cast<std::size_t>(pos)])
            throw ConfigError("complete_to_unitary: bad column position");
        taken[static_cast<std::size_t>(pos)] = true;
        out.col(pos) = basis.col(j);
    }
    Eigen::Index next = k;
    for (Eigen::Index pos = 0; pos < m; ++pos)
        if (!taken[static_cast<std::size_t>(pos)]) out.col(pos) = basis.col(next++);
    return out;
}

Matrix complete_to_unitary(const Matrix& b) {
    std::vector<Eigen::Index> positions(static_cast<std::size_t>(b.cols()));
    for (Eigen::Index j = 0; j < b.cols(); ++j) positions[static_cast<std::size_t>(j)] = j;
    return complete_to_unitary_at(b, positions);
}

Matrix haar_random_orthogonal(Eigen::Index m, std::uint64_t seed) {
    if (m < 1) throw ConfigError("haar_random_orthogonal: dimension must be >= 1");
    Rng rng(seed);
    Matrix g(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(m, m);
    // Fixing the R diagonal signs makes Q exactly Haar rather than QR-biased.
    for (Eigen::Index j = 0; j < m; ++j)
        if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

double orthogonality_deviation(const Matrix& a) {
    Matrix gram = a.transpose() * a;
    gram -= Matrix::Identity(a.cols(), a.cols());
    return gram.cwiseAbs().maxCoeff();
}

} // namespace ampex
