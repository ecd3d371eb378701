#include <doctest.h>

#include <cmath>

#include "ampex/errors.hpp"
#include "ampex/linalg.hpp"
#include "ampex/rng.hpp"

using namespace ampex;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

double reconstruction_residual(const Matrix& a, const SvdResult& f) {
    Matrix sigma = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index k = 0; k < f.s.size(); ++k) sigma(k, k) = f.s(k);
    return (a - f.u * sigma * f.vt).cwiseAbs().maxCoeff();
}

} // namespace

TEST_SUITE_BEGIN("linalg");

TEST_CASE("svd of the identity") {
    const Matrix id = Matrix::Identity(3, 3);
    const SvdResult f = svd(id);
    CHECK((f.u - id).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((f.vt - id).cwiseAbs().maxCoeff() < 1e-12);
    for (int k = 0; k < 3; ++k) CHECK(f.s(k) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd of a diagonal matrix sorts the values") {
    Matrix a = Matrix::Zero(3, 3);
    a(0, 0) = 2.0;
    a(1, 1) = 3.0;
    a(2, 2) = 1.0;
    const SvdResult f = svd(a);
    CHECK(f.s(0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.s(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.s(2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd reconstructs random matrices") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Matrix a = random_matrix(8, 8, seed);
        const SvdResult f = svd(a);
        const double scale = std::max(1.0, a.norm());
        CHECK(reconstruction_residual(a, f) < 1e-12 * scale);
        CHECK(orthogonality_deviation(f.u) < 1e-12);
        CHECK(orthogonality_deviation(f.vt.transpose()) < 1e-12);
        for (Eigen::Index k = 1; k < f.s.size(); ++k) CHECK(f.s(k - 1) >= f.s(k));
        for (Eigen::Index k = 0; k < f.s.size(); ++k) CHECK(f.s(k) >= 0.0);
    }
}

TEST_CASE("svd handles rectangular shapes with full factors") {
    for (auto [rows, cols] : {std::pair<int, int>{6, 3}, {3, 6}, {40, 7}}) {
        const Matrix a = random_matrix(rows, cols, 77);
        const SvdResult f = svd(a);
        CHECK(f.u.rows() == rows);
        CHECK(f.u.cols() == rows);
        CHECK(f.vt.rows() == cols);
        CHECK(reconstruction_residual(a, f) < 1e-12 * std::max(1.0, a.norm()));
    }
}

TEST_CASE("svd is deterministic including signs") {
    const Matrix a = random_matrix(5, 5, 9);
    const SvdResult f1 = svd(a);
    const SvdResult f2 = svd(a);
    CHECK((f1.u - f2.u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((f1.vt - f2.vt).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index k = 0; k < f1.u.cols(); ++k) {
        Eigen::Index arg = 0;
        f1.u.col(k).cwiseAbs().maxCoeff(&arg);
        CHECK(f1.u(arg, k) >= 0.0);
    }
}

TEST_CASE("cholesky of the identity") {
    const Matrix id = Matrix::Identity(3, 3);
    CHECK((cholesky(id) - id).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("cholesky against a hand expansion") {
    Matrix r(2, 2);
    r << 1.0, 0.5, 0.5, 1.0;
    const Matrix l = cholesky(r);
    CHECK(l(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l(0, 1) == doctest::Approx(0.0));
    CHECK(l(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(l(1, 1) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
}

TEST_CASE("cholesky rejects an indefinite matrix naming the pivot") {
    Matrix r(2, 2);
    r << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_WITH_AS(cholesky(r), doctest::Contains("pivot at index 1"), NumericError);
}

TEST_CASE("cholesky round trip on random factors") {
    for (std::uint64_t seed : {4u, 5u}) {
        Rng rng(seed);
        const int n = 5;
        Matrix l = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < i; ++j) l(i, j) = rng.normal();
            l(i, i) = 0.5 + std::abs(rng.normal());
        }
        const Matrix back = cholesky(Matrix(l * l.transpose()));
        CHECK((back - l).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("complete_to_unitary extends identity columns to the identity") {
    const int m = 5, k = 2;
    Matrix b = Matrix::Zero(m, k);
    b(0, 0) = 1.0;
    b(1, 1) = 1.0;
    CHECK((complete_to_unitary(b) - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("complete_to_unitary on a single diagonal column") {
    Matrix b(2, 1);
    b << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    const Matrix q = complete_to_unitary(b);
    CHECK(orthogonality_deviation(q) < 1e-12);
    // Second column is (1,-1)/sqrt(2) up to sign.
    CHECK(std::abs(std::abs(q(0, 1)) - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(q(0, 1) * q(1, 1) < 0.0);
}

TEST_CASE("complete_to_unitary rejects non-orthonormal input") {
    Matrix b(3, 2);
    b.setZero();
    b(0, 0) = 1.0;
    b(0, 1) = 1e-3; // Gram deviation 1e-3
    b(1, 1) = 1.0;
    CHECK_THROWS_WITH_AS(complete_to_unitary(b), doctest::Contains("Gram"), NumericError);
}

TEST_CASE("complete_to_unitary output is orthogonal for random subspaces") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const Matrix q0 = haar_random_orthogonal(8, seed);
        const Matrix q = complete_to_unitary(q0.leftCols(3));
        CHECK(orthogonality_deviation(q) < 1e-12);
        CHECK((q.leftCols(3) - q0.leftCols(3)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("complete_to_unitary_at places columns at requested positions") {
    Matrix b(4, 2);
    b.setZero();
    b(1, 0) = 1.0;
    b(3, 1) = 1.0;
    const Matrix q = complete_to_unitary_at(b, {2, 1});
    CHECK(orthogonality_deviation(q) < 1e-12);
    CHECK(q(1, 2) == doctest::Approx(1.0));
    CHECK(q(3, 1) == doctest::Approx(1.0));
}

TEST_CASE("haar_random_orthogonal is orthogonal and deterministic") {
    CHECK(std::abs(std::abs(haar_random_orthogonal(1, 3)(0, 0)) - 1.0) < 1e-15);
    const Matrix a = haar_random_orthogonal(4, 7);
    const Matrix b = haar_random_orthogonal(4, 7);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(orthogonality_deviation(a) < 1e-12);
    CHECK(haar_random_orthogonal(4, 8) != a);
}

TEST_CASE("haar trace statistics look Haar") {
    // For Haar O(M), tr is asymptotically N(0,1): E|tr| ~ 0.80.
    double sum_abs_trace = 0.0;
    const int reps = 200;
    for (int k = 0; k < reps; ++k) sum_abs_trace += std::abs(haar_random_orthogonal(64, 1000 + k).trace());
    const double mean = sum_abs_trace / reps;
    CHECK(mean > 0.4);
    CHECK(mean < 1.3);
}

TEST_SUITE_END();
