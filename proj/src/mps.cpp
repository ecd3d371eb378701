#include "ampex/mps.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Core>

#include "ampex/errors.hpp"
#include "ampex/linalg.hpp"
#include "ampex/rng.hpp"

namespace ampex {

namespace {
using MatrixMap = Eigen::Map<const Matrix>;
using MutableMap = Eigen::Map<Matrix>;
} // namespace

Mps::Mps(std::int64_t d, std::int64_t phys, std::vector<std::int64_t> bonds,
         std::vector<std::vector<double>> cores)
    : d_(d), phys_(phys), bonds_(std::move(bonds)), cores_(std::move(cores)) {
    if (d_ < 3) throw ConfigError("Mps: needs d >= 3 (use a dense expansion below that)");
    if (phys_ < 1) throw ConfigError("Mps: physical extent must be positive");
    if (static_cast<std::int64_t>(bonds_.size()) != d_ - 2)
        throw ConfigError("Mps: expected d-2 bond extents");
    if (static_cast<std::int64_t>(cores_.size()) != d_ - 1)
        throw ConfigError("Mps: expected d-1 cores");
    for (std::int64_t i = 0; i < d_ - 1; ++i) {
        const auto shape = core_shape(i);
        const auto expected = static_cast<std::size_t>(shape[0] * shape[1] * shape[2]);
        if (cores_[static_cast<std::size_t>(i)].size() != expected) {
            std::ostringstream msg;
            msg << "Mps: core " << i << " has " << cores_[static_cast<std::size_t>(i)].size()
                << " entries, expected " << expected;
            throw ConfigError(msg.str());
        }
    }
}

std::array<std::int64_t, 3> Mps::core_shape(std::int64_t i) const {
    if (i < 0 || i >= d_ - 1) throw ConfigError("Mps: core index out of range");
    const std::int64_t left = (i == 0) ? 1 : bonds_[static_cast<std::size_t>(i - 1)];
    const std::int64_t right = (i == d_ - 2) ? phys_ : bonds_[static_cast<std::size_t>(i)];
    return {left, phys_, right};
}

double Mps::norm() const {
    // Transfer contraction from the right: G <- sum_l core_l G core_l^T.
    const auto last = core_shape(d_ - 2);
    MatrixMap m(cores_.back().data(), last[0], last[1] * last[2]);
    Matrix gram = m * m.transpose();
    for (std::int64_t i = d_ - 3; i >= 1; --i) {
        const auto shape = core_shape(i);
        Matrix next = Matrix::Zero(shape[0], shape[0]);
        for (std::int64_t l = 0; l < shape[1]; ++l) {
            Matrix slice(shape[0], shape[2]);
            const double* base = cores_[static_cast<std::size_t>(i)].data();
            for (std::int64_t k = 0; k < shape[0]; ++k)
                for (std::int64_t kp = 0; kp < shape[2]; ++kp)
                    slice(k, kp) = base[(k * shape[1] + l) * shape[2] + kp];
            next += slice * gram * slice.transpose();
        }
        gram = std::move(next);
    }
    const auto first = core_shape(0);
    MatrixMap u1(cores_.front().data(), first[1], first[2]);
    return std::sqrt(std::max(0.0, (u1 * gram * u1.transpose()).trace()));
}

void Mps::scale(double factor) {
    for (double& v : cores_.front()) v *= factor;
}

namespace {

CanonicalizeResult canonicalize_impl(const GridTensor& dense,
                                     std::span<const std::int64_t> bond_caps) {
    const std::int64_t d = dense.order();
    if (d < 3) throw ConfigError("canonicalize: needs an order >= 3 tensor");
    const std::int64_t phys = dense.dims()[0];
    for (std::int64_t extent : dense.dims())
        if (extent != phys) throw ConfigError("canonicalize: all extents must be equal");
    if (static_cast<std::int64_t>(bond_caps.size()) != d - 2)
        throw ConfigError("canonicalize: expected d-2 bond caps");
    for (std::int64_t cap : bond_caps)
        if (cap < 1) throw ConfigError("canonicalize: bond caps must be >= 1");
    if (dense.norm() == 0.0) throw NumericError("canonicalize: zero tensor");

    std::vector<double> work(dense.entries().begin(), dense.entries().end());
    std::vector<std::vector<double>> cores(static_cast<std::size_t>(d - 1));
    std::vector<std::int64_t> bonds(static_cast<std::size_t>(d - 2), 0);
    std::vector<double> eps(static_cast<std::size_t>(d - 2), 0.0);

    // n-th pass splits off the rightmost unfactored group; first pass columns
    // are (l_{d-1}, l_d), later ones (l_i, k_i).
    std::int64_t right = phys * phys;
    for (std::int64_t n = 1; n <= d - 2; ++n) {
        const std::int64_t rows = static_cast<std::int64_t>(work.size()) / right;
        MatrixMap m(work.data(), rows, right);
        SvdResult f = svd_econ(m);
        // Rank counts only exact zeros (to rounding); truncation below that
        // happens solely through the caller's caps, never by magnitude.
        std::int64_t rank = f.s.size();
        while (rank > 1 && f.s(rank - 1) <= 1e-14 * f.s(0)) --rank;
        const std::int64_t bond_index = d - 2 - n;
        const std::int64_t keep =
            std::min<std::int64_t>(rank, bond_caps[static_cast<std::size_t>(bond_index)]);

        double discarded = 0.0;
        for (std::int64_t k = keep; k < f.s.size(); ++k) discarded += f.s(k) * f.s(k);
        eps[static_cast<std::size_t>(bond_index)] = discarded;
        bonds[static_cast<std::size_t>(bond_index)] = keep;

        auto& core = cores[static_cast<std::size_t>(bond_index + 1)];
        core.resize(static_cast<std::size_t>(keep * right));
        MutableMap(core.data(), keep, right) = f.vt.topRows(keep);

        Matrix carried = f.u.leftCols(keep) * f.s.head(keep).asDiagonal();
        work.resize(static_cast<std::size_t>(rows * keep));
        MutableMap(work.data(), rows, keep) = carried;
        right = phys * keep;
    }
    cores.front() = std::move(work); // (D x r1), holds the tensor's magnitude

    return {Mps(d, phys, std::move(bonds), std::move(cores)), std::move(eps)};
}

} // namespace

CanonicalizeResult canonicalize(const GridTensor& dense, std::int64_t r_max) {
    if (dense.order() < 3) throw ConfigError("canonicalize: needs an order >= 3 tensor");
    std::vector<std::int64_t> caps(static_cast<std::size_t>(dense.order() - 2), r_max);
    return canonicalize_impl(dense, caps);
}

CanonicalizeResult canonicalize(const GridTensor& dense, std::span<const std::int64_t> bond_caps) {
    return canonicalize_impl(dense, bond_caps);
}

GridTensor reconstruct_dense(const Mps& mps, std::int64_t max_entries) {
    const std::int64_t d = mps.order();
    const std::int64_t phys = mps.phys();
    std::int64_t total = 1;
    for (std::int64_t i = 0; i < d; ++i) {
        total *= phys;
        if (total > max_entries) {
            std::ostringstream msg;
            msg << "reconstruct_dense: D^d needs at least " << std::pow(double(phys), double(d))
                << " entries, above the cap of " << max_entries;
            throw ConfigError(msg.str());
        }
    }

    const auto first = mps.core_shape(0);
    std::vector<double> acc(mps.core(0).begin(), mps.core(0).end()); // (D x r1)
    std::int64_t rows = first[1];
    std::int64_t cols = first[2];
    for (std::int64_t i = 1; i < d - 1; ++i) {
        const auto shape = mps.core_shape(i);
        MatrixMap left(acc.data(), rows, cols);
        MatrixMap core(mps.core(i).data(), shape[0], shape[1] * shape[2]);
        Matrix merged = left * core; // (rows x D*right)
        acc.resize(static_cast<std::size_t>(rows * shape[1] * shape[2]));
        MutableMap(acc.data(), rows, shape[1] * shape[2]) = merged;
        rows *= shape[1];
        cols = shape[2];
    }
    return GridTensor(std::vector<std::int64_t>(static_cast<std::size_t>(d), phys),
                      std::move(acc));
}

double check_right_canonical(const Mps& mps) {
    double worst = 0.0;
    for (std::int64_t i = 1; i < mps.core_count(); ++i) {
        const auto shape = mps.core_shape(i);
        MatrixMap m(mps.core(i).data(), shape[0], shape[1] * shape[2]);
        Matrix gram = m * m.transpose();
        gram -= Matrix::Identity(shape[0], shape[0]);
        worst = std::max(worst, gram.cwiseAbs().maxCoeff());
    }
    return worst;
}

double mps_eval(const Mps& mps, std::span<const OrthoBasis1D> bases, std::span<const double> x) {
    const std::int64_t d = mps.order();
    if (static_cast<std::int64_t>(bases.size()) != d || static_cast<std::int64_t>(x.size()) != d)
        throw ConfigError("mps_eval: need one basis and one coordinate per mode");
    for (std::int64_t i = 0; i < d; ++i)
        if (bases[static_cast<std::size_t>(i)].degree != mps.phys())
            throw ConfigError("mps_eval: basis degree does not match the MPS physical extent");

    std::vector<Vector> p(static_cast<std::size_t>(d));
    for (std::int64_t i = 0; i < d; ++i) {
        const auto& basis = bases[static_cast<std::size_t>(i)];
        p[static_cast<std::size_t>(i)].resize(mps.phys());
        for (std::int64_t l = 0; l < mps.phys(); ++l)
            p[static_cast<std::size_t>(i)](l) = eval_basis(basis, l, x[static_cast<std::size_t>(i)]);
    }

    const auto first = mps.core_shape(0);
    MatrixMap u1(mps.core(0).data(), first[1], first[2]);
    Eigen::RowVectorXd row = p[0].transpose() * u1; // (1 x r1)
    for (std::int64_t i = 1; i < d - 2; ++i) {
        const auto shape = mps.core_shape(i);
        Matrix folded = Matrix::Zero(shape[0], shape[2]); // sum_l core[:,l,:] p_i(l)
        const double* base = mps.core(i).data();
        for (std::int64_t k = 0; k < shape[0]; ++k)
            for (std::int64_t l = 0; l < shape[1]; ++l)
                for (std::int64_t kp = 0; kp < shape[2]; ++kp)
                    folded(k, kp) += base[(k * shape[1] + l) * shape[2] + kp] *
                                     p[static_cast<std::size_t>(i)](l);
        row = row * folded;
    }
    const auto last = mps.core_shape(d - 2);
    MatrixMap tail(mps.core(d - 2).data(), last[0] * last[1], last[2]);
    Vector half = tail * p[static_cast<std::size_t>(d - 1)];          // over l_d
    MatrixMap half_mat(half.data(), last[0], last[1]);
    Vector closed = half_mat * p[static_cast<std::size_t>(d - 2)];    // over l_{d-1}
    return row.dot(closed);
}

std::int64_t dof_count(std::int64_t d, std::int64_t phys, std::int64_t bond) {
    if (d < 3) throw ConfigError("dof_count: defined for d >= 3");
    return bond * phys + (d - 3) * bond * bond * phys + bond * phys * phys;
}

double fidelity_dense(const Mps& mps, const GridTensor& target) {
    const std::int64_t d = mps.order();
    if (target.order() != d) throw ConfigError("fidelity_dense: order mismatch");
    for (std::int64_t extent : target.dims())
        if (extent != mps.phys()) throw ConfigError("fidelity_dense: extent mismatch");
    const double target_norm = target.norm();
    if (target_norm == 0.0) throw NumericError("fidelity_dense: zero target");
    const double mps_norm_value = mps.norm();
    if (mps_norm_value == 0.0) throw NumericError("fidelity_dense: zero MPS");

    // Fold the target through the cores left to right; the intermediate is
    // never larger than the target itself.
    const auto first = mps.core_shape(0);
    std::int64_t rest = target.size() / mps.phys();
    MatrixMap t0(target.data(), first[1], rest);
    MatrixMap u1(mps.core(0).data(), first[1], first[2]);
    Matrix acc = u1.transpose() * t0; // (r1 x rest)
    for (std::int64_t i = 1; i < d - 1; ++i) {
        const auto shape = mps.core_shape(i);
        rest /= mps.phys();
        MatrixMap folded(acc.data(), shape[0] * shape[1], rest);
        MatrixMap core(mps.core(i).data(), shape[0] * shape[1], shape[2]);
        Matrix next = core.transpose() * folded; // (right x rest)
        acc = std::move(next);
    }
    // After the last fold both axes are the final physical index: one from the
    // merged core, one left over from the target. Closing the chain traces it.
    return acc.trace() / (target_norm * mps_norm_value);
}

void right_canonicalize_inplace(Mps& mps) {
    const std::int64_t d = mps.order();
    for (std::int64_t i = d - 2; i >= 1; --i) {
        const auto shape = mps.core_shape(i);
        MatrixMap m(mps.core(i).data(), shape[0], shape[1] * shape[2]);
        SvdResult f = svd_econ(m);
        // Bond extents stay fixed: thin SVD of a wide (r x D*r') matrix keeps
        // all r orthonormal rows in vt even at reduced numerical rank.
        MutableMap(mps.core(i).data(), shape[0], shape[1] * shape[2]) = f.vt;
        Matrix carried = f.u * f.s.asDiagonal(); // (r x r)
        const auto prev = mps.core_shape(i - 1);
        MutableMap left(mps.core(i - 1).data(), prev[0] * prev[1], prev[2]);
        left = (left * carried).eval();
    }
}

Mps pad_bonds(const Mps& mps, std::int64_t bond) {
    if (check_right_canonical(mps) > 1e-10)
        throw ConfigError("pad_bonds: input must be right-canonical");
    const std::int64_t d = mps.order();
    std::vector<std::int64_t> bonds(static_cast<std::size_t>(d - 2), bond);
    std::vector<std::vector<double>> cores(static_cast<std::size_t>(d - 1));

    for (std::int64_t i = 0; i < d - 1; ++i) {
        const auto shape = mps.core_shape(i);
        const std::int64_t left = (i == 0) ? 1 : bond;
        const std::int64_t right = (i == d - 2) ? mps.phys() : bond;
        if (shape[0] > left || (i < d - 2 && shape[2] > right))
            throw ConfigError("pad_bonds: target bond below an existing one");
        const std::int64_t width = shape[1] * right;
        if (left > width) throw ConfigError("pad_bonds: bond exceeds the core row space");

        // Old entries keep their (l, k) slots; extra right-bond columns are
        // zero, extra left-bond rows come from the orthonormal completion.
        Matrix wide = Matrix::Zero(left, width);
        const double* base = mps.core(i).data();
        for (std::int64_t k = 0; k < shape[0]; ++k)
            for (std::int64_t l = 0; l < shape[1]; ++l)
                for (std::int64_t kp = 0; kp < shape[2]; ++kp)
                    wide(k, l * right + kp) = base[(k * shape[1] + l) * shape[2] + kp];
        if (i > 0 && left > shape[0]) {
            const Matrix completion = complete_to_unitary(wide.topRows(shape[0]).transpose());
            wide.bottomRows(left - shape[0]) =
                completion.rightCols(left - shape[0]).transpose();
        }
        auto& core = cores[static_cast<std::size_t>(i)];
        core.resize(static_cast<std::size_t>(left * width));
        MutableMap(core.data(), left, width) = wide;
    }
    return Mps(d, mps.phys(), std::move(bonds), std::move(cores));
}

Mps random_right_canonical_mps(std::int64_t d, std::int64_t phys, std::int64_t bond,
                               std::uint64_t seed, double norm) {
    if (d < 3) throw ConfigError("random_right_canonical_mps: d >= 3");
    if (bond < 1 || bond > phys)
        throw ConfigError("random_right_canonical_mps: bond must lie in [1, D]");
    std::vector<std::vector<double>> cores(static_cast<std::size_t>(d - 1));
    std::vector<std::int64_t> bonds(static_cast<std::size_t>(d - 2), bond);

    for (std::int64_t i = 1; i < d - 1; ++i) {
        const std::int64_t width = (i == d - 2) ? phys * phys : phys * bond;
        const Matrix q = haar_random_orthogonal(width, derive_seed(seed, {7u, static_cast<std::uint64_t>(i)}));
        auto& core = cores[static_cast<std::size_t>(i)];
        core.resize(static_cast<std::size_t>(bond * width));
        MutableMap(core.data(), bond, width) = q.topRows(bond);
    }
    Rng rng(derive_seed(seed, {7u, 0u}));
    auto& head = cores.front();
    head.resize(static_cast<std::size_t>(phys * bond));
    double sq = 0.0;
    for (double& v : head) {
        v = rng.normal();
        sq += v * v;
    }
    const double factor = norm / std::sqrt(sq);
    for (double& v : head) v *= factor;
    return Mps(d, phys, std::move(bonds), std::move(cores));
}

} // namespace ampex
