#include "ampex/ortho.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Core>

#include "ampex/errors.hpp"
#include "ampex/linalg.hpp"

namespace ampex {

namespace {

using MatrixMap = Eigen::Map<const Matrix>;
using MutableMap = Eigen::Map<Matrix>;

std::map<std::string, BasisFactory>& registry() {
    static std::map<std::string, BasisFactory> reg = {
        {"cosine", [](double lo, double up, std::int64_t d, std::int64_t n) {
             return make_cosine_basis(lo, up, d, n);
         }}};
    return reg;
}

void require_point_in_domain(const OrthoBasis1D& basis, double x) {
    if (x < basis.lower || x > basis.upper) {
        std::ostringstream msg;
        msg << "point " << x << " outside [" << basis.lower << ", " << basis.upper
            << "]; extrapolation refused";
        throw ConfigError(msg.str());
    }
}

} // namespace

OrthoBasis1D make_cosine_basis(double lower, double upper, std::int64_t degree,
                               std::int64_t grid_count) {
    if (!(lower < upper)) throw ConfigError("cosine basis: lower bound must be below upper");
    if (degree < 1) throw ConfigError("cosine basis: degree must be >= 1");
    if (grid_count < degree)
        throw ConfigError("cosine basis: n_gr < D, discrete orthogonality unattainable");

    OrthoBasis1D basis;
    basis.kind = "cosine";
    basis.lower = lower;
    basis.upper = upper;
    basis.degree = degree;
    basis.grid_count = grid_count;
    basis.grid.resize(static_cast<std::size_t>(grid_count));
    for (std::int64_t j = 0; j < grid_count; ++j)
        basis.grid[static_cast<std::size_t>(j)] =
            (static_cast<double>(j) + 0.5) / static_cast<double>(grid_count) * (upper - lower) +
            lower;
    basis.c.assign(static_cast<std::size_t>(degree), static_cast<double>(grid_count) / 2.0);
    basis.c[0] = static_cast<double>(grid_count);
    const double width = upper - lower;
    basis.eval_fn = [lower, width](std::int64_t l, double x) {
        return std::cos(static_cast<double>(l) * std::numbers::pi * (x - lower) / width);
    };
    return basis;
}

void register_basis_kind(const std::string& kind, BasisFactory factory) {
    registry()[kind] = std::move(factory);
}

OrthoBasis1D make_basis(const std::string& kind, double lower, double upper,
                        std::int64_t degree, std::int64_t grid_count) {
    auto it = registry().find(kind);
    if (it == registry().end()) throw ConfigError("unknown basis kind '" + kind + "'");
    return it->second(lower, upper, degree, grid_count);
}

double eval_basis(const OrthoBasis1D& basis, std::int64_t l, double x) {
    if (l < 0 || l >= basis.degree) {
        std::ostringstream msg;
        msg << "basis function index " << l << " outside [0, " << basis.degree << ")";
        throw ConfigError(msg.str());
    }
    require_point_in_domain(basis, x);
    return basis.eval_fn(l, x);
}

double check_discrete_orthogonality(const OrthoBasis1D& basis) {
    double worst = 0.0;
    for (std::int64_t l = 0; l < basis.degree; ++l) {
        for (std::int64_t lp = l; lp < basis.degree; ++lp) {
            double sum = 0.0;
            for (double x : basis.grid) sum += basis.eval_fn(l, x) * basis.eval_fn(lp, x);
            const double expected = (l == lp) ? basis.c[static_cast<std::size_t>(l)] : 0.0;
            worst = std::max(worst, std::abs(sum - expected));
        }
    }
    return worst;
}

namespace {

// One pass of T <- contract(B, first mode of T), then rotate that mode to the
// end; after d passes the mode order is restored. Keeps every step a single
// row-major GEMM.
GridTensor modewise_transform(const GridTensor& input, std::span<const OrthoBasis1D> bases,
                              const std::function<Matrix(const OrthoBasis1D&)>& mode_matrix) {
    const auto d = static_cast<std::size_t>(input.order());
    std::vector<double> cur(input.entries().begin(), input.entries().end());
    std::vector<std::int64_t> dims = input.dims();

    std::vector<double> next;
    for (std::size_t mode = 0; mode < d; ++mode) {
        const Matrix b = mode_matrix(bases[mode]);
        const std::int64_t n_in = dims[0];
        if (b.cols() != n_in)
            throw ConfigError("mode-wise transform: tensor extent does not match basis");
        const std::int64_t rest =
            static_cast<std::int64_t>(cur.size()) / n_in;
        MatrixMap t(cur.data(), n_in, rest);
        Matrix u = b * t;                        // (n_out x rest)
        next.resize(static_cast<std::size_t>(u.rows() * u.cols()));
        MutableMap rotated(next.data(), rest, u.rows());
        rotated = u.transpose();                 // move transformed mode last
        cur.swap(next);
        dims.erase(dims.begin());
        dims.push_back(b.rows());
    }
    return GridTensor(std::move(dims), std::move(cur));
}

} // namespace

GridTensor coefficients_from_grid(const GridTensor& values,
                                  std::span<const OrthoBasis1D> bases) {
    if (static_cast<std::size_t>(values.order()) != bases.size())
        throw ConfigError("coefficients_from_grid: tensor order does not match basis count");
    for (std::size_t i = 0; i < bases.size(); ++i)
        if (values.dims()[i] != bases[i].grid_count)
            throw ConfigError("coefficients_from_grid: values extents must equal each n_gr");

    GridTensor coeffs = modewise_transform(values, bases, [](const OrthoBasis1D& basis) {
        Matrix b(basis.degree, basis.grid_count);
        for (std::int64_t l = 0; l < basis.degree; ++l)
            for (std::int64_t j = 0; j < basis.grid_count; ++j)
                b(l, j) = basis.eval_fn(l, basis.grid[static_cast<std::size_t>(j)]) /
                          basis.c[static_cast<std::size_t>(l)];
        return b;
    });
    coeffs.set_stored_norm(coeffs.norm());
    return coeffs;
}

double expansion_eval(const GridTensor& coeffs, std::span<const OrthoBasis1D> bases,
                      std::span<const double> x) {
    const auto d = static_cast<std::size_t>(coeffs.order());
    if (bases.size() != d || x.size() != d)
        throw ConfigError("expansion_eval: order mismatch between coefficients, bases, point");
    for (std::size_t i = 0; i < d; ++i) {
        if (coeffs.dims()[i] != bases[i].degree)
            throw ConfigError("expansion_eval: coefficient extents must equal each degree");
        require_point_in_domain(bases[i], x[i]);
    }

    // Successive first-mode contractions with the per-mode value vectors; the
    // remaining modes keep their order, so no transposes are needed.
    std::vector<double> cur(coeffs.entries().begin(), coeffs.entries().end());
    std::int64_t rest = coeffs.size();
    for (std::size_t mode = 0; mode < d; ++mode) {
        const std::int64_t extent = coeffs.dims()[mode];
        rest /= extent;
        Vector p(extent);
        for (std::int64_t l = 0; l < extent; ++l) p(l) = bases[mode].eval_fn(l, x[mode]);
        MatrixMap t(cur.data(), extent, rest);
        Vector folded = t.transpose() * p;
        cur.assign(folded.data(), folded.data() + rest);
    }
    return cur[0];
}

double normalization_constant(GridTensor& values) {
    if (values.size() == 0) throw ConfigError("normalization_constant: empty tensor");
    const double c = values.norm();
    if (c == 0.0)
        throw NumericError("normalization_constant: all-zero tensor, encoded state undefined");
    values.set_stored_norm(c);
    return c;
}

} // namespace ampex
