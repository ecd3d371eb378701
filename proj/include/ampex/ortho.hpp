#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ampex/grid_tensor.hpp"

namespace ampex {

/// One dimension's orthogonal system: D functions P_0..P_{D-1} on [lower,
/// upper] together with n_gr >= D grid points on which the discrete
/// orthogonality sum_j P_l(x_j) P_l'(x_j) = c_l delta_ll' holds.
struct OrthoBasis1D {
    std::string kind;
    double lower = 0.0;
    double upper = 1.0;
    std::int64_t degree = 0;     ///< D, number of basis functions
    std::int64_t grid_count = 0; ///< n_gr
    std::vector<double> grid;    ///< strictly increasing, inside [lower, upper]
    std::vector<double> c;       ///< D positive normalization constants
    std::function<double(std::int64_t, double)> eval_fn; ///< raw P_l(x)
};

/// Cosine system P_l(x) = cos(l pi (x-L)/(U-L)) on the midpoint grid
/// x_j = ((j+1/2)/n_gr)(U-L)+L, for which discrete orthogonality is exact
/// with c_0 = n_gr and c_l = n_gr/2 otherwise.
OrthoBasis1D make_cosine_basis(double lower, double upper, std::int64_t degree,
                               std::int64_t grid_count);

/// Registry hook so further kinds (chebyshev, sine, ...) can be plugged in;
/// only "cosine" ships.
using BasisFactory =
    std::function<OrthoBasis1D(double, double, std::int64_t, std::int64_t)>;
void register_basis_kind(const std::string& kind, BasisFactory factory);
OrthoBasis1D make_basis(const std::string& kind, double lower, double upper,
                        std::int64_t degree, std::int64_t grid_count);

/// P_l(x). Refuses l outside [0,D) and x strictly outside [lower,upper]
/// (endpoints are valid evaluation points).
double eval_basis(const OrthoBasis1D& basis, std::int64_t l, double x);

/// max over l,l' < D of |sum_j P_l(x_j) P_l'(x_j) - c_l delta_ll'|.
double check_discrete_orthogonality(const OrthoBasis1D& basis);

/// Expansion coefficients a_l = (1/c_l) sum_j f(x_j) P_l(x_j) over the
/// tensorized basis, computed by d successive mode-wise contractions.
GridTensor coefficients_from_grid(const GridTensor& values,
                                  std::span<const OrthoBasis1D> bases);

/// sum_l a_l P_l(x), again via d mode-wise contractions.
double expansion_eval(const GridTensor& coeffs, std::span<const OrthoBasis1D> bases,
                      std::span<const double> x);

/// C = sqrt(sum f(x_j)^2); also stored into the tensor. Throws on an all-zero
/// tensor (the encoded state would be undefined).
double normalization_constant(GridTensor& values);

} // namespace ampex
