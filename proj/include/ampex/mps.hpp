#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ampex/grid_tensor.hpp"
#include "ampex/ortho.hpp"

namespace ampex {

/// Matrix product state over d modes of physical extent D, with the last two
/// modes merged into one order-3 core:
///
///   a[l1..ld] = sum_k U1[l1,k1] U2[k1,l2,k2] ... U{d-1}[k{d-2},l{d-1},ld]
///
/// Core i (0-based) is stored row-major with shape
///   core 0:      (D,  r1)
///   core i:      (ri, D, r{i+1})      for 1 <= i <= d-3
///   core d-2:    (r{d-2}, D, D)
/// Right-canonical means every core but the first has orthonormal rows when
/// matricized as (left bond) x (rest).
class Mps {
public:
    Mps(std::int64_t d, std::int64_t phys, std::vector<std::int64_t> bonds,
        std::vector<std::vector<double>> cores);

    std::int64_t order() const { return d_; }
    std::int64_t phys() const { return phys_; }
    const std::vector<std::int64_t>& bonds() const { return bonds_; }
    std::int64_t core_count() const { return d_ - 1; }

    std::span<const double> core(std::int64_t i) const { return cores_[static_cast<std::size_t>(i)]; }
    std::span<double> core(std::int64_t i) { return cores_[static_cast<std::size_t>(i)]; }

    /// (left, phys, right) extents of core i; core 0 reports left = 1 and the
    /// last core reports right = D (its second physical index).
    std::array<std::int64_t, 3> core_shape(std::int64_t i) const;

    /// Norm of the represented tensor, computed exactly by transfer-matrix
    /// contraction (equals |U1| in right-canonical form).
    double norm() const;

    /// Multiplies the represented tensor by the factor (applied to core 0).
    void scale(double factor);

private:
    std::int64_t d_ = 0;
    std::int64_t phys_ = 0;
    std::vector<std::int64_t> bonds_;
    std::vector<std::vector<double>> cores_;
};

struct CanonicalizeResult {
    Mps mps;
    /// eps[j] = squared singular-value weight discarded at bond j (bonds are
    /// indexed left to right; the decomposition itself sweeps right to left).
    std::vector<double> eps;
};

/// Recursive-SVD decomposition of a dense coefficient tensor into a
/// right-canonical MPS, truncating each bond to the given cap. The magnitude
/// of the tensor is preserved (it ends up in core 0).
CanonicalizeResult canonicalize(const GridTensor& dense, std::int64_t r_max);
CanonicalizeResult canonicalize(const GridTensor& dense, std::span<const std::int64_t> bond_caps);

/// Contracts the chain back into a dense tensor. Refuses when D^d exceeds
/// max_entries.
GridTensor reconstruct_dense(const Mps& mps, std::int64_t max_entries = std::int64_t{1} << 27);

/// Max deviation of the right-canonical Gram conditions from identity.
double check_right_canonical(const Mps& mps);

/// Evaluates the represented expansion sum_l a_l P_l(x) at one point by
/// contracting per-mode basis values into the cores; O(d r^2 D + r D^2).
double mps_eval(const Mps& mps, std::span<const OrthoBasis1D> bases, std::span<const double> x);

/// Parameter count r D + (d-3) r^2 D + r D^2 of the chain.
std::int64_t dof_count(std::int64_t d, std::int64_t phys, std::int64_t bond);

/// Normalized overlap <target|mps> / (|target| |mps|), streamed mode by mode
/// without materializing the reconstructed tensor.
double fidelity_dense(const Mps& mps, const GridTensor& target);

/// Restores right-canonical form in place (used after per-mode rescalings
/// that break it). Bond extents are kept as-is so circuit shapes survive.
void right_canonicalize_inplace(Mps& mps);

/// Widens every bond of a right-canonical MPS to `bond` without changing the
/// represented tensor: new rows come from the deterministic orthonormal
/// completion, the matching new columns are zero. Needed when rank-deficient
/// targets produce bonds below the power-of-two a circuit layout requires.
Mps pad_bonds(const Mps& mps, std::int64_t bond);

/// Random right-canonical MPS with the requested overall norm; used for
/// property tests and random circuit initialization.
Mps random_right_canonical_mps(std::int64_t d, std::int64_t phys, std::int64_t bond,
                               std::uint64_t seed, double norm = 1.0);

} // namespace ampex
