#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ampex {

/// Dense order-d tensor of real values, row-major with index 1 slowest.
/// Holds either function values on a grid (extents n_gr per mode) or
/// expansion coefficients (extents D per mode), plus an optional norm scalar
/// C = sqrt(sum of squared entries).
class GridTensor {
public:
    GridTensor() = default;
    explicit GridTensor(std::vector<std::int64_t> dims, double fill = 0.0);
    GridTensor(std::vector<std::int64_t> dims, std::vector<double> entries);

    std::int64_t order() const { return static_cast<std::int64_t>(dims_.size()); }
    const std::vector<std::int64_t>& dims() const { return dims_; }
    std::int64_t size() const { return static_cast<std::int64_t>(entries_.size()); }

    std::span<const double> entries() const { return entries_; }
    std::span<double> entries() { return entries_; }
    double* data() { return entries_.data(); }
    const double* data() const { return entries_.data(); }

    double at(std::span<const std::int64_t> index) const { return entries_[flat_index(index)]; }
    double& at(std::span<const std::int64_t> index) { return entries_[flat_index(index)]; }
    std::int64_t flat_index(std::span<const std::int64_t> index) const;

    /// Euclidean norm of the entries, recomputed.
    double norm() const;

    const std::optional<double>& stored_norm() const { return stored_norm_; }
    void set_stored_norm(double c) { stored_norm_ = c; }
    void clear_stored_norm() { stored_norm_.reset(); }

private:
    std::vector<std::int64_t> dims_;
    std::vector<double> entries_;
    std::optional<double> stored_norm_;
};

} // namespace ampex
