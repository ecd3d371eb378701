#include "ampex/grid_tensor.hpp"

#include <cmath>
#include <sstream>

#include "ampex/errors.hpp"

namespace ampex {

namespace {
std::int64_t checked_size(const std::vector<std::int64_t>& dims) {
    std::int64_t total = 1;
    for (std::int64_t d : dims) {
        if (d < 1) throw ConfigError("GridTensor: extents must be positive");
        if (total > (std::int64_t{1} << 40) / d)
            throw ConfigError("GridTensor: requested tensor is unreasonably large");
        total *= d;
    }
    return total;
}
} // namespace

GridTensor::GridTensor(std::vector<std::int64_t> dims, double fill)
    : dims_(std::move(dims)), entries_(static_cast<std::size_t>(checked_size(dims_)), fill) {}

GridTensor::GridTensor(std::vector<std::int64_t> dims, std::vector<double> entries)
    : dims_(std::move(dims)), entries_(std::move(entries)) {
    if (checked_size(dims_) != static_cast<std::int64_t>(entries_.size())) {
        std::ostringstream msg;
        msg << "GridTensor: entry count " << entries_.size() << " does not match dims product";
        throw ConfigError(msg.str());
    }
}

std::int64_t GridTensor::flat_index(std::span<const std::int64_t> index) const {
    if (index.size() != dims_.size()) throw ConfigError("GridTensor: index order mismatch");
    std::int64_t flat = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (index[i] < 0 || index[i] >= dims_[i]) throw ConfigError("GridTensor: index out of range");
        flat = flat * dims_[i] + index[i];
    }
    return flat;
}

double GridTensor::norm() const {
    double sum = 0.0;
    for (double v : entries_) sum += v * v;
    return std::sqrt(sum);
}

} // namespace ampex
