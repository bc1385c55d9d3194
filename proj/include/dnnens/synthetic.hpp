#pragma once

#include "dnnens/tabular_data.hpp"

#include <cstddef>
#include <cstdint>

namespace dnnens {

/// Balanced classes drawn from unit-covariance Gaussians. Class means are
/// independent N(0, separation^2 / n_features) vectors, so `separation`
/// controls the expected distance between class centres and hence overlap.
/// Sample i belongs to class i mod n_classes.
Dataset make_gaussian_classes(std::size_t n_samples, std::size_t n_features,
                              std::size_t n_classes, double separation,
                              std::uint64_t seed);

}  // namespace dnnens
