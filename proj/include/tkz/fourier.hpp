#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "tkz/tensor.hpp"

namespace tkz {

/// DFT of a real tensor along its third mode.
///
/// Slice j of the full spectrum is sum_k A_k exp(-2 pi i j k / depth). Because the
/// source is real, slice (depth - j) is the conjugate of slice j, so only the
/// slices 0 .. depth/2 are stored.
struct FourierSlices {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t depth = 0;
    std::vector<Eigen::MatrixXcd> half;

    std::size_t stored() const noexcept { return half.size(); }

    /// Any slice of the full spectrum, 0 <= j < depth.
    Eigen::MatrixXcd slice(std::size_t j) const;

    /// How many full-spectrum slices stored slice j stands for (1 or 2).
    double multiplicity(std::size_t j) const noexcept {
        return (j == 0 || 2 * j == depth) ? 1.0 : 2.0;
    }
};

inline std::size_t half_spectrum_size(std::size_t depth) noexcept { return depth / 2 + 1; }

FourierSlices to_fourier(const Tensor3& a);

/// Inverse transform. Imaginary parts that the conjugate symmetry makes
/// redundant (slice 0, and the Nyquist slice for even depth) are ignored.
Tensor3 from_fourier(const FourierSlices& f);

}  // namespace tkz
