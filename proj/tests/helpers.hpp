#pragma once

#include <algorithm>

#include "tkz/sampling.hpp"
#include "tkz/tensor.hpp"

namespace tkz::test {

inline Tensor3 random_tensor(std::size_t r, std::size_t c, std::size_t n, SplitMix64& rng) {
    Tensor3 t(r, c, n);
    for (double& v : t.values()) v = rng.normal();
    return t;
}

inline double rel_diff(const Tensor3& a, const Tensor3& b) {
    const double s = std::max(fro_norm(a), fro_norm(b));
    return s == 0.0 ? 0.0 : fro_norm(a - b) / s;
}

// Literal t-product: C(:,:,k) = sum_j A(:,:,(k - j) mod n) * B(:,:,j), entry by entry.
inline Tensor3 circular_product(const Tensor3& a, const Tensor3& b) {
    const std::size_t n = a.depth();
    Tensor3 c(a.rows(), b.cols(), n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t col = 0; col < b.cols(); ++col)
                for (std::size_t t = 0; t < a.cols(); ++t)
                    for (std::size_t row = 0; row < a.rows(); ++row)
                        c(row, col, k) += a(row, t, (k + n - j) % n) * b(t, col, j);
    return c;
}

}  // namespace tkz::test
