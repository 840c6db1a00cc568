#pragma once

#include <optional>
#include <string>

#include "tkz/tensor.hpp"

namespace tkz {

/// A consistent tensor system A * X = B together with, when known, its least-norm
/// solution pinv(A) * B (the limit of every solver started from zero).
struct ProblemInstance {
    Tensor3 a;
    Tensor3 b;
    std::optional<Tensor3> x_star0;
    std::string provenance;

    std::size_t m() const noexcept { return a.rows(); }
    std::size_t l() const noexcept { return a.cols(); }
    std::size_t p() const noexcept { return b.cols(); }
    std::size_t n() const noexcept { return a.depth(); }
};

}  // namespace tkz
