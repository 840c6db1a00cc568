#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tkz/instance.hpp"
#include "tkz/tensor.hpp"

namespace tkz {

/// Random consistent system with frontal slices U_i D_i V_i^T: orthonormal U_i
/// (m x r), V_i (l x r) and diagonal D_i with entries drawn uniformly in (1, kappa).
struct SyntheticSpec {
    std::size_t m = 0, l = 0, n = 0, p = 0;
    std::size_t r = 0;
    double kappa = 10.0;
    std::uint64_t seed = 0;
};

/// Gaussian blur operator with Toeplitz frontal slices.
struct BlurSpec {
    std::size_t l = 0;
    std::size_t n = 0;
    std::size_t band = 6;
    double sigma = 1.8;
};

class InconsistentSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Builds A, a Gaussian ground truth X*, B = A * X* and the least-norm pinv(A) * B.
/// Slice i of A and slice k of X* use their own derived sub-seeds, so changing n
/// does not alter the earlier slices.
ProblemInstance gen_synthetic(const SyntheticSpec& spec);

/// The l x l x n blur tensor; slice j is M2(j, 1) * M1 with M1, M2 Toeplitz
/// matrices from a truncated Gaussian profile. Requires n <= l.
Tensor3 gen_blur(const BlurSpec& spec);

/// The first column of M2, i.e. the per-slice scale factors of the blur tensor.
std::vector<double> blur_profile(const BlurSpec& spec);

/// Smooth "video" of n frames (l x p each) with a few moving bright blobs, values in [0, 1].
Tensor3 gen_video(std::size_t l, std::size_t p, std::size_t n, std::uint64_t seed);

/// pinv(A) * B. Throws InconsistentSystemError when ||A * X - B||_F > 1e-8 ||B||_F.
Tensor3 least_norm_solution(const Tensor3& a, const Tensor3& b);

/// ||x - x_star0||^2 / ||x0 - x_star0||^2.
double rse(const Tensor3& x, const Tensor3& x_star0, const Tensor3& x0);

/// Value reported in place of +infinity when the two frames are identical.
inline constexpr double kPsnrCap = 999.0;

/// 10 log10(peak^2 / MSE) over one frame (matrix).
double psnr(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& reference, double peak);

/// Per-frontal-slice PSNR with the reference frame's maximum as the peak.
std::vector<double> psnr_frames(const Tensor3& estimate, const Tensor3& reference);

}  // namespace tkz
