#pragma once

// Dense, desk-scale oracles for the convergence theory: affine operators of a
// sweep, contraction rates, the Arnoldi structure of the Gram-Schmidt iteration and
// brute-force projections. Everything here materializes bcirc matrices, so inputs
// are capped at l*n, m*n <= kDenseCap.

#include <cmath>
#include <limits>
#include <span>

#include "tkz/instance.hpp"
#include "tkz/projectors.hpp"
#include "tkz/sampling.hpp"
#include "tkz/tensor.hpp"

namespace tkz {

inline constexpr std::size_t kDenseCap = 512;

/// Throws CapacityError when A is too large for the dense oracles.
void require_dense_scale(const Tensor3& a);

/// T_pi = (I - pinv(A_{pi_m}) * A_{pi_m}) * ... * (I - pinv(A_{pi_1}) * A_{pi_1}).
Tensor3 compute_T_pi(const Tensor3& a, const Permutation& pi);

/// G_pi such that P_pi(X) = T_pi * X + G_pi, summed term by term.
Tensor3 compute_G_pi(const Tensor3& a, const Tensor3& b, const Permutation& pi);

/// Plain Kaczmarz contraction factor ||bcirc(T_pi * pinv(A) * A)||_2^2.
double rho_pi(const Tensor3& a, const Permutation& pi);

struct RateReport {
    double rho_pi = std::numeric_limits<double>::quiet_NaN();
    double rate_beta = 1.0;
    double zeta = 0.0;
    double bound = 1.0;  // 1 - rate_beta * zeta^2
    double observed_factor = std::numeric_limits<double>::quiet_NaN();
};

/// Rate quantities at epoch k from the window X^{j}, ..., X^{k-1} (`older`), X^k,
/// P(X^k) and the least-norm solution. `next` (X^{k+1}) fills observed_factor.
RateReport rate_beta_zeta(std::span<const Tensor3> older, const Tensor3& xk, const Tensor3& projected,
                          const Tensor3& x_star0, const Tensor3* next = nullptr,
                          double rho = std::numeric_limits<double>::quiet_NaN());

struct ArnoldiReport {
    Eigen::MatrixXd hessenberg;       // (k+1) x (k+1)
    std::vector<double> lambdas;      // lambda_0 .. lambda_k
    double orth_error = 0.0;          // max normalized |<U_i, U_j>|, i != j
    double decomposition_residual = 0.0;  // relative, in t-product form
    double subdiag_mismatch = 0.0;    // max relative gap of <U_{j+1}, C U_j>/||U_{j+1}||^2 to -1/lambda_j
    std::size_t restarts = 0;
};

/// Runs the Gram-Schmidt iteration with unbounded history for `epochs` steps under
/// a fixed order (incremental or shuffle-once) and checks
/// C * U^k = U^k * H_k + R_k * E_k^T with C = I - T_pi. Refuses random reshuffling.
ArnoldiReport arnoldi_check(const ProblemInstance& problem, Strategy strategy, std::size_t epochs,
                            std::uint64_t seed);

/// Largest relative residual of X^{j+1} - X^0 outside K_{j+1}(C, G - C * X^0) over
/// j < epochs, for the same unbounded-history run from X^0 = 0.
double krylov_membership_check(const ProblemInstance& problem, Strategy strategy, std::size_t epochs,
                               std::uint64_t seed);

enum class LeastSquaresRoute { Qr, Svd };

/// Closest point to x_star0 in aff{window..., projected}; window ends with X^k.
Tensor3 affine_argmin_oracle(std::span<const Tensor3> window, const Tensor3& projected,
                             const Tensor3& x_star0, LeastSquaresRoute route = LeastSquaresRoute::Qr);

}  // namespace tkz
