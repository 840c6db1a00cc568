#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "tkz/sampling.hpp"
#include "tkz/tensor.hpp"

namespace tkz {

/// Row-slice pseudoinverses of a consistent system A * X = B, precomputed once and
/// shared read-only by every solver run on that system.
///
/// Besides the spatial tensors pinv(A_{i::}) the bank keeps the Fourier-domain data
/// the sweep works with: per stored frequency, the transformed rows of A and B and
/// the matching pseudoinverse columns.
class ProjectorBank {
public:
    ProjectorBank(Tensor3 a, Tensor3 b, double rank_tol = kDefaultRankTol);

    std::size_t rows() const noexcept { return a_.rows(); }
    const Tensor3& a() const noexcept { return a_; }
    const Tensor3& b() const noexcept { return b_; }

    /// pinv(A_{i::}), an l x 1 x n tensor.
    const Tensor3& pinv_row(std::size_t i) const { return pinv_rows_.at(i); }

    /// X - pinv(A_{i::}) * (A_{i::} * X - B_{i::}) evaluated with spatial t-products.
    Tensor3 project_row(const Tensor3& x, std::size_t i) const;

private:
    friend struct SweepKernel;

    Tensor3 a_;
    Tensor3 b_;
    std::vector<Tensor3> pinv_rows_;

    // Per stored frequency j: columns of a_t_[j] are transformed rows of A (l x m),
    // b_t_[j] likewise for B (p x m), pinv_[j] column i is the row pseudoinverse (l x m).
    std::vector<Eigen::MatrixXcd> a_t_;
    std::vector<Eigen::MatrixXcd> b_t_;
    std::vector<Eigen::MatrixXcd> pinv_;
    std::vector<Eigen::VectorXd> pinv_norm2_;
};

inline ProjectorBank build_projectors(const Tensor3& a, const Tensor3& b,
                                      double rank_tol = kDefaultRankTol) {
    return ProjectorBank(a, b, rank_tol);
}

inline Tensor3 project_row(const Tensor3& x, std::size_t i, const ProjectorBank& bank) {
    return bank.project_row(x, i);
}

/// Outcome of one full Kaczmarz sweep from X in the order pi.
struct SweepResult {
    Tensor3 projected;   // P_pi(X)
    double delta = 0.0;  // ||P_pi(X) - X||_F^2
    double rnorm2 = 0.0; // ||r_pi(X)||_F^2, the summed squared row corrections
    double gamma = 0.0;  // (rnorm2 + delta) / 2
};

/// Composite projection P_{pi_m} o ... o P_{pi_1}(X).
SweepResult sweep(const Tensor3& x, const Permutation& pi, const ProjectorBank& bank);

}  // namespace tkz
