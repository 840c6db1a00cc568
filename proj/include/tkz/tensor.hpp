#pragma once

// Dense third-order real tensors and the t-product algebra built on them.
//
// Storage is slice-major, column-major inside each frontal slice, so entry
// (i, j, k) lives at i + rows * (j + cols * k). With this layout the tube-wise
// vectorization tv(A) is the raw value array.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tkz/errors.hpp"

namespace tkz {

class Tensor3 {
public:
    using SliceMap = Eigen::Map<Eigen::MatrixXd>;
    using ConstSliceMap = Eigen::Map<const Eigen::MatrixXd>;

    Tensor3() = default;

    /// Zero tensor of the given shape.
    Tensor3(std::size_t rows, std::size_t cols, std::size_t depth);

    /// Takes ownership of `values` (canonical layout). Throws DimensionError on a
    /// length mismatch and std::invalid_argument on non-finite entries.
    Tensor3(std::size_t rows, std::size_t cols, std::size_t depth, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t depth() const noexcept { return depth_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::size_t slice_size() const noexcept { return rows_ * cols_; }
    bool empty() const noexcept { return values_.empty(); }

    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[i + rows_ * (j + cols_ * k)];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return values_[i + rows_ * (j + cols_ * k)];
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    ConstSliceMap slice(std::size_t k) const;
    SliceMap slice(std::size_t k);

    /// tv(A) as a view.
    Eigen::Map<const Eigen::VectorXd> vec() const;
    Eigen::Map<Eigen::VectorXd> vec();

    bool same_shape(const Tensor3& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_ && depth_ == other.depth_;
    }

    Tensor3& operator+=(const Tensor3& other);
    Tensor3& operator-=(const Tensor3& other);
    Tensor3& operator*=(double s);

    /// this += a * x
    void axpy(double a, const Tensor3& x);

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t depth_ = 0;
    std::vector<double> values_;
};

Tensor3 operator+(Tensor3 a, const Tensor3& b);
Tensor3 operator-(Tensor3 a, const Tensor3& b);
Tensor3 operator*(double s, Tensor3 a);

/// Block circulant matrix: block (i, j) is frontal slice 1 + ((i - j) mod depth).
Eigen::MatrixXd bcirc(const Tensor3& a);

/// Frontal slices stacked vertically, (rows*depth) x cols.
Eigen::MatrixXd unfold(const Tensor3& a);

/// Inverse of unfold. Throws DimensionError unless depth divides m.rows().
Tensor3 fold(const Eigen::MatrixXd& m, std::size_t depth);

Eigen::VectorXd tv(const Tensor3& a);

/// Production t-product through the mode-3 DFT.
Tensor3 t_product(const Tensor3& a, const Tensor3& b);

/// fold(bcirc(a) * unfold(b)), kept as the reference route.
Tensor3 t_product_dense(const Tensor3& a, const Tensor3& b);

Tensor3 t_transpose(const Tensor3& a);
Tensor3 t_identity(std::size_t size, std::size_t depth);

double inner(const Tensor3& a, const Tensor3& b);
double fro_norm2(const Tensor3& a);
double fro_norm(const Tensor3& a);

inline constexpr double kDefaultRankTol = 1e-12;

/// Tensor pseudoinverse, bcirc(pinv(a)) = pinv(bcirc(a)). Computed slice-wise in
/// the Fourier domain; singular values at or below rank_tol * ||bcirc(a)||_2 are
/// treated as zero.
Tensor3 t_pinv(const Tensor3& a, double rank_tol = kDefaultRankTol);

/// Same quantity from a dense SVD of bcirc(a).
Tensor3 t_pinv_dense(const Tensor3& a, double rank_tol = kDefaultRankTol);

/// Horizontal slice a_{i::} as a 1 x cols x depth tensor (0-based i).
Tensor3 horizontal_slice(const Tensor3& a, std::size_t i);

/// Concatenate tensors along the second mode: [t_0, t_1, ...].
Tensor3 lateral_concat(std::span<const Tensor3> parts);

/// Lateral block [first, first + count) along the second mode.
Tensor3 lateral_block(const Tensor3& a, std::size_t first, std::size_t count);

}  // namespace tkz
