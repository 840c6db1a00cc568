#include "tkz/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tkz/fourier.hpp"

namespace tkz {

namespace {

using Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

void require_same_shape(const Tensor3& a, const Tensor3& b, const char* what) {
    if (!a.same_shape(b)) throw DimensionError(std::string(what) + ": shape mismatch");
}

void require_product_shapes(const Tensor3& a, const Tensor3& b, const char* what) {
    if (a.cols() != b.rows() || a.depth() != b.depth()) {
        throw DimensionError(std::string(what) + ": expected a.cols == b.rows and equal depth");
    }
}

template <typename Matrix>
Matrix truncated_pinv(const Matrix& m, double cutoff) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) inv(i) = 1.0 / s(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

Tensor3::Tensor3(std::size_t rows, std::size_t cols, std::size_t depth)
    : rows_(rows), cols_(cols), depth_(depth), values_(rows * cols * depth, 0.0) {}

Tensor3::Tensor3(std::size_t rows, std::size_t cols, std::size_t depth, std::vector<double> values)
    : rows_(rows), cols_(cols), depth_(depth), values_(std::move(values)) {
    if (values_.size() != rows * cols * depth) {
        throw DimensionError("Tensor3: value count does not match rows*cols*depth");
    }
    if (!all_finite()) throw std::invalid_argument("Tensor3: non-finite entry");
}

Tensor3::ConstSliceMap Tensor3::slice(std::size_t k) const {
    return ConstSliceMap(values_.data() + k * slice_size(), idx(rows_), idx(cols_));
}

Tensor3::SliceMap Tensor3::slice(std::size_t k) {
    return SliceMap(values_.data() + k * slice_size(), idx(rows_), idx(cols_));
}

Eigen::Map<const Eigen::VectorXd> Tensor3::vec() const {
    return Eigen::Map<const Eigen::VectorXd>(values_.data(), idx(values_.size()));
}

Eigen::Map<Eigen::VectorXd> Tensor3::vec() {
    return Eigen::Map<Eigen::VectorXd>(values_.data(), idx(values_.size()));
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
    require_same_shape(*this, other, "operator+=");
    vec() += other.vec();
    return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
    require_same_shape(*this, other, "operator-=");
    vec() -= other.vec();
    return *this;
}

Tensor3& Tensor3::operator*=(double s) {
    vec() *= s;
    return *this;
}

void Tensor3::axpy(double a, const Tensor3& x) {
    require_same_shape(*this, x, "axpy");
    vec() += a * x.vec();
}

bool Tensor3::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

Eigen::MatrixXd bcirc(const Tensor3& a) {
    const std::size_t m = a.rows(), l = a.cols(), n = a.depth();
    Eigen::MatrixXd out(idx(m * n), idx(l * n));
    for (std::size_t bi = 0; bi < n; ++bi) {
        for (std::size_t bj = 0; bj < n; ++bj) {
            out.block(idx(bi * m), idx(bj * l), idx(m), idx(l)) = a.slice((bi + n - bj) % n);
        }
    }
    return out;
}

Eigen::MatrixXd unfold(const Tensor3& a) {
    Eigen::MatrixXd out(idx(a.rows() * a.depth()), idx(a.cols()));
    for (std::size_t k = 0; k < a.depth(); ++k) {
        out.middleRows(idx(k * a.rows()), idx(a.rows())) = a.slice(k);
    }
    return out;
}

Tensor3 fold(const Eigen::MatrixXd& m, std::size_t depth) {
    if (depth == 0 || static_cast<std::size_t>(m.rows()) % depth != 0) {
        throw DimensionError("fold: row count not divisible by depth");
    }
    const std::size_t rows = static_cast<std::size_t>(m.rows()) / depth;
    Tensor3 out(rows, static_cast<std::size_t>(m.cols()), depth);
    for (std::size_t k = 0; k < depth; ++k) out.slice(k) = m.middleRows(idx(k * rows), idx(rows));
    return out;
}

Eigen::VectorXd tv(const Tensor3& a) { return a.vec(); }

Tensor3 t_product(const Tensor3& a, const Tensor3& b) {
    require_product_shapes(a, b, "t_product");
    if (a.depth() == 1) {
        Tensor3 out(a.rows(), b.cols(), 1);
        out.slice(0).noalias() = a.slice(0) * b.slice(0);
        return out;
    }
    FourierSlices fa = to_fourier(a);
    const FourierSlices fb = to_fourier(b);
    FourierSlices fc{a.rows(), b.cols(), a.depth(), {}};
    fc.half.reserve(fa.stored());
    for (std::size_t j = 0; j < fa.stored(); ++j) fc.half.emplace_back(fa.half[j] * fb.half[j]);
    return from_fourier(fc);
}

Tensor3 t_product_dense(const Tensor3& a, const Tensor3& b) {
    require_product_shapes(a, b, "t_product_dense");
    return fold(bcirc(a) * unfold(b), a.depth());
}

Tensor3 t_transpose(const Tensor3& a) {
    const std::size_t n = a.depth();
    Tensor3 out(a.cols(), a.rows(), n);
    for (std::size_t k = 0; k < n; ++k) out.slice(k) = a.slice((n - k) % n).transpose();
    return out;
}

Tensor3 t_identity(std::size_t size, std::size_t depth) {
    if (size == 0 || depth == 0) throw DimensionError("t_identity: size and depth must be >= 1");
    Tensor3 out(size, size, depth);
    out.slice(0).setIdentity();
    return out;
}

double inner(const Tensor3& a, const Tensor3& b) {
    require_same_shape(a, b, "inner");
    return a.vec().dot(b.vec());
}

double fro_norm2(const Tensor3& a) { return a.vec().squaredNorm(); }

double fro_norm(const Tensor3& a) { return std::sqrt(fro_norm2(a)); }

Tensor3 t_pinv(const Tensor3& a, double rank_tol) {
    FourierSlices f = to_fourier(a);
    double sigma_max = 0.0;
    for (const auto& s : f.half) {
        if (s.size() > 0) {
            sigma_max = std::max(sigma_max, Eigen::JacobiSVD<Eigen::MatrixXcd>(s).singularValues()(0));
        }
    }
    FourierSlices out{a.cols(), a.rows(), a.depth(), {}};
    out.half.reserve(f.stored());
    const double cutoff = rank_tol * sigma_max;
    for (const auto& s : f.half) {
        if (sigma_max == 0.0 || s.size() == 0) {
            out.half.emplace_back(Eigen::MatrixXcd::Zero(s.cols(), s.rows()));
        } else {
            out.half.emplace_back(truncated_pinv(Eigen::MatrixXcd(s), cutoff));
        }
    }
    return from_fourier(out);
}

Tensor3 t_pinv_dense(const Tensor3& a, double rank_tol) {
    const Eigen::MatrixXd c = bcirc(a);
    Tensor3 out(a.cols(), a.rows(), a.depth());
    if (c.size() == 0) return out;
    const double sigma_max = Eigen::JacobiSVD<Eigen::MatrixXd>(c).singularValues()(0);
    if (sigma_max == 0.0) return out;
    const Eigen::MatrixXd p = truncated_pinv(c, rank_tol * sigma_max);
    // pinv of a block circulant matrix is block circulant; its first block column is unfold(pinv).
    return fold(p.leftCols(idx(a.rows())), a.depth());
}

Tensor3 horizontal_slice(const Tensor3& a, std::size_t i) {
    if (i >= a.rows()) throw DimensionError("horizontal_slice: row index out of range");
    Tensor3 out(1, a.cols(), a.depth());
    for (std::size_t k = 0; k < a.depth(); ++k) out.slice(k) = a.slice(k).row(idx(i));
    return out;
}

Tensor3 lateral_concat(std::span<const Tensor3> parts) {
    if (parts.empty()) return {};
    const std::size_t rows = parts.front().rows(), depth = parts.front().depth();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows || p.depth() != depth) throw DimensionError("lateral_concat: shape mismatch");
        cols += p.cols();
    }
    Tensor3 out(rows, cols, depth);
    for (std::size_t k = 0; k < depth; ++k) {
        std::size_t c0 = 0;
        for (const auto& p : parts) {
            out.slice(k).middleCols(idx(c0), idx(p.cols())) = p.slice(k);
            c0 += p.cols();
        }
    }
    return out;
}

Tensor3 lateral_block(const Tensor3& a, std::size_t first, std::size_t count) {
    if (first + count > a.cols()) throw DimensionError("lateral_block: range out of bounds");
    Tensor3 out(a.rows(), count, a.depth());
    for (std::size_t k = 0; k < a.depth(); ++k) out.slice(k) = a.slice(k).middleCols(idx(first), idx(count));
    return out;
}

}  // namespace tkz
