#include "tkz/projectors.hpp"

#include <algorithm>
#include <cmath>

#include "tkz/fourier.hpp"

namespace tkz {

namespace {
Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }
}  // namespace

ProjectorBank::ProjectorBank(Tensor3 a, Tensor3 b, double rank_tol) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() != b_.rows() || a_.depth() != b_.depth()) {
        throw DimensionError("build_projectors: A and B must share rows and depth");
    }
    const std::size_t m = a_.rows(), l = a_.cols(), n = a_.depth();
    const FourierSlices fa = to_fourier(a_);
    const FourierSlices fb = to_fourier(b_);
    const std::size_t h = fa.stored();

    a_t_.resize(h);
    b_t_.resize(h);
    pinv_.assign(h, Eigen::MatrixXcd::Zero(idx(l), idx(m)));
    pinv_norm2_.assign(h, Eigen::VectorXd::Zero(idx(m)));
    for (std::size_t j = 0; j < h; ++j) {
        a_t_[j] = fa.half[j].transpose();
        b_t_[j] = fb.half[j].transpose();
    }

    // A 1 x l Fourier slice has the single singular value |a|, so its pseudoinverse is
    // conj(a)^T / |a|^2. The cutoff is relative to the largest one across frequencies,
    // i.e. to ||bcirc(A_{i::})||_2, matching t_pinv on the row slice.
    pinv_rows_.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        double sigma_max = 0.0;
        for (std::size_t j = 0; j < h; ++j) sigma_max = std::max(sigma_max, a_t_[j].col(idx(i)).norm());
        const double cutoff = rank_tol * sigma_max;

        FourierSlices row{l, 1, n, {}};
        row.half.reserve(h);
        for (std::size_t j = 0; j < h; ++j) {
            const double s = a_t_[j].col(idx(i)).norm();
            if (sigma_max > 0.0 && s > cutoff) {
                pinv_[j].col(idx(i)) = a_t_[j].col(idx(i)).conjugate() / (s * s);
                pinv_norm2_[j](idx(i)) = 1.0 / (s * s);
            }
            row.half.emplace_back(pinv_[j].col(idx(i)));
        }
        pinv_rows_.push_back(from_fourier(row));
    }
}

Tensor3 ProjectorBank::project_row(const Tensor3& x, std::size_t i) const {
    if (i >= rows()) throw DimensionError("project_row: row index out of range");
    const Tensor3 residual = t_product(horizontal_slice(a_, i), x) - horizontal_slice(b_, i);
    return x - t_product(pinv_rows_[i], residual);
}

struct SweepKernel {
    static SweepResult run(const Tensor3& x, const Permutation& pi, const ProjectorBank& bank) {
        if (x.rows() != bank.a_.cols() || x.cols() != bank.b_.cols() || x.depth() != bank.a_.depth()) {
            throw DimensionError("sweep: iterate shape does not match the system");
        }
        if (pi.size() != bank.rows()) throw DimensionError("sweep: permutation length differs from m");

        FourierSlices fx = to_fourier(x);
        const std::size_t h = fx.stored();
        double rn = 0.0;
        Eigen::RowVectorXcd r(idx(x.cols()));
        for (std::size_t i : pi) {
            const auto col = idx(i);
            for (std::size_t j = 0; j < h; ++j) {
                const double w = bank.pinv_norm2_[j](col);
                if (w == 0.0) continue;
                Eigen::MatrixXcd& xj = fx.half[j];
                r.noalias() = bank.a_t_[j].col(col).transpose() * xj;
                r -= bank.b_t_[j].col(col).transpose();
                xj.noalias() -= bank.pinv_[j].col(col) * r;
                // ||pinv_col * r||^2 = ||pinv_col||^2 ||r||^2 for a rank-one correction.
                rn += fx.multiplicity(j) * w * r.squaredNorm();
            }
        }

        SweepResult out;
        out.projected = from_fourier(fx);
        out.delta = fro_norm2(out.projected - x);
        out.rnorm2 = rn / static_cast<double>(x.depth());
        out.gamma = 0.5 * (out.rnorm2 + out.delta);
        return out;
    }
};

SweepResult sweep(const Tensor3& x, const Permutation& pi, const ProjectorBank& bank) {
    return SweepKernel::run(x, pi, bank);
}

}  // namespace tkz
