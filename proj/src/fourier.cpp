#include "tkz/fourier.hpp"

#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

namespace tkz {

namespace {

// The FFTW planner is not thread safe; plans are created once per shape under a
// lock and afterwards only executed through the new-array interface, which is.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan forward(std::size_t tubes, std::size_t depth) { return get(tubes, depth, true); }
    fftw_plan backward(std::size_t tubes, std::size_t depth) { return get(tubes, depth, false); }

private:
    fftw_plan get(std::size_t tubes, std::size_t depth, bool fwd) {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(tubes, depth, fwd);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;

        const int n[1] = {static_cast<int>(depth)};
        const int howmany = static_cast<int>(tubes);
        const int stride = static_cast<int>(tubes);
        const std::size_t h = half_spectrum_size(depth);
        std::vector<double> real(tubes * depth);
        std::vector<std::complex<double>> cplx(tubes * h);
        auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;

        fftw_plan plan = fwd ? fftw_plan_many_dft_r2c(1, n, howmany, real.data(), nullptr, stride, 1,
                                                      c, nullptr, stride, 1, flags)
                             : fftw_plan_many_dft_c2r(1, n, howmany, c, nullptr, stride, 1,
                                                      real.data(), nullptr, stride, 1, flags);
        if (plan == nullptr) throw std::runtime_error("fftw: failed to create plan");
        plans_.emplace(key, plan);
        return plan;
    }

    std::mutex mutex_;
    std::map<std::tuple<std::size_t, std::size_t, bool>, fftw_plan> plans_;
};

}  // namespace

Eigen::MatrixXcd FourierSlices::slice(std::size_t j) const {
    if (j >= depth) throw DimensionError("FourierSlices::slice: index out of range");
    if (j < half.size()) return half[j];
    return half[depth - j].conjugate();
}

FourierSlices to_fourier(const Tensor3& a) {
    FourierSlices f;
    f.rows = a.rows();
    f.cols = a.cols();
    f.depth = a.depth();
    if (a.empty()) {
        f.half.assign(a.depth() == 0 ? 0 : half_spectrum_size(a.depth()),
                      Eigen::MatrixXcd::Zero(a.rows(), a.cols()));
        return f;
    }

    const std::size_t tubes = a.slice_size();
    const std::size_t h = half_spectrum_size(a.depth());
    std::vector<std::complex<double>> out(tubes * h);
    fftw_plan plan = PlanCache::instance().forward(tubes, a.depth());
    fftw_execute_dft_r2c(plan, const_cast<double*>(a.values().data()),
                         reinterpret_cast<fftw_complex*>(out.data()));

    f.half.reserve(h);
    for (std::size_t j = 0; j < h; ++j) {
        f.half.emplace_back(Eigen::Map<const Eigen::MatrixXcd>(
            out.data() + j * tubes, static_cast<Eigen::Index>(a.rows()),
            static_cast<Eigen::Index>(a.cols())));
    }
    return f;
}

Tensor3 from_fourier(const FourierSlices& f) {
    if (f.half.size() != half_spectrum_size(f.depth)) {
        throw DimensionError("from_fourier: wrong number of stored slices");
    }
    Tensor3 out(f.rows, f.cols, f.depth);
    if (out.empty()) return out;

    const std::size_t tubes = f.rows * f.cols;
    std::vector<std::complex<double>> in(tubes * f.half.size());
    for (std::size_t j = 0; j < f.half.size(); ++j) {
        if (static_cast<std::size_t>(f.half[j].rows()) != f.rows ||
            static_cast<std::size_t>(f.half[j].cols()) != f.cols) {
            throw DimensionError("from_fourier: slice shape mismatch");
        }
        Eigen::Map<Eigen::MatrixXcd>(in.data() + j * tubes, static_cast<Eigen::Index>(f.rows),
                                     static_cast<Eigen::Index>(f.cols)) = f.half[j];
    }
    fftw_plan plan = PlanCache::instance().backward(tubes, f.depth);
    fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(in.data()), out.values().data());
    out *= 1.0 / static_cast<double>(f.depth);
    return out;
}

}  // namespace tkz
