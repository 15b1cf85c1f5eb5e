// Thin RAII wrapper around FFTW complex-to-complex plans.
#pragma once

#include <fftw3.h>

#include <array>
#include <complex>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace she {
namespace detail {

// FFTW plan creation/destruction is not thread safe; execution via the
// new-array interface is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

class FftPlan {
public:
    FftPlan(int dim, int n) {
        if (dim < 1 || dim > 3) throw std::invalid_argument("FftPlan: dim must be 1, 2 or 3");
        std::array<int, 3> shape{};
        std::size_t total = 1;
        for (int i = 0; i < dim; ++i) {
            shape[i] = n;
            total *= static_cast<std::size_t>(n);
        }
        std::vector<std::complex<double>> a(total), b(total);
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fwd_ = fftw_plan_dft(dim, shape.data(),
                             reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()),
                             FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = fftw_plan_dft(dim, shape.data(),
                             reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()),
                             FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!fwd_ || !bwd_) throw std::runtime_error("FftPlan: fftw plan creation failed");
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    ~FftPlan() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }

    // Unnormalized transforms; in-place (in == out) is allowed.
    void forward(std::complex<double>* in, std::complex<double>* out) const {
        fftw_execute_dft(fwd_, reinterpret_cast<fftw_complex*>(in),
                         reinterpret_cast<fftw_complex*>(out));
    }
    void backward(std::complex<double>* in, std::complex<double>* out) const {
        fftw_execute_dft(bwd_, reinterpret_cast<fftw_complex*>(in),
                         reinterpret_cast<fftw_complex*>(out));
    }

private:
    fftw_plan fwd_{nullptr};
    fftw_plan bwd_{nullptr};
};

}  // namespace she
