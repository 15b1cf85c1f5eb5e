// Discrete d-torus [-1/2,1/2]^d with N^d lattice points, integer wavevectors
// m in {-N/2+1,...,N/2}^d and Laplacian eigenvalues alpha(m) = 4 pi^2 |m|^2.
//
// Spectral convention: f(x) = sum_m fhat(m) exp(i 2 pi m.x), so the forward
// transform divides the raw DFT by N^d and fhat(0) is the spatial mean.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "she/fft.hpp"

namespace she {

class TorusGrid {
public:
    TorusGrid(int dimension, int modes_per_axis)
        : dim_(dimension), n_(modes_per_axis), plan_(valid_dim(dimension), valid_n(modes_per_axis)) {
        pts_ = 1;
        for (int i = 0; i < dim_; ++i) pts_ *= static_cast<std::size_t>(n_);
        wave_.resize(pts_ * static_cast<std::size_t>(dim_));
        alpha_.resize(pts_);
        const double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
        for (std::size_t idx = 0; idx < pts_; ++idx) {
            std::size_t rest = idx;
            double m2 = 0.0;
            for (int ax = dim_ - 1; ax >= 0; --ax) {
                int i = static_cast<int>(rest % static_cast<std::size_t>(n_));
                rest /= static_cast<std::size_t>(n_);
                int m = (i <= n_ / 2) ? i : i - n_;
                wave_[idx * dim_ + ax] = m;
                m2 += static_cast<double>(m) * m;
            }
            alpha_[idx] = four_pi_sq * m2;
        }
    }

    int dimension() const { return dim_; }
    int modes_per_axis() const { return n_; }
    std::size_t num_points() const { return pts_; }

    double eigenvalue(std::size_t idx) const { return alpha_[idx]; }
    const std::vector<double>& eigenvalues() const { return alpha_; }

    int wavevector(std::size_t idx, int axis) const { return wave_[idx * dim_ + axis]; }

    std::array<int, 3> wavevector(std::size_t idx) const {
        std::array<int, 3> m{0, 0, 0};
        for (int ax = 0; ax < dim_; ++ax) m[ax] = wave_[idx * dim_ + ax];
        return m;
    }

    // Flat index of the mode with components m[ax] in {-N/2+1,...,N/2}.
    std::size_t index_of(std::array<int, 3> m) const {
        std::size_t idx = 0;
        for (int ax = 0; ax < dim_; ++ax) {
            int i = m[ax] < 0 ? m[ax] + n_ : m[ax];
            if (i < 0 || i >= n_) throw std::out_of_range("TorusGrid::index_of: mode outside grid");
            idx = idx * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
        }
        return idx;
    }

    // Index of -m (mod N per axis).
    std::size_t conjugate_index(std::size_t idx) const {
        std::size_t out = 0;
        std::size_t rest = idx;
        std::array<int, 3> digits{};
        for (int ax = dim_ - 1; ax >= 0; --ax) {
            digits[ax] = static_cast<int>(rest % static_cast<std::size_t>(n_));
            rest /= static_cast<std::size_t>(n_);
        }
        for (int ax = 0; ax < dim_; ++ax) {
            int i = digits[ax] == 0 ? 0 : n_ - digits[ax];
            out = out * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
        }
        return out;
    }

    bool self_conjugate(std::size_t idx) const { return conjugate_index(idx) == idx; }

    // Physical coordinate of lattice site idx (component axis), in [-1/2, 1/2).
    double coordinate(std::size_t idx, int axis) const {
        std::size_t rest = idx;
        int digit = 0;
        for (int ax = dim_ - 1; ax >= axis; --ax) {
            digit = static_cast<int>(rest % static_cast<std::size_t>(n_));
            rest /= static_cast<std::size_t>(n_);
        }
        double x = static_cast<double>(digit) / n_;
        return x < 0.5 ? x : x - 1.0;
    }

    // physical values -> Fourier coefficients
    void forward(const double* phys, std::complex<double>* spec) const {
        std::vector<std::complex<double>> tmp(pts_);
        for (std::size_t i = 0; i < pts_; ++i) tmp[i] = phys[i];
        plan_.forward(tmp.data(), spec);
        const double inv = 1.0 / static_cast<double>(pts_);
        for (std::size_t i = 0; i < pts_; ++i) spec[i] *= inv;
    }

    // Fourier coefficients -> physical values (discards the roundoff-level
    // imaginary part; callers guarantee conjugate symmetry)
    void backward(const std::complex<double>* spec, double* phys) const {
        std::vector<std::complex<double>> in(spec, spec + pts_), out(pts_);
        plan_.backward(in.data(), out.data());
        for (std::size_t i = 0; i < pts_; ++i) phys[i] = out[i].real();
    }

private:
    static int valid_dim(int d) {
        if (d < 1 || d > 3) throw std::invalid_argument("TorusGrid: dimension must be in {1,2,3}");
        return d;
    }
    static int valid_n(int n) {
        if (n < 4 || n % 2 != 0) throw std::invalid_argument("TorusGrid: modes_per_axis must be even and >= 4");
        return n;
    }

    int dim_;
    int n_;
    std::size_t pts_{0};
    std::vector<int> wave_;
    std::vector<double> alpha_;
    FftPlan plan_;
};

inline std::shared_ptr<const TorusGrid> build_grid(int dimension, int modes_per_axis) {
    return std::make_shared<const TorusGrid>(dimension, modes_per_axis);
}

}  // namespace she
