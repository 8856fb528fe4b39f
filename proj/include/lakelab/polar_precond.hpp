#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "lakelab/grid.hpp"

namespace lakelab {

/// Preconditioner for polar grids: the operator with transmissibilities
/// averaged over each ring, which is circulant in theta and tridiagonal in
/// r.  It is inverted exactly by a real FFT along every ring followed by one
/// tridiagonal solve per Fourier mode.  For radial depths it is the
/// operator itself.
class PolarPreconditioner {
 public:
  /// `T` are the face transmissibilities of an operator on `g`.
  PolarPreconditioner(const Grid& g, const std::vector<double>& T)
      : nr_(g.nr), nth_(g.nth), nm_(g.nth / 2 + 1) {
    std::vector<double> tr(nr_ + 1, 0.0), tth(nr_, 0.0);
    // Faces are laid out ring by ring: arc faces k = 0..nr, then angular faces.
    for (int k = 0; k <= nr_; ++k) {
      for (int j = 0; j < nth_; ++j) tr[k] += T[k * nth_ + j];
      tr[k] /= nth_;
    }
    const int base = (nr_ + 1) * nth_;
    for (int i = 0; i < nr_; ++i) {
      for (int j = 0; j < nth_; ++j) tth[i] += T[base + i * nth_ + j];
      tth[i] /= nth_;
    }
    // LU factors of each mode's tridiagonal matrix (Thomas algorithm).
    inv_pivot_.resize(static_cast<std::size_t>(nm_) * nr_);
    lower_.resize(static_cast<std::size_t>(nm_) * nr_);
    upper_.resize(nr_);
    for (int i = 0; i + 1 < nr_; ++i) upper_[i] = -tr[i + 1];
    for (int m = 0; m < nm_; ++m) {
      const double c = 2.0 * (1.0 - std::cos(2.0 * std::numbers::pi * m / nth_));
      double prev = 0.0;
      for (int i = 0; i < nr_; ++i) {
        double d = tr[i] + tr[i + 1] + c * tth[i];
        double l = 0.0;
        if (i > 0) {
          l = -tr[i] * prev;  // sub-diagonal times inverse of previous pivot
          d -= l * upper_[i - 1];
        }
        prev = 1.0 / d;
        inv_pivot_[m * nr_ + i] = prev;
        lower_[m * nr_ + i] = l;
      }
    }
    std::lock_guard<std::mutex> lock(plan_mutex());
    real_.reset(fftw_alloc_real(static_cast<std::size_t>(nr_) * nth_));
    spec_.reset(fftw_alloc_complex(static_cast<std::size_t>(nr_) * nm_));
    int n[1] = {nth_};
    fwd_ = fftw_plan_many_dft_r2c(1, n, nr_, real_.get(), nullptr, 1, nth_, spec_.get(), nullptr, 1, nm_,
                                  FFTW_ESTIMATE);
    bwd_ = fftw_plan_many_dft_c2r(1, n, nr_, spec_.get(), nullptr, 1, nm_, real_.get(), nullptr, 1, nth_,
                                  FFTW_ESTIMATE);
  }

  PolarPreconditioner(const PolarPreconditioner&) = delete;
  PolarPreconditioner& operator=(const PolarPreconditioner&) = delete;

  ~PolarPreconditioner() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }

  /// z = M^{-1} r for the positive definite averaged operator M.
  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    std::lock_guard<std::mutex> lock(work_mutex_);
    const std::size_t n = static_cast<std::size_t>(nr_) * nth_;
    std::copy(r.begin(), r.begin() + n, real_.get());
    fftw_execute(fwd_);
    for (int m = 0; m < nm_; ++m) {
      // forward sweep then back substitution along the radial index
      for (int i = 0; i < nr_; ++i) {
        fftw_complex& x = spec_.get()[i * nm_ + m];
        if (i > 0) {
          const fftw_complex& p = spec_.get()[(i - 1) * nm_ + m];
          const double l = lower_[m * nr_ + i];
          x[0] -= l * p[0];
          x[1] -= l * p[1];
        }
      }
      for (int i = nr_ - 1; i >= 0; --i) {
        fftw_complex& x = spec_.get()[i * nm_ + m];
        if (i + 1 < nr_) {
          const fftw_complex& nx = spec_.get()[(i + 1) * nm_ + m];
          x[0] -= upper_[i] * nx[0];
          x[1] -= upper_[i] * nx[1];
        }
        const double ip = inv_pivot_[m * nr_ + i];
        x[0] *= ip;
        x[1] *= ip;
      }
    }
    fftw_execute(bwd_);
    z.resize(n);
    const double scale = 1.0 / nth_;
    for (std::size_t k = 0; k < n; ++k) z[k] = real_.get()[k] * scale;
  }

 private:
  static std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
  }

  struct RealFree {
    void operator()(double* p) const { fftw_free(p); }
  };
  struct ComplexFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
  };

  int nr_, nth_, nm_;
  std::vector<double> inv_pivot_, lower_, upper_;
  std::unique_ptr<double, RealFree> real_;
  std::unique_ptr<fftw_complex, ComplexFree> spec_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
  mutable std::mutex work_mutex_;
};

}  // namespace lakelab
