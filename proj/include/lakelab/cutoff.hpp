#pragma once

#include "lakelab/errors.hpp"
#include "lakelab/vec2.hpp"

namespace lakelab {

/// Quintic smoothstep on [0,1]; C² at both ends.
inline double smoothstep5(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

inline double smoothstep5_deriv(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double s = t * (1.0 - t);
  return 30.0 * s * s;
}

/// Radial cutoff centred at the origin: 1 on B(0, inner), 0 outside
/// B(0, outer), quintic transition in between.
class CutoffChi {
 public:
  CutoffChi(double inner, double outer) : inner_(inner), outer_(outer) {
    if (!(inner > 0.0) || !(outer > inner)) {
      fail(ErrorKind::BadCutoff, "cutoff needs 0 < inner < outer");
    }
  }

  /// χ_δ: 1 on B(0,δ), 0 outside B(0,2δ).
  static CutoffChi standard(double delta) { return CutoffChi(delta, 2.0 * delta); }

  /// Narrow band centred on a probe circle of radius rho, half-width w.
  static CutoffChi probe(double rho, double half_width) {
    return CutoffChi(rho - half_width, rho + half_width);
  }

  double inner() const { return inner_; }
  double outer() const { return outer_; }

  double radial(double r) const {
    return 1.0 - smoothstep5((r - inner_) / (outer_ - inner_));
  }

  double operator()(Vec2 x) const { return radial(norm(x)); }

  Vec2 gradient(Vec2 x) const {
    const double r = norm(x);
    if (r <= inner_ || r >= outer_) return {};
    const double w = outer_ - inner_;
    const double dchi = -smoothstep5_deriv((r - inner_) / w) / w;
    return (dchi / r) * x;
  }

 private:
  double inner_;
  double outer_;
};

}  // namespace lakelab
