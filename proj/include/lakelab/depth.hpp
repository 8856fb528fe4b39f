#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "lakelab/cutoff.hpp"
#include "lakelab/errors.hpp"
#include "lakelab/vec2.hpp"

namespace lakelab {

class DepthLaw;
using DepthPtr = std::shared_ptr<const DepthLaw>;

/// b = |x|^alpha.
struct PowerRadial {
  double alpha = 1.0;
};

/// b = value everywhere.
struct Flat {
  double value = 1.0;
};

/// Node samples on a uniform grid, bilinear in between.  Outside the table
/// the depth is zero (dry).
struct Tabulated {
  double x0 = 0.0;
  double y0 = 0.0;
  double h = 1.0;
  int nx = 0;
  int ny = 0;
  std::vector<double> values;  // row-major: values[j * nx + i]
};

/// max(base - eps, 0); the wet set {b > eps} shrinks the lake.
struct Flooded {
  DepthPtr base;
  double eps = 0.0;
};

/// base + eps; removes the degeneracy at the origin.
struct Raised {
  DepthPtr base;
  double eps = 0.0;
};

/// (|x|^2 + eps)^{alpha/2} near the origin, blended into base by a cutoff
/// eta equal to 1 on B(0, eta_radius) and 0 outside B(0, 2 eta_radius).
struct Volcano {
  double alpha = 1.0;
  double eps = 0.0;
  double eta_radius = 0.3;
  DepthPtr base;
};

/// Piecewise law: 0 on B(0,eps), 1 on B(0,sqrt eps) minus B(0,eps),
/// |x|^a1 outside.  Its weighted capacity is not bounded below.
struct Shelf {
  double a1 = 1.0;
  double eps = 0.0;
};

class DepthLaw {
 public:
  using Kind = std::variant<PowerRadial, Flat, Tabulated, Flooded, Raised, Volcano, Shelf>;

  DepthLaw(Kind k) : kind_(std::move(k)) { validate(); }

  static DepthPtr power(double alpha) { return std::make_shared<DepthLaw>(PowerRadial{alpha}); }
  static DepthPtr flat(double value) { return std::make_shared<DepthLaw>(Flat{value}); }
  static DepthPtr flooded(DepthPtr base, double eps) {
    return std::make_shared<DepthLaw>(Flooded{std::move(base), eps});
  }
  static DepthPtr raised(DepthPtr base, double eps) {
    return std::make_shared<DepthLaw>(Raised{std::move(base), eps});
  }
  static DepthPtr volcano(double alpha, double eps, double eta_radius, DepthPtr base) {
    return std::make_shared<DepthLaw>(Volcano{alpha, eps, eta_radius, std::move(base)});
  }
  static DepthPtr shelf(double a1, double eps) { return std::make_shared<DepthLaw>(Shelf{a1, eps}); }

  const Kind& kind() const { return kind_; }

  double operator()(Vec2 x) const {
    return std::visit([&](const auto& k) { return eval(k, x); }, kind_);
  }

  /// Central-difference gradient; the step is small relative to |x| so that
  /// the kink of |x|^alpha at the origin is never straddled away from it.
  Vec2 gradient(Vec2 x) const {
    const double h = 1e-6 * std::max(1e-3, norm(x));
    const Vec2 ex{h, 0.0}, ey{0.0, h};
    const DepthLaw& b = *this;
    return {(b(x + ex) - b(x - ex)) / (2 * h), (b(x + ey) - b(x - ey)) / (2 * h)};
  }

  bool radial() const {
    return std::visit(
        [](const auto& k) -> bool {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Tabulated>) {
            return false;
          } else if constexpr (std::is_same_v<T, Flooded> || std::is_same_v<T, Raised> ||
                               std::is_same_v<T, Volcano>) {
            return k.base->radial();
          } else {
            return true;
          }
        },
        kind_);
  }

  /// Profile b(r) of a radial law.
  double profile(double r) const { return (*this)(Vec2{r, 0.0}); }

  /// Shore exponent at the origin: b ~ |x|^a near 0.  Zero when b(0) > 0.
  double center_exponent() const {
    return std::visit(
        [](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, PowerRadial>) return k.alpha;
          else if constexpr (std::is_same_v<T, Flooded>) return k.base->center_exponent();
          else if constexpr (std::is_same_v<T, Shelf>) return k.a1;
          else return 0.0;
        },
        kind_);
  }

  std::string describe() const {
    char buf[160];
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, PowerRadial>) {
            std::snprintf(buf, sizeof buf, "PowerRadial(%g)", k.alpha);
          } else if constexpr (std::is_same_v<T, Flat>) {
            std::snprintf(buf, sizeof buf, "Flat(%g)", k.value);
          } else if constexpr (std::is_same_v<T, Tabulated>) {
            std::snprintf(buf, sizeof buf, "Tabulated(%dx%d)", k.nx, k.ny);
          } else if constexpr (std::is_same_v<T, Flooded>) {
            std::snprintf(buf, sizeof buf, "Flooded(%s,%g)", k.base->describe().c_str(), k.eps);
          } else if constexpr (std::is_same_v<T, Raised>) {
            std::snprintf(buf, sizeof buf, "Raised(%s,%g)", k.base->describe().c_str(), k.eps);
          } else if constexpr (std::is_same_v<T, Volcano>) {
            std::snprintf(buf, sizeof buf, "Volcano(%g,%g,%g)", k.alpha, k.eps, k.eta_radius);
          } else {
            std::snprintf(buf, sizeof buf, "Shelf(%g,%g)", k.a1, k.eps);
          }
        },
        kind_);
    return buf;
  }

 private:
  static double eval(const PowerRadial& k, Vec2 x) { return std::pow(norm(x), k.alpha); }
  static double eval(const Flat& k, Vec2) { return k.value; }
  static double eval(const Tabulated& k, Vec2 x) {
    const double s = (x.x - k.x0) / k.h;
    const double t = (x.y - k.y0) / k.h;
    if (s < 0 || t < 0 || s > k.nx - 1 || t > k.ny - 1) return 0.0;
    const int i = std::min(static_cast<int>(s), k.nx - 2);
    const int j = std::min(static_cast<int>(t), k.ny - 2);
    const double fs = s - i, ft = t - j;
    auto at = [&](int a, int b) { return k.values[static_cast<std::size_t>(b) * k.nx + a]; };
    return (1 - fs) * (1 - ft) * at(i, j) + fs * (1 - ft) * at(i + 1, j) +
           (1 - fs) * ft * at(i, j + 1) + fs * ft * at(i + 1, j + 1);
  }
  static double eval(const Flooded& k, Vec2 x) { return std::max((*k.base)(x) - k.eps, 0.0); }
  static double eval(const Raised& k, Vec2 x) { return (*k.base)(x) + k.eps; }
  static double eval(const Volcano& k, Vec2 x) {
    const double r = norm(x);
    const double eta = 1.0 - smoothstep5((r - k.eta_radius) / k.eta_radius);
    const double core = std::pow(r * r + k.eps, 0.5 * k.alpha);
    return core * eta + (*k.base)(x) * (1.0 - eta);
  }
  static double eval(const Shelf& k, Vec2 x) {
    const double r = norm(x);
    if (r <= k.eps) return 0.0;
    if (r <= std::sqrt(k.eps)) return 1.0;
    return std::pow(r, k.a1);
  }

  void validate() const {
    std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, PowerRadial>) {
            if (!(k.alpha >= 0.0)) fail(ErrorKind::InvalidDepth, "power exponent must be >= 0");
          } else if constexpr (std::is_same_v<T, Flat>) {
            if (!(k.value > 0.0)) fail(ErrorKind::InvalidDepth, "flat depth must be positive");
          } else if constexpr (std::is_same_v<T, Tabulated>) {
            if (k.nx < 2 || k.ny < 2 || !(k.h > 0.0) ||
                k.values.size() != static_cast<std::size_t>(k.nx) * k.ny) {
              fail(ErrorKind::InvalidDepth, "tabulated depth needs nx, ny >= 2 and nx*ny samples");
            }
          } else if constexpr (std::is_same_v<T, Flooded> || std::is_same_v<T, Raised>) {
            if (!k.base) fail(ErrorKind::InvalidDepth, "missing base depth");
            if (!(k.eps > 0.0)) fail(ErrorKind::InvalidDepth, "eps must be positive");
          } else if constexpr (std::is_same_v<T, Volcano>) {
            if (!k.base) fail(ErrorKind::InvalidDepth, "missing base depth");
            if (!(k.eps > 0.0) || !(k.eta_radius > 0.0)) {
              fail(ErrorKind::InvalidDepth, "volcano needs eps > 0 and eta_radius > 0");
            }
          } else {
            if (!(k.eps > 0.0) || !(k.eps < 1.0)) fail(ErrorKind::InvalidDepth, "shelf eps must lie in (0,1)");
          }
        },
        kind_);
  }

  Kind kind_;
};

}  // namespace lakelab
