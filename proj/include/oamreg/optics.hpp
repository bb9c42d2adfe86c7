#pragma once

// Laguerre-Gauss (p = 0) fields, intensity rendering and the two state
// transformations used to break the +l/-l intensity degeneracy.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "oamreg/basis.hpp"
#include "oamreg/error.hpp"
#include "oamreg/parallel.hpp"

namespace oamreg {

struct BeamGeometry {
  double waist = 1.0;       // w0 at z = 0
  double wavenumber = 1.0;  // k
  double plane_z = 0.0;
  int grid_n = 64;
  std::optional<double> grid_halfwidth;  // defaults to 4 * waist
  int supersample = 1;                   // sub-samples per pixel side

  // Sampling-frame transform: the rendered image is the field centred at
  // (center_x, center_y) and rotated counterclockwise by `rotation` radians.
  double rotation = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;

  double halfwidth() const { return grid_halfwidth.value_or(4.0 * waist); }
  double pixel_size() const { return 2.0 * halfwidth() / grid_n; }
  double rayleigh_range() const { return 0.5 * wavenumber * waist * waist; }

  double waist_at(double z) const {
    const double zr = z / rayleigh_range();
    return waist * std::sqrt(1.0 + zr * zr);
  }

  double gouy_phase(double z) const { return std::atan(z / rayleigh_range()); }

  void validate() const {
    require(std::isfinite(waist) && waist > 0, ErrorCategory::invalid_argument,
            "beam waist must be positive");
    require(std::isfinite(wavenumber) && wavenumber > 0, ErrorCategory::invalid_argument,
            "wavenumber must be positive");
    require(std::isfinite(plane_z), ErrorCategory::invalid_argument, "plane z must be finite");
    require(grid_n >= 2, ErrorCategory::invalid_argument, "grid_n must be at least 2");
    require(std::isfinite(halfwidth()) && halfwidth() > 0, ErrorCategory::invalid_argument,
            "grid half-width must be positive");
    require(supersample >= 1, ErrorCategory::invalid_argument, "supersample must be >= 1");
    require(std::isfinite(rotation) && std::isfinite(center_x) && std::isfinite(center_y),
            ErrorCategory::invalid_argument, "sampling transform must be finite");
  }
};

enum class Normalization { unit_sum, raw };

// Row-major pixel grid. Row 0 is the top of the window (y = +halfwidth),
// column 0 the left edge (x = -halfwidth).
struct IntensityImage {
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;
  Normalization normalization = Normalization::raw;

  IntensityImage() = default;
  IntensityImage(int r, int c, std::vector<double> px, Normalization norm)
      : rows(r), cols(c), pixels(std::move(px)), normalization(norm) {
    require(r > 0 && c > 0 && pixels.size() == static_cast<std::size_t>(r) * c,
            ErrorCategory::dimension_mismatch, "pixel buffer does not match image shape");
  }

  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  bool square() const { return rows == cols; }

  double sum() const {
    double s = 0.0;
    for (double p : pixels) s += p;
    return s;
  }

  double max() const { return pixels.empty() ? 0.0 : *std::max_element(pixels.begin(), pixels.end()); }

  void normalize_unit_sum() {
    const double s = sum();
    require(s > 0 && std::isfinite(s), ErrorCategory::numerical,
            "cannot unit-sum normalize an image with zero total intensity");
    for (double& p : pixels) p /= s;
    normalization = Normalization::unit_sum;
  }
};

struct ImagePair {
  IntensityImage primary;
  IntensityImage shifted;

  ImagePair() = default;
  ImagePair(IntensityImage p, IntensityImage s) : primary(std::move(p)), shifted(std::move(s)) {
    require(primary.rows == shifted.rows && primary.cols == shifted.cols,
            ErrorCategory::dimension_mismatch, "image pair channels differ in size");
    require(primary.normalization == shifted.normalization, ErrorCategory::invalid_argument,
            "image pair channels differ in normalization");
  }
};

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// LG_{0,l}(rho, phi; z). The normalization sqrt(2 / (pi |l|!)) gives unit L2
// norm over the transverse plane.
inline Complex evaluate_lg(int ell, double rho, double phi, const BeamGeometry& geom,
                           int radial_index = 0) {
  require(radial_index == 0, ErrorCategory::invalid_argument,
          "only radial index p=0 is supported");
  require(std::isfinite(rho) && std::isfinite(phi), ErrorCategory::invalid_argument,
          "LG evaluation point must be finite");
  require(rho >= 0, ErrorCategory::invalid_argument, "rho must be nonnegative");
  geom.validate();

  const int al = std::abs(ell);
  const double z = geom.plane_z;
  const double w = geom.waist_at(z);
  const double norm = std::sqrt(2.0 / (std::numbers::pi * factorial(al)));
  const double radial = std::pow(std::numbers::sqrt2 * rho / w, al);
  const double amplitude = norm / w * radial * std::exp(-rho * rho / (w * w));
  const double z0 = geom.rayleigh_range();
  const double curvature = geom.wavenumber * rho * rho * z / (2.0 * (z * z + z0 * z0));
  const double phase = ell * phi - curvature + (al + 1) * geom.gouy_phase(z);
  return std::polar(amplitude, phase);
}

// Precomputed mode fields on the (super)sampled grid of one geometry.
class ModeFields {
 public:
  ModeFields(const ModeBasis& basis, const BeamGeometry& geom) : basis_(basis), geom_(geom) {
    geom_.validate();
    const int n = geom_.grid_n;
    const int s = geom_.supersample;
    const double ps = geom_.pixel_size();
    const double hw = geom_.halfwidth();
    const double cr = std::cos(geom_.rotation);
    const double sr = std::sin(geom_.rotation);
    samples_ = static_cast<std::size_t>(n) * n * s * s;
    fields_.assign(samples_ * basis_.size(), Complex{});

    std::size_t k = 0;
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        for (int a = 0; a < s; ++a) {
          for (int b = 0; b < s; ++b, ++k) {
            const double y = hw - (r + (a + 0.5) / s) * ps - geom_.center_y;
            const double x = -hw + (c + (b + 0.5) / s) * ps - geom_.center_x;
            const double xr = cr * x + sr * y;
            const double yr = -sr * x + cr * y;
            const double rho = std::hypot(xr, yr);
            const double phi = std::atan2(yr, xr);
            for (int m = 0; m < basis_.size(); ++m) {
              fields_[k * basis_.size() + m] = evaluate_lg(basis_[m], rho, phi, geom_);
            }
          }
        }
      }
    }
  }

  const ModeBasis& basis() const { return basis_; }
  const BeamGeometry& geometry() const { return geom_; }

  IntensityImage render(const Eigen::VectorXcd& c, Normalization normalization) const {
    require(c.size() == basis_.size(), ErrorCategory::dimension_mismatch,
            "coefficient count does not match precomputed basis");
    const int n = geom_.grid_n;
    const int ss = geom_.supersample * geom_.supersample;
    const int d = basis_.size();
    std::vector<double> px(static_cast<std::size_t>(n) * n, 0.0);
    std::size_t k = 0;
    for (std::size_t p = 0; p < px.size(); ++p) {
      double acc = 0.0;
      for (int q = 0; q < ss; ++q, ++k) {
        Complex f{};
        const Complex* row = &fields_[k * d];
        for (int m = 0; m < d; ++m) f += c[m] * row[m];
        acc += std::norm(f);
      }
      px[p] = acc / ss;
    }
    IntensityImage img(n, n, std::move(px), Normalization::raw);
    if (normalization == Normalization::unit_sum) img.normalize_unit_sum();
    return img;
  }

 private:
  ModeBasis basis_;
  BeamGeometry geom_;
  std::size_t samples_ = 0;
  std::vector<Complex> fields_;  // sample-major, mode-minor
};

inline IntensityImage render_intensity(const PureState& state, const BeamGeometry& geom,
                                       Normalization normalization = Normalization::unit_sum) {
  return ModeFields(state.basis(), geom).render(state.coefficients(), normalization);
}

inline PureState shift_oam(const PureState& state, int delta = 1) {
  return PureState(state.basis().shifted(delta), state.coefficients());
}

// The intensity-degenerate partner: coefficient of mode l becomes the
// conjugate of the input coefficient of mode -l.
inline PureState conjugate_flip(const PureState& state) {
  const Eigen::VectorXcd& c = state.coefficients();
  Eigen::VectorXcd out = c.reverse().conjugate();
  return PureState(state.basis().negated(), std::move(out));
}

inline ImagePair render_pair(const PureState& state, const BeamGeometry& geom,
                             Normalization normalization = Normalization::unit_sum,
                             int shift = 1) {
  return ImagePair(render_intensity(state, geom, normalization),
                   render_intensity(shift_oam(state, shift), geom, normalization));
}

// Mean pooling over an even integer partition of rows and columns, then
// unit-sum normalization.
inline IntensityImage downsample(const IntensityImage& image, int target_n) {
  require(target_n >= 1, ErrorCategory::invalid_argument, "target size must be positive");
  require(target_n <= std::min(image.rows, image.cols), ErrorCategory::invalid_argument,
          "target size exceeds the input image size");
  const auto edge = [](int i, int total, int parts) {
    return static_cast<int>(static_cast<long long>(i) * total / parts);
  };
  std::vector<double> out(static_cast<std::size_t>(target_n) * target_n, 0.0);
  for (int r = 0; r < target_n; ++r) {
    const int r0 = edge(r, image.rows, target_n);
    const int r1 = edge(r + 1, image.rows, target_n);
    for (int c = 0; c < target_n; ++c) {
      const int c0 = edge(c, image.cols, target_n);
      const int c1 = edge(c + 1, image.cols, target_n);
      double acc = 0.0;
      for (int y = r0; y < r1; ++y) {
        for (int x = c0; x < c1; ++x) acc += image.at(y, x);
      }
      out[static_cast<std::size_t>(r) * target_n + c] = acc / ((r1 - r0) * (c1 - c0));
    }
  }
  IntensityImage img(target_n, target_n, std::move(out), Normalization::raw);
  img.normalize_unit_sum();
  return img;
}

}  // namespace oamreg
