#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "oamreg/error.hpp"

namespace oamreg {

using Complex = std::complex<double>;

// Ordered set of azimuthal indices (radial index fixed at 0).
class ModeBasis {
 public:
  ModeBasis() = default;

  explicit ModeBasis(std::vector<int> indices, int radial_index = 0)
      : indices_(std::move(indices)) {
    require(radial_index == 0, ErrorCategory::invalid_argument,
            "only radial index p=0 is supported");
    require(!indices_.empty(), ErrorCategory::invalid_argument, "mode basis is empty");
    for (std::size_t i = 1; i < indices_.size(); ++i) {
      require(indices_[i - 1] < indices_[i], ErrorCategory::invalid_argument,
              "mode basis indices must be strictly increasing: " + to_string());
    }
  }

  // Even d: +-1, +-3, ...; odd d: -(d-1)/2 .. (d-1)/2.
  static ModeBasis symmetric(int d) {
    require(d >= 1, ErrorCategory::invalid_argument, "dimension must be positive");
    std::vector<int> idx;
    if (d % 2 == 0) {
      for (int k = -(d - 1); k <= d - 1; k += 2) idx.push_back(k);
    } else {
      for (int k = -(d - 1) / 2; k <= (d - 1) / 2; ++k) idx.push_back(k);
    }
    return ModeBasis(std::move(idx));
  }

  static ModeBasis consecutive(int d, int first = 0) {
    require(d >= 1, ErrorCategory::invalid_argument, "dimension must be positive");
    std::vector<int> idx(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) idx[static_cast<std::size_t>(k)] = first + k;
    return ModeBasis(std::move(idx));
  }

  // Parses "-3,-1,1,3".
  static ModeBasis parse(std::string_view text) {
    std::vector<int> idx;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t comma = text.find(',', pos);
      if (comma == std::string_view::npos) comma = text.size();
      std::string_view token = text.substr(pos, comma - pos);
      while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
      while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
      if (!token.empty() && token.front() == '+') token.remove_prefix(1);
      int value = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      require(ec == std::errc() && ptr == token.data() + token.size() && !token.empty(),
              ErrorCategory::invalid_argument, "malformed basis list: '" + std::string(text) + "'");
      idx.push_back(value);
      pos = comma + 1;
    }
    return ModeBasis(std::move(idx));
  }

  int size() const { return static_cast<int>(indices_.size()); }
  int operator[](int i) const { return indices_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& indices() const { return indices_; }
  int radial_index() const { return 0; }

  ModeBasis shifted(int delta) const {
    std::vector<int> idx = indices_;
    for (int& l : idx) l += delta;
    return ModeBasis(std::move(idx));
  }

  ModeBasis negated() const {
    std::vector<int> idx(indices_.rbegin(), indices_.rend());
    for (int& l : idx) l = -l;
    return ModeBasis(std::move(idx));
  }

  bool is_symmetric() const { return negated() == *this; }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(indices_[i]);
    }
    return out;
  }

  friend bool operator==(const ModeBasis&, const ModeBasis&) = default;

 private:
  std::vector<int> indices_;
};

// Normalized superposition of LG modes over a ModeBasis.
class PureState {
 public:
  static constexpr double kNormTolerance = 1e-12;

  PureState() = default;

  PureState(ModeBasis basis, Eigen::VectorXcd coefficients)
      : basis_(std::move(basis)), coefficients_(std::move(coefficients)) {
    require(coefficients_.size() == basis_.size(), ErrorCategory::dimension_mismatch,
            "coefficient count does not match basis size");
    require(coefficients_.allFinite(), ErrorCategory::invalid_argument,
            "state coefficients must be finite");
    require(std::abs(coefficients_.norm() - 1.0) <= kNormTolerance,
            ErrorCategory::invalid_argument, "state coefficients are not normalized");
  }

  // Rescales to unit norm before validation.
  static PureState normalized(ModeBasis basis, Eigen::VectorXcd coefficients) {
    const double n = coefficients.norm();
    require(n > 0 && std::isfinite(n), ErrorCategory::invalid_argument,
            "cannot normalize a zero or non-finite coefficient vector");
    coefficients /= n;
    return PureState(std::move(basis), std::move(coefficients));
  }

  static PureState basis_state(const ModeBasis& basis, int ell) {
    const auto& idx = basis.indices();
    auto it = std::find(idx.begin(), idx.end(), ell);
    require(it != idx.end(), ErrorCategory::invalid_argument,
            "index " + std::to_string(ell) + " not in basis");
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(basis.size());
    c[it - idx.begin()] = 1.0;
    return PureState(basis, std::move(c));
  }

  const ModeBasis& basis() const { return basis_; }
  const Eigen::VectorXcd& coefficients() const { return coefficients_; }
  int dimension() const { return basis_.size(); }

 private:
  ModeBasis basis_;
  Eigen::VectorXcd coefficients_;
};

}  // namespace oamreg
