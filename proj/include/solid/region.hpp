#pragma once

#include <algorithm>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace solid {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// A locally inactive coordinate pinned to a value.
struct Fixed {
  double value = 0.0;
};

using RegionEntry = std::variant<Interval, Fixed>;

/// Axis-aligned search box in [0,1]^p where some coordinates may be pinned.
class SearchRegion {
 public:
  SearchRegion() = default;
  explicit SearchRegion(std::vector<RegionEntry> entries) : entries_(std::move(entries)) {
    for (const auto& e : entries_) {
      if (const auto* iv = std::get_if<Interval>(&e)) {
        if (!(0.0 <= iv->lo && iv->lo <= iv->hi && iv->hi <= 1.0))
          throw std::invalid_argument("SearchRegion: interval must satisfy 0 <= lo <= hi <= 1");
      } else {
        const double v = std::get<Fixed>(e).value;
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("SearchRegion: fixed value outside [0,1]");
      }
    }
  }

  static SearchRegion unit_box(std::size_t p) {
    return SearchRegion(std::vector<RegionEntry>(p, Interval{0.0, 1.0}));
  }

  std::size_t dim() const { return entries_.size(); }
  const RegionEntry& operator[](std::size_t k) const { return entries_.at(k); }
  const std::vector<RegionEntry>& entries() const { return entries_; }

  bool is_fixed(std::size_t k) const { return std::holds_alternative<Fixed>(entries_.at(k)); }

  std::vector<std::size_t> active_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < entries_.size(); ++k)
      if (!is_fixed(k)) out.push_back(k);
    return out;
  }

  double lower(std::size_t k) const {
    const auto& e = entries_.at(k);
    return is_fixed(k) ? std::get<Fixed>(e).value : std::get<Interval>(e).lo;
  }
  double upper(std::size_t k) const {
    const auto& e = entries_.at(k);
    return is_fixed(k) ? std::get<Fixed>(e).value : std::get<Interval>(e).hi;
  }

  /// Componentwise clamp; fixed coordinates are overwritten with their pins.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    check_dim(x);
    Eigen::VectorXd out(x.size());
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      out[kk] = is_fixed(k) ? lower(k) : std::clamp(x[kk], lower(k), upper(k));
    }
    return out;
  }

  bool contains(const Eigen::VectorXd& x) const {
    check_dim(x);
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const double v = x[static_cast<Eigen::Index>(k)];
      if (is_fixed(k) ? v != lower(k) : (v < lower(k) || v > upper(k))) return false;
    }
    return true;
  }

 private:
  void check_dim(const Eigen::VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != entries_.size())
      throw std::invalid_argument("SearchRegion: point dimension mismatch");
  }

  std::vector<RegionEntry> entries_;
};

}  // namespace solid
