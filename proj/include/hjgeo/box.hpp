#pragma once

/// Axis-aligned sampling boxes (per-variable intervals) used by all random
/// verification sweeps.

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjgeo/rng.hpp"

namespace hjgeo {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

using Box = std::vector<Interval>;

/// n copies of [-1, 1].
inline Box unit_box(int n) { return Box(static_cast<std::size_t>(n)); }

inline Eigen::VectorXd sample_box(const Box& box, Rng& rng) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = rng.uniform(box[i].lo, box[i].hi);
  }
  return x;
}

inline void require_box_dim(const Box& box, int n, const std::string& name) {
  if (static_cast<int>(box.size()) != n) {
    throw std::invalid_argument("sample box '" + name + "' has " +
                                std::to_string(box.size()) +
                                " intervals, expected " + std::to_string(n));
  }
}

}  // namespace hjgeo
