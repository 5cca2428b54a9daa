#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>

namespace c4v {

using Vec = Eigen::ArrayXd;
using Mat = Eigen::MatrixXd;

// Number of digit classes in the label alphabet.
inline constexpr int kNumLabels = 10;

// Minimum per-pixel standard deviation ("acuity") on the [0,1] intensity
// scale. Applied identically during learning and prediction.
inline constexpr double kDefaultSigmaFloor = 0.30;

// Default number of concept nodes expanded during prediction.
inline constexpr int kDefaultNmax = 300;

/// One image: a flat pixel vector in [0,1] plus an optional class label.
struct Instance {
  Vec pixels;
  std::optional<int> label;
};

}  // namespace c4v
