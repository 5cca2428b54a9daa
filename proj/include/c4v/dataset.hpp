#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "c4v/rng.hpp"
#include "c4v/types.hpp"

namespace c4v {

/// File could not be opened or read.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File opened but its contents are not a valid IDX container.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;  // 2051
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;  // 2049

struct RawImages {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols bytes

  std::size_t count() const {
    return rows && cols ? pixels.size() / (static_cast<std::size_t>(rows) *
                                           cols)
                        : 0;
  }
};

/// Labeled image collection with pixels normalized to [0,1].
struct Dataset {
  std::vector<Instance> images;
  std::string name;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;

  Eigen::Index dim() const {
    return static_cast<Eigen::Index>(rows) * cols;
  }
};

/// Big-endian IDX parsing; paths ending in ".gz" are inflated first.
RawImages load_idx_images(const std::string& path);
std::vector<std::uint8_t> load_idx_labels(const std::string& path);

/// Fixture writers (uncompressed only).
void write_idx_images(const std::string& path, const RawImages& images);
void write_idx_labels(const std::string& path,
                      const std::vector<std::uint8_t>& labels);

/// Pairs image and label files into a Dataset, dividing bytes by 255.
Dataset load_dataset(const std::string& image_path,
                     const std::string& label_path, std::string name);

/// A seeded uniform shuffle of the whole set, chunked into splits of
/// `split_size` (the final split may be short if the size does not divide).
std::vector<std::vector<Instance>> make_exp1_splits(const Dataset& dataset,
                                                    std::uint64_t seed,
                                                    std::size_t split_size =
                                                        10);

/// Forgetting-benchmark splits: D1 holds every chosen-digit image plus 600
/// seeded-random images per other digit; the remaining non-chosen images are
/// shuffled and divided evenly across D2..D10 (remainder spread one per
/// split from D2 onward). D2..D10 contain no chosen-digit image.
std::vector<std::vector<Instance>> make_exp2_splits(const Dataset& dataset,
                                                    int chosen_digit,
                                                    std::uint64_t seed);

}  // namespace c4v
