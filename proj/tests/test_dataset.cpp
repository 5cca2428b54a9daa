#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <zlib.h>

#include "c4v/dataset.hpp"

using namespace c4v;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("c4v_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

RawImages tiny_images(std::size_t count, std::uint32_t rows,
                      std::uint32_t cols) {
  RawImages images;
  images.rows = rows;
  images.cols = cols;
  images.pixels.resize(count * rows * cols);
  for (std::size_t i = 0; i < images.pixels.size(); ++i)
    images.pixels[i] = static_cast<std::uint8_t>((i * 37 + 11) % 256);
  return images;
}

std::vector<std::uint8_t> tiny_labels(std::size_t count) {
  std::vector<std::uint8_t> labels(count);
  for (std::size_t i = 0; i < count; ++i)
    labels[i] = static_cast<std::uint8_t>(i % 10);
  return labels;
}

void write_bytes(const std::string& path,
                 const std::vector<std::uint8_t>& bytes) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  REQUIRE(f != nullptr);
  std::fseek(f, 0, SEEK_END);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(std::ftell(f)));
  std::fseek(f, 0, SEEK_SET);
  REQUIRE(std::fread(bytes.data(), 1, bytes.size(), f) == bytes.size());
  std::fclose(f);
  return bytes;
}

void gzip_file(const std::string& src, const std::string& dst) {
  const auto bytes = read_bytes(src);
  gzFile out = gzopen(dst.c_str(), "wb");
  REQUIRE(out != nullptr);
  REQUIRE(gzwrite(out, bytes.data(), static_cast<unsigned>(bytes.size())) ==
          static_cast<int>(bytes.size()));
  gzclose(out);
}

// Fingerprint used to compare instance multisets across shuffles.
std::multiset<std::pair<double, int>> fingerprint(
    const std::vector<std::vector<Instance>>& splits) {
  std::multiset<std::pair<double, int>> out;
  for (const auto& split : splits)
    for (const Instance& inst : split)
      out.insert({inst.pixels.sum(), inst.label.value_or(-1)});
  return out;
}

Dataset synthetic_dataset(std::size_t per_digit, std::uint32_t rows = 2,
                          std::uint32_t cols = 2) {
  Dataset ds;
  ds.name = "synthetic";
  ds.rows = rows;
  ds.cols = cols;
  std::size_t serial = 0;
  for (int digit = 0; digit < 10; ++digit) {
    for (std::size_t i = 0; i < per_digit; ++i) {
      Instance inst;
      inst.pixels.resize(ds.dim());
      for (Eigen::Index j = 0; j < ds.dim(); ++j)
        inst.pixels[j] =
            static_cast<double>((serial * 13 + static_cast<std::size_t>(j)) %
                                997) /
            997.0;
      inst.label = digit;
      ds.images.push_back(std::move(inst));
      ++serial;
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("IDX image and label files round-trip") {
  TempDir dir;
  const RawImages images = tiny_images(7, 4, 3);
  const std::vector<std::uint8_t> labels = tiny_labels(7);
  write_idx_images(dir.file("imgs.idx"), images);
  write_idx_labels(dir.file("labels.idx"), labels);

  const RawImages loaded = load_idx_images(dir.file("imgs.idx"));
  CHECK(loaded.rows == 4);
  CHECK(loaded.cols == 3);
  CHECK(loaded.count() == 7);
  CHECK(loaded.pixels == images.pixels);
  CHECK(load_idx_labels(dir.file("labels.idx")) == labels);
}

TEST_CASE("gzip-compressed IDX files load identically") {
  TempDir dir;
  const RawImages images = tiny_images(5, 3, 3);
  write_idx_images(dir.file("imgs.idx"), images);
  gzip_file(dir.file("imgs.idx"), dir.file("imgs.idx.gz"));
  const RawImages loaded = load_idx_images(dir.file("imgs.idx.gz"));
  CHECK(loaded.pixels == images.pixels);
  CHECK(loaded.rows == 3);

  const std::vector<std::uint8_t> labels = tiny_labels(5);
  write_idx_labels(dir.file("labels.idx"), labels);
  gzip_file(dir.file("labels.idx"), dir.file("labels.idx.gz"));
  CHECK(load_idx_labels(dir.file("labels.idx.gz")) == labels);
}

TEST_CASE("missing file raises IoError") {
  CHECK_THROWS_AS(load_idx_images("/nonexistent/path.idx"), IoError);
  CHECK_THROWS_AS(load_idx_labels("/nonexistent/path.idx"), IoError);
}

TEST_CASE("wrong magic raises FormatError") {
  TempDir dir;
  // A label file where an image file is expected, and vice versa.
  write_idx_labels(dir.file("labels.idx"), tiny_labels(4));
  write_idx_images(dir.file("imgs.idx"), tiny_images(4, 2, 2));
  CHECK_THROWS_AS(load_idx_images(dir.file("labels.idx")), FormatError);
  CHECK_THROWS_AS(load_idx_labels(dir.file("imgs.idx")), FormatError);

  write_bytes(dir.file("garbage.idx"), {0xde, 0xad, 0xbe, 0xef, 0, 0, 0, 0});
  CHECK_THROWS_AS(load_idx_images(dir.file("garbage.idx")), FormatError);
}

TEST_CASE("truncated payload raises FormatError") {
  TempDir dir;
  write_idx_images(dir.file("imgs.idx"), tiny_images(6, 4, 4));
  auto bytes = read_bytes(dir.file("imgs.idx"));
  bytes.resize(bytes.size() - 5);
  write_bytes(dir.file("short.idx"), bytes);
  CHECK_THROWS_AS(load_idx_images(dir.file("short.idx")), FormatError);

  write_idx_labels(dir.file("labels.idx"), tiny_labels(6));
  auto label_bytes = read_bytes(dir.file("labels.idx"));
  label_bytes.resize(label_bytes.size() - 2);
  write_bytes(dir.file("short_labels.idx"), label_bytes);
  CHECK_THROWS_AS(load_idx_labels(dir.file("short_labels.idx")), FormatError);
}

TEST_CASE("load_dataset normalizes bytes and pairs labels") {
  TempDir dir;
  RawImages images = tiny_images(3, 2, 2);
  images.pixels = {0, 255, 128, 1, 0, 0, 0, 0, 255, 255, 255, 255};
  write_idx_images(dir.file("imgs.idx"), images);
  write_idx_labels(dir.file("labels.idx"), {9, 0, 4});

  const Dataset ds =
      load_dataset(dir.file("imgs.idx"), dir.file("labels.idx"), "train");
  CHECK(ds.name == "train");
  REQUIRE(ds.images.size() == 3);
  CHECK(ds.dim() == 4);
  CHECK(ds.images[0].pixels[0] == 0.0);
  CHECK(ds.images[0].pixels[1] == 1.0);
  CHECK(ds.images[0].pixels[2] == doctest::Approx(128.0 / 255.0));
  CHECK(ds.images[0].pixels[3] == doctest::Approx(1.0 / 255.0));
  CHECK(ds.images[0].label == 9);
  CHECK(ds.images[1].label == 0);
  CHECK(ds.images[2].pixels.minCoeff() == 1.0);
}

TEST_CASE("load_dataset rejects image/label count mismatch") {
  TempDir dir;
  write_idx_images(dir.file("imgs.idx"), tiny_images(4, 2, 2));
  write_idx_labels(dir.file("labels.idx"), tiny_labels(5));
  CHECK_THROWS_AS(
      load_dataset(dir.file("imgs.idx"), dir.file("labels.idx"), "x"),
      FormatError);
}

TEST_CASE("exp1 splits partition the dataset into chunks of ten") {
  const Dataset ds = synthetic_dataset(10);  // 100 instances
  const auto splits = make_exp1_splits(ds, 123);
  REQUIRE(splits.size() == 10);
  for (const auto& split : splits) CHECK(split.size() == 10);

  // The union is the original multiset.
  std::multiset<std::pair<double, int>> original;
  for (const Instance& inst : ds.images)
    original.insert({inst.pixels.sum(), inst.label.value_or(-1)});
  CHECK(fingerprint(splits) == original);
}

TEST_CASE("exp1 final split may be short") {
  Dataset ds = synthetic_dataset(10);
  ds.images.resize(97);
  const auto splits = make_exp1_splits(ds, 1);
  REQUIRE(splits.size() == 10);
  CHECK(splits.back().size() == 7);
}

TEST_CASE("exp1 splits are seed-deterministic and seed-sensitive") {
  const Dataset ds = synthetic_dataset(12);
  const auto a = make_exp1_splits(ds, 42);
  const auto b = make_exp1_splits(ds, 42);
  const auto c = make_exp1_splits(ds, 43);
  REQUIRE(a.size() == b.size());
  bool identical = true;
  bool differs_from_c = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      if ((a[i][j].pixels - b[i][j].pixels).abs().maxCoeff() != 0.0)
        identical = false;
      if ((a[i][j].pixels - c[i][j].pixels).abs().maxCoeff() != 0.0)
        differs_from_c = true;
    }
  }
  CHECK(identical);
  CHECK(differs_from_c);
}

TEST_CASE("exp2 splits: D1 composition and later-split balance") {
  const std::size_t per_digit = 700;
  const Dataset ds = synthetic_dataset(per_digit, 1, 2);
  const int chosen = 3;
  const auto splits = make_exp2_splits(ds, chosen, 7);
  REQUIRE(splits.size() == 10);

  // D1: all 700 chosen-digit images plus 600 per other digit.
  CHECK(splits[0].size() == per_digit + 9 * 600);
  std::map<int, int> d1_counts;
  for (const Instance& inst : splits[0]) ++d1_counts[*inst.label];
  CHECK(d1_counts[chosen] == static_cast<int>(per_digit));
  for (int digit = 0; digit < 10; ++digit)
    if (digit != chosen) CHECK(d1_counts[digit] == 600);

  // D2..D10 share the remaining 900 non-chosen images evenly (100 each)
  // and contain no chosen-digit image.
  std::size_t rest_total = 0;
  for (std::size_t i = 1; i < splits.size(); ++i) {
    CHECK(splits[i].size() == 100);
    rest_total += splits[i].size();
    for (const Instance& inst : splits[i]) CHECK(*inst.label != chosen);
  }
  CHECK(rest_total == 900);

  // No image is duplicated or dropped.
  std::multiset<std::pair<double, int>> original;
  for (const Instance& inst : ds.images)
    original.insert({inst.pixels.sum(), inst.label.value_or(-1)});
  CHECK(fingerprint(splits) == original);
}

TEST_CASE("exp2 remainder images go one per split from D2") {
  // 700 chosen + 9*703 others: rest = 9*(703-600) = 927 = 103*9, even.
  // Use 704 instead: rest = 936, still even; craft an uneven case by
  // trimming two images off one digit after generation.
  Dataset ds = synthetic_dataset(700, 1, 2);
  // Add 31 extra images of digit 5 so the rest count is 900+31=931,
  // leaving a remainder of 4 over nine splits.
  for (int i = 0; i < 31; ++i) {
    Instance inst;
    inst.pixels.resize(2);
    inst.pixels[0] = 0.123 + 0.001 * i;
    inst.pixels[1] = 0.456;
    inst.label = 5;
    ds.images.push_back(std::move(inst));
  }
  const auto splits = make_exp2_splits(ds, 2, 11);
  REQUIRE(splits.size() == 10);
  std::size_t base = splits[9].size();
  std::size_t total_rest = 0;
  for (std::size_t i = 1; i < splits.size(); ++i) {
    total_rest += splits[i].size();
    CHECK(splits[i].size() >= base);
    CHECK(splits[i].size() <= base + 1);
  }
  CHECK(total_rest == 931);
  // Remainder of 4 lands on D2..D5.
  for (std::size_t i = 1; i <= 4; ++i) CHECK(splits[i].size() == base + 1);
}

TEST_CASE("exp2 is deterministic per seed and rejects scarce digits") {
  const Dataset ds = synthetic_dataset(650, 1, 2);
  const auto a = make_exp2_splits(ds, 0, 99);
  const auto b = make_exp2_splits(ds, 0, 99);
  CHECK(fingerprint({a[0]}) == fingerprint({b[0]}));
  CHECK(a[3].size() == b[3].size());

  Dataset scarce = synthetic_dataset(650, 1, 2);
  // Remove most of digit 9 so only 599 remain.
  std::size_t removed = 0;
  for (auto it = scarce.images.begin();
       it != scarce.images.end() && removed < 51;) {
    if (*it->label == 9) {
      it = scarce.images.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  CHECK_THROWS_AS(make_exp2_splits(scarce, 0, 1), FormatError);
}

TEST_CASE("seeded shuffle utilities are platform-pinned") {
  // These exact sequences are part of the reproducibility contract and
  // were verified against an independent mt19937_64 implementation; they
  // must not change across standard libraries or releases.
  Rng rng(12345);
  CHECK(uniform_below(rng, 10) == 6);
  CHECK(uniform_below(rng, 10) == 1);
  CHECK(uniform_below(rng, 10) == 5);

  std::vector<int> items = {0, 1, 2, 3, 4, 5, 6, 7};
  Rng shuffle_rng(7);
  seeded_shuffle(items, shuffle_rng);
  CHECK(items == std::vector<int>{2, 3, 5, 6, 1, 0, 4, 7});
}
