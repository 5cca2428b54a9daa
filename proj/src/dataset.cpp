#include "c4v/dataset.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace c4v {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path);
  return bytes;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in,
                                 const std::string& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
    throw IoError("zlib init failed for " + path);
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError("corrupt gzip stream in " + path);
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> read_maybe_gz(const std::string& path) {
  auto bytes = read_file(path);
  if (path.size() > 3 && path.ends_with(".gz")) return gunzip(bytes, path);
  return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes,
                        std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size())
    throw FormatError("truncated IDX header in " + path);
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void write_file(const std::string& path,
                const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace

RawImages load_idx_images(const std::string& path) {
  const auto bytes = read_maybe_gz(path);
  const std::uint32_t magic = read_be32(bytes, 0, path);
  if (magic != kIdxImageMagic)
    throw FormatError("bad image magic in " + path + ": got " +
                      std::to_string(magic));
  const std::uint32_t count = read_be32(bytes, 4, path);
  RawImages images;
  images.rows = read_be32(bytes, 8, path);
  images.cols = read_be32(bytes, 12, path);
  const std::size_t expected =
      16 + static_cast<std::size_t>(count) * images.rows * images.cols;
  if (bytes.size() != expected)
    throw FormatError("truncated image data in " + path + ": expected " +
                      std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  images.pixels.assign(bytes.begin() + 16, bytes.end());
  return images;
}

std::vector<std::uint8_t> load_idx_labels(const std::string& path) {
  const auto bytes = read_maybe_gz(path);
  const std::uint32_t magic = read_be32(bytes, 0, path);
  if (magic != kIdxLabelMagic)
    throw FormatError("bad label magic in " + path + ": got " +
                      std::to_string(magic));
  const std::uint32_t count = read_be32(bytes, 4, path);
  if (bytes.size() != 8 + static_cast<std::size_t>(count))
    throw FormatError("truncated label data in " + path);
  return {bytes.begin() + 8, bytes.end()};
}

void write_idx_images(const std::string& path, const RawImages& images) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(16 + images.pixels.size());
  append_be32(bytes, kIdxImageMagic);
  append_be32(bytes, static_cast<std::uint32_t>(images.count()));
  append_be32(bytes, images.rows);
  append_be32(bytes, images.cols);
  bytes.insert(bytes.end(), images.pixels.begin(), images.pixels.end());
  write_file(path, bytes);
}

void write_idx_labels(const std::string& path,
                      const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(8 + labels.size());
  append_be32(bytes, kIdxLabelMagic);
  append_be32(bytes, static_cast<std::uint32_t>(labels.size()));
  bytes.insert(bytes.end(), labels.begin(), labels.end());
  write_file(path, bytes);
}

Dataset load_dataset(const std::string& image_path,
                     const std::string& label_path, std::string name) {
  const RawImages raw = load_idx_images(image_path);
  const auto labels = load_idx_labels(label_path);
  if (raw.count() != labels.size())
    throw FormatError("image/label count mismatch: " +
                      std::to_string(raw.count()) + " images vs " +
                      std::to_string(labels.size()) + " labels");
  Dataset dataset;
  dataset.name = std::move(name);
  dataset.rows = raw.rows;
  dataset.cols = raw.cols;
  const std::size_t dim = static_cast<std::size_t>(raw.rows) * raw.cols;
  dataset.images.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Instance inst;
    inst.pixels.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t p = 0; p < dim; ++p)
      inst.pixels[static_cast<Eigen::Index>(p)] =
          raw.pixels[i * dim + p] / 255.0;
    inst.label = static_cast<int>(labels[i]);
    dataset.images.push_back(std::move(inst));
  }
  return dataset;
}

std::vector<std::vector<Instance>> make_exp1_splits(const Dataset& dataset,
                                                    std::uint64_t seed,
                                                    std::size_t split_size) {
  std::vector<Instance> shuffled = dataset.images;
  Rng rng(seed);
  seeded_shuffle(shuffled, rng);
  std::vector<std::vector<Instance>> splits;
  for (std::size_t start = 0; start < shuffled.size(); start += split_size) {
    const std::size_t end = std::min(start + split_size, shuffled.size());
    splits.emplace_back(shuffled.begin() + static_cast<std::ptrdiff_t>(start),
                        shuffled.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return splits;
}

std::vector<std::vector<Instance>> make_exp2_splits(const Dataset& dataset,
                                                    int chosen_digit,
                                                    std::uint64_t seed) {
  constexpr std::size_t kPerDigitInD1 = 600;
  constexpr std::size_t kNumSplits = 10;

  Rng rng(seed);
  std::vector<Instance> chosen;
  std::vector<std::vector<Instance>> by_digit(kNumLabels);
  for (const Instance& inst : dataset.images) {
    if (!inst.label) throw FormatError("exp2 splits require labeled data");
    if (*inst.label == chosen_digit)
      chosen.push_back(inst);
    else
      by_digit[static_cast<std::size_t>(*inst.label)].push_back(inst);
  }

  std::vector<std::vector<Instance>> splits(kNumSplits);
  std::vector<Instance> rest;
  splits[0] = std::move(chosen);
  for (int digit = 0; digit < kNumLabels; ++digit) {
    auto& pool = by_digit[static_cast<std::size_t>(digit)];
    if (digit == chosen_digit) continue;
    if (pool.size() < kPerDigitInD1)
      throw FormatError("digit " + std::to_string(digit) + " has only " +
                        std::to_string(pool.size()) +
                        " training images, need 600 for the first split");
    seeded_shuffle(pool, rng);
    splits[0].insert(splits[0].end(), pool.begin(),
                     pool.begin() + kPerDigitInD1);
    rest.insert(rest.end(), pool.begin() + kPerDigitInD1, pool.end());
  }
  seeded_shuffle(splits[0], rng);

  seeded_shuffle(rest, rng);
  const std::size_t tail_splits = kNumSplits - 1;
  const std::size_t base = rest.size() / tail_splits;
  const std::size_t remainder = rest.size() % tail_splits;
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < tail_splits; ++k) {
    const std::size_t take = base + (k < remainder ? 1 : 0);
    splits[k + 1].assign(rest.begin() + static_cast<std::ptrdiff_t>(cursor),
                         rest.begin() +
                             static_cast<std::ptrdiff_t>(cursor + take));
    cursor += take;
  }
  return splits;
}

}  // namespace c4v
