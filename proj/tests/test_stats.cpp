#include <doctest.h>

#include <cmath>
#include <numbers>

#include "c4v/stats.hpp"
#include "test_util.hpp"

using namespace c4v;
using testutil::batch_stats;
using testutil::random_vectors;

namespace {

AttrStats make_stats(std::int64_t n, std::initializer_list<double> mean,
                     std::initializer_list<double> m2) {
  AttrStats s(static_cast<Eigen::Index>(mean.size()));
  s.n = n;
  Eigen::Index i = 0;
  for (double v : mean) s.mean[i++] = v;
  i = 0;
  for (double v : m2) s.m2[i++] = v;
  return s;
}

}  // namespace

TEST_CASE("update matches the batch oracle on {5, 7}") {
  AttrStats s = make_stats(1, {5.0}, {0.0});
  update(s, Vec::Constant(1, 7.0));
  CHECK(s.n == 2);
  CHECK(s.mean[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(s.m2[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("first instance has zero deviation") {
  AttrStats s(1);
  update(s, Vec::Constant(1, 0.3));
  CHECK(s.n == 1);
  CHECK(s.mean[0] == doctest::Approx(0.3));
  CHECK(s.m2[0] == 0.0);
}

TEST_CASE("constant data has zero variance") {
  AttrStats s(1);
  for (int i = 0; i < 4; ++i) update(s, Vec::Constant(1, 1.0));
  CHECK(s.n == 4);
  CHECK(s.mean[0] == doctest::Approx(1.0));
  CHECK(s.m2[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("update rejects dimension mismatch") {
  AttrStats s(3);
  CHECK_THROWS_AS(update(s, Vec::Zero(2)), std::invalid_argument);
}

TEST_CASE("streaming equals batch within 1e-9 on random sequences") {
  for (auto [count, dim, seed] :
       {std::tuple{100, 16, 1u}, {1000, 8, 2u}, {10000, 2, 3u}}) {
    const auto data = random_vectors(static_cast<std::size_t>(count),
                                     dim, seed);
    AttrStats streamed(dim);
    for (const Vec& x : data) update(streamed, x);
    const AttrStats batch = batch_stats(data, dim);
    REQUIRE(streamed.n == batch.n);
    CHECK((streamed.mean - batch.mean).abs().maxCoeff() < 1e-9);
    CHECK((streamed.m2 - batch.m2).abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("merge matches the batch oracle on pooled {-1,1} and {1,3}") {
  const AttrStats merged = merge(make_stats(2, {0.0}, {2.0}),
                                 make_stats(2, {2.0}, {2.0}));
  CHECK(merged.n == 4);
  CHECK(merged.mean[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(merged.m2[0] == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("merging with an empty operand is the identity") {
  const AttrStats s = make_stats(3, {0.5, 0.25}, {0.1, 0.2});
  const AttrStats merged = merge(s, AttrStats(2));
  CHECK(merged.n == s.n);
  CHECK((merged.mean - s.mean).abs().maxCoeff() == 0.0);
  CHECK((merged.m2 - s.m2).abs().maxCoeff() == 0.0);
}

TEST_CASE("merge is symmetric and matches batch on random partitions") {
  const auto data = random_vectors(500, 8, 7u);
  for (std::size_t cut : {std::size_t{1}, std::size_t{100},
                          std::size_t{250}, std::size_t{499}}) {
    const std::vector<Vec> left(data.begin(),
                                data.begin() + static_cast<std::ptrdiff_t>(cut));
    const std::vector<Vec> right(data.begin() + static_cast<std::ptrdiff_t>(cut),
                                 data.end());
    const AttrStats a = batch_stats(left, 8);
    const AttrStats b = batch_stats(right, 8);
    const AttrStats ab = merge(a, b);
    const AttrStats ba = merge(b, a);
    const AttrStats whole = batch_stats(data, 8);
    CHECK((ab.mean - whole.mean).abs().maxCoeff() < 1e-9);
    CHECK((ab.m2 - whole.m2).abs().maxCoeff() < 1e-9);
    CHECK((ab.mean - ba.mean).abs().maxCoeff() < 1e-12);
    CHECK((ab.m2 - ba.m2).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gaussian entropy closed form") {
  const double sigma_zero = 1.0 / std::sqrt(2.0 * std::numbers::pi *
                                            std::numbers::e);
  CHECK(gaussian_entropy(sigma_zero, 1e-6) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(gaussian_entropy(0.0, 0.25) ==
        doctest::Approx(gaussian_entropy(0.25, 0.25)));
  CHECK(gaussian_entropy(1.0, 1e-6) == doctest::Approx(1.4189385332046727));
}

TEST_CASE("gaussian entropy is monotone nondecreasing in sigma") {
  double prev = gaussian_entropy(0.0, 0.25);
  for (double sigma = 0.01; sigma < 3.0; sigma += 0.01) {
    const double h = gaussian_entropy(sigma, 0.25);
    CHECK(h >= prev);
    prev = h;
  }
}

TEST_CASE("categorical entropy") {
  LabelTable single;
  single.add(0, 5);
  CHECK(categorical_entropy(single) == 0.0);

  LabelTable uniform2;
  uniform2.add(0, 1);
  uniform2.add(1, 1);
  CHECK(categorical_entropy(uniform2) == doctest::Approx(std::log(2.0)));

  LabelTable mixed;  // {0:1, 1:1, 2:2}
  mixed.add(0, 1);
  mixed.add(1, 1);
  mixed.add(2, 2);
  const double expected = -(0.25 * std::log(0.25) + 0.25 * std::log(0.25) +
                            0.5 * std::log(0.5));
  CHECK(categorical_entropy(mixed) == doctest::Approx(expected));

  CHECK(categorical_entropy(LabelTable{}) == 0.0);
}

TEST_CASE("uniform table maximizes categorical entropy at ln k") {
  for (int k = 2; k <= 10; ++k) {
    LabelTable uniform;
    for (int label = 0; label < k; ++label) uniform.add(label, 7);
    CHECK(categorical_entropy(uniform) ==
          doctest::Approx(std::log(static_cast<double>(k))));

    LabelTable skewed;
    skewed.add(0, 7 * k);
    for (int label = 1; label < k; ++label) skewed.add(label, 3);
    CHECK(categorical_entropy(skewed) <
          std::log(static_cast<double>(k)));
  }
}

TEST_CASE("pixel entropy sum equals summed per-pixel closed forms") {
  const auto data = random_vectors(50, 4, 11u);
  const AttrStats stats = batch_stats(data, 4);
  const double floor = 0.25;
  double expected = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i)
    expected += gaussian_entropy(
        std::sqrt(stats.m2[i] / static_cast<double>(stats.n)), floor);
  CHECK(pixel_entropy_sum(stats, floor) == doctest::Approx(expected));
}
