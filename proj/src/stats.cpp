#include "c4v/stats.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace c4v {

namespace {
constexpr double kHalfLog2PiE = 1.4189385332046727;  // 1/2 ln(2*pi*e)
}

Vec AttrStats::variance() const {
  if (n == 0) return Vec::Zero(mean.size());
  return m2 / static_cast<double>(n);
}

std::int64_t LabelTable::total() const {
  std::int64_t t = 0;
  for (const auto& [label, count] : counts) t += count;
  return t;
}

void LabelTable::add(int label, std::int64_t k) {
  counts[label] += k;
  if (counts[label] == 0) counts.erase(label);
}

void update(AttrStats& stats, const Vec& pixels) {
  if (pixels.size() != stats.mean.size())
    throw std::invalid_argument("update: dimension mismatch");
  stats.n += 1;
  const double inv_n = 1.0 / static_cast<double>(stats.n);
  Vec delta = pixels - stats.mean;
  stats.mean += delta * inv_n;
  stats.m2 += delta * (pixels - stats.mean);
}

AttrStats merge(const AttrStats& a, const AttrStats& b) {
  if (a.mean.size() != b.mean.size())
    throw std::invalid_argument("merge: dimension mismatch");
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  AttrStats out(a.mean.size());
  out.n = a.n + b.n;
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double nt = na + nb;
  Vec delta = b.mean - a.mean;
  out.mean = a.mean + delta * (nb / nt);
  out.m2 = a.m2 + b.m2 + delta.square() * (na * nb / nt);
  return out;
}

double gaussian_entropy(double sigma, double sigma_floor) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_entropy: sigma < 0");
  if (sigma_floor <= 0.0)
    throw std::invalid_argument("gaussian_entropy: sigma_floor <= 0");
  return kHalfLog2PiE + std::log(std::max(sigma, sigma_floor));
}

double categorical_entropy(const LabelTable& table) {
  const std::int64_t total = table.total();
  if (total <= 0) return 0.0;
  double h = 0.0;
  for (const auto& [label, count] : table.counts) {
    if (count <= 0) continue;
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

double pixel_entropy_sum(const AttrStats& stats, double sigma_floor) {
  if (stats.n < 1)
    throw std::invalid_argument("pixel_entropy_sum: empty statistics");
  const double floor_var = sigma_floor * sigma_floor;
  const double inv_n = 1.0 / static_cast<double>(stats.n);
  // sum_i [ 1/2 ln(2 pi e) + 1/2 ln(max(m2_i/n, floor^2)) ]
  const double log_var_sum = (stats.m2 * inv_n).max(floor_var).log().sum();
  return static_cast<double>(stats.dim()) * kHalfLog2PiE + 0.5 * log_var_sum;
}

}  // namespace c4v
