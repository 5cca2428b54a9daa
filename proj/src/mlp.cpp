#include "c4v/mlp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace c4v {

namespace {

// Uniform(-bound, bound) fill with a platform-independent draw.
void seeded_uniform_fill(Mat& m, double bound, Rng& rng) {
  constexpr double inv = 1.0 / 9007199254740992.0;  // 2^-53
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double u = static_cast<double>(rng() >> 11) * inv;  // [0,1)
      m(r, c) = bound * (2.0 * u - 1.0);
    }
}

Mat softmax_columns(const Mat& logits) {
  Mat p = logits;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    const double m = p.col(c).maxCoeff();
    p.col(c) = (p.col(c).array() - m).exp();
    p.col(c) /= p.col(c).sum();
  }
  return p;
}

}  // namespace

MlpModel::MlpModel(Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
                   std::uint64_t seed)
    : w1(hidden, in),
      b1(Eigen::VectorXd::Zero(hidden)),
      w2(out, hidden),
      b2(Eigen::VectorXd::Zero(out)),
      v_w1(Mat::Zero(hidden, in)),
      v_b1(Eigen::VectorXd::Zero(hidden)),
      v_w2(Mat::Zero(out, hidden)),
      v_b2(Eigen::VectorXd::Zero(out)) {
  Rng rng(seed);
  seeded_uniform_fill(w1, std::sqrt(1.0 / static_cast<double>(in)), rng);
  seeded_uniform_fill(w2, std::sqrt(1.0 / static_cast<double>(hidden)), rng);
}

Mat MlpModel::forward(const Mat& inputs) const {
  const Mat hidden =
      ((w1 * inputs).colwise() + b1).array().max(0.0).matrix();
  return (w2 * hidden).colwise() + b2;
}

double loss_and_gradients(const MlpModel& model, const Mat& inputs,
                          std::span<const int> targets, MlpGradients& grads) {
  const Eigen::Index batch = inputs.cols();
  if (static_cast<std::size_t>(batch) != targets.size())
    throw std::invalid_argument("loss_and_gradients: batch size mismatch");

  const Mat pre_hidden = (model.w1 * inputs).colwise() + model.b1;
  const Mat hidden = pre_hidden.array().max(0.0).matrix();
  const Mat logits = (model.w2 * hidden).colwise() + model.b2;
  const Mat probs = softmax_columns(logits);

  double loss = 0.0;
  Mat dlogits = probs;
  for (Eigen::Index c = 0; c < batch; ++c) {
    loss -= std::log(std::max(probs(targets[static_cast<std::size_t>(c)], c),
                              1e-300));
    dlogits(targets[static_cast<std::size_t>(c)], c) -= 1.0;
  }
  loss /= static_cast<double>(batch);
  dlogits /= static_cast<double>(batch);

  grads.w2 = dlogits * hidden.transpose();
  grads.b2 = dlogits.rowwise().sum();
  Mat dhidden = model.w2.transpose() * dlogits;
  dhidden = (pre_hidden.array() > 0.0).select(dhidden, 0.0);
  grads.w1 = dhidden * inputs.transpose();
  grads.b1 = dhidden.rowwise().sum();
  return loss;
}

double batch_loss(const MlpModel& model, const Mat& inputs,
                  std::span<const int> targets) {
  const Mat probs = softmax_columns(model.forward(inputs));
  double loss = 0.0;
  for (Eigen::Index c = 0; c < inputs.cols(); ++c)
    loss -= std::log(std::max(probs(targets[static_cast<std::size_t>(c)], c),
                              1e-300));
  return loss / static_cast<double>(inputs.cols());
}

void train_on_split(MlpModel& model, std::span<const Instance> split,
                    const MlpHyper& hyper, std::uint64_t seed) {
  if (split.empty())
    throw std::invalid_argument("train_on_split: empty split");
  Rng rng(seed);
  std::vector<std::size_t> order(split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  MlpGradients grads;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    seeded_shuffle(order, rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t end =
          std::min(order.size(),
                   start + static_cast<std::size_t>(hyper.batch_size));
      const Eigen::Index batch = static_cast<Eigen::Index>(end - start);
      Mat inputs(model.in_dim(), batch);
      std::vector<int> targets(static_cast<std::size_t>(batch));
      for (Eigen::Index c = 0; c < batch; ++c) {
        const Instance& inst =
            split[order[start + static_cast<std::size_t>(c)]];
        if (!inst.label)
          throw std::invalid_argument("train_on_split: unlabeled instance");
        inputs.col(c) = inst.pixels.matrix();
        targets[static_cast<std::size_t>(c)] = *inst.label;
      }
      loss_and_gradients(model, inputs, targets, grads);

      model.v_w1 = hyper.momentum * model.v_w1 - hyper.lr * grads.w1;
      model.v_b1 = hyper.momentum * model.v_b1 - hyper.lr * grads.b1;
      model.v_w2 = hyper.momentum * model.v_w2 - hyper.lr * grads.w2;
      model.v_b2 = hyper.momentum * model.v_b2 - hyper.lr * grads.b2;
      model.w1 += model.v_w1;
      model.b1 += model.v_b1;
      model.w2 += model.v_w2;
      model.b2 += model.v_b2;
    }
  }
}

void train_with_replay(MlpModel& model, ReplayBuffer& buffer,
                       std::span<const Instance> split, const MlpHyper& hyper,
                       std::uint64_t seed) {
  std::vector<Instance> combined(buffer.items.begin(), buffer.items.end());
  combined.insert(combined.end(), split.begin(), split.end());
  train_on_split(model, combined, hyper, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  buffer.items =
      sample_without_replacement(std::move(combined), buffer.capacity, rng);
}

int mlp_predict(const MlpModel& model, const Instance& instance) {
  const Eigen::VectorXd logits =
      model.forward(instance.pixels.matrix());
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  // maxCoeff returns the first maximal index, i.e. the smallest label id.
  return static_cast<int>(best);
}

}  // namespace c4v
