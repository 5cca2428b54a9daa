#pragma once

#include <span>
#include <vector>

#include "c4v/rng.hpp"
#include "c4v/types.hpp"

namespace c4v {

struct MlpHyper {
  double lr = 0.00365;
  double momentum = 0.9;
  int epochs = 5;
  int batch_size = 64;
};

/// One-hidden-layer ReLU network trained with softmax cross-entropy and
/// SGD momentum.
struct MlpModel {
  Mat w1;  // hidden x in
  Eigen::VectorXd b1;
  Mat w2;  // out x hidden
  Eigen::VectorXd b2;
  Mat v_w1;
  Eigen::VectorXd v_b1;
  Mat v_w2;
  Eigen::VectorXd v_b2;

  MlpModel(Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
           std::uint64_t seed);

  Eigen::Index in_dim() const { return w1.cols(); }
  Eigen::Index out_dim() const { return w2.rows(); }

  /// Logits for a batch of column-stacked inputs.
  Mat forward(const Mat& inputs) const;
};

struct MlpGradients {
  Mat w1;
  Eigen::VectorXd b1;
  Mat w2;
  Eigen::VectorXd b2;
};

/// Mean softmax cross-entropy over the batch and its analytic gradients.
double loss_and_gradients(const MlpModel& model, const Mat& inputs,
                          std::span<const int> targets, MlpGradients& grads);

double batch_loss(const MlpModel& model, const Mat& inputs,
                  std::span<const int> targets);

/// `epochs` passes of seeded-shuffled minibatches over the split.
void train_on_split(MlpModel& model, std::span<const Instance> split,
                    const MlpHyper& hyper, std::uint64_t seed);

struct ReplayBuffer {
  std::vector<Instance> items;
  std::size_t capacity = 1000;
};

/// Trains on buffer + split, then refills the buffer with a seeded uniform
/// sample (without replacement) of `capacity` items from that union.
void train_with_replay(MlpModel& model, ReplayBuffer& buffer,
                       std::span<const Instance> split, const MlpHyper& hyper,
                       std::uint64_t seed);

int mlp_predict(const MlpModel& model, const Instance& instance);

}  // namespace c4v
