// Distillation mathematics: temperature softmax, the weighted multi-teacher
// loss with analytic gradients, and a synthetic-data sandbox classifier
// trained by those gradients.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "rismp/errors.hpp"
#include "rismp/table.hpp"

namespace rismp {

struct KdBatch {
  Eigen::MatrixXd student_logits;               // n x K
  std::vector<Eigen::MatrixXd> teacher_logits;  // each n x K
  Eigen::MatrixXd labels_onehot;                // n x K, one-hot rows
  double temperature = 1.0;
  std::vector<double> alignment_weights;  // one per teacher, sum < 1

  void validate() const;
};

// p_i = exp(z_i / tau) / sum_j exp(z_j / tau), stabilized by max-subtraction.
Eigen::VectorXd softmax_t(const Eigen::VectorXd& z, double tau);
// Row-wise variant.
Eigen::MatrixXd softmax_t_rows(const Eigen::MatrixXd& z, double tau);

// (1 - sum w) CE(softmax(Zs), y) +
// sum_t { w_t tau^2 CE(softmax_t(Zt, tau), softmax_t(Zs, tau)) },
// averaged over the batch. CE(p, q) = -sum p log q with the teacher
// distribution as target.
double kd_loss(const KdBatch& batch);

// Exact gradient with respect to the student logits: per sample the label
// term contributes (1 - sum w)(softmax(z) - y) and teacher t contributes
// w_t tau (softmax_t(z, tau) - softmax_t(z_t, tau)), all divided by n.
Eigen::MatrixXd kd_loss_grad(const KdBatch& batch);
Eigen::MatrixXd kd_loss_grad_serial(const KdBatch& batch);

struct SandboxDataset {
  Eigen::MatrixXd features;  // n x d, deterministically shuffled
  Eigen::VectorXi labels;    // n
  int num_classes = 0;
  Eigen::Index student_train_count = 0;  // prefix used for student training
  Eigen::Index pool_count = 0;           // prefix used for teacher training
  Eigen::Index test_start = 0;           // suffix used for evaluation

  Eigen::Index size() const { return features.rows(); }
};

// Gaussian clusters with class-dependent means; deterministic given the
// seed, including the shuffle and the split boundaries.
SandboxDataset gen_synthetic_dataset(std::uint64_t seed, int num_classes,
                                     int dims, int per_class, double spread,
                                     double train_fraction = 0.02,
                                     double test_fraction = 0.80);

// Linear-softmax classifier; feature_count < d models a smaller architecture
// that only reads a feature prefix.
struct SandboxModel {
  Eigen::MatrixXd weights;  // K x feature_count
  Eigen::VectorXd bias;     // K
  int feature_count = 0;
  std::string label;

  Eigen::MatrixXd logits(const Eigen::MatrixXd& features) const;
  double parameter_bits() const {
    return 64.0 * (static_cast<double>(weights.size()) + static_cast<double>(bias.size()));
  }
};

double accuracy(const SandboxModel& model, const Eigen::MatrixXd& features,
                const Eigen::VectorXi& labels);

struct TrainOptions {
  int steps = 300;
  double learning_rate = 0.5;
  double temperature = 4.0;
  std::vector<double> weights;  // per teacher; empty = plain training
  int feature_count = 0;        // 0 = all features
  int record_every = 10;
};

struct TrainResult {
  SandboxModel model;
  // One row per recorded epoch: (epoch, train_loss, test_acc).
  std::vector<std::array<double, 3>> trace;
};

// Full-batch gradient descent driven by kd_loss_grad. Teacher logits are
// computed once on the training features and treated as constants. Throws
// ValidationError on divergence (NaN loss), naming the step.
TrainResult train_sandbox(const Eigen::MatrixXd& train_x,
                          const Eigen::VectorXi& train_y, int num_classes,
                          const std::vector<SandboxModel>& teachers,
                          const TrainOptions& opt, std::uint64_t seed,
                          const Eigen::MatrixXd& test_x,
                          const Eigen::VectorXi& test_y);

ResultTable train_trace_table(const TrainResult& result);

// Checkpoint and dataset files (JSON model, flat binary dataset with a JSON
// header line; layouts documented in the README).
void save_model(const SandboxModel& model, const std::string& path);
SandboxModel load_model(const std::string& path);
void save_dataset(const SandboxDataset& ds, const std::string& path);
SandboxDataset load_dataset(const std::string& path);

}  // namespace rismp
