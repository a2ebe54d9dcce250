#include "rismp/kd.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>

#include "rismp/rng.hpp"

namespace rismp {

void KdBatch::validate() const {
  const Eigen::Index n = student_logits.rows();
  const Eigen::Index k = student_logits.cols();
  if (n < 1 || k < 2) throw ValidationError("batch needs n >= 1 samples and K >= 2 classes");
  if (labels_onehot.rows() != n || labels_onehot.cols() != k)
    throw ValidationError("label matrix shape mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double v = labels_onehot(i, j);
      if (v != 0.0 && v != 1.0) throw ValidationError("labels must be one-hot");
      sum += v;
    }
    if (sum != 1.0) throw ValidationError("labels must be one-hot");
  }
  if (!(temperature > 0)) throw ValidationError("temperature must be positive");
  if (teacher_logits.size() != alignment_weights.size())
    throw ValidationError("one alignment weight per teacher is required");
  double wsum = 0;
  for (double w : alignment_weights) {
    if (w < 0) throw ValidationError("alignment weights must be nonnegative");
    wsum += w;
  }
  if (!(wsum < 1.0))
    throw ValidationError("alignment weights must sum to less than 1");
  for (const Eigen::MatrixXd& t : teacher_logits)
    if (t.rows() != n || t.cols() != k)
      throw ValidationError("teacher logit shape mismatch");
}

Eigen::VectorXd softmax_t(const Eigen::VectorXd& z, double tau) {
  if (!(tau > 0)) throw ValidationError("temperature must be positive");
  const Eigen::VectorXd shifted = (z.array() - z.maxCoeff()) / tau;
  Eigen::VectorXd e = shifted.array().exp();
  return e / e.sum();
}

Eigen::MatrixXd softmax_t_rows(const Eigen::MatrixXd& z, double tau) {
  if (!(tau > 0)) throw ValidationError("temperature must be positive");
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    out.row(i) = softmax_t(z.row(i).transpose(), tau).transpose();
  return out;
}

namespace {

// -sum_j p_j log q_j, guarded against log(0) by the same floor everywhere.
inline double cross_entropy(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double ce = 0;
  for (Eigen::Index j = 0; j < p.size(); ++j)
    if (p[j] > 0) ce -= p[j] * std::log(std::max(q[j], 1e-300));
  return ce;
}

}  // namespace

double kd_loss(const KdBatch& batch) {
  batch.validate();
  const Eigen::Index n = batch.student_logits.rows();
  const double wsum = std::accumulate(batch.alignment_weights.begin(),
                                      batch.alignment_weights.end(), 0.0);
  const double tau = batch.temperature;

  double loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd zs = batch.student_logits.row(i).transpose();
    loss += (1.0 - wsum) *
            cross_entropy(batch.labels_onehot.row(i).transpose(), softmax_t(zs, 1.0));
    const Eigen::VectorXd qs = softmax_t(zs, tau);
    for (std::size_t t = 0; t < batch.teacher_logits.size(); ++t) {
      const Eigen::VectorXd pt =
          softmax_t(batch.teacher_logits[t].row(i).transpose(), tau);
      loss += batch.alignment_weights[t] * tau * tau * cross_entropy(pt, qs);
    }
  }
  return loss / static_cast<double>(n);
}

namespace {

Eigen::MatrixXd kd_loss_grad_impl(const KdBatch& batch, bool parallel) {
  batch.validate();
  const Eigen::Index n = batch.student_logits.rows();
  const double wsum = std::accumulate(batch.alignment_weights.begin(),
                                      batch.alignment_weights.end(), 0.0);
  const double tau = batch.temperature;
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::MatrixXd grad(n, batch.student_logits.cols());
#ifdef _OPENMP
#pragma omp parallel for if (parallel && n >= 32) schedule(static)
#endif
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd zs = batch.student_logits.row(i).transpose();
    Eigen::VectorXd g =
        (1.0 - wsum) * (softmax_t(zs, 1.0) - batch.labels_onehot.row(i).transpose());
    if (!batch.teacher_logits.empty()) {
      const Eigen::VectorXd qs = softmax_t(zs, tau);
      for (std::size_t t = 0; t < batch.teacher_logits.size(); ++t) {
        const Eigen::VectorXd pt =
            softmax_t(batch.teacher_logits[t].row(i).transpose(), tau);
        g += batch.alignment_weights[t] * tau * (qs - pt);
      }
    }
    grad.row(i) = inv_n * g.transpose();
  }
  return grad;
}

}  // namespace

Eigen::MatrixXd kd_loss_grad(const KdBatch& batch) {
  return kd_loss_grad_impl(batch, true);
}

Eigen::MatrixXd kd_loss_grad_serial(const KdBatch& batch) {
  return kd_loss_grad_impl(batch, false);
}

SandboxDataset gen_synthetic_dataset(std::uint64_t seed, int num_classes,
                                     int dims, int per_class, double spread,
                                     double train_fraction,
                                     double test_fraction) {
  if (num_classes < 2) throw ValidationError("need at least 2 classes");
  if (dims < 2) throw ValidationError("need at least 2 feature dimensions");
  if (per_class < 1) throw ValidationError("need at least 1 sample per class");
  if (spread < 0) throw ValidationError("spread must be nonnegative");
  if (train_fraction < 0 || test_fraction <= 0 ||
      train_fraction + test_fraction > 1.0)
    throw ValidationError("split fractions must satisfy 0 <= train, train + test <= 1");

  const Eigen::Index n = static_cast<Eigen::Index>(num_classes) * per_class;
  RandomStream means_rs(stream_key(seed, kTagDataset, 0));
  Eigen::MatrixXd means(num_classes, dims);
  for (int k = 0; k < num_classes; ++k)
    for (int j = 0; j < dims; ++j) means(k, j) = means_rs.normal();

  SandboxDataset ds;
  ds.num_classes = num_classes;
  ds.features.resize(n, dims);
  ds.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = static_cast<int>(i) % num_classes;
    RandomStream rs(stream_key(seed, kTagDataset, 1 + static_cast<std::uint64_t>(i)));
    for (int j = 0; j < dims; ++j)
      ds.features(i, j) = means(k, j) + spread * rs.normal();
    ds.labels[i] = k;
  }

  // Fisher-Yates with the seeded stream; the interleaved class layout plus
  // this shuffle keeps every split close to class-balanced.
  RandomStream shuffle_rs(stream_key(seed, kTagDataset, 0xF00D));
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const Eigen::Index j = static_cast<Eigen::Index>(
        shuffle_rs.uniform_index(static_cast<std::uint64_t>(i + 1)));
    ds.features.row(i).swap(ds.features.row(j));
    std::swap(ds.labels[i], ds.labels[j]);
  }

  ds.student_train_count = static_cast<Eigen::Index>(
      std::llround(train_fraction * static_cast<double>(n)));
  ds.test_start = n - static_cast<Eigen::Index>(
                          std::llround(test_fraction * static_cast<double>(n)));
  ds.pool_count = ds.test_start;
  return ds;
}

Eigen::MatrixXd SandboxModel::logits(const Eigen::MatrixXd& features) const {
  if (features.cols() < feature_count)
    throw ValidationError("model expects at least " + std::to_string(feature_count) +
                          " features");
  return (features.leftCols(feature_count) * weights.transpose()).rowwise() +
         bias.transpose();
}

double accuracy(const SandboxModel& model, const Eigen::MatrixXd& features,
                const Eigen::VectorXi& labels) {
  const Eigen::MatrixXd z = model.logits(features);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index arg = 0;
    z.row(i).maxCoeff(&arg);
    if (static_cast<int>(arg) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(z.rows());
}

TrainResult train_sandbox(const Eigen::MatrixXd& train_x,
                          const Eigen::VectorXi& train_y, int num_classes,
                          const std::vector<SandboxModel>& teachers,
                          const TrainOptions& opt, std::uint64_t seed,
                          const Eigen::MatrixXd& test_x,
                          const Eigen::VectorXi& test_y) {
  const Eigen::Index n = train_x.rows();
  if (n < 1) throw ValidationError("empty training set");
  if (teachers.size() != opt.weights.size())
    throw ValidationError("one weight per teacher is required");
  const int d = opt.feature_count > 0 ? opt.feature_count
                                      : static_cast<int>(train_x.cols());

  TrainResult res;
  res.model.feature_count = d;
  res.model.label = "student";
  RandomStream init_rs(stream_key(seed, kTagTrain));
  res.model.weights.resize(num_classes, d);
  for (Eigen::Index i = 0; i < res.model.weights.size(); ++i)
    res.model.weights.data()[i] = 0.01 * init_rs.normal();
  res.model.bias = Eigen::VectorXd::Zero(num_classes);

  KdBatch batch;
  batch.temperature = opt.temperature;
  batch.alignment_weights = opt.weights;
  batch.labels_onehot = Eigen::MatrixXd::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) batch.labels_onehot(i, train_y[i]) = 1.0;
  for (const SandboxModel& t : teachers)
    batch.teacher_logits.push_back(t.logits(train_x));

  const Eigen::MatrixXd x_used = train_x.leftCols(d);
  for (int step = 1; step <= opt.steps; ++step) {
    batch.student_logits = res.model.logits(train_x);
    const double loss = kd_loss(batch);
    if (!std::isfinite(loss))
      throw ValidationError("training diverged (non-finite loss) at step " +
                            std::to_string(step));
    const Eigen::MatrixXd g = kd_loss_grad(batch);  // n x K
    res.model.weights.noalias() -= opt.learning_rate * (g.transpose() * x_used);
    res.model.bias.noalias() -= opt.learning_rate * g.colwise().sum().transpose();
    if (step % opt.record_every == 0 || step == opt.steps)
      res.trace.push_back({static_cast<double>(step), loss,
                           accuracy(res.model, test_x, test_y)});
  }
  return res;
}

ResultTable train_trace_table(const TrainResult& result) {
  ResultTable t;
  t.columns = {"epoch", "train_loss", "test_acc"};
  for (const std::array<double, 3>& row : result.trace)
    t.rows.push_back({static_cast<std::int64_t>(row[0]), row[1], row[2]});
  return t;
}

void save_model(const SandboxModel& model, const std::string& path) {
  nlohmann::json j;
  j["label"] = model.label;
  j["feature_count"] = model.feature_count;
  j["bias"] = std::vector<double>(model.bias.data(),
                                  model.bias.data() + model.bias.size());
  nlohmann::json w = nlohmann::json::array();
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(model.weights.cols()));
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c)
      row[static_cast<std::size_t>(c)] = model.weights(r, c);
    w.push_back(std::move(row));
  }
  j["weights"] = w;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write model file: " + path);
  out << j.dump(2) << "\n";
}

SandboxModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
    SandboxModel m;
    m.label = j.at("label").get<std::string>();
    m.feature_count = j.at("feature_count").get<int>();
    const std::vector<double> bias = j.at("bias").get<std::vector<double>>();
    m.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(),
                                               static_cast<Eigen::Index>(bias.size()));
    const nlohmann::json& w = j.at("weights");
    m.weights.resize(static_cast<Eigen::Index>(w.size()),
                     static_cast<Eigen::Index>(w.at(0).size()));
    for (Eigen::Index r = 0; r < m.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < m.weights.cols(); ++c)
        m.weights(r, c) = w[r][c].get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file schema error: ") + e.what());
  }
}

void save_dataset(const SandboxDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write dataset file: " + path);
  const nlohmann::json header = {{"rows", ds.size()},
                                 {"dims", ds.features.cols()},
                                 {"num_classes", ds.num_classes},
                                 {"student_train_count", ds.student_train_count},
                                 {"pool_count", ds.pool_count},
                                 {"test_start", ds.test_start}};
  out << header.dump() << "\n";
  // Row-major float64 features, then int32 labels.
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
      const double v = ds.features(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const std::int32_t y = ds.labels[i];
    out.write(reinterpret_cast<const char*>(&y), sizeof(y));
  }
}

SandboxDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  std::string header;
  std::getline(in, header);
  SandboxDataset ds;
  Eigen::Index rows = 0, dims = 0;
  try {
    const nlohmann::json j = nlohmann::json::parse(header);
    rows = j.at("rows").get<Eigen::Index>();
    dims = j.at("dims").get<Eigen::Index>();
    ds.num_classes = j.at("num_classes").get<int>();
    ds.student_train_count = j.at("student_train_count").get<Eigen::Index>();
    ds.pool_count = j.at("pool_count").get<Eigen::Index>();
    ds.test_start = j.at("test_start").get<Eigen::Index>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset header error: ") + e.what());
  }
  ds.features.resize(rows, dims);
  ds.labels.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < dims; ++j) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      ds.features(i, j) = v;
    }
  for (Eigen::Index i = 0; i < rows; ++i) {
    std::int32_t y = 0;
    in.read(reinterpret_cast<char*>(&y), sizeof(y));
    ds.labels[i] = y;
  }
  if (!in) throw ParseError("truncated dataset file: " + path);
  return ds;
}

}  // namespace rismp
