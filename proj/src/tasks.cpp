#include "erlab/tasks.hpp"

#include <cmath>
#include <ostream>

#include "erlab/errors.hpp"
#include "erlab/rng.hpp"

namespace erlab {

namespace {

enum Stream : std::uint64_t { kTrain = 1, kVal = 2, kTest = 3, kBasis = 4, kMix = 5, kCentres = 6 };

Dataset regression(const TaskSpec& s, const Matrix& basis, const Matrix& mix, int n, std::uint64_t stream) {
  Dataset d;
  d.x = gaussian_matrix(n, s.input_dim, 1.0, s.seed, stream);
  d.y = d.x * basis.transpose() * mix + gaussian_matrix(n, s.output_dim, s.noise_std, s.seed, stream + 100);
  return d;
}

Dataset classification(const TaskSpec& s, const Matrix& centres, int n, std::uint64_t stream) {
  Dataset d;
  d.x = gaussian_matrix(n, s.input_dim, s.noise_std, s.seed, stream);
  d.y = Matrix::Zero(n, s.num_classes);
  for (int i = 0; i < n; ++i) {
    const int label = i % s.num_classes;
    d.x.row(i) += centres.row(label);
    d.y(i, label) = 1.0;
  }
  return d;
}

}  // namespace

std::string to_string(TaskKind kind) {
  return kind == TaskKind::RegressionLowRank ? "regression_lowrank" : "classify_gaussians";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "regression_lowrank") return TaskKind::RegressionLowRank;
  if (text == "classify_gaussians") return TaskKind::ClassifyGaussians;
  throw ValidationError("unknown task kind '" + std::string(text) + "'");
}

void TaskSpec::validate() const {
  if (n_train < 2) throw ValidationError("task.n_train must be >= 2");
  if (n_test < 1) throw ValidationError("task.n_test must be >= 1");
  if (n_val < 1) throw ValidationError("task.n_val must be >= 1");
  if (input_dim < 1) throw ValidationError("task.input_dim must be >= 1");
  if (!(noise_std >= 0.0)) throw ValidationError("task.noise_std must be >= 0");
  if (kind == TaskKind::RegressionLowRank) {
    if (rank < 1 || rank >= input_dim) throw ValidationError("task.rank must satisfy 1 <= rank < input_dim");
    if (output_dim < 1) throw ValidationError("task.output_dim must be >= 1");
  } else {
    if (num_classes < 2) throw ValidationError("task.num_classes must be >= 2");
    if (!(separation >= 0.0)) throw ValidationError("task.separation must be >= 0");
  }
}

TaskData make_task(const TaskSpec& spec) {
  spec.validate();
  TaskData data;
  if (spec.kind == TaskKind::RegressionLowRank) {
    const Matrix basis = gaussian_matrix(spec.rank, spec.input_dim, 1.0 / std::sqrt(spec.input_dim), spec.seed, kBasis);
    const Matrix mix = gaussian_matrix(spec.rank, spec.output_dim, 1.0, spec.seed, kMix);
    data.train = regression(spec, basis, mix, spec.n_train, kTrain);
    data.val = regression(spec, basis, mix, spec.n_val, kVal);
    data.test = regression(spec, basis, mix, spec.n_test, kTest);
  } else {
    Matrix centres = gaussian_matrix(spec.num_classes, spec.input_dim, 1.0, spec.seed, kCentres);
    for (Eigen::Index c = 0; c < centres.rows(); ++c) centres.row(c) *= spec.separation / centres.row(c).norm();
    data.train = classification(spec, centres, spec.n_train, kTrain);
    data.val = classification(spec, centres, spec.n_val, kVal);
    data.test = classification(spec, centres, spec.n_test, kTest);
  }
  return data;
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  const auto old_precision = os.precision(17);
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) os << (j ? "," : "") << "x_" << j;
  for (Eigen::Index j = 0; j < data.y.cols(); ++j) os << ",y_" << j;
  os << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) os << (j ? "," : "") << data.x(i, j);
    for (Eigen::Index j = 0; j < data.y.cols(); ++j) os << ',' << data.y(i, j);
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace erlab
