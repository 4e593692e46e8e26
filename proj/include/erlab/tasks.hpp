#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "erlab/linalg.hpp"

namespace erlab {

enum class TaskKind { RegressionLowRank, ClassifyGaussians };

std::string to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

struct TaskSpec {
  TaskKind kind = TaskKind::RegressionLowRank;
  int n_train = 128;
  int n_test = 128;
  int n_val = 64;
  int input_dim = 8;
  double noise_std = 0.1;
  std::uint64_t seed = 1;
  // regression_lowrank: Y = X V^T U + noise with V of shape rank x input_dim.
  int rank = 2;
  int output_dim = 1;
  // classify_gaussians: num_classes isotropic clusters (std noise_std) whose
  // centres lie on a sphere of radius `separation`.
  int num_classes = 4;
  double separation = 3.0;

  /// Width of Y: output_dim for regression, num_classes (one-hot) otherwise.
  int target_dim() const { return kind == TaskKind::RegressionLowRank ? output_dim : num_classes; }
  void validate() const;
  bool operator==(const TaskSpec&) const = default;
};

struct Dataset {
  Matrix x;
  Matrix y;

  Eigen::Index size() const { return x.rows(); }
};

struct TaskData {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Deterministic per spec.seed; train, validation, and test draws use
/// separate generator streams.
TaskData make_task(const TaskSpec& spec);

/// Header x_0..x_{d-1},y_0..y_{o-1}; one row per sample.
void write_dataset_csv(std::ostream& os, const Dataset& data);

}  // namespace erlab
