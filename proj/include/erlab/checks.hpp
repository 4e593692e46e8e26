#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "erlab/thermostat.hpp"

namespace erlab {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

struct CheckOptions {
  std::uint64_t seed = 0;
  int jobs = 1;
  /// Where the sweep check writes its summary and plots; empty = nowhere.
  std::string output_dir;
  /// Criterion ids to run; empty = all.
  std::vector<int> only;
};

struct GradcheckReport {
  int configurations = 0;
  double max_rel_error = 0.0;
  std::string worst;  ///< description of the worst configuration
};

/// Reverse-mode gradients of F and of H against central differences over
/// `count` random encoder / surrogate / task configurations.
GradcheckReport gradient_oracle(std::uint64_t seed, int count = 100);

/// Base config of the acceptance sweep (classify_gaussians, n_train = 512).
RunConfig acceptance_sweep_config();
std::vector<double> acceptance_sweep_betas();

/// Each check times itself; a check passes when its property holds and it
/// finishes within its budget.
CheckResult check_gradient_oracle(const CheckOptions& opt);
CheckResult check_descent(const CheckOptions& opt);
CheckResult check_entropy_flow(const CheckOptions& opt);
CheckResult check_critical_beta(const CheckOptions& opt);
CheckResult check_degenerate_collapse(const CheckOptions& opt);
CheckResult check_generalization_bound(const CheckOptions& opt);
CheckResult check_fokker_planck(const CheckOptions& opt);
CheckResult check_langevin(const CheckOptions& opt);
CheckResult check_scaling(const CheckOptions& opt);
CheckResult check_memory(const CheckOptions& opt);
CheckResult check_sweep_regimes(const CheckOptions& opt);
CheckResult check_force_stabilization(const CheckOptions& opt);

/// Runs the selected checks in id order, calling `report` after each one.
std::vector<CheckResult> run_checks(const CheckOptions& opt,
                                    const std::function<void(const CheckResult&)>& report = {});

/// "PASS [3] entropy flow identity: ... (0.12 s / 10 s)"
std::string format_check_line(const CheckResult& r);

}  // namespace erlab
