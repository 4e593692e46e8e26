#include "erlab/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "erlab/errors.hpp"
#include "erlab/langevin.hpp"
#include "erlab/log.hpp"
#include "erlab/memory.hpp"
#include "erlab/plot.hpp"
#include "erlab/rng.hpp"
#include "erlab/scaling.hpp"

namespace erlab {
namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string sci(double v) { return fmt("%.3g", v); }

// Times `body`, which fills passed and detail.
template <class Body>
CheckResult timed(int id, std::string name, double budget, Body&& body) {
  CheckResult r;
  r.id = id;
  r.name = std::move(name);
  r.budget_seconds = budget;
  const auto start = Clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (r.passed && r.seconds > budget) {
    r.passed = false;
    r.detail += "; over the time budget";
  }
  return r;
}

// L = 1/2 th^T A th - b^T th and H = 1/2 th^T C th.
struct Quadratic {
  Matrix A;
  Vector b;
  Matrix C;

  FunctionalObjective objective() const {
    return FunctionalObjective([A = A, b = b, C = C](ad::Tape& tape, ad::Var th) {
      ObjectiveTerms t;
      t.pred_loss = ad::scale(ad::dot(th, ad::matmul(tape.constant(A), th)), 0.5) - ad::dot(tape.constant(b), th);
      t.entropy = ad::scale(ad::dot(th, ad::matmul(tape.constant(C), th)), 0.5);
      return t;
    });
  }
};

Quadratic random_quadratic(int d, std::uint64_t seed) {
  Quadratic q;
  const Matrix Qa = gaussian_matrix(d, d, 1.0, seed, 1);
  const Matrix Qc = gaussian_matrix(d, d, 1.0, seed, 2);
  q.A = Qa.transpose() * Qa / d + 0.1 * Matrix::Identity(d, d);
  q.C = Qc.transpose() * Qc / d;
  q.b = gaussian_matrix(d, 1, 1.0, seed, 3);
  return q;
}

EnergyConfig quadratic_energy(double beta) {
  EnergyConfig cfg;
  cfg.beta = beta;
  cfg.omega_kind = OmegaKind::None;
  return cfg;
}

}  // namespace

GradcheckReport gradient_oracle(std::uint64_t seed, int count) {
  if (count < 1) throw ValidationError("gradient oracle needs count >= 1");
  GradcheckReport report;
  CounterRng rng(seed, 0x6CAD);
  const SurrogateKind kinds[] = {SurrogateKind::Softmax, SurrogateKind::Variance, SurrogateKind::LogDet};
  constexpr double h = 1e-6;

  for (int i = 0; i < count; ++i) {
    TaskSpec task;
    task.kind = rng.uniform() < 0.5 ? TaskKind::RegressionLowRank : TaskKind::ClassifyGaussians;
    task.n_train = 6 + static_cast<int>(rng.next_u64() % 7);
    task.n_test = 4;
    task.n_val = 4;
    task.input_dim = 4;
    task.output_dim = 2;
    task.num_classes = 3;
    task.seed = rng.next_u64();

    EncoderSpec enc;
    enc.kind = i % 2 == 0 ? EncoderKind::Mlp : EncoderKind::Attn1;
    enc.input_dim = 4;
    enc.hidden_dims = {5};
    enc.rep_dim = 3;
    enc.output_dim = task.target_dim();
    enc.seq_len = 2;

    EnergyConfig energy_cfg;
    energy_cfg.surrogate.kind = kinds[i % 3];
    energy_cfg.beta = 0.1 + 0.9 * rng.uniform();
    energy_cfg.gamma = 0.1 * rng.uniform();
    energy_cfg.lambda = 0.1 * rng.uniform();
    energy_cfg.dec_kind = rng.uniform() < 0.5 ? DecKind::QuadraticPenalty : DecKind::None;

    const TaskData data = make_task(task);
    const ModelObjective obj(enc, data.train, task.kind);
    const ParamVector theta = init_params(enc, rng.next_u64());
    const std::uint64_t noise_seed = rng.next_u64();

    const Evaluation ev = evaluate(obj, theta, energy_cfg, noise_seed);
    const Vector analytic_F = ev.grad_energy(energy_cfg.beta);
    const Vector fd_F = finite_diff_grad([&](const Vector& th) { return energy(obj, th, energy_cfg, noise_seed); },
                                         theta, h);
    const Vector fd_H = finite_diff_grad(
        [&](const Vector& th) { return evaluate(obj, th, energy_cfg, noise_seed).entropy; }, theta, h);

    const double err = std::max(relative_error(analytic_F, fd_F, 1e-8), relative_error(ev.grad_entropy, fd_H, 1e-8));
    ++report.configurations;
    if (err >= report.max_rel_error) {
      report.max_rel_error = err;
      report.worst = "config " + std::to_string(i) + ": " + to_string(enc.kind) + "/" +
                     to_string(energy_cfg.surrogate.kind) + "/" + to_string(task.kind);
    }
  }
  return report;
}

CheckResult check_gradient_oracle(const CheckOptions& opt) {
  return timed(1, "gradient oracle", 30.0, [&](CheckResult& r) {
    const GradcheckReport g = gradient_oracle(hash_seed({opt.seed, 1}), 100);
    r.passed = g.max_rel_error <= 1e-5;
    r.detail = std::to_string(g.configurations) + " configs, max rel err " + sci(g.max_rel_error) + " (worst " +
               g.worst + ")";
  });
}

CheckResult check_descent(const CheckOptions& opt) {
  return timed(2, "descent and stationarity", 10.0, [&](CheckResult& r) {
    int failures = 0;
    double worst_margin = -1e300;
    for (int s = 0; s < 50; ++s) {
      const std::uint64_t seed = hash_seed({opt.seed, 2, static_cast<std::uint64_t>(s)});
      const int d = 5;
      const Quadratic q = random_quadratic(d, seed);
      const double beta = 0.5;
      const Matrix hess = q.A + beta * q.C;
      const double L = Eigen::SelfAdjointEigenSolver<Matrix>(hess).eigenvalues().maxCoeff();
      const double f_star = -0.5 * q.b.dot(hess.llt().solve(q.b));
      const double eta = 0.9 / (2.0 * L);
      const Vector theta0 = gaussian_matrix(d, 1, 2.0, seed, 4);
      const Simulation sim = simulate(q.objective(), theta0, quadratic_energy(beta), eta, 200, seed);
      const DescentReport rep = descent_check(sim.trajectory, eta, L, f_star);
      if (!rep.passed || !rep.bound_holds) ++failures;
      worst_margin = std::max(worst_margin, rep.min_grad_sq / rep.bound);
    }
    r.passed = failures == 0;
    r.detail = "50 runs, " + std::to_string(failures) + " violations, max min|gradF|^2 / bound = " + sci(worst_margin);
  });
}

CheckResult check_entropy_flow(const CheckOptions& opt) {
  return timed(3, "entropy flow identity", 10.0, [&](CheckResult& r) {
    const double etas[] = {0.04, 0.02, 0.01, 0.005};
    const double horizon = 2.0;
    std::vector<Quadratic> problems;
    problems.push_back(random_quadratic(4, hash_seed({opt.seed, 3, 0})));
    problems.push_back(random_quadratic(6, hash_seed({opt.seed, 3, 1})));
    Quadratic iso;  // L = 1/2 |th|^2 - b.th, H = 1/2 |th|^2
    iso.A = Matrix::Identity(2, 2);
    iso.C = Matrix::Identity(2, 2);
    iso.b = Vector(2);
    iso.b << 2.0, -1.0;
    problems.push_back(iso);

    bool ok = true;
    std::ostringstream detail;
    detail << "ratios";
    for (std::size_t p = 0; p < problems.size(); ++p) {
      const Vector theta0 = Vector::Ones(problems[p].b.size());
      std::vector<double> residual;
      for (double eta : etas) {
        const int steps = static_cast<int>(std::lround(horizon / eta));
        const Simulation sim = simulate(problems[p].objective(), theta0, quadratic_energy(0.3), eta, steps, 0);
        residual.push_back(entropy_flow_check(sim.trajectory, eta));
      }
      detail << (p ? "; " : " ");
      for (std::size_t k = 0; k + 1 < residual.size(); ++k) {
        const double ratio = residual[k] / residual[k + 1];
        ok = ok && ratio >= 3.5 && ratio <= 4.5;
        detail << (k ? "," : "") << fmt("%.3f", ratio);
      }
    }
    r.passed = ok;
    r.detail = detail.str();
  });
}

CheckResult check_critical_beta(const CheckOptions&) {
  return timed(4, "critical beta", 5.0, [&](CheckResult& r) {
    Quadratic toy;
    toy.A = Matrix::Identity(2, 2);
    toy.C = Matrix::Identity(2, 2);
    toy.b = Vector(2);
    toy.b << 2.0, -1.0;
    Vector theta0(2);
    theta0 << 1.0, 0.5;
    const double eta = 0.01;
    const BetaSchedule at_critical = [](int, const Evaluation& ev) { return critical_beta(ev).value_or(0.0); };
    const Simulation sim = simulate(toy.objective(), theta0, quadratic_energy(0.0), eta, 500, 0, at_critical);
    double worst = 0.0;
    for (std::size_t t = 1; t < sim.trajectory.size(); ++t)
      worst = std::max(worst, std::abs(sim.trajectory[t].H - sim.trajectory[t - 1].H));
    r.passed = worst <= 10.0 * eta * eta;
    r.detail = "max |dH| = " + sci(worst) + " vs 10 eta^2 = " + sci(10.0 * eta * eta);
  });
}

CheckResult check_degenerate_collapse(const CheckOptions& opt) {
  return timed(5, "degenerate collapse", 5.0, [&](CheckResult& r) {
    bool bitwise = true;
    double const_gap = 0.0;
    for (int k = 0; k < 4; ++k) {
      TaskSpec task;
      task.kind = k % 2 ? TaskKind::ClassifyGaussians : TaskKind::RegressionLowRank;
      task.n_train = 32;
      task.seed = hash_seed({opt.seed, 5, static_cast<std::uint64_t>(k)});
      EncoderSpec enc;
      enc.kind = k < 2 ? EncoderKind::Mlp : EncoderKind::Attn1;
      enc.output_dim = task.target_dim();
      const TaskData data = make_task(task);
      const ModelObjective model(enc, data.train, task.kind);
      const ParamVector theta0 = init_params(enc, task.seed);

      EnergyConfig cfg;
      cfg.surrogate.kind = SurrogateKind::LogDet;
      cfg.beta = 0.0;
      const ParamVector gd = plain_gd(model, theta0, 0.05, 40);
      const Simulation zero_beta = simulate(model, theta0, cfg, 0.05, 40, task.seed);
      bitwise = bitwise && (zero_beta.theta.array() == gd.array()).all();

      const FunctionalObjective constant_h([&model](ad::Tape& tape, ad::Var th) {
        ObjectiveTerms t = model.build(tape, th);
        t.representation = {};
        t.entropy = tape.scalar_constant(3.0);
        return t;
      });
      cfg.beta = 0.7;
      const Simulation flat = simulate(constant_h, theta0, cfg, 0.05, 40, task.seed);
      const_gap = std::max(const_gap, (flat.theta - gd).cwiseAbs().maxCoeff());
    }
    r.passed = bitwise && const_gap <= 1e-12;
    r.detail = std::string("beta=0 bitwise ") + (bitwise ? "equal" : "DIFFERENT") +
               ", constant-H max |dtheta| = " + sci(const_gap);
  });
}

CheckResult check_generalization_bound(const CheckOptions& opt) {
  return timed(6, "generalization bound", 5.0, [&](CheckResult& r) {
    CounterRng rng(hash_seed({opt.seed, 6}));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      GenBoundConfig cfg;
      const double h = -5.0 + 15.0 * rng.uniform();
      cfg.A = 0.01 + 5.0 * rng.uniform();
      cfg.B_const = 3.0 * rng.uniform();
      cfg.sigma_subg = 0.1 + 3.0 * rng.uniform();
      cfg.n = 1 + static_cast<int>(rng.next_u64() % 10000);
      const double inside = cfg.A * h + cfg.B_const;
      const double expected = inside > 0.0 ? std::sqrt(2.0 * cfg.sigma_subg * cfg.sigma_subg * inside / cfg.n) : 0.0;
      const GenBound got = gen_bound(h, cfg);
      const double err = std::abs(got.value - expected) / std::max(expected, 1e-300);
      worst = std::max(worst, expected == 0.0 ? std::abs(got.value) : err);
      if (got.clamped != (inside < 0.0)) worst = std::max(worst, 1.0);
    }
    double alpha_err = 0.0;
    for (double alpha : {0.3, 1.0, 1.7}) {
      std::vector<std::pair<double, double>> samples;
      for (double n : {100.0, 200.0, 400.0, 800.0, 1600.0}) samples.emplace_back(n, 2.5 * std::pow(n, alpha));
      const EntropyScaling es = entropy_scaling_diag(samples);
      alpha_err = std::max(alpha_err, std::abs(es.alpha_hat - alpha));
      if (es.non_vanishing_gap != (alpha >= 1.0)) alpha_err = 1.0;
      alpha_err = std::max(alpha_err, std::abs(es.gap_exponent - (alpha - 1.0) / 2.0));
    }
    r.passed = worst <= 1e-12 && alpha_err <= 1e-12;
    r.detail = "max rel err " + sci(worst) + " over 1000 tuples, planted alpha err " + sci(alpha_err);
  });
}

CheckResult check_fokker_planck(const CheckOptions&) {
  return timed(7, "Fokker-Planck", 60.0, [&](CheckResult& r) {
    struct Case {
      Potential pot;
      double lo, hi;
      std::vector<DensityGrid> starts;
    };
    const int m = 400;
    std::vector<Case> cases;
    {
      Case c{quadratic_potential(), -8.0, 8.0, {}};
      c.starts = {gaussian_density(c.lo, c.hi, m, 2.0, 0.5), gaussian_density(c.lo, c.hi, m, -1.0, 1.0),
                  uniform_density(c.lo, c.hi, m), bimodal_density(c.lo, c.hi, m, -2.0, 2.0, 0.5),
                  gaussian_density(c.lo, c.hi, m, 0.0, 0.3)};
      cases.push_back(std::move(c));
    }
    {
      Case c{double_well_potential(), -3.0, 3.0, {}};
      c.starts = {gaussian_density(c.lo, c.hi, m, 1.5, 0.3), gaussian_density(c.lo, c.hi, m, -0.5, 0.6),
                  uniform_density(c.lo, c.hi, m), bimodal_density(c.lo, c.hi, m, -1.5, 1.5, 0.3),
                  gaussian_density(c.lo, c.hi, m, 0.0, 0.2)};
      cases.push_back(std::move(c));
    }
    const double beta = 1.0;
    double mass_drift = 0.0;
    double uphill = 0.0;
    double slack = 0.0;
    int dissipation_failures = 0;
    for (const auto& c : cases) {
      const FokkerPlanck1D solver(c.lo, c.hi, m, c.pot, beta);
      const double dt = 0.9 * solver.stability_limit();
      for (const auto& start : c.starts) {
        DensityGrid g = start;
        double prev = free_energy(g, c.pot, beta);
        double run_uphill = 0.0;
        for (int s = 0; s < 10000; ++s) {
          solver.step(g, dt);
          const double e = free_energy(g, c.pot, beta);
          run_uphill = std::max(run_uphill, e - prev);
          prev = e;
          if (g.rho.minCoeff() < 0.0) throw NumericalError("negative density after clipping");
        }
        mass_drift = std::max(mass_drift, std::abs(g.mass() - 1.0));
        slack = 1e-8 + 1e-4 * dt;
        if (run_uphill > slack) ++dissipation_failures;
        uphill = std::max(uphill, run_uphill);
      }
    }
    const Potential quad = quadratic_potential();
    const EntropyProduction ep = entropy_production_terms(gibbs_density(-8.0, 8.0, m, quad, beta), quad, beta);
    const bool ep_ok = std::abs(ep.drift + 1.0) <= 1e-2 && std::abs(ep.diffusion - 1.0) <= 1e-2;
    r.passed = mass_drift <= 1e-9 && dissipation_failures == 0 && ep_ok;
    r.detail = "mass drift " + sci(mass_drift) + ", max uphill " + sci(uphill) + " (" +
               std::to_string(dissipation_failures) + "/10 runs over slack), drift " + fmt("%.6f", ep.drift) +
               ", diffusion " + fmt("%.6f", ep.diffusion);
  });
}

CheckResult check_langevin(const CheckOptions& opt) {
  return timed(8, "Langevin stationarity", 60.0, [&](CheckResult& r) {
    const double v = stationary_variance_check(0.5, 1e-3, 10000, 100000, hash_seed({opt.seed, 8}));
    r.passed = std::abs(v - 0.5) <= 0.01;
    r.detail = "variance " + fmt("%.5f", v) + " (target 0.5 +- 0.01)";
  });
}

CheckResult check_scaling(const CheckOptions& opt) {
  return timed(9, "scaling law", 10.0, [&](CheckResult& r) {
    const ScalingModel model{1.0, 1.0, 1.0, 0.5, 0.5, 0.0};
    const PowerLawFit exact = fit_power_law(scaling_samples(model, {4.0, 16.0, 64.0, 256.0}));
    const double exact_err = std::abs(exact.kappa_hat - model.kappa());

    const auto scales = log_spaced(4.0, 256.0, 20);
    double noisy_err = 0.0;
    for (int s = 0; s < 100; ++s) {
      const auto samples = scaling_samples(model, scales, 0.01, hash_seed({opt.seed, 9, static_cast<std::uint64_t>(s)}));
      noisy_err = std::max(noisy_err, std::abs(fit_power_law(samples).kappa_hat - model.kappa()));
    }

    bool flips = true;
    for (double alpha : {0.2, 0.4, 0.5, 0.6, 0.9}) {
      ScalingModel m = model;
      m.alpha = alpha;
      int sign_seen = 0;
      bool constant = true;
      for (std::size_t i = 0; i + 1 < scales.size(); ++i) {
        const double d = excess_loss(scales[i + 1], m) - excess_loss(scales[i], m);
        const int sg = d < 0.0 ? -1 : (d > 0.0 ? 1 : 0);
        if (sg != 0) constant = false;
        if (sign_seen == 0) sign_seen = sg;
        if (sg != sign_seen) flips = false;
      }
      if (alpha > m.gamma_exp) flips = flips && sign_seen == -1;
      if (alpha < m.gamma_exp) flips = flips && sign_seen == 1;
      if (alpha == m.gamma_exp) flips = flips && constant;
    }
    r.passed = exact_err <= 1e-10 && noisy_err <= 0.02 && flips;
    r.detail = "noiseless err " + sci(exact_err) + ", 1% noise max err " + sci(noisy_err) + " over 100 seeds, " +
               (flips ? "monotonicity flips at alpha = gamma" : "monotonicity check FAILED");
  });
}

CheckResult check_memory(const CheckOptions& opt) {
  return timed(10, "associative memory", 60.0, [&](CheckResult& r) {
    MemorySweepConfig cfg;
    cfg.N = 200;
    cfg.seeds = 50;
    cfg.base_seed = hash_seed({opt.seed, 10});
    cfg.load_ratios = {0.05, 0.3};
    const auto rows = memory_sweep(cfg, opt.jobs);
    int retrieved = 0, low_n = 0, transient = 0, high_n = 0;
    for (const auto& row : rows) {
      if (row.load_ratio == 0.05) {
        ++low_n;
        retrieved += row.m_final >= 0.95;
      } else {
        ++high_n;
        transient += row.m_max >= 0.8 && row.m_final < 0.3;
      }
    }
    r.passed = retrieved >= 0.95 * low_n && transient > 0;
    r.detail = "P/N=0.05 retrieval " + std::to_string(retrieved) + "/" + std::to_string(low_n) +
               ", P/N=0.3 transient recovery " + std::to_string(transient) + "/" + std::to_string(high_n);
  });
}

RunConfig acceptance_sweep_config() {
  RunConfig cfg;
  cfg.task.kind = TaskKind::ClassifyGaussians;
  cfg.task.n_train = 512;
  cfg.task.n_test = 512;
  cfg.task.n_val = 128;
  cfg.task.input_dim = 8;
  cfg.task.num_classes = 4;
  cfg.task.noise_std = 1.0;
  cfg.task.separation = 2.0;
  cfg.encoder.kind = EncoderKind::Mlp;
  cfg.encoder.input_dim = 8;
  cfg.encoder.hidden_dims = {16};
  cfg.encoder.rep_dim = 4;
  cfg.encoder.output_dim = 4;
  cfg.eta = 0.05;
  cfg.steps = 200;
  return cfg;
}

std::vector<double> acceptance_sweep_betas() { return {0.01, 0.05, 0.1, 0.5, 1.0}; }

CheckResult check_sweep_regimes(const CheckOptions& opt) {
  return timed(11, "sweep regimes", 600.0, [&](CheckResult& r) {
    RunConfig base = acceptance_sweep_config();
    base.seed = hash_seed({opt.seed, 11});
    const auto betas = acceptance_sweep_betas();
    const std::vector<SurrogateKind> surrogates{SurrogateKind::Softmax, SurrogateKind::Variance, SurrogateKind::LogDet};
    const std::vector<ThermostatMode> modes{ThermostatMode::Fixed, ThermostatMode::Thermostat,
                                            ThermostatMode::RlThermostat};
    const SweepResult res = sweep(base, betas, surrogates, modes, opt.jobs);

    int errors = 0;
    for (const auto& cell : res.cells) errors += !cell.result.has_value();

    auto row_of = [&](double beta, SurrogateKind s, ThermostatMode m) -> const SummaryRow& {
      for (const auto& row : res.summary)
        if (row.beta == beta && row.surrogate == s && row.mode == m) return row;
      throw ValidationError("sweep summary is missing a cell");
    };
    int a_fail = 0;
    double min_ratio = 1e300;
    for (double beta : betas)
      for (auto m : modes) {
        const double lg = row_of(beta, SurrogateKind::LogDet, m).mean_G;
        const double sm = row_of(beta, SurrogateKind::Softmax, m).mean_G;
        if (!(lg > sm)) ++a_fail;
        min_ratio = std::min(min_ratio, lg / sm);
      }

    int b_fail = 0;
    for (const auto& cell : res.cells) {
      if (cell.mode == ThermostatMode::Fixed || !cell.result) continue;
      const auto& traj = cell.result->trajectory;
      const auto [lo, hi] = std::minmax_element(traj.begin(), traj.end(), [](const StepRecord& x, const StepRecord& y) {
        return x.beta_t < y.beta_t;
      });
      const bool in_bounds = lo->beta_t >= cell.config.thermo.beta_min && hi->beta_t <= cell.config.thermo.beta_max;
      if (!in_bounds || !(hi->beta_t > lo->beta_t)) ++b_fail;
    }

    int c_fail = 0;
    for (const auto& row : res.summary)
      if (row.surrogate == SurrogateKind::LogDet && row.beta > 0.0 && !row.effective) ++c_fail;

    if (!opt.output_dir.empty()) {
      std::filesystem::create_directories(opt.output_dir);
      std::ofstream csv(opt.output_dir + "/summary.csv");
      write_summary_csv(csv, res.summary);
      const std::pair<const char*, double SummaryRow::*> metrics[] = {{"test_loss", &SummaryRow::final_test_loss},
                                                                      {"gen_gap", &SummaryRow::gen_gap},
                                                                      {"G", &SummaryRow::mean_G},
                                                                      {"beta_t", &SummaryRow::mean_beta_t},
                                                                      {"reward", &SummaryRow::mean_reward}};
      for (const auto& [name, field] : metrics) {
        Figure fig;
        fig.title = std::string(name) + " vs beta";
        fig.x_label = "beta";
        fig.y_label = name;
        fig.log_x = true;
        for (auto s : surrogates)
          for (auto m : modes) {
            Series series{to_string(s) + "/" + to_string(m), {}, {}};
            for (double beta : betas) {
              series.x.push_back(beta);
              series.y.push_back(row_of(beta, s, m).*field);
            }
            fig.series.push_back(std::move(series));
          }
        emit_plot(fig, opt.output_dir + "/" + name + ".svg");
      }
    }

    r.passed = errors == 0 && a_fail == 0 && b_fail == 0 && c_fail == 0;
    r.detail = std::to_string(res.cells.size()) + " runs (" + std::to_string(errors) + " failed); (a) " +
               std::to_string(15 - a_fail) + "/15 logdet G > softmax G, min ratio " + fmt("%.3g", min_ratio) +
               "; (b) " + std::to_string(b_fail) + " thermostat traces flat or out of bounds; (c) " +
               std::to_string(c_fail) + " ineffective logdet runs";
  });
}

CheckResult check_force_stabilization(const CheckOptions&) {
  return timed(12, "force stabilization", 5.0, [&](CheckResult& r) {
    Quadratic q;  // L = 1/2 |th - b|^2 up to a constant, H = 1/2 |th|^2 (m_H = 1)
    q.A = Matrix::Identity(2, 2);
    q.C = Matrix::Identity(2, 2);
    q.b = Vector(2);
    q.b << 2.0, -1.0;
    Vector theta0(2);
    theta0 << -1.0, 3.0;
    bool ok = true;
    std::ostringstream detail;
    for (double beta : {0.1, 0.5, 1.0}) {
      const Simulation sim = simulate(q.objective(), theta0, quadratic_energy(beta), 0.05, 400, 0);
      const ForceBand band = force_stabilization_probe(sim.trajectory);
      const double g2_star = q.b.squaredNorm() / ((1.0 + beta) * (1.0 + beta));
      const bool near = std::abs(band.band - g2_star) <= 1e-3 * g2_star;
      ok = ok && band.entered_band && near;
      detail << (beta == 0.1 ? "" : "; ") << "beta " << beta << ": entry t="
             << (band.entry_time ? std::to_string(*band.entry_time) : std::string("none")) << ", band "
             << fmt("%.6f", band.band) << " vs G*^2 " << fmt("%.6f", g2_star);
    }
    r.passed = ok;
    r.detail = detail.str();
  });
}

std::vector<CheckResult> run_checks(const CheckOptions& opt, const std::function<void(const CheckResult&)>& report) {
  using Check = CheckResult (*)(const CheckOptions&);
  const Check all[] = {check_gradient_oracle, check_descent,   check_entropy_flow,         check_critical_beta,
                       check_degenerate_collapse, check_generalization_bound, check_fokker_planck, check_langevin,
                       check_scaling,          check_memory,    check_sweep_regimes,        check_force_stabilization};
  for (int id : opt.only)
    if (id < 1 || id > 12) throw ValidationError("check ids run from 1 to 12, got " + std::to_string(id));
  std::vector<CheckResult> out;
  for (int id = 1; id <= 12; ++id) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
    out.push_back(all[id - 1](opt));
    if (report) report(out.back());
  }
  return out;
}

std::string format_check_line(const CheckResult& r) {
  char timing[64];
  std::snprintf(timing, sizeof timing, " (%.2f s / %.0f s)", r.seconds, r.budget_seconds);
  return std::string(r.passed ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name + ": " + r.detail +
         timing;
}

}  // namespace erlab
