#include "erlab/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "erlab/checks.hpp"
#include "erlab/config.hpp"
#include "erlab/csv.hpp"
#include "erlab/errors.hpp"
#include "erlab/plot.hpp"
#include "erlab/rng.hpp"

namespace erlab {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string output_dir;
  std::string tag;
  int jobs = 1;
  std::vector<double> betas;
  std::vector<std::string> surrogates;
  std::vector<std::string> modes;
  std::vector<int> only;
  int count = 100;
};

std::string timestamp_tag() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

template <class Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  writer(out);
}

std::string cell_file(const SweepCell& cell) {
  return "traj_beta" + format_double(cell.beta) + "_" + to_string(cell.surrogate) + "_" + to_string(cell.mode) + ".csv";
}

Figure trajectory_figure(const Trajectory& traj, const std::string& title) {
  Figure fig;
  fig.title = title;
  fig.x_label = "step";
  fig.y_label = "value";
  Series loss{"L_pred", {}, {}}, force{"G", {}, {}}, beta{"beta_t", {}, {}};
  for (const auto& r : traj) {
    loss.x.push_back(r.t);
    loss.y.push_back(r.L_pred);
    force.x.push_back(r.t);
    force.y.push_back(r.G);
    beta.x.push_back(r.t);
    beta.y.push_back(r.beta_t);
  }
  fig.series = {loss, force, beta};
  return fig;
}

int run_train(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out) {
  const RunResult res = run_er_hclm(cfg.run);
  write_csv(dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, res.trajectory); });
  SweepCell cell;
  cell.beta = cfg.run.thermo.beta0;
  cell.surrogate = cfg.run.energy.surrogate.kind;
  cell.mode = cfg.run.thermo.mode;
  cell.config = cfg.run;
  cell.result = res;
  write_csv(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, {summarize(cell)}); });
  if (cfg.plots) emit_plot(trajectory_figure(res.trajectory, "training trajectory"), (dir / "trajectory.svg").string());
  out << "final train loss " << format_double(res.final_train_loss) << ", test loss "
      << format_double(res.final_test_loss) << ", gen gap " << format_double(res.final_gen_gap) << "\n";
  return 0;
}

int run_sweep(const ExperimentConfig& cfg, const fs::path& dir, int jobs, std::ostream& out, std::ostream& err) {
  const SweepResult res = sweep(cfg.run, cfg.sweep.betas, cfg.sweep.surrogates, cfg.sweep.modes, jobs);
  int failed = 0;
  std::ostringstream errors;
  for (const auto& cell : res.cells) {
    if (cell.result) {
      write_csv(dir / cell_file(cell), [&](std::ostream& os) { write_trajectory_csv(os, cell.result->trajectory); });
    } else {
      ++failed;
      errors << cell_file(cell) << ": " << cell.error << "\n";
    }
  }
  write_csv(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, res.summary); });
  if (failed) write_file(dir / "errors.txt", errors.str());

  if (cfg.plots) {
    const std::pair<const char*, double SummaryRow::*> metrics[] = {{"test_loss", &SummaryRow::final_test_loss},
                                                                    {"gen_gap", &SummaryRow::gen_gap},
                                                                    {"G", &SummaryRow::mean_G},
                                                                    {"beta_t", &SummaryRow::mean_beta_t},
                                                                    {"reward", &SummaryRow::mean_reward}};
    const bool log_x = std::all_of(cfg.sweep.betas.begin(), cfg.sweep.betas.end(), [](double b) { return b > 0.0; });
    for (const auto& [name, field] : metrics) {
      Figure fig;
      fig.title = std::string(name) + " vs beta";
      fig.x_label = "beta";
      fig.y_label = name;
      fig.log_x = log_x;
      for (auto s : cfg.sweep.surrogates)
        for (auto m : cfg.sweep.modes) {
          Series series{to_string(s) + "/" + to_string(m), {}, {}};
          for (const auto& row : res.summary)
            if (row.surrogate == s && row.mode == m) {
              series.x.push_back(row.beta);
              series.y.push_back(row.*field);
            }
          fig.series.push_back(std::move(series));
        }
      emit_plot(fig, (dir / (std::string(name) + ".svg")).string());
    }
  }
  out << res.cells.size() << " runs, " << failed << " failed\n";
  if (failed) {
    err << errors.str();
    return 2;
  }
  return 0;
}

int run_langevin_cmd(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out) {
  const LangevinSettings& L = cfg.langevin;
  const Potential pot = L.potential.make(L.dim);
  ParticleEnsemble ens;
  ens.beta = L.beta;
  ens.positions = Matrix::Constant(L.particles, L.dim, L.init_mean);
  if (L.init_std > 0.0) ens.positions += gaussian_matrix(L.particles, L.dim, L.init_std, L.seed, 0x1A17);

  std::vector<DensityRecord> records;
  std::ostringstream moments;
  moments << "t,mean,variance\n";
  auto record = [&] {
    const auto x = ens.positions.array();
    const double mean = x.mean();
    const double var = (x - mean).square().sum() / std::max<double>(1.0, static_cast<double>(x.size()) - 1.0);
    moments << format_double(ens.time) << ',' << format_double(mean) << ',' << format_double(var) << '\n';
    if (L.dim == 1) records.push_back(describe(histogram_density(ens, L.lo, L.hi, L.cells), pot, L.beta, ens.time));
  };
  record();
  for (int s = 1; s <= L.steps; ++s) {
    langevin_advance(ens, pot, L.dt, L.seed);
    if (s % L.record_every == 0 || s == L.steps) record();
  }
  write_file(dir / "moments.csv", moments.str());
  if (L.dim == 1) {
    write_csv(dir / "records.csv", [&](std::ostream& os) { write_density_records_csv(os, records); });
    write_csv(dir / "density_final.csv", [&](std::ostream& os) {
      write_density_snapshot_csv(os, histogram_density(ens, L.lo, L.hi, L.cells));
    });
    if (cfg.plots) {
      Figure fig{"particle free energy", "t", "free energy", false, {{"free_energy", {}, {}}}};
      for (const auto& r : records) {
        fig.series[0].x.push_back(r.t);
        fig.series[0].y.push_back(r.free_energy);
      }
      emit_plot(fig, (dir / "free_energy.svg").string());
    }
  }
  const auto x = ens.positions.array();
  out << "final variance " << format_double((x - x.mean()).square().sum() / std::max<double>(1.0, x.size() - 1.0))
      << " (stationary value for the quadratic: beta / k = " << format_double(L.beta / L.potential.stiffness) << ")\n";
  return 0;
}

int run_fokker_planck_cmd(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out) {
  const FokkerPlanckSettings& F = cfg.fokker_planck;
  const Potential pot = F.potential.make(1);
  const DensityGrid start = F.initial_density(pot);
  const FokkerPlanck1D solver(F.lo, F.hi, F.cells, pot, F.beta);
  const double dt = F.dt > 0.0 ? F.dt : 0.9 * solver.stability_limit();
  const FokkerPlanckRun run = run_fokker_planck(start, pot, F.beta, dt, F.steps, F.record_every);

  write_csv(dir / "records.csv", [&](std::ostream& os) { write_density_records_csv(os, run.records); });
  write_csv(dir / "density_initial.csv", [&](std::ostream& os) { write_density_snapshot_csv(os, run.snapshots.front()); });
  write_csv(dir / "density_final.csv", [&](std::ostream& os) { write_density_snapshot_csv(os, run.snapshots.back()); });
  // Snapshots are record_every steps apart; scale the per-step slack accordingly.
  const DissipationReport diss = dissipation_check(run.snapshots, pot, F.beta, dt * F.record_every);
  if (cfg.plots) {
    Figure energy{"free energy", "t", "free energy", false, {{"free_energy", {}, {}}}};
    for (const auto& r : run.records) {
      energy.series[0].x.push_back(r.t);
      energy.series[0].y.push_back(r.free_energy);
    }
    emit_plot(energy, (dir / "free_energy.svg").string());
    Figure density{"density", "theta", "rho", false, {{"initial", {}, {}}, {"final", {}, {}}}};
    for (int k = 0; k < 2; ++k) {
      const DensityGrid& g = k == 0 ? run.snapshots.front() : run.snapshots.back();
      for (Eigen::Index i = 0; i < g.cells(); ++i) {
        density.series[k].x.push_back(g.center(i));
        density.series[k].y.push_back(g.rho(i));
      }
    }
    emit_plot(density, (dir / "density.svg").string());
  }
  out << "dt " << format_double(dt) << " (limit " << format_double(solver.stability_limit()) << "), final mass "
      << format_double(run.records.back().mass) << ", max free-energy rise " << format_double(diss.max_uphill)
      << (diss.passed ? " (within slack)" : " (EXCEEDS slack)") << "\n";
  return 0;
}

int run_scaling_cmd(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out) {
  const ScalingSettings& S = cfg.scaling;
  const auto samples = scaling_samples(S.model, S.scales, S.noise_rel, S.seed);
  const auto rows = scaling_table(samples);
  write_csv(dir / "scaling.csv", [&](std::ostream& os) { write_scaling_csv(os, rows); });
  const PowerLawFit fit = fit_power_law(samples);
  out << "kappa_hat " << format_double(fit.kappa_hat) << " (model kappa " << format_double(S.model.kappa())
      << "), r^2 " << format_double(fit.r_squared) << "\n";
  if (cfg.plots) {
    Figure fig{"excess loss vs scale", "S", "excess", true, {{"excess", {}, {}}}};
    for (const auto& [s, e] : samples) {
      fig.series[0].x.push_back(s);
      fig.series[0].y.push_back(e);
    }
    emit_plot(fig, (dir / "scaling.svg").string());
  }

  if (!S.trajectories.empty()) {
    std::ostringstream csv;
    csv << "S,mean_I,mean_D,ratio,defined\n";
    for (const auto& t : S.trajectories) {
      std::ifstream in(t.path);
      if (!in) throw ValidationError("cannot open trajectory '" + t.path + "'");
      const RatioTrace rt = empirical_ratio_trace(read_trajectory_csv(in));
      csv << format_double(t.S) << ',' << format_double(rt.mean_I) << ',' << format_double(rt.mean_D) << ','
          << format_double(rt.ratio) << ',' << (rt.defined ? "true" : "false") << '\n';
    }
    write_file(dir / "ratio_trace.csv", csv.str());
    out << S.trajectories.size() << " trajectories summarized in ratio_trace.csv\n";
  }
  return 0;
}

int run_memory_cmd(const ExperimentConfig& cfg, const fs::path& dir, int jobs, std::ostream& out) {
  const auto rows = memory_sweep(cfg.memory, jobs);
  write_csv(dir / "memory.csv", [&](std::ostream& os) { write_memory_csv(os, rows); });
  Series retrieval{"m_final >= 0.95", {}, {}}, transient{"transient", {}, {}}, emem{"mean E_mem", {}, {}};
  for (double ratio : cfg.memory.load_ratios) {
    int n = 0, ret = 0, tr = 0;
    double e = 0.0;
    for (const auto& r : rows) {
      if (r.load_ratio != ratio) continue;
      ++n;
      ret += r.m_final >= 0.95;
      tr += r.recoverable && r.m_final < 0.3;
      e += r.E_mem;
    }
    retrieval.x.push_back(ratio);
    retrieval.y.push_back(static_cast<double>(ret) / n);
    transient.x.push_back(ratio);
    transient.y.push_back(static_cast<double>(tr) / n);
    emem.x.push_back(ratio);
    emem.y.push_back(e / n);
    out << "P/N " << format_double(ratio) << ": retrieval " << ret << "/" << n << ", transient " << tr << "/" << n
        << "\n";
  }
  if (cfg.plots)
    emit_plot({"memory recovery vs load", "P/N", "rate", false, {retrieval, transient, emem}},
              (dir / "memory.svg").string());
  return 0;
}

int run_gradcheck(const Options& o, const fs::path& dir, std::ostream& out) {
  const GradcheckReport g = gradient_oracle(o.seed, o.count);
  write_file(dir / "gradcheck.txt", "configurations " + std::to_string(g.configurations) + "\nmax_rel_error " +
                                        format_double(g.max_rel_error) + "\nworst " + g.worst + "\n");
  out << "max relative error " << format_double(g.max_rel_error) << " over " << g.configurations
      << " configurations (worst " << g.worst << ")\n";
  return g.max_rel_error <= 1e-5 ? 0 : 2;
}

int run_checks_cmd(const Options& o, const fs::path& dir, std::ostream& out) {
  CheckOptions opt;
  opt.seed = o.seed;
  opt.jobs = o.jobs;
  opt.only = o.only;
  opt.output_dir = (dir / "sweep").string();
  std::ostringstream report;
  const auto results = run_checks(opt, [&](const CheckResult& r) {
    out << format_check_line(r) << std::endl;
    report << format_check_line(r) << "\n";
  });
  write_file(dir / "checks.txt", report.str());
  const bool all = std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
  return all ? 0 : 2;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy-regulated training dynamics lab", "erlab"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Options o;
  auto common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--seed", o.seed, "Seed override")->each([&](const std::string&) { o.seed_set = true; });
    sub->add_option("--output-dir", o.output_dir, "Root output directory");
    sub->add_option("--tag", o.tag, "Run folder name (default: UTC timestamp)");
    sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto* train = app.add_subcommand("train", "One entropy-regulated training run");
  auto* sweep_cmd = app.add_subcommand("sweep", "beta x surrogate x mode grid");
  auto* langevin = app.add_subcommand("langevin", "Particle Langevin simulation");
  auto* fp = app.add_subcommand("fokker-planck", "1-D Fokker-Planck grid solver");
  auto* scaling = app.add_subcommand("scaling", "Scaling-law samples and fits");
  auto* memory = app.add_subcommand("memory", "Hopfield transient-recovery sweep");
  auto* gradcheck = app.add_subcommand("gradcheck", "Reverse-mode vs finite-difference gradients");
  auto* checks = app.add_subcommand("checks", "All acceptance checks");
  for (auto* sub : {train, sweep_cmd, langevin, fp, scaling, memory}) common(sub, true);
  common(gradcheck, false);
  common(checks, false);
  sweep_cmd->add_option("--betas", o.betas, "Comma-separated beta values")->delimiter(',');
  sweep_cmd->add_option("--surrogates", o.surrogates, "softmax,variance,logdet")->delimiter(',');
  sweep_cmd->add_option("--modes", o.modes, "fixed,thermostat,rl_thermostat")->delimiter(',');
  gradcheck->add_option("--count", o.count, "Random configurations")->check(CLI::PositiveNumber);
  checks->add_option("--only", o.only, "Comma-separated check ids")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed_set) {
      cfg.run.seed = o.seed;
      cfg.langevin.seed = o.seed;
      cfg.scaling.seed = o.seed;
      cfg.memory.base_seed = o.seed;
    }
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    if (!o.betas.empty()) cfg.sweep.betas = o.betas;
    if (!o.surrogates.empty()) {
      cfg.sweep.surrogates.clear();
      for (const auto& s : o.surrogates) cfg.sweep.surrogates.push_back(parse_surrogate_kind(s));
    }
    if (!o.modes.empty()) {
      cfg.sweep.modes.clear();
      for (const auto& m : o.modes) cfg.sweep.modes.push_back(parse_thermostat_mode(m));
    }
    cfg.validate();

    const fs::path dir = fs::path(cfg.output_dir) / name / (o.tag.empty() ? timestamp_tag() : o.tag);
    fs::create_directories(dir);
    write_file(dir / "resolved_config.json", to_json(cfg));

    if (name == "train") return run_train(cfg, dir, out);
    if (name == "sweep") return run_sweep(cfg, dir, o.jobs, out, err);
    if (name == "langevin") return run_langevin_cmd(cfg, dir, out);
    if (name == "fokker-planck") return run_fokker_planck_cmd(cfg, dir, out);
    if (name == "scaling") return run_scaling_cmd(cfg, dir, out);
    if (name == "memory") return run_memory_cmd(cfg, dir, o.jobs, out);
    if (name == "gradcheck") return run_gradcheck(o, dir, out);
    if (name == "checks") return run_checks_cmd(o, dir, out);
    err << "unknown command '" << name << "'\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

}  // namespace erlab
