// Command-line driver for the skyrmion noise experiments.
// Exit codes: 0 success, 1 validation error, 2 numerical warning.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "qsky/qsky.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kWarning = 2;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool deterministic = false;
};

qsky::RunConfig resolve(const GlobalFlags& flags) {
  qsky::RunConfig cfg = flags.config.empty() ? qsky::RunConfig{} : qsky::load_config(flags.config);
  if (flags.seed) cfg.counts.seed = *flags.seed;
  if (flags.out) cfg.out_dir = *flags.out;
  if (flags.deterministic) cfg.counts.sampling = qsky::Sampling::Deterministic;
  return cfg;
}

int report(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return warnings.empty() ? kOk : kWarning;
}

void print_matrix(const qsky::DensityMatrix4& rho) {
  std::cout << std::fixed << std::setprecision(6);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const auto z = rho(i, j);
      std::cout << (j ? "  " : "") << std::setw(9) << z.real() << (z.imag() < 0 ? " - " : " + ") << std::setw(8)
                << std::abs(z.imag()) << 'i';
    }
    std::cout << '\n';
  }
  std::cout.unsetf(std::ios::floatfield);
  std::cout << std::setprecision(10);
}

int cmd_state(const qsky::RunConfig& cfg) {
  const auto rho = qsky::apply_isotropic_noise(qsky::pure_state(cfg.state), cfg.p);
  std::cout << "state (l1, l2) = (" << cfg.state.ell1 << ", " << cfg.state.ell2 << "), delta = " << cfg.state.delta
            << ", p = " << cfg.p << '\n';
  print_matrix(rho);
  const auto w = qsky::witnesses(rho, cfg.state);
  std::cout << "quantum_contrast = " << qsky::p_to_contrast(cfg.p) << '\n'
            << "purity = " << w.purity << '\n'
            << "concurrence = " << w.concurrence << '\n'
            << "fidelity = " << w.fidelity << '\n';
  return kOk;
}

int cmd_skyrmion(const qsky::RunConfig& cfg) {
  const auto grid = cfg.grid_for(cfg.state);
  const auto rho = qsky::apply_isotropic_noise(qsky::pure_state(cfg.state), cfg.p);
  const auto a = qsky::analyze_topology(rho, cfg.state, grid, cfg.topology_options());
  auto f = qsky::open_output(cfg.out_dir, "density.csv");
  qsky::write_density_csv(f, a.result.density, grid);
  std::cout << std::setprecision(12) << "half_width = " << grid.half_width << '\n'
            << "samples_per_axis = " << grid.samples_per_axis << '\n'
            << "skyrmion_number = " << a.result.n << '\n'
            << "rounded = " << a.result.rounded_n << '\n'
            << "residual = " << a.result.residual << '\n'
            << "masked_fraction = " << a.result.masked_fraction << '\n';
  if (std::abs(cfg.state.ell1) != std::abs(cfg.state.ell2))
    std::cout << "analytic = " << qsky::skyrmion_number_analytic(cfg.state) << '\n';
  std::vector<std::string> warnings;
  if (cfg.p > 0.0 && a.result.residual > qsky::kResidualWarning)
    warnings.push_back("quantization residual " + std::to_string(a.result.residual));
  return report(warnings);
}

int cmd_sweep(const qsky::RunConfig& cfg) {
  const auto res = qsky::run_sweep(cfg);
  auto f = qsky::open_output(cfg.out_dir, "sweep.csv");
  qsky::write_sweep_csv(f, res, cfg);
  qsky::write_sweep_csv(std::cout, res, cfg);
  return report(res.warnings);
}

int cmd_gallery(const qsky::RunConfig& cfg) {
  std::vector<qsky::HybridStateSpec> specs = cfg.gallery_specs;
  if (specs.empty())
    for (auto [l1, l2] : {std::pair{0, -3}, {0, -2}, {0, -1}, {0, 1}, {0, 2}, {0, 3}})
      specs.push_back({l1, l2});
  const auto g = qsky::run_topology_gallery(specs, cfg.gallery_p, cfg);
  const std::filesystem::path dir(cfg.out_dir);
  for (const auto& e : g.entries) {
    const std::string stem = "texture_" + std::to_string(e.spec.ell1) + "_" + std::to_string(e.spec.ell2);
    auto fp = qsky::open_output(dir, stem + "_pure.csv");
    qsky::write_texture_csv(fp, e.texture_pure, e.spec, 1.0);
    auto fn = qsky::open_output(dir, stem + "_noisy.csv");
    qsky::write_texture_csv(fn, e.texture_noisy, e.spec, g.p);
  }
  auto f = qsky::open_output(dir, "gallery.csv");
  qsky::write_gallery_table(f, g);
  qsky::write_gallery_table(std::cout, g);
  return report(g.warnings);
}

int cmd_tomo(const qsky::RunConfig& cfg) {
  const auto truth = qsky::apply_isotropic_noise(qsky::pure_state(cfg.state), cfg.p);
  qsky::CountModel model = cfg.counts;
  if (cfg.target_qc) {
    const double n = qsky::noise_rate_for_contrast(truth, *cfg.target_qc, model.pair_rate, model.coincidence_window);
    model.noise_rate_a = model.noise_rate_b = n;
  }
  const auto settings = qsky::settings_36();
  const auto rec = qsky::simulate_counts(truth, settings, model);
  const auto qc = qsky::average_quantum_contrast(rec);
  const auto lin = qsky::linear_inversion(rec);
  qsky::MleOptions opt;
  opt.max_iters = cfg.mle_max_iters;
  const auto mle = qsky::mle_reconstruct(rec, opt);

  const std::filesystem::path dir(cfg.out_dir);
  auto fr = qsky::open_output(dir, "record.csv");
  qsky::write_record_csv(fr, rec);
  auto fl = qsky::open_output(dir, "rho_linear.csv");
  qsky::write_density_matrix_csv(fl, lin);
  auto fm = qsky::open_output(dir, "rho_mle.csv");
  qsky::write_density_matrix_csv(fm, mle.rho);

  const auto w = qsky::witnesses(mle.rho, cfg.state);
  std::cout << std::setprecision(10) << "noise_rate = " << model.noise_rate_a << '\n'
            << "average_quantum_contrast = " << qc.value << (qc.capped ? " (capped)" : "") << '\n'
            << "excluded_settings = " << qc.excluded << '\n'
            << "linear_min_eigenvalue = " << lin.eigenvalues().minCoeff() << '\n'
            << "mle_log_likelihood = " << mle.log_likelihood << '\n'
            << "mle_iterations = " << mle.iterations << '\n'
            << "purity = " << w.purity << '\n'
            << "concurrence = " << w.concurrence << '\n'
            << "fidelity_to_target = " << w.fidelity << '\n'
            << "fidelity_to_truth = " << qsky::fidelity(mle.rho, truth) << '\n';
  std::vector<std::string> warnings;
  if (!mle.converged) warnings.push_back("maximum-likelihood reconstruction did not converge");
  return report(warnings);
}

int cmd_converge(const qsky::RunConfig& cfg) {
  const auto t = qsky::run_convergence(cfg);
  auto f = qsky::open_output(cfg.out_dir, "convergence.csv");
  qsky::write_convergence_csv(f, t, cfg);
  qsky::write_convergence_csv(std::cout, t, cfg);
  std::vector<std::string> warnings;
  if (t.rows.size() >= 2 && !t.monotone) warnings.push_back("residual does not decrease with resolution");
  if (cfg.p > 0.0 && t.rows.back().residual > qsky::kResidualWarning)
    warnings.push_back("quantization residual " + std::to_string(t.rows.back().residual) + " at finest grid");
  return report(warnings);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum skyrmion noise-robustness laboratory"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--config", flags.config, "key = value configuration file");
  app.add_option("--seed", flags.seed, "seed for Poisson count sampling");
  app.add_option("--out", flags.out, "output directory");
  app.add_flag("--deterministic", flags.deterministic, "use expected counts instead of Poisson samples");
  app.fallthrough();

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const qsky::RunConfig&);
  };
  const Command commands[] = {
      {"state", "print the density matrix and witnesses for one state", cmd_state},
      {"skyrmion", "compute the Skyrmion number of one state", cmd_skyrmion},
      {"sweep", "sweep p or Qc and tabulate witnesses and N", cmd_sweep},
      {"gallery", "textures and N for a set of states, with and without noise", cmd_gallery},
      {"tomo", "simulate one 36-setting record and reconstruct it", cmd_tomo},
      {"converge", "Skyrmion number against grid resolution", cmd_converge},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    const qsky::RunConfig cfg = resolve(flags);
    for (const auto& c : commands)
      if (app.got_subcommand(c.name)) return c.run(cfg);
  } catch (const qsky::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}
