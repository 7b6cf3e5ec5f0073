#pragma once

// Command-line front end: subcommands {state, basis, correlate, reconstruct,
// tomography, optimize-lo, filter, select-modes, haus-lai, pipeline}.
// Exit codes: 0 success, 1 domain error (machine-readable JSON on stderr),
// 2 command-line parse error. All randomness funnels through --seed.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pulsemodes/pulsemodes.hpp"

namespace pulsemodes::cli {

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << text;
}

inline void write_report(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct PlantedDemo {
  GaussianState state;  // on the first three Haus-Lai modes
  ModeBasis basis;
};

/// Three-mode surrogate of the reconstructed soliton pulse: X variances
/// diag(0.29, 1.39, 2.69) on the Haus-Lai f1..f3 basis, coherent amplitude
/// on f1, P variances chosen minimum-uncertainty/vacuum.
inline PlantedDemo plant_demo3mode(double omega0, double span, std::size_t bins,
                                   double amplitude) {
  const FrequencyGrid grid(-span * omega0, 2.0 * span * omega0 / static_cast<double>(bins),
                           bins);
  const ModeBasis four = haus_lai_basis(omega0, grid);
  const ModeBasis basis(grid, four.coefficients().leftCols(3));
  GaussianState s = vacuum(3, std::string(kHausLaiLabel) + " demo3mode");
  s.mean[0] = amplitude;
  s.variance.diagonal() << 0.29, 1.39, 2.69, 1.0 / (4.0 * 0.29), 0.5, 0.5;
  return PlantedDemo{std::move(s), basis};
}

inline GaussianState load_state(const std::string& path) {
  return state_from_json(load_json(path));
}

inline ModeBasis load_basis(const std::string& path) {
  return basis_from_json(load_json(path));
}

inline int run(int argc, const char* const* argv) {
  apply_env_overrides(global_tolerances());

  CLI::App app{"Multimode Gaussian pulse toolkit"};
  app.require_subcommand(1);

  // ---- state ------------------------------------------------------------
  auto* state_cmd = app.add_subcommand("state", "Create and validate Gaussian states");
  state_cmd->require_subcommand(1);

  std::string out_path, label;
  std::size_t n_modes = 1;
  auto* st_vacuum = state_cmd->add_subcommand("vacuum", "Vacuum state");
  st_vacuum->add_option("--modes", n_modes, "Number of modes")->required();
  st_vacuum->add_option("--label", label, "Basis tag");
  st_vacuum->add_option("-o,--output", out_path, "Output path (default stdout)");

  std::vector<double> beta_re, beta_im;
  auto* st_coherent = state_cmd->add_subcommand("coherent", "Coherent state");
  st_coherent->add_option("--beta-re", beta_re, "Re beta per mode")->required();
  st_coherent->add_option("--beta-im", beta_im, "Im beta per mode");
  st_coherent->add_option("--label", label, "Basis tag");
  st_coherent->add_option("-o,--output", out_path, "Output path (default stdout)");

  std::vector<double> vxx_list;
  auto* st_squeezed = state_cmd->add_subcommand("squeezed", "Per-mode squeezed vacuum");
  st_squeezed->add_option("--vxx", vxx_list, "X variance per mode")->required();
  st_squeezed->add_option("--label", label, "Basis tag");
  st_squeezed->add_option("-o,--output", out_path, "Output path (default stdout)");

  std::string plant_kind = "demo3mode", plant_basis_out;
  double plant_omega0 = 1.0, plant_span = 8.0, plant_amplitude = 100.0;
  std::size_t plant_bins = 1024;
  auto* st_plant = state_cmd->add_subcommand("plant", "Planted benchmark states");
  st_plant->add_option("--kind", plant_kind, "demo3mode | vacuum4")
      ->check(CLI::IsMember({"demo3mode", "vacuum4"}));
  st_plant->add_option("--omega0", plant_omega0, "Soliton spectral width");
  st_plant->add_option("--span", plant_span, "Grid half-width in units of omega0");
  st_plant->add_option("--bins", plant_bins, "Grid bins");
  st_plant->add_option("--amplitude", plant_amplitude, "Coherent amplitude on mode 1");
  st_plant->add_option("-o,--output", out_path, "State output path");
  st_plant->add_option("--basis-out", plant_basis_out, "Also write the mode basis JSON");

  std::string state_path;
  auto* st_validate = state_cmd->add_subcommand("validate", "Check state invariants");
  st_validate->add_option("--state", state_path, "State JSON")->required();

  // ---- basis ------------------------------------------------------------
  auto* basis_cmd = app.add_subcommand("basis", "Mode bases");
  basis_cmd->require_subcommand(1);

  double hl_omega0 = 1.0, hl_span = 8.0;
  std::size_t hl_bins = 1024;
  auto* b_hl = basis_cmd->add_subcommand("haus-lai", "Four-mode soliton basis");
  b_hl->add_option("--omega0", hl_omega0, "Spectral width parameter");
  b_hl->add_option("--span", hl_span, "Grid half-width in units of omega0");
  b_hl->add_option("--bins", hl_bins, "Grid bins");
  b_hl->add_option("-o,--output", out_path, "Output path (default stdout)");

  std::string basis_path, export_format = "csv";
  auto* b_export = basis_cmd->add_subcommand("export", "Emit mode curves");
  b_export->add_option("--basis", basis_path, "Basis JSON")->required();
  b_export->add_option("--format", export_format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  b_export->add_option("-o,--output", out_path, "Output path (default stdout)");

  // ---- correlate ----------------------------------------------------------
  std::string corr_method = "strongfield", corr_format = "csv";
  auto* correlate_cmd =
      app.add_subcommand("correlate", "Predict the normalized photon correlation matrix");
  correlate_cmd->add_option("--state", state_path, "Mode-basis state JSON")->required();
  correlate_cmd->add_option("--basis", basis_path, "Mode basis JSON")->required();
  correlate_cmd->add_option("--method", corr_method, "strongfield | exact")
      ->check(CLI::IsMember({"strongfield", "exact"}));
  correlate_cmd->add_option("--format", corr_format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  correlate_cmd->add_option("-o,--output", out_path, "Output path (default stdout)");

  // ---- reconstruct ----------------------------------------------------------
  std::string corr_path, modes_out;
  double sigma_uniform = 0.0;
  std::size_t mc_trials = 0;
  std::uint64_t seed = 1;
  bool wavelength_axis = false;
  auto* reconstruct_cmd =
      app.add_subcommand("reconstruct", "Variance matrix from measured correlations");
  reconstruct_cmd->add_option("--corr", corr_path, "Correlation CSV")->required();
  reconstruct_cmd->add_option("--basis", basis_path, "Mode basis JSON")->required();
  reconstruct_cmd->add_option("--sigma", sigma_uniform,
                              "Uniform per-entry standard deviation of C^(n)");
  reconstruct_cmd->add_option("--mc-trials", mc_trials, "Monte-Carlo trials (needs --sigma)");
  reconstruct_cmd->add_option("--seed", seed, "Random seed");
  reconstruct_cmd->add_flag("--wavelength", wavelength_axis,
                            "Correlation axis is wavelength in nm");
  reconstruct_cmd->add_option("--modes-out", modes_out, "Write rotated mode curves CSV");
  reconstruct_cmd->add_option("-o,--output", out_path, "Report path (default stdout)");

  // ---- tomography ----------------------------------------------------------
  std::size_t shots = 10000;
  auto* tomography_cmd =
      app.add_subcommand("tomography", "Homodyne determination of the variance matrix");
  tomography_cmd->add_option("--state", state_path, "Mode-basis state JSON")->required();
  tomography_cmd->add_option("--shots", shots, "Samples per LO setting (0 = noiseless)");
  tomography_cmd->add_option("--seed", seed, "Random seed");
  tomography_cmd->add_option("-o,--output", out_path, "Report path (default stdout)");

  // ---- optimize-lo ----------------------------------------------------------
  auto* optlo_cmd = app.add_subcommand("optimize-lo", "Optimal local oscillator direction");
  optlo_cmd->add_option("--state", state_path, "State JSON")->required();
  optlo_cmd->add_option("-o,--output", out_path, "Report path (default stdout)");

  // ---- filter ----------------------------------------------------------
  std::string filter_path;
  bool intensity = false;
  auto* filter_cmd = app.add_subcommand("filter", "Mandel Q under spectral filtering");
  filter_cmd->add_option("--state", state_path, "Mode-basis state JSON")->required();
  filter_cmd->add_option("--basis", basis_path, "Mode basis JSON")->required();
  filter_cmd->add_option("--filter", filter_path, "Filter CSV (omega,c)")->required();
  filter_cmd->add_flag("--intensity", intensity,
                       "Filter column is intensity transmission T; c = sqrt(T)");
  filter_cmd->add_option("-o,--output", out_path, "Report path (default stdout)");

  // ---- select-modes ----------------------------------------------------------
  std::size_t temp_size = 8, sel_shots = 0;
  double epsilon = 1e-3;
  bool epsilon_set = false;
  auto* select_cmd = app.add_subcommand("select-modes", "Operational minimal mode set");
  select_cmd->add_option("--state", state_path, "Mode-basis state JSON")->required();
  select_cmd->add_option("--basis", basis_path, "Mode basis JSON")->required();
  select_cmd->add_option("--temp-size", temp_size, "Temporary set size N'");
  select_cmd->add_option("--epsilon", epsilon, "Vacuum threshold above 1/2")
      ->each([&](const std::string&) { epsilon_set = true; });
  select_cmd->add_option("--shots", sel_shots,
                         "Homodyne samples per setting (0 = noiseless backend)");
  select_cmd->add_option("--seed", seed, "Random seed");
  select_cmd->add_option("-o,--output", out_path, "Report path (default stdout)");

  // ---- haus-lai ----------------------------------------------------------
  double n0 = 1e8;
  auto* hl_cmd = app.add_subcommand("haus-lai", "Soliton perturbation operator statistics");
  hl_cmd->add_option("--state", state_path, "Haus-Lai-tagged state JSON")->required();
  hl_cmd->add_option("--n0", n0, "Mean photon number of the pulse")->required();
  hl_cmd->add_option("--omega0", hl_omega0, "Spectral width (for the sufficiency check)");
  hl_cmd->add_option("--basis", basis_path, "Mode basis JSON (optional)");
  hl_cmd->add_option("-o,--output", out_path, "Report path (default stdout)");

  // ---- pipeline ----------------------------------------------------------
  std::string pipe_plant = "demo3mode", pipe_corr_out;
  auto* pipeline_cmd = app.add_subcommand(
      "pipeline", "correlate -> reconstruct -> diagonalize -> optimize-lo");
  pipeline_cmd->add_option("--plant", pipe_plant, "Planted input (demo3mode)")
      ->check(CLI::IsMember({"demo3mode"}));
  pipeline_cmd->add_option("--corr", corr_path, "Ingest a measured correlation CSV instead");
  pipeline_cmd->add_option("--basis", basis_path, "Basis JSON (required with --corr)");
  pipeline_cmd->add_flag("--wavelength", wavelength_axis,
                         "Ingested axis is wavelength in nm");
  pipeline_cmd->add_option("--sigma", sigma_uniform, "Uniform correlation noise level");
  pipeline_cmd->add_option("--mc-trials", mc_trials, "Monte-Carlo trials (needs --sigma)");
  pipeline_cmd->add_option("--seed", seed, "Random seed");
  pipeline_cmd->add_option("--omega0", plant_omega0, "Planted soliton width");
  pipeline_cmd->add_option("--bins", plant_bins, "Planted grid bins");
  pipeline_cmd->add_option("--corr-out", pipe_corr_out, "Also write the correlation CSV");
  pipeline_cmd->add_option("-o,--output", out_path, "Report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (st_vacuum->parsed()) {
      write_report(out_path, state_to_json(vacuum(n_modes, label)));
    } else if (st_coherent->parsed()) {
      if (beta_im.empty()) beta_im.assign(beta_re.size(), 0.0);
      if (beta_im.size() != beta_re.size())
        throw InvalidArgument("coherent: --beta-re and --beta-im lengths differ");
      Eigen::VectorXcd beta(static_cast<Eigen::Index>(beta_re.size()));
      for (std::size_t i = 0; i < beta_re.size(); ++i)
        beta[static_cast<Eigen::Index>(i)] = Complex(beta_re[i], beta_im[i]);
      write_report(out_path, state_to_json(coherent(beta, label)));
    } else if (st_squeezed->parsed()) {
      const Eigen::VectorXd vxx = Eigen::Map<const Eigen::VectorXd>(
          vxx_list.data(), static_cast<Eigen::Index>(vxx_list.size()));
      write_report(out_path, state_to_json(squeezed_vacuum(vxx, label)));
    } else if (st_plant->parsed()) {
      if (plant_kind == "demo3mode") {
        const auto demo =
            plant_demo3mode(plant_omega0, plant_span, plant_bins, plant_amplitude);
        write_report(out_path, state_to_json(demo.state));
        if (!plant_basis_out.empty()) write_report(plant_basis_out, basis_to_json(demo.basis));
      } else {
        write_report(out_path, state_to_json(vacuum(4, kHausLaiLabel)));
        if (!plant_basis_out.empty()) {
          const FrequencyGrid grid(-plant_span * plant_omega0,
                                   2.0 * plant_span * plant_omega0 /
                                       static_cast<double>(plant_bins),
                                   plant_bins);
          write_report(plant_basis_out, basis_to_json(haus_lai_basis(plant_omega0, grid)));
        }
      }
    } else if (st_validate->parsed()) {
      const GaussianState s = load_state(state_path);
      try {
        validate(s);
      } catch (const Error& e) {
        std::cout << json{{"valid", false}, {"code", e.code()}, {"message", e.what()}}.dump(2)
                  << "\n";
        return 1;
      }
      std::cout << json{{"valid", true}, {"num_modes", s.num_modes()}, {"label", s.label}}
                       .dump(2)
                << "\n";
    } else if (b_hl->parsed()) {
      const FrequencyGrid grid(-hl_span * hl_omega0,
                               2.0 * hl_span * hl_omega0 / static_cast<double>(hl_bins),
                               hl_bins);
      write_report(out_path, basis_to_json(haus_lai_basis(hl_omega0, grid)));
    } else if (b_export->parsed()) {
      const ModeBasis basis = load_basis(basis_path);
      if (export_format == "json") {
        write_report(out_path, basis_to_json(basis));
      } else {
        std::ostringstream os;
        write_modes_csv(os, basis);
        write_text(out_path, os.str());
      }
    } else if (correlate_cmd->parsed()) {
      const GaussianState s = load_state(state_path);
      const ModeBasis basis = load_basis(basis_path);
      CorrelationData corr;
      if (corr_method == "strongfield") {
        corr = spectral_correlation_strongfield(s, basis);
      } else {
        corr = photon_correlations(transform_to_frequency(s, basis), basis.grid());
      }
      for (const auto& w : corr.warnings) std::cerr << "warning: " << w << "\n";
      if (corr_format == "json") {
        write_report(out_path, json{{"grid", grid_to_json(*corr.grid)},
                                    {"c_normalized", matrix_to_json(corr.c_normalized)}});
      } else {
        std::ostringstream os;
        write_correlation_csv(os, corr);
        write_text(out_path, os.str());
      }
    } else if (reconstruct_cmd->parsed()) {
      const ModeBasis basis = load_basis(basis_path);
      auto in = open_input(corr_path);
      auto [corr, info] = read_correlation_csv(
          in, wavelength_axis ? AxisUnit::WavelengthNm : AxisUnit::Frequency);
      const auto rec = reconstruct_vxx(corr, basis);
      const auto diag = diagonalize_vxx(rec.v_xx, basis);
      json report{{"v_xx", matrix_to_json(rec.v_xx)},
                  {"eigenvalues", vector_to_json(diag.eigenvalues)},
                  {"rotation", matrix_to_json(diag.rotation)},
                  {"squeezing_db", diag.squeezing_db},
                  {"masked_fraction", rec.masked_fraction},
                  {"symmetric_fill_fraction", rec.symmetric_fill_fraction},
                  {"zero_fill_fraction", rec.zero_fill_fraction}};
      if (wavelength_axis)
        report["axis_conversion"] = {
            {"from", "wavelength_nm"},
            {"to", "angular_frequency_rad_per_ps"},
            {"max_rel_spacing_deviation", info.max_rel_spacing_deviation}};
      if (sigma_uniform > 0) {
        const auto b = static_cast<Eigen::Index>(corr.size());
        const Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(b, b, sigma_uniform);
        report["errors"] = matrix_to_json(reconstruction_error(sigma, basis));
        if (mc_trials > 0) {
          const auto mc = monte_carlo_uncertainty(corr, sigma, basis, mc_trials, seed);
          report["mc_summary"] = {{"trials", mc_trials},
                                  {"seed", seed},
                                  {"point_estimate_db", mc.point_estimate_db},
                                  {"min_db", mc.min_db},
                                  {"max_db", mc.max_db},
                                  {"median_db", mc.median_db}};
        }
      }
      if (!modes_out.empty() && diag.modes) {
        std::ostringstream os;
        write_modes_csv(os, *diag.modes);
        write_text(modes_out, os.str());
      }
      write_report(out_path, report);
    } else if (tomography_cmd->parsed()) {
      const GaussianState s = load_state(state_path);
      const auto schedule = tomography_schedule(s.num_modes());
      Eigen::VectorXd measured(static_cast<Eigen::Index>(schedule.size()));
      json schedule_json = json::array();
      for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (shots == 0) {
          measured[static_cast<Eigen::Index>(i)] =
              measured_quadrature_variance(s, schedule[i]);
        } else {
          const Eigen::VectorXd samples =
              measured_quadrature_samples(s, schedule[i], shots, derive_seed(seed, i));
          const double mean = samples.mean();
          measured[static_cast<Eigen::Index>(i)] =
              (samples.array() - mean).square().sum() /
              (static_cast<double>(shots) - 1.0);
        }
        json lo = json::array();
        for (Eigen::Index k = 0; k < schedule[i].coefficients.size(); ++k)
          lo.push_back(json::array({schedule[i].coefficients[k].real(),
                                    schedule[i].coefficients[k].imag()}));
        schedule_json.push_back(std::move(lo));
      }
      const auto result = determine_variance_matrix(measured, s.num_modes(), schedule);
      write_report(out_path, json{{"n_modes", s.num_modes()},
                                  {"shots", shots},
                                  {"seed", seed},
                                  {"schedule", std::move(schedule_json)},
                                  {"measured", vector_to_json(measured)},
                                  {"recovered_v", matrix_to_json(result.v)},
                                  {"residual", result.residual},
                                  {"condition_number", result.condition_number}});
    } else if (optlo_cmd->parsed()) {
      const GaussianState s = load_state(state_path);
      const auto opt = optimal_lo(s.variance);
      write_report(out_path, json{{"q_min", opt.q_min},
                                  {"q_max", opt.q_max},
                                  {"lo_vector", vector_to_json(opt.direction)}});
    } else if (filter_cmd->parsed()) {
      const GaussianState s = load_state(state_path);
      const ModeBasis basis = load_basis(basis_path);
      auto in = open_input(filter_path);
      const FilterFunction f = read_filter_csv(in, intensity);
      const auto n = static_cast<Eigen::Index>(s.num_modes());
      const auto result =
          filtered_q(basis, s.mean.head(n), s.mean.tail(n), s.variance, f);
      write_report(out_path, json{{"q_f", result.q_f},
                                  {"a_squared", result.a_squared},
                                  {"c_matrix", matrix_to_json(result.c_matrix)}});
    } else if (select_cmd->parsed()) {
      const GaussianState s = load_state(state_path);
      const ModeBasis basis = load_basis(basis_path);
      const GaussianState bins = transform_to_frequency(s, basis);
      MeasurementFn measure;
      if (sel_shots == 0) {
        measure = exact_measurement(bins);
      } else {
        measure = homodyne_measurement(bins, sel_shots, seed);
        if (!epsilon_set)
          epsilon = 3.0 * 0.5 * std::sqrt(2.0 / static_cast<double>(sel_shots));
      }
      const auto result = select_modes(measure, basis.mode(0), temp_size, epsilon);
      write_report(out_path,
                   json{{"n_modes", result.n_modes},
                        {"max_variances", vector_to_json(result.max_variances)},
                        {"rounds", result.rounds},
                        {"epsilon", epsilon},
                        {"basis", basis_to_json(result.basis)}});
    } else if (hl_cmd->parsed()) {
      const GaussianState s = load_state(state_path);
      const auto stats = soliton_operator_stats(s, SolitonParameters(n0, hl_omega0));
      json report{{"n0", n0},
                  {"mean_dn", stats.mean_dn},
                  {"var_dn", stats.var_dn},
                  {"mean_dtheta", stats.mean_dtheta},
                  {"var_dtheta", stats.var_dtheta},
                  {"mean_dx", stats.mean_dx},
                  {"var_dx", stats.var_dx},
                  {"mean_dp", stats.mean_dp},
                  {"var_dp", stats.var_dp},
                  {"product_n_theta", stats.product_n_theta},
                  {"product_x_p", stats.product_x_p},
                  {"units", {{"dx", "2c/omega0"}, {"dp", "omega0/(2c)"}}}};
      bool phase_adjusted = false;
      ModeBasis basis = [&]() {
        if (!basis_path.empty()) return load_basis(basis_path);
        const FrequencyGrid grid(-8.0 * hl_omega0, 16.0 * hl_omega0 / 512.0, 512);
        const ModeBasis four = haus_lai_basis(hl_omega0, grid);
        if (s.num_modes() != 3 && s.num_modes() != 4)
          throw BasisMismatch("haus-lai: supply --basis for states with more than 4 modes");
        Eigen::MatrixXcd coeff =
            four.coefficients().leftCols(static_cast<Eigen::Index>(s.num_modes()));
        // strip per-mode global phases so the sensitivity analysis runs in
        // the real-function convention (rotates X_k/P_k of imaginary modes)
        for (Eigen::Index k = 0; k < coeff.cols(); ++k) {
          if (coeff.col(k).real().cwiseAbs().maxCoeff() <
              1e-10 * coeff.col(k).cwiseAbs().maxCoeff()) {
            coeff.col(k) *= Complex(0, -1);
            phase_adjusted = true;
          }
        }
        return ModeBasis(grid, coeff);
      }();
      const auto suff = photon_stat_sufficiency_check(s, basis);
      json sensitive = json::array();
      for (const auto& e : suff.sensitive)
        sensitive.push_back(json{{"a", (e.qa == Quad::X ? "X" : "P") + std::to_string(e.ka + 1)},
                                 {"b", (e.qb == Quad::X ? "X" : "P") + std::to_string(e.kb + 1)},
                                 {"magnitude", e.magnitude}});
      report["sufficiency"] = {{"x_block_only", suff.x_block_only},
                               {"max_p_sensitivity", suff.max_p_sensitivity},
                               {"basis_phase_adjusted", phase_adjusted},
                               {"sensitive_entries", std::move(sensitive)}};
      write_report(out_path, report);
    } else if (pipeline_cmd->parsed()) {
      CorrelationData corr;
      std::optional<ModeBasis> basis;
      std::optional<GaussianState> planted;
      if (!corr_path.empty()) {
        if (basis_path.empty())
          throw InvalidArgument("pipeline: --corr requires --basis");
        basis = load_basis(basis_path);
        auto in = open_input(corr_path);
        corr = read_correlation_csv(
                   in, wavelength_axis ? AxisUnit::WavelengthNm : AxisUnit::Frequency)
                   .first;
      } else {
        const auto demo = plant_demo3mode(plant_omega0, 8.0, plant_bins, 100.0);
        basis = demo.basis;
        planted = demo.state;
        corr = spectral_correlation_strongfield(demo.state, demo.basis);
      }
      if (!pipe_corr_out.empty()) {
        std::ostringstream os;
        write_correlation_csv(os, corr);
        write_text(pipe_corr_out, os.str());
      }
      const auto rec = reconstruct_vxx(corr, *basis);
      const auto diag = diagonalize_vxx(rec.v_xx, *basis);
      const auto opt_x = optimal_lo(rec.v_xx);
      json report{{"v_xx", matrix_to_json(rec.v_xx)},
                  {"eigenvalues", vector_to_json(diag.eigenvalues)},
                  {"squeezing_db", diag.squeezing_db},
                  {"masked_fraction", rec.masked_fraction},
                  {"optimal_lo_x", {{"q_min", opt_x.q_min},
                                    {"q_max", opt_x.q_max},
                                    {"direction", vector_to_json(opt_x.direction)}}}};
      if (planted) {
        const auto opt_full = optimal_lo(planted->variance);
        report["optimal_lo_full"] = {{"q_min", opt_full.q_min},
                                     {"q_max", opt_full.q_max},
                                     {"direction", vector_to_json(opt_full.direction)}};
        report["planted_v_xx"] = matrix_to_json(planted->variance.topLeftCorner(
            static_cast<Eigen::Index>(planted->num_modes()),
            static_cast<Eigen::Index>(planted->num_modes())));
      }
      if (sigma_uniform > 0 && mc_trials > 0) {
        const auto b = static_cast<Eigen::Index>(corr.size());
        const Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(b, b, sigma_uniform);
        const auto mc = monte_carlo_uncertainty(corr, sigma, *basis, mc_trials, seed);
        report["mc_summary"] = {{"trials", mc_trials},
                                {"seed", seed},
                                {"point_estimate_db", mc.point_estimate_db},
                                {"min_db", mc.min_db},
                                {"max_db", mc.max_db},
                                {"median_db", mc.median_db}};
      }
      write_report(out_path, report);
    }
  } catch (const Error& e) {
    std::cerr << json{{"error", {{"code", e.code()}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace pulsemodes::cli
