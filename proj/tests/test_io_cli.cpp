#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pulsemodes/pulsemodes.hpp"
#include "support/oracles.hpp"

using namespace pulsemodes;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

FrequencyGrid sym_grid(double half, std::size_t bins) {
  return FrequencyGrid(-half, 2.0 * half / static_cast<double>(bins), bins);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pulsemodes_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PULSEMODES_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("json round trips") {
  const FrequencyGrid g = sym_grid(8, 64);
  const ModeBasis hl = haus_lai_basis(1.0, g);

  SECTION("basis") {
    const ModeBasis back = basis_from_json(basis_to_json(hl));
    REQUIRE(back.grid() == hl.grid());
    REQUIRE((back.coefficients() - hl.coefficients()).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("state") {
    std::mt19937_64 gen(3);
    const GaussianState s = oracles::random_state(3, gen, {.mean_scale = 2.0});
    const GaussianState back = state_from_json(state_to_json(s));
    REQUIRE((back.mean - s.mean).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((back.variance - s.variance).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.label == s.label);
  }
  SECTION("bad payloads raise ParseError") {
    REQUIRE_THROWS_AS(state_from_json(json{{"num_modes", 2}, {"mean", {1.0}}}), ParseError);
    REQUIRE_THROWS_AS(grid_from_json(json{{"omega_start", 0.0}}), ParseError);
  }
}

TEST_CASE("correlation csv round trip with masking") {
  const FrequencyGrid g = sym_grid(4, 8);
  CorrelationData corr;
  corr.grid = g;
  corr.c_normalized.resize(8, 8);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 8; ++j)
      corr.c_normalized(i, j) = 0.01 * static_cast<double>(i + 1) * static_cast<double>(j + 1);
  corr.c_normalized = (0.5 * (corr.c_normalized + corr.c_normalized.transpose())).eval();
  corr.mask = MaskArray::Constant(8, 8, false);
  corr.mask(2, 5) = corr.mask(5, 2) = true;
  corr.mask(0, 0) = true;

  std::ostringstream os;
  write_correlation_csv(os, corr);
  std::istringstream is(os.str());
  const auto [back, info] = read_correlation_csv(is);

  REQUIRE(back.size() == 8);
  REQUIRE(back.grid->delta_omega == Approx(g.delta_omega).epsilon(1e-12));
  REQUIRE(back.grid->center(0) == Approx(g.center(0)).margin(1e-12));
  REQUIRE(info.masked_fraction == Approx(3.0 / 64.0));
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 8; ++j) {
      REQUIRE(back.mask(i, j) == corr.mask(i, j));
      if (!back.mask(i, j))
        REQUIRE(back.c_normalized(i, j) == corr.c_normalized(i, j));  // bit-exact
    }
}

TEST_CASE("wavelength axis ingestion converts and records the deviation") {
  std::ostringstream os;
  os << ",1510,1505,1500\n";
  os << "1510,0.1,0.2,\n";
  os << "1505,0.2,0.3,0.1\n";
  os << "1500,,0.1,0.4\n";
  std::istringstream is(os.str());
  const auto [corr, info] = read_correlation_csv(is, AxisUnit::WavelengthNm);
  REQUIRE(info.unit == AxisUnit::WavelengthNm);
  REQUIRE(info.max_rel_spacing_deviation < 0.02);
  REQUIRE(info.max_rel_spacing_deviation > 0.0);
  // 1510 nm (lowest frequency) maps to bin 0
  const double w_low = 2 * M_PI * kSpeedOfLightNmPerPs / 1510.0;
  REQUIRE(corr.grid->center(0) == Approx(w_low).epsilon(1e-6));
  REQUIRE(corr.mask(0, 2));  // masked cell survives the reversal: (1510, 1500)
  REQUIRE(corr.c_normalized(0, 0) == Approx(0.1));
  REQUIRE(corr.c_normalized(2, 2) == Approx(0.4));
}

TEST_CASE("filter csv round trip") {
  const FrequencyGrid g = sym_grid(4, 16);
  Eigen::VectorXd c(16);
  for (Eigen::Index j = 0; j < 16; ++j) c[j] = 0.5 + 0.03 * static_cast<double>(j);
  const FilterFunction f(g, c);
  std::ostringstream os;
  write_filter_csv(os, f);
  std::istringstream is(os.str());
  const FilterFunction back = read_filter_csv(is);
  REQUIRE(back.grid.num_bins == 16);
  REQUIRE((back.c - c).cwiseAbs().maxCoeff() == 0.0);

  std::istringstream bad("omega,c\n0,0.5\n1,1.4\n");
  REQUIRE_THROWS_AS(read_filter_csv(bad), InvalidFilter);
}

TEST_CASE("cli pipeline reproduces the planted squeezing") {
  TempDir tmp;
  const std::string report_path = tmp.file("report.json");
  REQUIRE(run_cli("pipeline --plant demo3mode --bins 256 -o " + report_path +
                  " --corr-out " + tmp.file("corr.csv")) == 0);
  const json report = json::parse(slurp(report_path));
  REQUIRE(std::abs(report.at("squeezing_db").get<double>() - (-2.3657)) < 1e-4);
  const auto ev = report.at("eigenvalues");
  REQUIRE(ev.at(0).get<double>() == Approx(0.29).margin(1e-9));
  REQUIRE(ev.at(1).get<double>() == Approx(1.39).margin(1e-9));
  REQUIRE(ev.at(2).get<double>() == Approx(2.69).margin(1e-9));
  REQUIRE(report.at("optimal_lo_full").at("q_min").get<double>() == Approx(-0.42).margin(1e-9));

  SECTION("the emitted correlation csv feeds back through reconstruct") {
    const std::string rec_path = tmp.file("rec.json");
    REQUIRE(run_cli("state plant --kind demo3mode --bins 256 -o " + tmp.file("s.json") +
                    " --basis-out " + tmp.file("b.json")) == 0);
    REQUIRE(run_cli("reconstruct --corr " + tmp.file("corr.csv") + " --basis " +
                    tmp.file("b.json") + " -o " + rec_path) == 0);
    const json rec = json::parse(slurp(rec_path));
    REQUIRE(std::abs(rec.at("squeezing_db").get<double>() - (-2.3657)) < 1e-4);
  }
}

TEST_CASE("cli correlate on a coherent plant is an all-zero csv") {
  TempDir tmp;
  const std::string state = tmp.file("coh.json");
  const std::string basis = tmp.file("basis.json");
  REQUIRE(run_cli("basis haus-lai --omega0 1 --bins 64 -o " + basis) == 0);
  // single coherent mode on f1
  {
    GaussianState s = vacuum(1);
    s.mean[0] = 50.0;
    std::ofstream out(state);
    out << state_to_json(s).dump();
  }
  // restrict basis to one mode for the correlate call
  const json bj = json::parse(slurp(basis));
  json one = bj;
  one["modes"] = json::array({bj.at("modes").at(0)});
  std::ofstream(tmp.file("basis1.json")) << one.dump();
  const std::string corr = tmp.file("corr.csv");
  REQUIRE(run_cli("correlate --state " + state + " --basis " + tmp.file("basis1.json") +
                  " -o " + corr) == 0);
  std::ifstream in(corr);
  auto [data, info] = read_correlation_csv(in);
  REQUIRE(data.c_normalized.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("cli reports ingested mask fill fractions") {
  TempDir tmp;
  REQUIRE(run_cli("state plant --kind demo3mode --bins 64 -o " + tmp.file("s.json") +
                  " --basis-out " + tmp.file("b.json")) == 0);
  REQUIRE(run_cli("pipeline --plant demo3mode --bins 64 --corr-out " + tmp.file("c.csv") +
                  " -o " + tmp.file("r0.json")) == 0);
  // poke holes in the csv: blank a symmetric pair and a lone cell
  std::string text = slurp(tmp.file("c.csv"));
  std::istringstream is(text);
  auto [corr, info] = read_correlation_csv(is);
  corr.mask(1, 3) = true;
  corr.mask(3, 1) = true;
  corr.mask(2, 2) = true;
  {
    std::ofstream out(tmp.file("masked.csv"));
    write_correlation_csv(out, corr);
  }
  REQUIRE(run_cli("reconstruct --corr " + tmp.file("masked.csv") + " --basis " +
                  tmp.file("b.json") + " -o " + tmp.file("rec.json")) == 0);
  const json rec = json::parse(slurp(tmp.file("rec.json")));
  REQUIRE(rec.at("masked_fraction").get<double>() == Approx(3.0 / (64.0 * 64.0)));
  REQUIRE(rec.at("symmetric_fill_fraction").get<double>() == Approx(0.0));
  REQUIRE(rec.at("zero_fill_fraction").get<double>() == Approx(1.0));
  REQUIRE(std::abs(rec.at("squeezing_db").get<double>() - (-2.3657)) < 0.05);
}

TEST_CASE("cli exit codes and error stream") {
  TempDir tmp;
  SECTION("parse errors exit 2") {
    REQUIRE(run_cli("no-such-command 2>" + tmp.file("err.txt")) == 2);
  }
  SECTION("domain errors exit 1 with a machine-readable payload") {
    std::ofstream(tmp.file("bad.json")) << "{\"num_modes\": 1, \"mean\": [0.0]}";
    REQUIRE(run_cli("optimize-lo --state " + tmp.file("bad.json") + " 2>" +
                    tmp.file("err.json")) == 1);
    const json err = json::parse(slurp(tmp.file("err.json")));
    REQUIRE(err.at("error").contains("code"));
    REQUIRE(err.at("error").at("code") == "parse_error");
  }
  SECTION("state validate distinguishes valid from invalid") {
    GaussianState s = vacuum(2);
    std::ofstream(tmp.file("ok.json")) << state_to_json(s).dump();
    REQUIRE(run_cli("state validate --state " + tmp.file("ok.json") + " >/dev/null") == 0);
    s.variance(0, 0) = 0.01;
    std::ofstream(tmp.file("bad.json")) << state_to_json(s).dump();
    REQUIRE(run_cli("state validate --state " + tmp.file("bad.json") + " >/dev/null") == 1);
  }
}

TEST_CASE("cli outputs are byte-identical for fixed seeds") {
  TempDir tmp;
  GaussianState s = vacuum(2);
  s.variance.diagonal() << 0.3, 1.1, 1.0, 0.6;
  std::ofstream(tmp.file("s.json")) << state_to_json(s).dump();
  REQUIRE(run_cli("tomography --state " + tmp.file("s.json") +
                  " --shots 2000 --seed 11 -o " + tmp.file("a.json")) == 0);
  REQUIRE(run_cli("tomography --state " + tmp.file("s.json") +
                  " --shots 2000 --seed 11 -o " + tmp.file("b.json")) == 0);
  REQUIRE(slurp(tmp.file("a.json")) == slurp(tmp.file("b.json")));
}

TEST_CASE("cli haus-lai and select-modes reports") {
  TempDir tmp;
  std::ofstream(tmp.file("v4.json")) << state_to_json(vacuum(4, kHausLaiLabel)).dump();
  REQUIRE(run_cli("haus-lai --state " + tmp.file("v4.json") + " --n0 1e8 -o " +
                  tmp.file("hl.json")) == 0);
  const json hl = json::parse(slurp(tmp.file("hl.json")));
  REQUIRE(hl.at("product_n_theta").get<double>() ==
          Approx(1.0 / 3.0 + M_PI * M_PI / 36.0).margin(1e-12));
  REQUIRE(hl.at("product_x_p").get<double>() == Approx(M_PI * M_PI / 36.0).margin(1e-12));

  REQUIRE(run_cli("state plant --kind demo3mode --bins 128 -o " + tmp.file("s.json") +
                  " --basis-out " + tmp.file("b.json")) == 0);
  // epsilon sits above the polynomial family's representation error for
  // the soliton modes (~1e-2), the experimenter's step-2 call
  REQUIRE(run_cli("select-modes --state " + tmp.file("s.json") + " --basis " +
                  tmp.file("b.json") + " --temp-size 12 --epsilon 2e-2 -o " +
                  tmp.file("sel.json")) == 0);
  const json sel = json::parse(slurp(tmp.file("sel.json")));
  REQUIRE(sel.at("n_modes").get<int>() == 3);
  REQUIRE(sel.at("max_variances").at(1).get<double>() == Approx(2.69).epsilon(0.02));
  REQUIRE(sel.at("max_variances").at(2).get<double>() == Approx(1.39).epsilon(0.02));
}

TEST_CASE("cli filter and optimize-lo agree with the library") {
  TempDir tmp;
  REQUIRE(run_cli("state plant --kind demo3mode --bins 64 -o " + tmp.file("s.json") +
                  " --basis-out " + tmp.file("b.json")) == 0);
  // transparent filter on the plant grid
  {
    const FrequencyGrid g(-8.0, 16.0 / 64.0, 64);
    std::ofstream out(tmp.file("f.csv"));
    write_filter_csv(out, FilterFunction(g, Eigen::VectorXd::Ones(64)));
  }
  REQUIRE(run_cli("filter --state " + tmp.file("s.json") + " --basis " + tmp.file("b.json") +
                  " --filter " + tmp.file("f.csv") + " -o " + tmp.file("fq.json")) == 0);
  const json fq = json::parse(slurp(tmp.file("fq.json")));
  REQUIRE(fq.at("a_squared").get<double>() == Approx(1.0).margin(1e-10));

  REQUIRE(run_cli("optimize-lo --state " + tmp.file("s.json") + " -o " +
                  tmp.file("lo.json")) == 0);
  const json lo = json::parse(slurp(tmp.file("lo.json")));
  REQUIRE(lo.at("q_min").get<double>() == Approx(-0.42).margin(1e-9));
  REQUIRE(lo.at("q_max").get<double>() == Approx(4.38).margin(1e-9));
}
