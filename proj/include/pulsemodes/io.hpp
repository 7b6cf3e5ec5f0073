#pragma once

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulsemodes/errors.hpp"
#include "pulsemodes/gaussian_state.hpp"
#include "pulsemodes/mode_functions.hpp"
#include "pulsemodes/photon_statistics.hpp"
#include "pulsemodes/squeeze_opt.hpp"

namespace pulsemodes {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON: frequency grids, mode bases, Gaussian states
// ---------------------------------------------------------------------------

inline json grid_to_json(const FrequencyGrid& g) {
  return json{{"omega_start", g.omega_start},
              {"delta_omega", g.delta_omega},
              {"num_bins", g.num_bins}};
}

inline FrequencyGrid grid_from_json(const json& j) {
  try {
    return FrequencyGrid(j.at("omega_start").get<double>(), j.at("delta_omega").get<double>(),
                         j.at("num_bins").get<std::size_t>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("grid: ") + e.what());
  }
}

/// { "grid": {...}, "modes": [ [[re, im], ... per bin], ... per mode ] }
inline json basis_to_json(const ModeBasis& basis) {
  json modes = json::array();
  for (std::size_t k = 0; k < basis.size(); ++k) {
    json mode = json::array();
    const auto col = basis.coefficients().col(static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < col.size(); ++j)
      mode.push_back(json::array({col[j].real(), col[j].imag()}));
    modes.push_back(std::move(mode));
  }
  return json{{"grid", grid_to_json(basis.grid())}, {"modes", std::move(modes)}};
}

inline ModeBasis basis_from_json(const json& j,
                                 const Tolerances& tol = global_tolerances()) {
  try {
    const FrequencyGrid grid = grid_from_json(j.at("grid"));
    const auto& modes = j.at("modes");
    if (!modes.is_array() || modes.empty()) throw ParseError("basis: empty mode list");
    Eigen::MatrixXcd m(grid.num_bins, static_cast<Eigen::Index>(modes.size()));
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const auto& mode = modes.at(k);
      if (mode.size() != grid.num_bins)
        throw ParseError("basis: mode " + std::to_string(k) + " length mismatch");
      for (std::size_t b = 0; b < grid.num_bins; ++b) {
        const auto& cell = mode.at(b);
        m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) =
            Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
      }
    }
    return ModeBasis(grid, std::move(m), tol);
  } catch (const json::exception& e) {
    throw ParseError(std::string("basis: ") + e.what());
  }
}

/// { "num_modes", "mean": [...], "variance": [[...]], "label" }
inline json state_to_json(const GaussianState& s) {
  json mean = json::array();
  for (Eigen::Index i = 0; i < s.mean.size(); ++i) mean.push_back(s.mean[i]);
  json variance = json::array();
  for (Eigen::Index r = 0; r < s.variance.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < s.variance.cols(); ++c) row.push_back(s.variance(r, c));
    variance.push_back(std::move(row));
  }
  return json{{"num_modes", s.num_modes()},
              {"mean", std::move(mean)},
              {"variance", std::move(variance)},
              {"label", s.label}};
}

inline GaussianState state_from_json(const json& j) {
  try {
    GaussianState s;
    const auto n = j.at("num_modes").get<std::size_t>();
    const auto& mean = j.at("mean");
    const auto& variance = j.at("variance");
    if (mean.size() != 2 * n) throw ParseError("state: mean length must be 2*num_modes");
    s.mean.resize(static_cast<Eigen::Index>(2 * n));
    for (std::size_t i = 0; i < 2 * n; ++i)
      s.mean[static_cast<Eigen::Index>(i)] = mean.at(i).get<double>();
    if (variance.size() != 2 * n) throw ParseError("state: variance must be 2N x 2N");
    s.variance.resize(static_cast<Eigen::Index>(2 * n), static_cast<Eigen::Index>(2 * n));
    for (std::size_t r = 0; r < 2 * n; ++r) {
      const auto& row = variance.at(r);
      if (row.size() != 2 * n) throw ParseError("state: variance must be 2N x 2N");
      for (std::size_t c = 0; c < 2 * n; ++c)
        s.variance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            row.at(c).get<double>();
    }
    s.label = j.value("label", std::string{});
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("state: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

inline double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\r' || s[pos] == '\t')) ++pos;
    if (pos != s.size()) throw ParseError(std::string(what) + ": trailing junk in '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw ParseError(std::string(what) + ": not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    throw ParseError(std::string(what) + ": out of range: '" + s + "'");
  }
}

}  // namespace detail

/// Mode curves, one row per bin: omega, re_f1, im_f1, ..., re_fN, im_fN.
inline void write_modes_csv(std::ostream& os, const ModeBasis& basis) {
  os << "omega";
  for (std::size_t k = 1; k <= basis.size(); ++k) os << ",re_f" << k << ",im_f" << k;
  os << "\n";
  for (std::size_t j = 0; j < basis.num_bins(); ++j) {
    os << detail::format_double(basis.grid().center(j));
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const Complex v =
          basis.coefficients()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
      os << ',' << detail::format_double(v.real()) << ',' << detail::format_double(v.imag());
    }
    os << "\n";
  }
}

/// Correlation matrix as a heatmap table: first row and first column carry
/// the bin centers, masked cells are emitted empty (distinct from zero).
inline void write_correlation_csv(std::ostream& os, const CorrelationData& corr) {
  const auto b = static_cast<Eigen::Index>(corr.size());
  if (!corr.grid) throw InvalidArgument("write_correlation_csv: correlation has no grid axis");
  os << "";
  for (Eigen::Index j = 0; j < b; ++j)
    os << ',' << detail::format_double(corr.grid->center(static_cast<std::size_t>(j)));
  os << "\n";
  for (Eigen::Index i = 0; i < b; ++i) {
    os << detail::format_double(corr.grid->center(static_cast<std::size_t>(i)));
    for (Eigen::Index j = 0; j < b; ++j) {
      os << ',';
      if (corr.mask.size() > 0 && corr.mask(i, j)) continue;
      os << detail::format_double(corr.c_normalized(i, j));
    }
    os << "\n";
  }
}

enum class AxisUnit { Frequency, WavelengthNm };

struct IngestInfo {
  AxisUnit unit = AxisUnit::Frequency;
  double max_rel_spacing_deviation = 0.0;  // of the fitted uniform grid
  double masked_fraction = 0.0;
};

/// Speed of light in nm/ps; wavelength axes in nm convert to angular
/// frequency in rad/ps via w = 2 pi c / lambda.
inline constexpr double kSpeedOfLightNmPerPs = 299792.458;

/// Read a correlation CSV (format of write_correlation_csv). Empty cells
/// become masked entries. Wavelength axes are converted to angular
/// frequency and fitted to a uniform grid; the achieved spacing deviation
/// is reported in the ingest info rather than silently accepted.
inline std::pair<CorrelationData, IngestInfo> read_correlation_csv(
    std::istream& is, AxisUnit unit = AxisUnit::Frequency) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (detail::blank(line)) continue;
    rows.push_back(detail::split_csv_line(line));
  }
  if (rows.size() < 3) throw ParseError("correlation csv: need at least 2 bins");
  const std::size_t b = rows.size() - 1;
  std::vector<double> axis(b);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& row = rows[i + 1];
    if (row.size() != b + 1)
      throw ParseError("correlation csv: row " + std::to_string(i + 1) + " has " +
                       std::to_string(row.size()) + " cells, expected " + std::to_string(b + 1));
    axis[i] = detail::parse_double(row[0], "correlation csv axis");
    if (unit == AxisUnit::WavelengthNm) {
      if (!(axis[i] > 0)) throw ParseError("correlation csv: wavelengths must be positive");
      axis[i] = 2.0 * M_PI * kSpeedOfLightNmPerPs / axis[i];
    }
  }
  bool reversed = false;
  if (axis.size() >= 2 && axis[1] < axis[0]) reversed = true;
  auto map_index = [&](std::size_t i) { return reversed ? b - 1 - i : i; };

  std::vector<double> ordered(b);
  for (std::size_t i = 0; i < b; ++i) ordered[map_index(i)] = axis[i];
  const double delta = (ordered.back() - ordered.front()) / static_cast<double>(b - 1);
  if (!(delta > 0)) throw ParseError("correlation csv: axis is not strictly monotone");
  double max_dev = 0.0;
  for (std::size_t i = 1; i < b; ++i)
    max_dev = std::max(max_dev, std::abs((ordered[i] - ordered[i - 1]) - delta) / delta);
  if (unit == AxisUnit::Frequency && max_dev > 1e-6)
    throw ParseError("correlation csv: frequency axis deviates from uniform spacing by " +
                     std::to_string(max_dev * 100) + "%");

  CorrelationData corr;
  corr.grid = FrequencyGrid(ordered.front() - 0.5 * delta, delta, b);
  const auto bi = static_cast<Eigen::Index>(b);
  corr.c_normalized.setZero(bi, bi);
  corr.mask = MaskArray::Constant(bi, bi, false);
  std::size_t masked = 0;
  for (std::size_t i = 0; i < b; ++i) {
    const auto& row = rows[i + 1];
    for (std::size_t j = 0; j < b; ++j) {
      const auto r = static_cast<Eigen::Index>(map_index(i));
      const auto c = static_cast<Eigen::Index>(map_index(j));
      if (detail::blank(row[j + 1])) {
        corr.mask(r, c) = true;
        ++masked;
      } else {
        corr.c_normalized(r, c) = detail::parse_double(row[j + 1], "correlation csv");
      }
    }
  }
  IngestInfo info;
  info.unit = unit;
  info.max_rel_spacing_deviation = max_dev;
  info.masked_fraction = static_cast<double>(masked) / static_cast<double>(b * b);
  if (unit == AxisUnit::WavelengthNm)
    corr.warnings.push_back("axis converted from wavelength (nm) to angular frequency "
                            "(rad/ps); max relative spacing deviation " +
                            std::to_string(max_dev));
  return {std::move(corr), info};
}

/// Filter CSV: header "omega,c", one row per bin.
inline void write_filter_csv(std::ostream& os, const FilterFunction& filter) {
  os << "omega,c\n";
  for (std::size_t j = 0; j < filter.grid.num_bins; ++j)
    os << detail::format_double(filter.grid.center(j)) << ','
       << detail::format_double(filter.c[static_cast<Eigen::Index>(j)]) << "\n";
}

inline FilterFunction read_filter_csv(std::istream& is, bool intensity = false) {
  std::string line;
  std::vector<double> omega, c;
  bool first = true;
  while (std::getline(is, line)) {
    if (detail::blank(line)) continue;
    if (first) {
      first = false;
      if (line.find("omega") != std::string::npos) continue;  // header optional
    }
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2) throw ParseError("filter csv: expected 'omega,c' rows");
    omega.push_back(detail::parse_double(cells[0], "filter csv omega"));
    c.push_back(detail::parse_double(cells[1], "filter csv c"));
  }
  if (omega.size() < 2) throw ParseError("filter csv: need at least 2 bins");
  const double delta = (omega.back() - omega.front()) / static_cast<double>(omega.size() - 1);
  if (!(delta > 0)) throw ParseError("filter csv: axis must increase");
  for (std::size_t i = 1; i < omega.size(); ++i)
    if (std::abs((omega[i] - omega[i - 1]) - delta) > 1e-6 * delta)
      throw ParseError("filter csv: axis is not uniform");
  const FrequencyGrid grid(omega.front() - 0.5 * delta, delta, omega.size());
  Eigen::VectorXd values =
      Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
  return intensity ? FilterFunction::from_intensity(grid, values)
                   : FilterFunction(grid, values);
}

}  // namespace pulsemodes
