#pragma once

#include "carleson/harness.hpp"

#include <string>
#include <utility>
#include <vector>

namespace carleson {

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

std::string report_to_json(const Report& rep, const ExperimentConfig& cfg);
std::string report_to_csv(const Report& rep);

/// Versioned snapshot of the lattice (net centers, assignments, tiles).
std::string lattice_snapshot_json(const TileLattice& lat);
std::string decomposition_json(const TileLattice& lat, const Decomposition& dec);

/// Binary matrix layout: magic "CARLMAT1", uint32 n, uint32 provenance bytes,
/// provenance, then n*n little-endian complex<double> pairs, row-major.
void write_matrix_binary(const OperatorMatrix& m, const std::string& path);
OperatorMatrix read_matrix_binary(const std::string& path);
std::string matrix_to_json(const OperatorMatrix& m); // minified

using Series = std::pair<std::string, std::vector<std::pair<double, double>>>;
std::string curves_svg(const std::vector<Series>& series, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel);
std::string histogram_svg(const std::vector<double>& values, int bins,
                          const std::string& title);

} // namespace carleson
