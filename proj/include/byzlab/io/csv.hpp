#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "byzlab/sensitivity/sensitivity.hpp"
#include "byzlab/simulator/atc.hpp"

namespace byzlab {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Header row, then one row per record; shortest round-trip decimal
/// formatting independent of the locale; every line newline-terminated.
std::string format_csv(const CsvTable& table);

/// Inverse of format_csv. Rejects ragged rows, empty or non-numeric fields,
/// carriage returns and a missing final newline.
CsvTable parse_csv_strict(const std::string& text);

/// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

CsvTable trace_table(const RunTrace& trace);
CsvTable curve_table(const SCCurve1D& curve, std::optional<double> clip = {});
CsvTable grid_table(const SCGrid2D& grid, std::optional<double> clip = {});

/// Samples stored one per row, coordinates as columns.
SamplesXd samples_from_table(const CsvTable& table);
CsvTable samples_table(const SamplesXd& samples);

}  // namespace byzlab
