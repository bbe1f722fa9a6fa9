#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "lpvh2/lpv_model.h"

namespace lpvh2 {

/**
 * Plant definition files (JSON). Schema in docs/plant_format.md.
 *
 * Parsing is strict: unknown or duplicate keys, wrong types, ragged matrices,
 * inconsistent block shapes and bad polytopes are all rejected with a
 * FileFormatError that carries the 1-based line of the offending value.
 */
PolytopicLpvPlant read_plant(std::istream& in, const std::string& source_name);
PolytopicLpvPlant read_plant_file(const std::string& path);

/// Writes `plant` in the same schema, numbers at 15 significant digits.
void write_plant(std::ostream& os, const PolytopicLpvPlant& plant);

/// Comma-separated rows, one matrix row per line. Blank lines and lines
/// starting with '#' are skipped.
Eigen::MatrixXd read_matrix_csv(std::istream& in, const std::string& source_name);
Eigen::MatrixXd read_matrix_csv_file(const std::string& path);
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m);

}  // namespace lpvh2
