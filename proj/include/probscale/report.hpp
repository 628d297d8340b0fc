#pragma once

// File formats: dataset CSV (header x1,...,xn,y), bound CSV
// (x,y,bound_lo,bound_hi,method) and JSON reports.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "probscale/calibration.hpp"
#include "probscale/dataset.hpp"
#include "probscale/synthetic.hpp"

namespace probscale {

/// Parses a dataset CSV. The header is mandatory and its last column must be
/// `y`. Numbers use '.' as decimal point regardless of locale. Errors carry
/// `source` and the 1-based line number.
Dataset read_dataset_csv(std::istream& in, const std::string& source = "<stream>");
Dataset read_dataset_csv_file(const std::string& path);

void write_dataset_csv(std::ostream& out, const Dataset& data);

struct BoundRow {
  double x;
  double y;
  double lo;
  double hi;
  std::string method;
};

void write_bounds_csv(std::ostream& out, const std::vector<BoundRow>& rows);

/// JSON number, or the strings "inf" / "-inf" for infinities.
nlohmann::json json_number(double value);
/// Inverse of json_number; throws ParseError for anything else.
double number_from_json(const nlohmann::json& value);

nlohmann::json to_json(const ProbabilityLevels& levels, const SampleSpec& spec);
nlohmann::json to_json(const FixedBound& bound);
nlohmann::json to_json(const ScaledBound& bound);
nlohmann::json to_json(const FamilyCalibration& family);
nlohmann::json to_json(const ViolationReport& report);
nlohmann::json to_json(const CoverageReport& report);

/// 64-bit FNV-1a of the canonical (sorted-key, compact) serialization.
std::uint64_t config_hash(const nlohmann::json& config);
std::string hash_hex(std::uint64_t hash);

/// FNV-1a of a file's bytes, used to pin CSV training sets.
std::uint64_t file_hash(const std::string& path);

}  // namespace probscale
