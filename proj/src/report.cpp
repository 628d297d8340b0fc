#include "probscale/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "probscale/errors.hpp"

namespace probscale {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(where + ": '" + t + "' is not a finite number");
  }
  return value;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::setprecision(17) << v;
  return ss.str();
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, const char* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw ParseError(source + ": missing header row");
  for (auto& h : header) h = trim(h);
  if (header.size() < 2 || header.back() != "y") {
    throw ParseError(source + ":" + std::to_string(line_no) +
                     ": header must list the input columns followed by a final 'y' column");
  }
  const std::size_t dim = header.size() - 1;

  std::vector<double> xs;
  std::vector<double> ys;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    for (std::size_t d = 0; d < dim; ++d) xs.push_back(parse_number(fields[d], where));
    ys.push_back(parse_number(fields[dim], where));
  }
  if (ys.empty()) throw ParseError(source + ": no data rows");
  return Dataset(dim, std::move(xs), std::move(ys));
}

Dataset read_dataset_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_dataset_csv(in, path);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t d = 0; d < data.dim(); ++d) out << 'x' << (d + 1) << ',';
  out << "y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.x(i)) out << format_double(v) << ',';
    out << format_double(data.y(i)) << '\n';
  }
}

void write_bounds_csv(std::ostream& out, const std::vector<BoundRow>& rows) {
  out << "x,y,bound_lo,bound_hi,method\n";
  for (const auto& r : rows) {
    out << format_double(r.x) << ',' << format_double(r.y) << ',' << format_double(r.lo) << ','
        << format_double(r.hi) << ',' << r.method << '\n';
  }
}

nlohmann::json json_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

double number_from_json(const nlohmann::json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ParseError("expected a number, got " + value.dump());
}

nlohmann::json to_json(const ProbabilityLevels& levels, const SampleSpec& spec) {
  return {{"epsilon", levels.epsilon()},
          {"delta", levels.delta()},
          {"n_samples", spec.n_samples()},
          {"discard_rank", spec.discard_rank()},
          {"spec_rule", std::string(to_string(spec.rule()))}};
}

nlohmann::json to_json(const FixedBound& bound) {
  auto j = to_json(bound.levels, bound.spec);
  j["mode"] = "fixed";
  j["rho"] = json_number(bound.rho);
  return j;
}

nlohmann::json to_json(const ScaledBound& bound) {
  auto j = to_json(bound.levels, bound.spec);
  j["mode"] = "conditioned";
  j["gamma_bar"] = json_number(bound.gamma_bar);
  return j;
}

nlohmann::json to_json(const FamilyCalibration& family) {
  auto j = to_json(family.levels, family.spec);
  j["mode"] = "family";
  j["gamma_bars"] = nlohmann::json::array();
  for (double g : family.gamma_bars) j["gamma_bars"].push_back(json_number(g));
  j["criterion_values"] = nlohmann::json::array();
  for (double c : family.criterion_values) j["criterion_values"].push_back(json_number(c));
  j["selected_index"] = family.selected_index;
  j["gamma_bar"] = json_number(family.selected_gamma_bar());
  return j;
}

nlohmann::json to_json(const ViolationReport& report) {
  return {{"total", report.total},
          {"violations", report.violations},
          {"violation_ratio", report.ratio},
          {"mean_bound_width", json_number(report.mean_bound_width)}};
}

nlohmann::json to_json(const CoverageReport& report) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"bound", json_number(r.bound)}, {"violation_ratio", r.violation_ratio}, {"failed", r.failed}});
  }
  return {{"failure_fraction", report.failure_fraction},
          {"failures", report.failures},
          {"n_samples", report.n_samples},
          {"discard_rank", report.discard_rank},
          {"margin", report.margin},
          {"runs", std::move(runs)}};
}

std::uint64_t config_hash(const nlohmann::json& config) {
  const std::string canonical = config.dump();
  return fnv1a(kFnvOffset, canonical.data(), canonical.size());
}

std::string hash_hex(std::uint64_t hash) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << hash;
  return ss.str();
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::uint64_t h = kFnvOffset;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h = fnv1a(h, buf, static_cast<std::size_t>(in.gcount()));
  }
  return h;
}

}  // namespace probscale
