#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "probscale/calibration.hpp"
#include "probscale/errors.hpp"
#include "probscale/kernel_predictor.hpp"
#include "probscale/report.hpp"
#include "probscale/sample_complexity.hpp"
#include "probscale/synthetic.hpp"

namespace probscale::cli {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Shared option groups

struct LevelOptions {
  double epsilon = 0.05;
  double delta = 1e-6;
  std::string constant = "7.47";
  std::uint64_t r = 0;
  std::uint64_t n_samples = 0;

  void add(CLI::App& app, double default_eps, double default_delta) {
    epsilon = default_eps;
    delta = default_delta;
    app.add_option("--epsilon", epsilon, "accuracy level in (0,1)")->capture_default_str();
    app.add_option("--delta", delta, "confidence level in (0,1)")->capture_default_str();
    app.add_option("--constant", constant, "sample-size constant: a number >= (1+sqrt3)^2 or 'exact'")
        ->capture_default_str();
  }
  void add_overrides(CLI::App& app) {
    app.add_option("--r", r, "explicit discard rank");
    app.add_option("--n-samples", n_samples, "explicit sample count (requires --r)");
  }

  ProbabilityLevels levels() const { return {epsilon, delta}; }

  double constant_value() const {
    if (constant == "exact") return kExactLemmaConstant;
    try {
      std::size_t used = 0;
      const double v = std::stod(constant, &used);
      if (used != constant.size()) throw std::invalid_argument(constant);
      return v;
    } catch (const std::exception&) {
      throw DomainError("--constant must be a number or 'exact', got '" + constant + "'");
    }
  }

  /// Spec for a family of `n_family` members (1 for single predictors).
  SampleSpec spec(std::uint64_t n_family) const {
    const auto lv = levels();
    if (n_samples > 0) {
      if (r == 0) throw DomainError("--n-samples requires --r");
      return SampleSpec(n_samples, r, SpecRule::kUser);
    }
    if (r > 0) {
      const ProbabilityLevels split(lv.epsilon(), lv.delta() / static_cast<double>(n_family));
      return SampleSpec(min_samples_exact(split, r), r, SpecRule::kExactBinomial);
    }
    return min_samples_family(lv, n_family, constant_value());
  }
};

struct KernelOptions {
  std::string config_path;
  KernelConfig kernel{};
  double lambda = 1.0;
  std::string lambdas_text = "1,2,3,4,5,6,7,8,9,10";
  std::size_t truncation = 300;
  std::string residual_mode = "local";
  std::string train_data;
  std::size_t train_size = 2065;

  CLI::Option* amplitude_opt = nullptr;
  CLI::Option* lengthscale_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* lambdas_opt = nullptr;
  CLI::Option* truncation_opt = nullptr;
  CLI::Option* mode_opt = nullptr;

  void add(CLI::App& app, bool family) {
    app.add_option("--config", config_path, "JSON experiment config (kernel.*, weight.lambda, truncation.m, residual_mode)");
    amplitude_opt = app.add_option("--amplitude", kernel.amplitude, "RBF kernel amplitude")->capture_default_str();
    lengthscale_opt =
        app.add_option("--lengthscale-sq", kernel.lengthscale_sq, "RBF squared length scale")->capture_default_str();
    if (family) {
      lambdas_opt = app.add_option("--lambdas", lambdas_text, "comma-separated locality weights")->capture_default_str();
    } else {
      lambda_opt = app.add_option("--lambda", lambda, "locality weight")->capture_default_str();
    }
    truncation_opt =
        app.add_option("--truncation", truncation, "neighbours per local fit (0 = all)")->capture_default_str();
    mode_opt = app.add_option("--residual-mode", residual_mode, "local | fixed")->capture_default_str();
    app.add_option("--train-data", train_data, "training CSV for the kernel predictor");
    app.add_option("--train-size", train_size, "synthetic training size")->capture_default_str();
  }

  // Config file values apply unless the matching flag was given.
  void load_config() {
    if (config_path.empty()) return;
    std::ifstream in(config_path);
    if (!in) throw ParseError("cannot open " + config_path);
    json cfg;
    try {
      cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError(config_path + ": " + e.what());
    }
    auto number_at = [&](const char* a, const char* b) -> std::optional<double> {
      if (cfg.contains(a) && cfg[a].is_object() && cfg[a].contains(b)) return cfg[a][b].get<double>();
      return std::nullopt;
    };
    if (auto v = number_at("kernel", "amplitude"); v && amplitude_opt->count() == 0) kernel.amplitude = *v;
    if (auto v = number_at("kernel", "lengthscale_sq"); v && lengthscale_opt->count() == 0) kernel.lengthscale_sq = *v;
    if (auto v = number_at("weight", "lambda"); v && lambda_opt != nullptr && lambda_opt->count() == 0) lambda = *v;
    if (cfg.contains("weight") && cfg["weight"].contains("lambdas") && lambdas_opt != nullptr &&
        lambdas_opt->count() == 0) {
      std::ostringstream ss;
      bool first = true;
      for (const auto& v : cfg["weight"]["lambdas"]) {
        ss << (first ? "" : ",") << v.get<double>();
        first = false;
      }
      lambdas_text = ss.str();
    }
    if (auto v = number_at("truncation", "m"); v && truncation_opt->count() == 0) {
      truncation = static_cast<std::size_t>(*v);
    }
    if (cfg.contains("residual_mode") && mode_opt->count() == 0) residual_mode = cfg["residual_mode"].get<std::string>();
  }

  ResidualMode mode() const {
    if (residual_mode == "local") return ResidualMode::kLocal;
    if (residual_mode == "fixed") return ResidualMode::kFixedPredictor;
    throw DomainError("--residual-mode must be 'local' or 'fixed'");
  }

  std::vector<double> lambdas() const {
    std::vector<double> out;
    std::stringstream ss(lambdas_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw DomainError("--lambdas: '" + item + "' is not a number");
      }
    }
    if (out.empty()) throw DomainError("--lambdas must list at least one value");
    return out;
  }

  json training_json(std::optional<std::uint64_t> seed) const {
    if (!train_data.empty()) {
      return {{"source", "csv"}, {"path", train_data}, {"fnv1a", hash_hex(file_hash(train_data))}};
    }
    if (!seed) throw DomainError("kernel predictor needs --train-data or --seed");
    return {{"source", "synthetic"}, {"seed", *seed}, {"size", train_size}};
  }
};

// ---------------------------------------------------------------------------
// Predictor / sigma reconstruction from their JSON descriptions

std::shared_ptr<const Dataset> load_training(const json& training) {
  const auto source = training.at("source").get<std::string>();
  if (source == "csv") {
    const auto path = training.at("path").get<std::string>();
    if (hash_hex(file_hash(path)) != training.at("fnv1a").get<std::string>()) {
      throw ContractError("training CSV " + path + " changed since calibration");
    }
    return std::make_shared<const Dataset>(read_dataset_csv_file(path));
  }
  if (source == "synthetic") {
    ExampleConfig ex;
    ex.seed = training.at("seed").get<std::uint64_t>();
    return std::make_shared<const Dataset>(
        sample_example(training.at("size").get<std::size_t>(), ex, SampleStream::kTraining));
  }
  throw ParseError("unknown training source '" + source + "'");
}

ResidualMode parse_mode(const std::string& s) {
  if (s == "local") return ResidualMode::kLocal;
  if (s == "fixed") return ResidualMode::kFixedPredictor;
  throw ParseError("unknown residual_mode '" + s + "'");
}

json kernel_member_json(const KernelConfig& k, double lambda, std::size_t truncation, const std::string& mode,
                        const json& training) {
  return {{"kind", "kernel"},
          {"kernel", {{"amplitude", k.amplitude}, {"lengthscale_sq", k.lengthscale_sq}}},
          {"weight", {{"lambda", lambda}}},
          {"truncation", {{"m", truncation}}},
          {"residual_mode", mode},
          {"training", training}};
}

std::shared_ptr<const LocalKernelModel> kernel_model_from_json(const json& p) {
  LocalModelConfig cfg;
  cfg.kernel.amplitude = p.at("kernel").at("amplitude").get<double>();
  cfg.kernel.lengthscale_sq = p.at("kernel").at("lengthscale_sq").get<double>();
  cfg.weight.lambda = p.at("weight").at("lambda").get<double>();
  cfg.truncation = p.at("truncation").at("m").get<std::size_t>();
  cfg.residual_mode = parse_mode(p.at("residual_mode").get<std::string>());
  auto train = load_training(p.at("training"));
  std::shared_ptr<const GramMatrix> gram;
  if (train->size() <= 4096) gram = compute_gram(*train, cfg.kernel);
  return std::make_shared<const LocalKernelModel>(train, cfg, gram);
}

struct Model {
  PredictorHandle predictor;
  std::optional<SigmaHandle> sigma;
  std::optional<ModelPair> pair;
};

Model model_from_json(const json& predictor, const json& sigma) {
  const auto kind = predictor.at("kind").get<std::string>();
  const auto sigma_kind = sigma.at("kind").get<std::string>();
  std::shared_ptr<const LocalKernelModel> kernel_model;

  std::optional<PredictorHandle> handle;
  if (kind == "oracle") {
    handle = oracle_predictor();
  } else if (kind == "kernel") {
    kernel_model = kernel_model_from_json(predictor);
    handle = PredictorHandle([kernel_model](std::span<const double> x) { return kernel_model->fit(x).prediction; });
  } else {
    throw ParseError("unknown predictor kind '" + kind + "'");
  }

  Model m{*handle, std::nullopt, std::nullopt};
  if (sigma_kind == "none") return m;
  if (sigma_kind == "constant") {
    m.sigma = SigmaHandle::constant(sigma.at("value").get<double>());
  } else if (sigma_kind == "exact") {
    m.sigma = exact_sigma_handle();
  } else if (sigma_kind == "parzen") {
    if (!kernel_model) throw DomainError("--sigma parzen requires --predictor kernel");
    m.pair = make_model_pair(kernel_model);
    m.sigma = m.pair->sigma;
    return m;
  } else {
    throw ParseError("unknown sigma kind '" + sigma_kind + "'");
  }
  m.pair = ModelPair{m.predictor, *m.sigma};
  return m;
}

json sigma_json(const std::string& spec) {
  if (spec == "none") return {{"kind", "none"}};
  if (spec == "exact") return {{"kind", "exact"}};
  if (spec == "parzen") return {{"kind", "parzen"}};
  if (spec.rfind("constant:", 0) == 0) {
    double v = 0.0;
    try {
      v = std::stod(spec.substr(9));
    } catch (const std::exception&) {
      throw DomainError("--sigma constant:<v> needs a number");
    }
    if (!(v > 0.0)) throw DomainError("--sigma constant value must be positive");
    return {{"kind", "constant"}, {"value", v}};
  }
  throw DomainError("--sigma must be none | constant:<v> | parzen | exact");
}

json config_block(const json& predictor, const json& sigma) { return {{"predictor", predictor}, {"sigma", sigma}}; }

// ---------------------------------------------------------------------------
// Output helpers

void emit_json(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw ParseError("cannot write " + path);
  f << j.dump(2) << '\n';
}

void emit_bounds(const std::string& path, const Dataset& data, const PredictorHandle& predictor,
                 const BoundFn& bound, const std::string& method, bool with_exact, double epsilon) {
  if (data.dim() != 1) throw DomainError("--emit-bounds supports scalar inputs only");
  std::vector<BoundRow> rows;
  rows.reserve(data.size() * (with_exact ? 2 : 1));
  const auto predictions = evaluate_predictions(predictor, data);
  const auto bounds = evaluate_bounds(bound, data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double x = data.x(i)[0];
    rows.push_back({x, data.y(i), predictions[i] - bounds[i], predictions[i] + bounds[i], method});
    if (with_exact) {
      const double t = oracle_value(x);
      const double b = exact_bound(x, epsilon);
      rows.push_back({x, data.y(i), t - b, t + b, "exact"});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const BoundRow& a, const BoundRow& b) { return a.x < b.x; });
  std::ofstream f(path);
  if (!f) throw ParseError("cannot write " + path);
  write_bounds_csv(f, rows);
}

Dataset load_or_sample(const std::string& csv, std::optional<std::uint64_t> seed, std::size_t count,
                       SampleStream stream) {
  if (!csv.empty()) return read_dataset_csv_file(csv);
  if (!seed) throw DomainError("provide a dataset CSV or --seed for synthetic data");
  ExampleConfig ex;
  ex.seed = *seed;
  return sample_example(count, ex, stream);
}

json data_json(const std::string& csv, std::optional<std::uint64_t> seed, const char* stream) {
  if (!csv.empty()) return {{"source", "csv"}, {"path", csv}};
  return {{"source", "synthetic"}, {"seed", *seed}, {"stream", stream}};
}

// ---------------------------------------------------------------------------
// sample-size

struct SampleSizeCmd {
  LevelOptions lv;
  std::uint64_t n_family = 1;
  bool exact = false;
  std::string json_path;

  void add(CLI::App& app) {
    lv.add(app, 0.05, 1e-6);
    app.get_option("--epsilon")->required();
    app.get_option("--delta")->required();
    app.add_option("--r", lv.r, "discard rank (uses the explicit bound for N)");
    app.add_option("--n-family", n_family, "family size n_F (delta is split as delta/n_F)")->capture_default_str();
    app.add_flag("--exact", exact, "also report the minimal N solving the binomial condition");
    app.add_option("--json", json_path, "also write the JSON report to this path");
  }

  int run(std::ostream& out) const {
    const auto levels = lv.levels();
    if (n_family < 1) throw DomainError("--n-family must be >= 1");
    const ProbabilityLevels split(levels.epsilon(), levels.delta() / static_cast<double>(n_family));

    std::optional<SampleSpec> spec;
    if (lv.r > 0) {
      spec.emplace(min_samples_explicit(split, lv.r), lv.r, SpecRule::kExplicitBound);
    } else {
      spec = min_samples_family(levels, n_family, lv.constant_value());
    }
    const double tail = binomial_tail(spec->discard_rank() - 1, spec->n_samples(), levels.epsilon());

    json j = to_json(levels, *spec);
    j["n_family"] = n_family;
    if (lv.r == 0) j["constant"] = lv.constant_value();
    j["binomial_tail"] = tail;
    j["threshold"] = split.delta();
    j["valid"] = validate_spec(*spec, levels, n_family);

    out << "rule           " << to_string(spec->rule()) << '\n';
    out << "epsilon        " << levels.epsilon() << '\n';
    out << "delta          " << levels.delta() << '\n';
    if (n_family > 1) out << "n_family       " << n_family << '\n';
    out << "N              " << spec->n_samples() << '\n';
    out << "r              " << spec->discard_rank() << '\n';
    out << "B(r-1;N,eps)   " << tail << '\n';
    if (exact) {
      const auto n_exact = min_samples_exact(split, spec->discard_rank());
      const double exact_tail = binomial_tail(spec->discard_rank() - 1, n_exact, levels.epsilon());
      j["exact_n_samples"] = n_exact;
      j["exact_binomial_tail"] = exact_tail;
      out << "N (exact)      " << n_exact << '\n';
      out << "B at N (exact) " << exact_tail << '\n';
    }
    out << j.dump() << '\n';
    if (!json_path.empty()) emit_json(j, json_path, out);
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateCmd {
  LevelOptions lv;
  KernelOptions ko;
  std::string data_csv;
  std::optional<std::uint64_t> seed;
  std::string predictor = "oracle";
  std::string sigma = "none";
  std::string output;
  std::string emit_path;
  std::string emit_data;
  std::size_t emit_count = 0;

  void add(CLI::App& app) {
    lv.add(app, 0.05, 1e-6);
    lv.add_overrides(app);
    ko.add(app, false);
    app.add_option("--data", data_csv, "calibration CSV (header x1,...,xn,y)");
    app.add_option("--seed", seed, "seed for synthetic data");
    app.add_option("--predictor", predictor, "oracle | kernel")->capture_default_str();
    app.add_option("--sigma", sigma, "none | constant:<v> | parzen | exact")->capture_default_str();
    app.add_option("--output", output, "JSON report path (default stdout)");
    app.add_option("--emit-bounds", emit_path, "write x,y,bound_lo,bound_hi,method CSV");
    app.add_option("--emit-data", emit_data, "dataset for --emit-bounds (default: synthetic validation draw)");
    app.add_option("--emit-count", emit_count, "synthetic validation rows for --emit-bounds (default N)");
  }

  int run(std::ostream& out) {
    ko.load_config();
    const auto levels = lv.levels();
    const auto spec = lv.spec(1);
    const Dataset data = load_or_sample(data_csv, seed, spec.n_samples(), SampleStream::kCalibration);
    if (data.size() != spec.n_samples()) {
      throw ContractError("calibration data has " + std::to_string(data.size()) + " rows but N=" +
                          std::to_string(spec.n_samples()) + " are required");
    }

    json predictor_cfg;
    if (predictor == "oracle") {
      predictor_cfg = {{"kind", "oracle"}};
    } else if (predictor == "kernel") {
      KernelConfig k = ko.kernel;
      k.validate();
      predictor_cfg = kernel_member_json(k, ko.lambda, ko.truncation, ko.residual_mode, ko.training_json(seed));
      (void)ko.mode();
    } else {
      throw DomainError("--predictor must be 'oracle' or 'kernel'");
    }
    const json sigma_cfg = sigma_json(sigma);
    const Model model = model_from_json(predictor_cfg, sigma_cfg);
    if (predictor == "oracle" && data.dim() != 1) throw DomainError("the oracle predictor takes scalar inputs");

    json report;
    BoundFn bound;
    if (!model.sigma) {
      const auto fixed = calibrate_fixed(model.predictor, data, spec, levels);
      report = to_json(fixed);
      bound = [rho = fixed.rho](std::span<const double>) { return rho; };
    } else {
      const auto scaled = calibrate_conditioned(model.predictor, *model.sigma, data, spec, levels);
      report = to_json(scaled);
      bound = [g = scaled.gamma_bar, s = *model.sigma](std::span<const double> x) { return g * s(x); };
    }
    const json cfg = config_block(predictor_cfg, sigma_cfg);
    report["predictor"] = predictor_cfg;
    report["sigma"] = sigma_cfg;
    report["config_hash"] = hash_hex(config_hash(cfg));
    report["data"] = data_json(data_csv, seed, "calibration");
    emit_json(report, output, out);

    if (!emit_path.empty()) {
      const bool synthetic = emit_data.empty();
      const Dataset v = load_or_sample(emit_data, seed, emit_count > 0 ? emit_count : spec.n_samples(),
                                       SampleStream::kValidation);
      emit_bounds(emit_path, v, model.predictor, bound, model.sigma ? "conditioned" : "fixed", synthetic,
                  levels.epsilon());
    }
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// family

struct FamilyCmd {
  LevelOptions lv;
  KernelOptions ko;
  std::string data_csv;
  std::string selection_csv;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string emit_path;
  std::size_t emit_count = 0;

  void add(CLI::App& app) {
    lv.add(app, 0.05, 1e-6);
    lv.add_overrides(app);
    ko.add(app, true);
    app.add_option("--data", data_csv, "calibration CSV with exactly N rows");
    app.add_option("--selection-data", selection_csv, "separate inputs for the selection criterion");
    app.add_option("--seed", seed, "seed for synthetic training/calibration data");
    app.add_option("--output", output, "JSON report path (default stdout)");
    app.add_option("--emit-bounds", emit_path, "bound CSV on a synthetic validation draw");
    app.add_option("--emit-count", emit_count, "validation rows for --emit-bounds (default train size)");
  }

  int run(std::ostream& out) {
    ko.load_config();
    const auto levels = lv.levels();
    const auto lambdas = ko.lambdas();
    FamilyConfig fc;
    fc.kernel = ko.kernel;
    fc.lambdas = lambdas;
    fc.residual_mode = ko.mode();
    fc.truncation = ko.truncation;
    const json training = ko.training_json(seed);

    const auto spec = lv.spec(lambdas.size());
    if (!validate_spec(spec, levels, lambdas.size())) {
      throw ContractError("spec N=" + std::to_string(spec.n_samples()) + " r=" + std::to_string(spec.discard_rank()) +
                          " does not satisfy B(r-1;N,eps) <= delta/" + std::to_string(lambdas.size()));
    }
    auto train = load_training(training);
    const auto family = build_family(train, fc);
    const Dataset data = load_or_sample(data_csv, seed, spec.n_samples(), SampleStream::kCalibration);
    if (data.size() != spec.n_samples()) {
      throw ContractError("calibration data has " + std::to_string(data.size()) + " rows but N=" +
                          std::to_string(spec.n_samples()) + " are required");
    }
    std::optional<Dataset> selection;
    if (!selection_csv.empty()) selection = read_dataset_csv_file(selection_csv);
    FamilyOptions opts;
    if (selection) opts.selection_data = &*selection;
    const auto result = calibrate_family(family, data, levels, spec, opts);

    const json predictor_cfg = {{"kind", "kernel-family"},
                                {"kernel", {{"amplitude", fc.kernel.amplitude}, {"lengthscale_sq", fc.kernel.lengthscale_sq}}},
                                {"lambdas", lambdas},
                                {"truncation", {{"m", fc.truncation}}},
                                {"residual_mode", ko.residual_mode},
                                {"training", training}};
    const json sigma_cfg = {{"kind", "parzen"}};
    json report = to_json(result);
    report["lambdas"] = lambdas;
    report["selected_lambda"] = lambdas[result.selected_index];
    report["predictor"] = predictor_cfg;
    report["sigma"] = sigma_cfg;
    report["config_hash"] = hash_hex(config_hash(config_block(predictor_cfg, sigma_cfg)));
    report["data"] = data_json(data_csv, seed, "calibration");
    emit_json(report, output, out);

    if (!emit_path.empty()) {
      if (!seed) throw DomainError("--emit-bounds needs --seed for the validation draw");
      ExampleConfig ex;
      ex.seed = *seed;
      const Dataset v = sample_example(emit_count > 0 ? emit_count : ko.train_size, ex, SampleStream::kValidation);
      const ModelPair& best = family[result.selected_index];
      const double g = result.selected_gamma_bar();
      emit_bounds(emit_path, v, best.predictor, [&best, g](std::span<const double> x) { return g * best.sigma(x); },
                  "family", true, levels.epsilon());
    }
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// validate

struct ValidateCmd {
  std::string calibration_path;
  std::string data_csv;
  std::optional<std::uint64_t> seed;
  std::size_t count = 0;
  std::string expect_hash;
  bool exact = false;
  std::string output;
  std::string emit_path;

  void add(CLI::App& app) {
    app.add_option("--calibration", calibration_path, "JSON report from calibrate or family")->required();
    app.add_option("--data", data_csv, "validation CSV");
    app.add_option("--seed", seed, "seed for a synthetic validation draw");
    app.add_option("--n", count, "synthetic validation rows (default: N of the calibration)");
    app.add_option("--expect-hash", expect_hash, "refuse unless the calibration's config hash matches");
    app.add_flag("--exact", exact, "also score the exact Gaussian bound (synthetic example only)");
    app.add_option("--output", output, "JSON report path (default stdout)");
    app.add_option("--emit-bounds", emit_path, "write x,y,bound_lo,bound_hi,method CSV");
  }

  int run(std::ostream& out) const {
    std::ifstream in(calibration_path);
    if (!in) throw ParseError("cannot open " + calibration_path);
    json cal;
    try {
      cal = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError(calibration_path + ": " + e.what());
    }
    const json predictor_cfg = cal.at("predictor");
    const json sigma_cfg = cal.at("sigma");
    const std::string stored = cal.at("config_hash").get<std::string>();
    const std::string actual = hash_hex(config_hash(config_block(predictor_cfg, sigma_cfg)));
    if (stored != actual) {
      throw ContractError("calibration config hash " + stored + " does not match its predictor description (" +
                          actual + "); refusing to validate");
    }
    if (!expect_hash.empty() && expect_hash != stored) {
      throw ContractError("calibration was produced for predictor " + stored + ", expected " + expect_hash);
    }

    const double eps = cal.at("epsilon").get<double>();
    const std::string mode = cal.at("mode").get<std::string>();
    Dataset data = load_or_sample(data_csv, seed, count > 0 ? count : cal.at("n_samples").get<std::size_t>(),
                                  SampleStream::kValidation);

    std::optional<Model> model;
    BoundFn bound;
    if (mode == "fixed") {
      model = model_from_json(predictor_cfg, sigma_cfg);
      bound = [rho = number_from_json(cal.at("rho"))](std::span<const double>) { return rho; };
    } else if (mode == "conditioned") {
      model = model_from_json(predictor_cfg, sigma_cfg);
      if (!model->sigma) throw ParseError("conditioned calibration without a sigma description");
      bound = [g = number_from_json(cal.at("gamma_bar")), s = *model->sigma](std::span<const double> x) {
        return g * s(x);
      };
    } else if (mode == "family") {
      const auto idx = cal.at("selected_index").get<std::size_t>();
      const auto lambdas = predictor_cfg.at("lambdas").get<std::vector<double>>();
      if (idx >= lambdas.size()) throw ParseError("selected_index out of range");
      const json member = kernel_member_json(
          {predictor_cfg.at("kernel").at("amplitude").get<double>(),
           predictor_cfg.at("kernel").at("lengthscale_sq").get<double>()},
          lambdas[idx], predictor_cfg.at("truncation").at("m").get<std::size_t>(),
          predictor_cfg.at("residual_mode").get<std::string>(), predictor_cfg.at("training"));
      model = model_from_json(member, sigma_cfg);
      const double g = number_from_json(cal.at("gamma_bars").at(idx));
      bound = [g, pair = *model->pair](std::span<const double> x) { return g * pair.sigma(x); };
    } else {
      throw ParseError("unknown calibration mode '" + mode + "'");
    }

    const auto report = evaluate_violation(bound, model->predictor, data);
    json j = to_json(report);
    j["epsilon"] = eps;
    j["delta"] = cal.at("delta");
    j["mode"] = mode;
    j["config_hash"] = stored;
    j["data"] = data_json(data_csv, seed, "validation");
    if (exact) {
      if (data.dim() != 1) throw DomainError("--exact needs scalar inputs");
      const auto exact_report =
          evaluate_violation([eps](std::span<const double> x) { return exact_bound(x[0], eps); }, oracle_predictor(), data);
      j["exact"] = to_json(exact_report);
    }
    emit_json(j, output, out);
    if (!emit_path.empty()) emit_bounds(emit_path, data, model->predictor, bound, mode, exact, eps);
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// coverage

struct CoverageCmd {
  LevelOptions lv;
  std::size_t reps = 200;
  std::size_t validation_size = 10000;
  std::string mode = "fixed";
  std::uint64_t seed = 0;
  std::string output;

  void add(CLI::App& app) {
    lv.add(app, 0.1, 0.2);
    lv.add_overrides(app);
    app.add_option("--reps", reps, "independent calibrate/validate repetitions")->capture_default_str();
    app.add_option("--validation-size", validation_size, "validation rows per repetition")->capture_default_str();
    app.add_option("--mode", mode, "fixed | conditioned")->capture_default_str();
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_option("--output", output, "JSON report path (default stdout)");
  }

  int run(std::ostream& out, std::ostream& err) const {
    CoverageConfig cfg;
    cfg.levels = lv.levels();
    cfg.repetitions = reps;
    cfg.validation_size = validation_size;
    cfg.constant = lv.constant_value();
    if (lv.r > 0) cfg.spec = lv.spec(1);
    if (mode == "fixed") {
      cfg.mode = CoverageMode::kFixed;
    } else if (mode == "conditioned") {
      cfg.mode = CoverageMode::kConditioned;
    } else {
      throw DomainError("--mode must be 'fixed' or 'conditioned'");
    }
    cfg.example.seed = seed;
    const auto report = run_coverage_experiment(cfg);
    const double delta = cfg.levels.delta();
    const double limit = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(reps));

    json j = to_json(report);
    j["epsilon"] = cfg.levels.epsilon();
    j["delta"] = delta;
    j["mode"] = mode;
    j["seed"] = seed;
    j["validation_size"] = validation_size;
    j["failure_limit"] = limit;
    emit_json(j, output, out);
    if (report.failure_fraction > limit) {
      err << "coverage check failed: failure fraction " << report.failure_fraction << " > " << limit << '\n';
      return kCheckFailed;
    }
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// synth-data

struct SynthCmd {
  std::uint64_t seed = 0;
  std::size_t n = 2065;
  std::string stream = "calibration";
  std::uint64_t first = 0;
  std::string output;

  void add(CLI::App& app) {
    app.add_option("--seed", seed, "seed")->capture_default_str();
    app.add_option("--n", n, "rows")->capture_default_str();
    app.add_option("--stream", stream, "training | calibration | validation | selection")->capture_default_str();
    app.add_option("--first", first, "index of the first draw within the stream")->capture_default_str();
    app.add_option("--output", output, "CSV path (default stdout)");
  }

  int run(std::ostream& out) const {
    SampleStream s{};
    if (stream == "training") {
      s = SampleStream::kTraining;
    } else if (stream == "calibration") {
      s = SampleStream::kCalibration;
    } else if (stream == "validation") {
      s = SampleStream::kValidation;
    } else if (stream == "selection") {
      s = SampleStream::kSelection;
    } else {
      throw DomainError("--stream must be training, calibration, validation or selection");
    }
    ExampleConfig ex;
    ex.seed = seed;
    const Dataset data = sample_example(n, ex, s, first);
    if (output.empty() || output == "-") {
      write_dataset_csv(out, data);
    } else {
      std::ofstream f(output);
      if (!f) throw ParseError("cannot write " + output);
      write_dataset_csv(f, data);
    }
    return kOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic error bounds for black-box predictors", "probscale"};
  app.require_subcommand(1);

  SampleSizeCmd sample_size;
  CalibrateCmd calibrate;
  FamilyCmd family;
  ValidateCmd validate;
  CoverageCmd coverage;
  SynthCmd synth;
  auto* c_sample = app.add_subcommand("sample-size", "calibration sample size N and discard rank r");
  auto* c_calibrate = app.add_subcommand("calibrate", "fixed or conditioned bound for one predictor");
  auto* c_family = app.add_subcommand("family", "calibrate and select within a kernel predictor family");
  auto* c_validate = app.add_subcommand("validate", "violation ratio of a saved calibration on fresh data");
  auto* c_coverage = app.add_subcommand("coverage", "Monte Carlo check of the 1-delta guarantee");
  auto* c_synth = app.add_subcommand("synth-data", "write synthetic benchmark data as CSV");
  sample_size.add(*c_sample);
  calibrate.add(*c_calibrate);
  family.add(*c_family);
  validate.add(*c_validate);
  coverage.add(*c_coverage);
  synth.add(*c_synth);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_sample->parsed()) return sample_size.run(out);
    if (c_calibrate->parsed()) return calibrate.run(out);
    if (c_family->parsed()) return family.run(out);
    if (c_validate->parsed()) return validate.run(out);
    if (c_coverage->parsed()) return coverage.run(out, err);
    if (c_synth->parsed()) return synth.run(out);
  } catch (const ContractError& e) {
    err << "contract violation: " << e.what() << '\n';
    return kContract;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const EvaluationError& e) {
    err << "evaluation failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed report: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace probscale::cli
