// Acceptance suite: one PASS/FAIL line per criterion. Nonzero exit if any
// criterion fails that is not listed as a documented gap in the README.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "../tools/commands.hpp"
#include "oracles.hpp"
#include "probscale/calibration.hpp"
#include "probscale/kernel_predictor.hpp"
#include "probscale/order_statistics.hpp"
#include "probscale/sample_complexity.hpp"
#include "probscale/synthetic.hpp"

using namespace probscale;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

json run_cli_json(const std::vector<std::string>& args, int* code) {
  std::ostringstream out;
  std::ostringstream err;
  *code = cli::run(args, out, err);
  const std::string text = out.str();
  // Reports are either the whole output or its last line.
  auto whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded()) return whole;
  const auto end = text.find_last_not_of('\n');
  if (end == std::string::npos) return {};
  const auto start = text.rfind('\n', end);
  return json::parse(text.substr(start == std::string::npos ? 0 : start + 1, end - start), nullptr, false);
}

// 1. ------------------------------------------------------------------------

Outcome sample_size_exactness() {
  int c1 = 0;
  int c2 = 0;
  const auto a = run_cli_json({"sample-size", "--epsilon", "0.05", "--delta", "1e-6"}, &c1);
  const auto b = run_cli_json(
      {"sample-size", "--epsilon", "0.05", "--delta", "1e-6", "--n-family", "10", "--constant", "exact"}, &c2);
  const bool ok = c1 == 0 && c2 == 0 && a.value("n_samples", 0) == 2065 && a.value("discard_rank", 0) == 51 &&
                  b.value("n_samples", 0) == 2407 && b.value("discard_rank", 0) == 60;
  return {ok, fmt("N=%d r=%d; family N=%d r=%d", a.value("n_samples", 0), a.value("discard_rank", 0),
                  b.value("n_samples", 0), b.value("discard_rank", 0))};
}

// 2. ------------------------------------------------------------------------

// Exact lower tails B(k; n, p) for every k ≤ n in one rational pass.
std::vector<double> exact_tails(std::uint64_t n, double p_double) {
  using boost::multiprecision::cpp_int;
  using oracle::Rational;
  const Rational p = oracle::exact_rational(p_double);
  const Rational q = Rational(1) - p;
  std::vector<Rational> p_pow(n + 1, Rational(1));
  std::vector<Rational> q_pow(n + 1, Rational(1));
  for (std::uint64_t i = 1; i <= n; ++i) {
    p_pow[i] = p_pow[i - 1] * p;
    q_pow[i] = q_pow[i - 1] * q;
  }
  std::vector<double> out(n + 1);
  Rational sum = 0;
  cpp_int choose = 1;
  for (std::uint64_t i = 0; i <= n; ++i) {
    if (i > 0) choose = choose * (n - i + 1) / i;
    sum += Rational(choose) * p_pow[i] * q_pow[n - i];
    out[i] = static_cast<double>(sum);
  }
  return out;
}

Outcome binomial_consistency() {
  const double b1 = binomial_tail(50, 2065, 0.05);
  const double b2 = binomial_tail(59, 2407, 0.05);
  const bool specs_ok = b1 <= 1e-6 && b2 <= 1e-7;

  std::vector<double> ps{1e-3, 0.05, 0.1, 0.25, 0.5, 0.75, 0.95, 0.999};
  std::mt19937_64 gen(60);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 4; ++i) ps.push_back(unit(gen));

  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t n = 0; n <= 60; ++n) {
    for (double p : ps) {
      const auto exact = exact_tails(n, p);
      for (std::uint64_t k = 0; k <= n; ++k) {
        if (exact[k] <= 0.0) continue;
        worst = std::max(worst, std::abs(binomial_tail(k, n, p) - exact[k]) / exact[k]);
        ++checked;
      }
    }
  }
  return {specs_ok && worst <= 1e-10,
          fmt("B(50;2065)=%.3e <= 1e-6, B(59;2407)=%.3e <= 1e-7; max rel err %.2e over %zu (k,n,p) cases", b1, b2,
              worst, checked)};
}

// 3. ------------------------------------------------------------------------

Outcome fixed_bound_reproduction() {
  const ProbabilityLevels levels(0.05, 1e-6);
  const auto spec = min_samples_lemma(levels);
  std::vector<double> rhos;
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ExampleConfig cfg;
    cfg.seed = seed;
    const auto calib = sample_example(spec.n_samples(), cfg, SampleStream::kCalibration);
    const auto fixed = calibrate_fixed(oracle_predictor(), calib, spec, levels);
    const auto valid = sample_example(100000, cfg, SampleStream::kValidation);
    const auto report =
        evaluate_violation([rho = fixed.rho](std::span<const double>) { return rho; }, oracle_predictor(), valid);
    rhos.push_back(fixed.rho);
    worst_ratio = std::max(worst_ratio, report.ratio);
  }
  const double med = median(rhos);
  const auto [lo, hi] = std::minmax_element(rhos.begin(), rhos.end());
  return {med >= 9.3 && med <= 12.3 && worst_ratio <= 0.065,
          fmt("median rho %.4f in [9.3,12.3] (range %.3f..%.3f); worst violation ratio %.5f <= 0.065", med, *lo, *hi,
              worst_ratio)};
}

// 4. ------------------------------------------------------------------------

Outcome normalization_invariance() {
  const ProbabilityLevels levels(0.05, 1e-6);
  const auto spec = min_samples_lemma(levels);
  ExampleConfig cfg;
  cfg.seed = 4;
  const auto calib = sample_example(spec.n_samples(), cfg, SampleStream::kCalibration);

  // A deliberately imperfect scale so the check is not tied to the true σ.
  auto base_sigma = [](double x) { return 1.0 + 0.8 * std::abs(x) + 0.1 * std::sin(3.0 * x); };
  const auto base = calibrate_conditioned(oracle_predictor(),
                                          SigmaHandle([&](std::span<const double> x) { return base_sigma(x[0]); }),
                                          calib, spec, levels);
  double worst_bound = 0.0;
  double worst_gamma = 0.0;
  for (double xi : {0.1, 1.0, 10.0}) {
    const SigmaHandle scaled([&](std::span<const double> x) { return xi * base_sigma(x[0]); });
    const auto got = calibrate_conditioned(oracle_predictor(), scaled, calib, spec, levels);
    worst_gamma = std::max(worst_gamma, std::abs(got.gamma_bar - base.gamma_bar / xi) / (base.gamma_bar / xi));
    for (int k = 0; k < 100; ++k) {
      const double x = -2.5 + 5.0 * k / 99.0;
      const double a = got.gamma_bar * xi * base_sigma(x);
      const double b = base.gamma_bar * base_sigma(x);
      worst_bound = std::max(worst_bound, std::abs(a - b) / b);
    }
  }
  return {worst_gamma <= 1e-12 && worst_bound <= 1e-12,
          fmt("max rel deviation: gamma_bar*xi %.2e, bound %.2e (tol 1e-12)", worst_gamma, worst_bound)};
}

// 5. ------------------------------------------------------------------------

Outcome kernel_trick_equivalence() {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> x_dist(-1.5, 1.5);
  std::normal_distribution<double> y_dist(0.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 30)(gen);
    const Eigen::Index n_theta = std::uniform_int_distribution<Eigen::Index>(1, 6)(gen);
    std::vector<double> xs(m);
    std::vector<double> ys(m);
    for (std::size_t i = 0; i < m; ++i) {
      xs[i] = x_dist(gen);
      ys[i] = y_dist(gen);
    }
    const auto train = Dataset::scalar(xs, ys);
    Eigen::MatrixXd a(n_theta, n_theta);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = y_dist(gen) / 2.0;
    PrimalConfig primal{[n_theta](std::span<const double> x) {
                          Eigen::VectorXd phi(n_theta);
                          double v = 1.0;
                          for (Eigen::Index k = 0; k < n_theta; ++k, v *= x[0]) phi[k] = v;
                          return phi;
                        },
                        a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n_theta, n_theta)};
    const WeightConfig w{std::uniform_real_distribution<double>(0.2, 3.0)(gen)};
    const std::vector<double> q{x_dist(gen)};
    const auto p = fit_local_primal(train, primal, w, q);
    const auto d = fit_local_dual(train, make_feature_kernel(primal), w, q);
    auto rel = [](double u, double v) { return std::abs(u - v) / std::max(1.0, std::abs(v)); };
    worst = std::max(worst, rel(d.prediction, p.prediction));
    for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, rel(d.local_estimates[i], p.local_estimates[i]));
  }
  return {worst <= 1e-8, fmt("max relative disagreement %.2e over 50 instances (tol 1e-8)", worst)};
}

// 6. ------------------------------------------------------------------------

Outcome family_reproduction() {
  const ProbabilityLevels levels(0.05, 1e-6);
  const std::vector<double> lambdas{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto spec = min_samples_family(levels, lambdas.size(), kExactLemmaConstant);
  if (spec.n_samples() != 2407 || spec.discard_rank() != 60) return {false, "unexpected family spec"};

  int good = 0;
  std::string rows;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ExampleConfig cfg;
    cfg.seed = seed;
    auto train = std::make_shared<const Dataset>(sample_example(2065, cfg, SampleStream::kTraining));
    const auto calib = sample_example(spec.n_samples(), cfg, SampleStream::kCalibration);
    const auto valid = sample_example(2065, cfg, SampleStream::kValidation);

    FamilyConfig fc;
    fc.lambdas = lambdas;
    fc.truncation = 300;
    const auto family = build_family(train, fc);
    const auto result = calibrate_family(family, calib, levels, spec);
    const std::size_t j = result.selected_index;
    const double g = result.selected_gamma_bar();

    const auto pairs = evaluate_pairs(family[j], valid);
    std::size_t violations = 0;
    for (std::size_t i = 0; i < valid.size(); ++i) {
      if (std::abs(valid.y(i) - pairs[i].prediction) > g * pairs[i].sigma) ++violations;
    }
    const double family_ratio = static_cast<double>(violations) / static_cast<double>(valid.size());
    const auto exact = evaluate_violation([](std::span<const double> x) { return exact_bound(x[0], 0.05); },
                                          oracle_predictor(), valid);

    const double lambda = lambdas[j];
    const bool ok = (lambda == 1.0 || lambda == 2.0) && g >= 1.6 && g <= 2.8 && family_ratio <= 0.05 &&
                    exact.ratio >= 0.035 && exact.ratio <= 0.065;
    good += ok ? 1 : 0;
    rows += fmt("\n      seed %2llu: lambda=%g gamma_bar=%.4f family_ratio=%.4f exact_ratio=%.4f %s",
                static_cast<unsigned long long>(seed), lambda, g, family_ratio, exact.ratio, ok ? "ok" : "miss");
  }
  return {good >= 6, fmt("%d/10 seeds meet every band (need a majority)", good) + rows};
}

// 7. ------------------------------------------------------------------------

Outcome coverage() {
  int code = 0;
  const auto fixed = run_cli_json({"coverage", "--epsilon", "0.1", "--delta", "0.2", "--reps", "200"}, &code);
  const double fraction = fixed.value("failure_fraction", 1.0);
  const bool fixed_ok = code == 0 && fraction <= 0.30;

  CoverageConfig cfg;
  cfg.mode = CoverageMode::kConditioned;
  cfg.example.seed = 1;
  const auto cond = run_coverage_experiment(cfg);
  std::vector<double> gammas;
  for (const auto& run : cond.runs) gammas.push_back(run.bound);
  const double got = median(gammas);

  // Empirical oracle: rank-r statistic of N independent |Z|, Z ~ N(0,1).
  std::mt19937_64 gen(424242);
  std::normal_distribution<double> z;
  std::vector<double> ref;
  for (int rep = 0; rep < 4000; ++rep) {
    std::vector<double> draw(cond.n_samples);
    for (auto& v : draw) v = std::abs(z(gen));
    ref.push_back(oracle::rank_by_sort(std::move(draw), cond.discard_rank));
  }
  const double want = median(ref);
  const bool cond_ok = std::abs(got - want) <= 0.15 * want;
  return {fixed_ok && cond_ok, fmt("fixed failure_fraction %.3f <= 0.30; conditioned median gamma_bar %.4f vs "
                                   "|N(0,1)| rank-%zu-of-%zu oracle %.4f (within %.1f%%, tol 15%%)",
                                   fraction, got, cond.discard_rank, cond.n_samples, want,
                                   100.0 * std::abs(got - want) / want)};
}

// 8. ------------------------------------------------------------------------

Outcome order_statistic_oracle() {
  std::mt19937_64 gen(8);
  // Every rank is checked exhaustively up to this size; larger inputs check
  // both ends in full plus a random interior sample (see README).
  constexpr std::size_t kExhaustive = 4000;
  std::size_t mismatches = 0;
  std::size_t ranks_checked = 0;
  std::size_t largest = 0;
  for (int input = 0; input < 1000; ++input) {
    std::size_t n = 0;
    if (input < 10) {
      n = 100000 - static_cast<std::size_t>(input) * 1000;
    } else {
      n = std::uniform_int_distribution<std::size_t>(1, kExhaustive)(gen);
    }
    largest = std::max(largest, n);
    std::vector<double> values(n);
    // Few distinct levels on half the inputs, so duplicates are frequent.
    const int levels = input % 2 == 0 ? 10 : 1'000'000;
    std::uniform_int_distribution<int> level(0, levels - 1);
    for (auto& v : values) v = 0.5 * level(gen) - 7.0;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    std::vector<double> shuffled = values;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    const ScoreCollection s(values);
    const ScoreCollection t(shuffled);

    std::vector<std::uint64_t> ranks;
    if (n <= kExhaustive) {
      ranks.resize(n);
      std::iota(ranks.begin(), ranks.end(), 1);
    } else {
      for (std::uint64_t r = 1; r <= 100; ++r) {
        ranks.push_back(r);
        ranks.push_back(n + 1 - r);
      }
      std::uniform_int_distribution<std::uint64_t> any(1, n);
      for (int k = 0; k < 300; ++k) ranks.push_back(any(gen));
      std::sort(ranks.begin(), ranks.end());
    }
    double previous = std::numeric_limits<double>::infinity();
    for (auto r : ranks) {
      const double got = generalized_max(s, r);
      if (got != sorted[r - 1] || got > previous || generalized_max(t, r) != got) ++mismatches;
      previous = got;
      ++ranks_checked;
    }
  }
  return {mismatches == 0, fmt("%zu ranks over 1000 inputs (largest N=%zu): %zu mismatches", ranks_checked, largest,
                               mismatches)};
}

struct Criterion {
  const char* name;
  double time_limit_s;  // 0 = none stated
  std::function<Outcome()> run;
  bool documented_gap = false;  // FAIL is still printed; does not set the exit code
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"1 sample-size exactness", 1.0, sample_size_exactness},
      {"2 binomial consistency", 10.0, binomial_consistency},
      {"3 fixed-bound reproduction", 30.0, fixed_bound_reproduction},
      {"4 normalization invariance", 0.0, normalization_invariance},
      {"5 kernel-trick equivalence", 10.0, kernel_trick_equivalence},
      {"6 family reproduction", 600.0, family_reproduction, true},
      {"7 coverage of the 1-delta guarantee", 120.0, coverage},
      {"8 order-statistic oracle", 0.0, order_statistic_oracle},
  };
  int failed = 0;
  int blocking = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit_s == 0.0 || seconds < c.time_limit_s;
    const bool pass = outcome.pass && in_time;
    failed += pass ? 0 : 1;
    blocking += pass || c.documented_gap ? 0 : 1;
    std::printf("[%s] AC%s (%.2f s%s): %s%s\n", pass ? "PASS" : "FAIL", c.name, seconds,
                c.time_limit_s > 0 ? fmt(", limit %.0f s", c.time_limit_s).c_str() : "", outcome.detail.c_str(),
                !pass && c.documented_gap ? " [documented gap, see README]" : "");
    std::fflush(stdout);
  }
  std::printf("%d of %zu acceptance criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  if (failed > blocking) std::printf("%d failure(s) are documented gaps\n", failed - blocking);
  return blocking == 0 ? 0 : 1;
}
