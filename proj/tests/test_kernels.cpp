#include <doctest.h>

#include <memory>
#include <stdexcept>
#include <string>

#include "probscale/errors.hpp"
#include "probscale/kernel_predictor.hpp"
#include "probscale/kernels.hpp"
#include "probscale/synthetic.hpp"

using namespace probscale;

// The parallel path must reproduce the serial reference element for element.

TEST_CASE("indexed_map") {
  const auto serial = detail::indexed_map<double>(1000, [](std::size_t i) { return 0.5 * i; }, Execution::kSerial);
  const auto parallel = detail::indexed_map<double>(1000, [](std::size_t i) { return 0.5 * i; }, Execution::kParallel);
  CHECK(serial == parallel);
  CHECK(detail::indexed_map<int>(0, [](std::size_t) { return 1; }, Execution::kParallel).empty());

  auto failing = [](std::size_t i) -> int {
    if (i == 300 || i == 700) throw std::runtime_error("boom " + std::to_string(i));
    return 0;
  };
  for (auto exec : {Execution::kSerial, Execution::kParallel}) {
    try {
      detail::indexed_map<int>(1000, failing, exec);
      FAIL("expected exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "boom 300");
    }
  }
}

TEST_CASE("batch evaluators agree across execution modes") {
  ExampleConfig cfg;
  cfg.seed = 6;
  const auto data = sample_example(5000, cfg, SampleStream::kValidation);
  const auto predictor = oracle_predictor();
  const ModelPair pair{predictor, exact_sigma_handle()};

  CHECK(evaluate_predictions(predictor, data, Execution::kSerial) ==
        evaluate_predictions(predictor, data, Execution::kParallel));

  const auto ps = evaluate_pairs(pair, data, Execution::kSerial);
  const auto pp = evaluate_pairs(pair, data, Execution::kParallel);
  REQUIRE(ps.size() == pp.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CHECK(ps[i].prediction == pp[i].prediction);
    CHECK(ps[i].sigma == pp[i].sigma);
  }

  const BoundFn bound = [](std::span<const double> x) { return exact_bound(x[0], 0.05); };
  const auto bs = evaluate_bounds(bound, data, Execution::kSerial);
  CHECK(bs == evaluate_bounds(bound, data, Execution::kParallel));

  const auto preds = evaluate_predictions(predictor, data);
  const auto cs = count_exceedances(data.ys(), preds, bs, Execution::kSerial);
  CHECK(cs == count_exceedances(data.ys(), preds, bs, Execution::kParallel));
  CHECK(cs > 0);
  CHECK(cs < data.size());
}

TEST_CASE("count_exceedances is strict and checks lengths") {
  const std::vector<double> ys{1.0, 2.0, 3.0};
  const std::vector<double> preds{0.0, 0.0, 0.0};
  const std::vector<double> bounds{1.0, 1.0, 1.0};
  for (auto exec : {Execution::kSerial, Execution::kParallel}) {
    CHECK(count_exceedances(ys, preds, bounds, exec) == 2);
  }
  CHECK_THROWS_AS(count_exceedances(ys, std::vector<double>{0.0}, bounds), DomainError);
}

TEST_CASE("kernel family evaluation agrees across execution modes") {
  ExampleConfig cfg;
  cfg.seed = 10;
  auto train = std::make_shared<const Dataset>(sample_example(600, cfg, SampleStream::kTraining));
  const auto queries = sample_example(200, cfg, SampleStream::kValidation);
  FamilyConfig fc;
  fc.lambdas = {1.0, 4.0};
  const auto serial_family = build_family(train, fc, Execution::kSerial);
  const auto parallel_family = build_family(train, fc, Execution::kParallel);
  for (std::size_t j = 0; j < fc.lambdas.size(); ++j) {
    const auto a = evaluate_pairs(serial_family[j], queries, Execution::kSerial);
    const auto b = evaluate_pairs(parallel_family[j], queries, Execution::kParallel);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].prediction == b[i].prediction);
      CHECK(a[i].sigma == b[i].sigma);
    }
  }
  KernelConfig k;
  CHECK(*compute_gram(*train, k, Execution::kSerial) == *compute_gram(*train, k, Execution::kParallel));
}
