#include "probscale/kernel_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "probscale/errors.hpp"

namespace probscale {

namespace {

void check_dims(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DomainError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

// Rows in the neighbourhood of `query`, ascending, with their distances.
std::pair<std::vector<std::size_t>, std::vector<double>> neighbourhood(const Dataset& train,
                                                                       std::span<const double> query,
                                                                       Norm norm, std::size_t truncation) {
  const std::size_t m_all = train.size();
  std::vector<double> dist(m_all);
  for (std::size_t i = 0; i < m_all; ++i) dist[i] = distance(query, train.x(i), norm);

  std::vector<std::size_t> rows(m_all);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (truncation > 0 && truncation < m_all) {
    auto closer = [&](std::size_t a, std::size_t b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    };
    std::nth_element(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(truncation), rows.end(), closer);
    rows.resize(truncation);
    std::sort(rows.begin(), rows.end());
  }
  std::vector<double> d(rows.size());
  for (std::size_t a = 0; a < rows.size(); ++a) d[a] = dist[rows[a]];
  return {std::move(rows), std::move(d)};
}

// Solves the stabilized weighted kernel ridge system on the given rows.
// `gram_entry(a, b)` returns k(x_rows[a], x_rows[b]); `add_column(j, c, out)`
// adds c·k(x_i, x_j) to out[i] for every training row i.
template <class GramEntry, class AddColumn>
LocalFit solve_dual(const Dataset& train, GramEntry&& gram_entry, AddColumn&& add_column,
                    const std::vector<std::size_t>& rows, const std::vector<double>& dist,
                    const WeightConfig& weight, std::span<const double> query,
                    const std::function<double(std::size_t)>& query_kernel) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  // Per-thread workspaces: local fits run back to back on every query.
  thread_local Eigen::MatrixXd gram;
  thread_local Eigen::MatrixXd system;
  thread_local Eigen::VectorXd sqrt_w;
  thread_local Eigen::VectorXd rhs;
  gram.resize(m, m);
  system.resize(m, m);
  sqrt_w.resize(m);
  rhs.resize(m);

  for (Eigen::Index a = 0; a < m; ++a) sqrt_w[a] = std::exp(-0.5 * weight.lambda * dist[a]);
  for (Eigen::Index b = 0; b < m; ++b) {
    for (Eigen::Index a = b; a < m; ++a) {
      const double k = gram_entry(a, b);
      gram(a, b) = k;
      gram(b, a) = k;
      system(a, b) = sqrt_w[a] * k * sqrt_w[b];
    }
    system(b, b) += 1.0;
  }
  for (Eigen::Index a = 0; a < m; ++a) rhs[a] = sqrt_w[a] * train.y(rows[static_cast<std::size_t>(a)]);

  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(system);
  if (llt.info() != Eigen::Success) {
    // The factorization overwrote `system`; rebuild it for the diagnostic.
    Eigen::MatrixXd full = sqrt_w.asDiagonal() * gram * sqrt_w.asDiagonal();
    full.diagonal().array() += 1.0;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(full);
    std::ostringstream msg;
    msg << "local kernel system (" << m << "x" << m
        << ") is not positive definite; kernel Gram matrix is not PSD? rcond estimate "
        << ldlt.rcond();
    throw NumericalError(msg.str());
  }
  const Eigen::VectorXd alpha = sqrt_w.cwiseProduct(llt.solve(rhs));
  if (!alpha.allFinite()) throw NumericalError("local kernel solve produced non-finite coefficients");

  LocalFit fit;
  fit.prediction = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) fit.prediction += alpha[a] * query_kernel(static_cast<std::size_t>(a));
  if (rows.size() == train.size()) {
    const Eigen::VectorXd local = gram.selfadjointView<Eigen::Lower>() * alpha;
    fit.local_estimates.assign(local.data(), local.data() + m);
  } else {
    fit.local_estimates.assign(train.size(), 0.0);
    for (Eigen::Index a = 0; a < m; ++a) {
      add_column(rows[static_cast<std::size_t>(a)], alpha[a], fit.local_estimates);
    }
  }
  fit.support = rows;
  fit.query.assign(query.begin(), query.end());
  return fit;
}

}  // namespace

double distance(std::span<const double> a, std::span<const double> b, Norm norm) {
  check_dims(a, b);
  switch (norm) {
    case Norm::kEuclidean:
      return std::sqrt(squared_euclidean(a, b));
    case Norm::kManhattan: {
      double s = 0.0;
      for (std::size_t d = 0; d < a.size(); ++d) s += std::abs(a[d] - b[d]);
      return s;
    }
    case Norm::kMax: {
      double s = 0.0;
      for (std::size_t d = 0; d < a.size(); ++d) s = std::max(s, std::abs(a[d] - b[d]));
      return s;
    }
  }
  return 0.0;
}

void KernelConfig::validate() const {
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) throw DomainError("kernel amplitude must be positive");
  if (!(lengthscale_sq > 0.0) || !std::isfinite(lengthscale_sq)) {
    throw DomainError("kernel lengthscale_sq must be positive");
  }
}

void WeightConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("weight lambda must be positive");
}

double exp_weight(std::span<const double> a, std::span<const double> b, const WeightConfig& cfg) {
  return std::exp(-cfg.lambda * distance(a, b, cfg.norm));
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, const KernelConfig& cfg) {
  check_dims(a, b);
  return cfg.amplitude * std::exp(-squared_euclidean(a, b) / cfg.lengthscale_sq);
}

KernelFn make_rbf_kernel(const KernelConfig& cfg) {
  cfg.validate();
  return [cfg](std::span<const double> a, std::span<const double> b) { return rbf_kernel(a, b, cfg); };
}

PrimalConfig PrimalConfig::ridge(std::function<Eigen::VectorXd(std::span<const double>)> feature_map,
                                 Eigen::Index n_theta, double tau) {
  if (!(tau > 0.0)) throw DomainError("ridge regularizer tau must be positive");
  return {std::move(feature_map), tau * Eigen::MatrixXd::Identity(n_theta, n_theta)};
}

void PrimalConfig::validate() const {
  if (!feature_map) throw DomainError("primal config needs a feature map");
  if (regularizer.rows() == 0 || regularizer.rows() != regularizer.cols()) {
    throw DomainError("regularizer must be a nonempty square matrix");
  }
  if (!regularizer.isApprox(regularizer.transpose())) throw DomainError("regularizer must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(regularizer);
  if (llt.info() != Eigen::Success) throw DomainError("regularizer must be positive definite");
}

KernelFn make_feature_kernel(const PrimalConfig& primal) {
  primal.validate();
  const Eigen::MatrixXd inverse = primal.regularizer.llt().solve(
      Eigen::MatrixXd::Identity(primal.regularizer.rows(), primal.regularizer.cols()));
  auto phi = primal.feature_map;
  return [phi, inverse](std::span<const double> a, std::span<const double> b) {
    return phi(a).dot(inverse * phi(b));
  };
}

LocalFit fit_local_dual(const Dataset& train, const KernelFn& kernel, const WeightConfig& weight,
                        std::span<const double> query, std::size_t truncation) {
  weight.validate();
  if (query.size() != train.dim()) throw DomainError("query dimension does not match training data");
  auto [rows, dist] = neighbourhood(train, query, weight.norm, truncation);
  auto entry = [&](Eigen::Index a, Eigen::Index b) {
    return kernel(train.x(rows[static_cast<std::size_t>(a)]), train.x(rows[static_cast<std::size_t>(b)]));
  };
  auto add_column = [&](std::size_t j, double c, std::vector<double>& out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * kernel(train.x(i), train.x(j));
  };
  auto query_kernel = [&](std::size_t a) { return kernel(query, train.x(rows[a])); };
  return solve_dual(train, entry, add_column, rows, dist, weight, query, query_kernel);
}

LocalFit fit_local_dual(const Dataset& train, const KernelConfig& kernel, const WeightConfig& weight,
                        std::span<const double> query, std::size_t truncation) {
  return fit_local_dual(train, make_rbf_kernel(kernel), weight, query, truncation);
}

LocalFit fit_local_primal(const Dataset& train, const PrimalConfig& primal, const WeightConfig& weight,
                          std::span<const double> query) {
  primal.validate();
  weight.validate();
  if (query.size() != train.dim()) throw DomainError("query dimension does not match training data");
  const Eigen::Index n_theta = primal.regularizer.rows();

  Eigen::MatrixXd normal = primal.regularizer;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_theta);
  std::vector<Eigen::VectorXd> features;
  features.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    Eigen::VectorXd phi = primal.feature_map(train.x(i));
    if (phi.size() != n_theta) throw DomainError("feature map size does not match the regularizer");
    const double w = exp_weight(query, train.x(i), weight);
    normal.noalias() += w * phi * phi.transpose();
    rhs.noalias() += (w * train.y(i)) * phi;
    features.push_back(std::move(phi));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) throw NumericalError("primal normal matrix factorization failed");
  const Eigen::VectorXd theta = llt.solve(rhs);

  LocalFit fit;
  fit.prediction = theta.dot(primal.feature_map(query));
  fit.local_estimates.reserve(train.size());
  for (const auto& phi : features) fit.local_estimates.push_back(theta.dot(phi));
  fit.support.resize(train.size());
  std::iota(fit.support.begin(), fit.support.end(), std::size_t{0});
  fit.query.assign(query.begin(), query.end());
  return fit;
}

ParzenEstimate parzen_sigma_weighted(std::span<const double> residuals, std::span<const double> weights,
                                     double floor) {
  if (residuals.empty() || residuals.size() != weights.size()) {
    throw DomainError("parzen_sigma: residuals and weights must be nonempty and of equal length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw DomainError("parzen_sigma: weights must be nonnegative");
    num += residuals[i] * residuals[i] * weights[i];
    den += weights[i];
  }
  bool fell_back = false;
  if (!(den > 0.0)) {
    fell_back = true;
    num = 0.0;
    for (double r : residuals) num += r * r;
    den = static_cast<double>(residuals.size());
  }
  return {std::max(std::sqrt(num / den), floor), fell_back};
}

ParzenEstimate parzen_sigma(const Dataset& train, std::span<const double> residuals, const WeightConfig& weight,
                            std::span<const double> query, double floor) {
  weight.validate();
  if (residuals.size() != train.size()) throw DomainError("parzen_sigma: one residual per training row required");
  std::vector<double> w(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) w[i] = exp_weight(query, train.x(i), weight);
  return parzen_sigma_weighted(residuals, w, floor);
}

std::shared_ptr<const GramMatrix> compute_gram(const Dataset& train, const KernelConfig& kernel, Execution exec) {
  kernel.validate();
  const auto m = static_cast<Eigen::Index>(train.size());
  auto gram = std::make_shared<GramMatrix>(m, m);
  detail::indexed_map<int>(
      train.size(),
      [&](std::size_t b) {
        for (std::size_t a = 0; a < train.size(); ++a) {
          (*gram)(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              rbf_kernel(train.x(a), train.x(b), kernel);
        }
        return 0;
      },
      exec);
  return gram;
}

LocalKernelModel::LocalKernelModel(std::shared_ptr<const Dataset> train, LocalModelConfig config,
                                   std::shared_ptr<const GramMatrix> gram, Execution exec)
    : train_(std::move(train)), config_(config), gram_(std::move(gram)) {
  if (!train_) throw DomainError("local kernel model needs training data");
  config_.kernel.validate();
  config_.weight.validate();
  if (!(config_.sigma_floor > 0.0)) throw DomainError("sigma floor must be positive");
  if (gram_ && (gram_->rows() != static_cast<Eigen::Index>(train_->size()) || gram_->cols() != gram_->rows())) {
    throw DomainError("cached Gram matrix does not match the training set");
  }
  if (config_.residual_mode == ResidualMode::kFixedPredictor) {
    const auto predictions = detail::indexed_map<double>(
        train_->size(), [&](std::size_t i) { return fit(train_->x(i)).prediction; }, exec);
    fixed_residuals_.resize(train_->size());
    for (std::size_t i = 0; i < train_->size(); ++i) fixed_residuals_[i] = train_->y(i) - predictions[i];
  }
}

LocalFit LocalKernelModel::fit(std::span<const double> query) const {
  const Dataset& train = *train_;
  if (query.size() != train.dim()) throw DomainError("query dimension does not match training data");
  auto [rows, dist] = neighbourhood(train, query, config_.weight.norm, config_.truncation);
  auto query_kernel = [&](std::size_t a) { return rbf_kernel(query, train.x(rows[a]), config_.kernel); };
  if (gram_) {
    const GramMatrix& g = *gram_;
    auto entry = [&](Eigen::Index a, Eigen::Index b) {
      return g(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(a)]),
               static_cast<Eigen::Index>(rows[static_cast<std::size_t>(b)]));
    };
    auto add_column = [&](std::size_t j, double c, std::vector<double>& out) {
      Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) +=
          c * g.col(static_cast<Eigen::Index>(j));
    };
    return solve_dual(train, entry, add_column, rows, dist, config_.weight, query, query_kernel);
  }
  auto entry = [&](Eigen::Index a, Eigen::Index b) {
    return rbf_kernel(train.x(rows[static_cast<std::size_t>(a)]), train.x(rows[static_cast<std::size_t>(b)]),
                      config_.kernel);
  };
  auto add_column = [&](std::size_t j, double c, std::vector<double>& out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * rbf_kernel(train.x(i), train.x(j), config_.kernel);
  };
  return solve_dual(train, entry, add_column, rows, dist, config_.weight, query, query_kernel);
}

PairValue LocalKernelModel::evaluate_fit(const LocalFit& fit, std::span<const double> query,
                                         bool* fell_back) const {
  // Local residuals are only meaningful on the rows the fit was solved on;
  // fixed-predictor residuals do not depend on the query, so they all count.
  const bool local = config_.residual_mode == ResidualMode::kLocal;
  const std::size_t m = local ? fit.support.size() : train_->size();
  std::vector<double> residuals(m);
  std::vector<double> weights(m);
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t row = local ? fit.support[a] : a;
    residuals[a] = local ? train_->y(row) - fit.local_estimates[row] : fixed_residuals_[row];
    weights[a] = exp_weight(query, train_->x(row), config_.weight);
  }
  const auto parzen = parzen_sigma_weighted(residuals, weights, config_.sigma_floor);
  if (fell_back != nullptr) *fell_back = parzen.fell_back;
  return {fit.prediction, parzen.sigma};
}

PairValue LocalKernelModel::evaluate(std::span<const double> query) const {
  return evaluate_fit(fit(query), query, nullptr);
}

ParzenEstimate LocalKernelModel::sigma_at(std::span<const double> query) const {
  bool fell_back = false;
  const auto v = evaluate_fit(fit(query), query, &fell_back);
  return {v.sigma, fell_back};
}

ModelPair make_model_pair(std::shared_ptr<const LocalKernelModel> model) {
  if (!model) throw DomainError("make_model_pair: null model");
  return ModelPair{
      PredictorHandle([model](std::span<const double> x) { return model->fit(x).prediction; }),
      SigmaHandle([model](std::span<const double> x) { return model->evaluate(x).sigma; }),
      [model](std::span<const double> x) { return model->evaluate(x); },
  };
}

std::vector<ModelPair> build_family(std::shared_ptr<const Dataset> train, const FamilyConfig& config,
                                    Execution exec) {
  if (!train) throw DomainError("build_family: training data required");
  if (config.lambdas.empty()) throw DomainError("build_family: at least one lambda required");
  std::set<double> seen;
  for (double lambda : config.lambdas) {
    if (!(lambda > 0.0)) throw DomainError("build_family: lambdas must be positive");
    if (!seen.insert(lambda).second) throw DomainError("build_family: lambdas must be distinct");
  }
  config.kernel.validate();

  std::shared_ptr<const GramMatrix> gram;
  if (train->size() <= config.max_cached_gram_rows) gram = compute_gram(*train, config.kernel, exec);

  std::vector<ModelPair> family;
  family.reserve(config.lambdas.size());
  for (double lambda : config.lambdas) {
    LocalModelConfig member{config.kernel, WeightConfig{lambda, config.norm}, config.residual_mode,
                            config.truncation, config.sigma_floor};
    family.push_back(make_model_pair(std::make_shared<const LocalKernelModel>(train, member, gram, exec)));
  }
  return family;
}

}  // namespace probscale
