#pragma once

// Locally weighted kernel ridge regression and Parzen scale estimation.
//
// For a query x the central estimate minimizes
//   J(θ; x) = θᵀ Σ_θ θ + Σ_i (y_i − θᵀφ(x_i))² Γ(x, x_i),   Γ(x, z) = exp(−λ‖x − z‖),
// and T(x) = θ_c(x)ᵀ φ(x). The dual form works with k(a, b) = φ(a)ᵀ Σ_θ⁻¹ φ(b)
// directly, so φ may be infinite dimensional (e.g. the RBF kernel).
// σ̂²(x) is the Γ-weighted mean of squared training residuals.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "probscale/dataset.hpp"
#include "probscale/kernels.hpp"

namespace probscale {

enum class Norm { kEuclidean, kManhattan, kMax };

double distance(std::span<const double> a, std::span<const double> b, Norm norm = Norm::kEuclidean);

/// amplitude · exp(−‖a − b‖² / lengthscale_sq)
struct KernelConfig {
  double amplitude = 50.0;
  double lengthscale_sq = 0.2;

  void validate() const;
};

/// Γ(a, b) = exp(−λ‖a − b‖)
struct WeightConfig {
  double lambda = 1.0;
  Norm norm = Norm::kEuclidean;

  void validate() const;
};

using KernelFn = std::function<double(std::span<const double>, std::span<const double>)>;

double exp_weight(std::span<const double> a, std::span<const double> b, const WeightConfig& cfg);
double rbf_kernel(std::span<const double> a, std::span<const double> b, const KernelConfig& cfg);
KernelFn make_rbf_kernel(const KernelConfig& cfg);

/// Explicit feature map φ and regularizer Σ_θ (symmetric positive definite).
struct PrimalConfig {
  std::function<Eigen::VectorXd(std::span<const double>)> feature_map;
  Eigen::MatrixXd regularizer;

  /// Σ_θ = τ·I of size n_theta.
  static PrimalConfig ridge(std::function<Eigen::VectorXd(std::span<const double>)> feature_map,
                            Eigen::Index n_theta, double tau = 1.0);

  /// Throws DomainError if Σ_θ is not symmetric positive definite.
  void validate() const;
};

/// k(a, b) = φ(a)ᵀ Σ_θ⁻¹ φ(b), the kernel whose dual fit reproduces the primal one.
KernelFn make_feature_kernel(const PrimalConfig& primal);

struct LocalFit {
  double prediction;
  /// ŷ_i(x) = θ_c(x)ᵀφ(x_i) for every training row i (length M).
  std::vector<double> local_estimates;
  /// Training rows that entered the solve, ascending. All M rows unless truncated.
  std::vector<std::size_t> support;
  std::vector<double> query;
};

/// Dual (kernel-trick) local fit. With W = diag(Γ(query, x_i)) solves
/// (W^½ K W^½ + I) β = W^½ y, α = W^½ β, then T = Σ α_i k(query, x_i).
/// `truncation` > 0 solves on only that many training points with the largest Γ
/// (ties by lower row index); 0 means exact. Local estimates cover all M rows
/// either way.
LocalFit fit_local_dual(const Dataset& train, const KernelFn& kernel, const WeightConfig& weight,
                        std::span<const double> query, std::size_t truncation = 0);
LocalFit fit_local_dual(const Dataset& train, const KernelConfig& kernel, const WeightConfig& weight,
                        std::span<const double> query, std::size_t truncation = 0);

/// Primal local fit: (Σ_θ + Σ_i Γ_i φ_i φ_iᵀ) θ = Σ_i Γ_i y_i φ_i.
LocalFit fit_local_primal(const Dataset& train, const PrimalConfig& primal, const WeightConfig& weight,
                          std::span<const double> query);

inline constexpr double kDefaultSigmaFloor = 1e-9;

struct ParzenEstimate {
  double sigma;
  /// All weights underflowed to zero and the unweighted RMS was used.
  bool fell_back;
};

/// sqrt(Σ r_i² w_i / Σ w_i), floored at `floor`.
ParzenEstimate parzen_sigma_weighted(std::span<const double> residuals, std::span<const double> weights,
                                     double floor = kDefaultSigmaFloor);

/// Parzen estimate at `query` with w_i = Γ(query, x_i) over all training rows.
ParzenEstimate parzen_sigma(const Dataset& train, std::span<const double> residuals,
                            const WeightConfig& weight, std::span<const double> query,
                            double floor = kDefaultSigmaFloor);

enum class ResidualMode {
  /// Residuals y_i − T(x_i), with T evaluated once at every training input.
  /// σ̂ sums over all training rows.
  kFixedPredictor,
  /// Residuals y_i − ŷ_i(x) from the local fit at the query itself. Under
  /// truncation σ̂ sums over the rows that fit was solved on.
  kLocal,
};

struct LocalModelConfig {
  KernelConfig kernel;
  WeightConfig weight;
  ResidualMode residual_mode = ResidualMode::kLocal;
  /// Neighbourhood size per query; 0 keeps all training rows.
  std::size_t truncation = 300;
  double sigma_floor = kDefaultSigmaFloor;
};

/// Training Gram matrix K_ij = k(x_i, x_j), shareable across models with the same kernel.
using GramMatrix = Eigen::MatrixXd;
std::shared_ptr<const GramMatrix> compute_gram(const Dataset& train, const KernelConfig& kernel,
                                               Execution exec = Execution::kParallel);

/// T(x) and σ̂(x) from one local RBF fit. Immutable after construction and
/// safe to evaluate concurrently.
class LocalKernelModel {
 public:
  LocalKernelModel(std::shared_ptr<const Dataset> train, LocalModelConfig config,
                   std::shared_ptr<const GramMatrix> gram = nullptr, Execution exec = Execution::kParallel);

  LocalFit fit(std::span<const double> query) const;
  PairValue evaluate(std::span<const double> query) const;
  ParzenEstimate sigma_at(std::span<const double> query) const;

  const LocalModelConfig& config() const noexcept { return config_; }
  const Dataset& train() const noexcept { return *train_; }

 private:
  PairValue evaluate_fit(const LocalFit& fit, std::span<const double> query, bool* fell_back) const;

  std::shared_ptr<const Dataset> train_;
  LocalModelConfig config_;
  std::shared_ptr<const GramMatrix> gram_;
  std::vector<double> fixed_residuals_;
};

ModelPair make_model_pair(std::shared_ptr<const LocalKernelModel> model);

struct FamilyConfig {
  KernelConfig kernel;
  std::vector<double> lambdas;
  ResidualMode residual_mode = ResidualMode::kLocal;
  std::size_t truncation = 300;
  Norm norm = Norm::kEuclidean;
  double sigma_floor = kDefaultSigmaFloor;
  /// Gram matrices above this many training rows are not cached.
  std::size_t max_cached_gram_rows = 4096;
};

/// One (T_j, σ̂_j) pair per λ_j; λ values must be positive and distinct.
std::vector<ModelPair> build_family(std::shared_ptr<const Dataset> train, const FamilyConfig& config,
                                    Execution exec = Execution::kParallel);

}  // namespace probscale
