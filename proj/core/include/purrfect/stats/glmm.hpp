#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "purrfect/datastore.hpp"

namespace purrfect::stats {

enum class Family { BinomialLogit, GaussianIdentity };

std::string_view to_string(Family f) noexcept;

/// response ~ haptic + trial + haptic:trial + (1 | participant_id)
///
/// The fixed-effect structure is the only one supported; the response column
/// is `correct` for the binomial family and `response_time_s` for the
/// Gaussian family. trial_number enters uncentered.
struct GlmmSpec {
  Family family = Family::BinomialLogit;

  static GlmmSpec accuracy() { return {Family::BinomialLogit}; }
  static GlmmSpec response_time() { return {Family::GaussianIdentity}; }
};

inline constexpr int kFixedEffects = 4;
inline constexpr std::array<std::string_view, kFixedEffects> kCoefficientNames = {
    "(Intercept)", "haptic", "trial", "haptic:trial"};

/// Design for one fit. Rows are stored grouped: rows of group g occupy
/// [group_start[g], group_start[g + 1]). Groups keep first-appearance order.
struct ModelData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<Eigen::Index> group_start;
  std::vector<std::string> group_labels;

  Eigen::Index rows() const noexcept { return X.rows(); }
  std::size_t groups() const noexcept { return group_labels.size(); }
};

ModelData build_model_data(const ObservationTable& table, Family family);

/// Design row [1, haptic, trial, haptic * trial].
Eigen::Vector4d design_row(double haptic, double trial);

/// Laplace approximation to the binomial-logit marginal log-likelihood with
/// the random intercept written as u = sigma * b, b ~ N(0, 1). The objective
/// is even in sigma, so sigma may be optimized without a bound.
class LaplaceObjective {
 public:
  explicit LaplaceObjective(const ModelData& data) : data_(data) {}

  /// Returns the log-likelihood; fills the gradient w.r.t. (beta, sigma) and
  /// per-group conditional modes of b when requested.
  double evaluate(const Eigen::VectorXd& beta, double sigma, Eigen::VectorXd* gradient = nullptr,
                  std::vector<double>* modes = nullptr) const;

 private:
  const ModelData& data_;
};

/// Exact Gaussian marginal log-likelihood (ML) for the random-intercept LMM,
/// parameterized by (beta, sigma_u, log sigma_e).
class GaussianObjective {
 public:
  explicit GaussianObjective(const ModelData& data) : data_(data) {}

  double evaluate(const Eigen::VectorXd& beta, double sigma_u, double log_sigma_e,
                  Eigen::VectorXd* gradient = nullptr, std::vector<double>* blups = nullptr) const;

 private:
  const ModelData& data_;
};

struct FitOptions {
  int max_iterations = 200;
  /// Stop when half the Newton decrement g' H^-1 g falls below this.
  double decrement_tolerance = 1e-12;
  /// Holds sigma_u at this value and optimizes the remaining parameters.
  std::optional<double> fixed_sigma_u;
};

struct GlmmFit {
  Family family = Family::BinomialLogit;
  Eigen::VectorXd beta;
  double sigma_u = 0.0;
  /// Gaussian family only.
  double residual_sigma = 0.0;
  Eigen::MatrixXd vcov;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_max_abs = 0.0;
  /// Modal random intercepts (binomial) or BLUPs (Gaussian), in group order.
  std::vector<double> u_hat;
  std::vector<std::string> group_labels;
  std::size_t n_obs = 0;

  Eigen::VectorXd std_errors() const { return vcov.diagonal().cwiseSqrt(); }
};

void to_json(nlohmann::json& j, const GlmmFit& fit);

/// Maximum-likelihood fit from beta = 0, sigma_u = 1 (and sigma_e = sd(y) for
/// the Gaussian family) by damped Newton with a finite-difference Hessian of
/// the analytic gradient. vcov is the beta block of the inverse observed
/// information at the optimum.
///
/// Errors: Errc::InsufficientData (< 2 participants), Errc::RankDeficient,
/// Errc::NotConverged.
GlmmFit fit_glmm(const ModelData& data, Family family, const FitOptions& options = {});
GlmmFit fit_glmm(const ObservationTable& table, const GlmmSpec& spec,
                 const FitOptions& options = {});

}  // namespace purrfect::stats
