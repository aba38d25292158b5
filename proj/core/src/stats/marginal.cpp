#include "purrfect/stats/marginal.hpp"

#include <cmath>
#include <numbers>

#include "purrfect/error.hpp"

namespace purrfect::stats {
namespace {

struct LinkValue {
  double mu, d1, d2;  // inverse link and its first two derivatives in eta
};

/// Golub-Welsch nodes/weights for integrals against exp(-x^2).
struct HermiteRule {
  Eigen::VectorXd nodes, weights;

  explicit HermiteRule(int n) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(i / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    nodes = eig.eigenvalues();
    weights = std::sqrt(std::numbers::pi) * eig.eigenvectors().row(0).array().square().transpose();
  }
};

const HermiteRule& hermite64() {
  static const HermiteRule rule(64);
  return rule;
}

LinkValue logistic_link(double eta) {
  const double p = 1.0 / (1.0 + std::exp(-eta));
  const double w = p * (1.0 - p);
  return {p, w, w * (1.0 - 2.0 * p)};
}

LinkValue link(const GlmmFit& fit, MarginalMode mode, double eta) {
  if (fit.family == Family::GaussianIdentity) return {eta, 1.0, 0.0};
  if (mode == MarginalMode::Conditional || fit.sigma_u == 0.0) return logistic_link(eta);
  const HermiteRule& rule = hermite64();
  LinkValue out{0, 0, 0};
  for (Eigen::Index k = 0; k < rule.nodes.size(); ++k) {
    const LinkValue v = logistic_link(eta + std::sqrt(2.0) * fit.sigma_u * rule.nodes[k]);
    const double w = rule.weights[k] / std::sqrt(std::numbers::pi);
    out.mu += w * v.mu;
    out.d1 += w * v.d1;
    out.d2 += w * v.d2;
  }
  return out;
}

Estimate delta(double value, const Eigen::VectorXd& gradient, const Eigen::MatrixXd& vcov) {
  const double var = gradient.dot(vcov * gradient);
  return wald(value, std::sqrt(std::max(0.0, var)));
}

Eigen::VectorXd slope_direction(double haptic) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(kFixedEffects);
  e[2] = 1.0;
  e[3] = haptic;
  return e;
}

}  // namespace

std::string_view to_string(MarginalMode m) noexcept {
  return m == MarginalMode::Conditional ? "conditional" : "integrated";
}

MarginalMode marginal_mode_from_string(std::string_view name) {
  if (name == "conditional") return MarginalMode::Conditional;
  if (name == "integrated") return MarginalMode::Integrated;
  throw Error(Errc::ConfigError, "marginal mode must be conditional or integrated");
}

void to_json(nlohmann::json& j, const MarginalSummary& m) {
  j = {{"family", to_string(m.family)},
       {"mode", to_string(m.mode)},
       {"prediction", {{"audio_only", m.prediction[0]}, {"audio_haptic", m.prediction[1]}}},
       {"contrast_haptic_minus_audio", m.contrast},
       {"slope", {{"audio_only", m.slope[0]}, {"audio_haptic", m.slope[1]}}},
       {"average_slope", m.average_slope}};
}

MarginalSummary marginal_predictions(const GlmmFit& fit, const ObservationTable& table,
                                     MarginalMode mode) {
  if (table.empty()) throw Error(Errc::InsufficientData, "no rows to average over");
  if (fit.beta.size() != kFixedEffects) {
    throw Error(Errc::ValidationError, "fit does not have the four fixed effects");
  }
  const auto n = static_cast<double>(table.size());
  std::array<double, 2> pred{0, 0}, slope{0, 0};
  std::array<Eigen::VectorXd, 2> pred_grad, slope_grad;
  double avg_slope = 0.0;
  Eigen::VectorXd avg_grad = Eigen::VectorXd::Zero(kFixedEffects);
  for (int g = 0; g < 2; ++g) {
    pred_grad[g] = Eigen::VectorXd::Zero(kFixedEffects);
    slope_grad[g] = Eigen::VectorXd::Zero(kFixedEffects);
  }
  for (const auto& row : table.rows) {
    for (int g = 0; g < 2; ++g) {
      const Eigen::VectorXd x = design_row(g, row.trial_number);
      const LinkValue v = link(fit, mode, x.dot(fit.beta));
      const double b_trial = fit.beta[2] + fit.beta[3] * g;
      pred[g] += v.mu;
      pred_grad[g] += v.d1 * x;
      slope[g] += b_trial * v.d1;
      slope_grad[g] += b_trial * v.d2 * x + v.d1 * slope_direction(g);
      if (g == row.haptic) {
        avg_slope += b_trial * v.d1;
        avg_grad += b_trial * v.d2 * x + v.d1 * slope_direction(g);
      }
    }
  }
  MarginalSummary out;
  out.family = fit.family;
  out.mode = mode;
  for (int g = 0; g < 2; ++g) {
    out.prediction[g] = delta(pred[g] / n, pred_grad[g] / n, fit.vcov);
    out.slope[g] = delta(slope[g] / n, slope_grad[g] / n, fit.vcov);
  }
  out.contrast = delta((pred[1] - pred[0]) / n, (pred_grad[1] - pred_grad[0]) / n, fit.vcov);
  out.average_slope = delta(avg_slope / n, avg_grad / n, fit.vcov);
  return out;
}

std::vector<CurvePoint> prediction_curve(const GlmmFit& fit, int haptic, std::span<const int> trials,
                                         MarginalMode mode) {
  std::vector<CurvePoint> curve;
  curve.reserve(trials.size());
  for (int t : trials) {
    const Eigen::VectorXd x = design_row(haptic, t);
    const LinkValue v = link(fit, mode, x.dot(fit.beta));
    curve.push_back({t, haptic, delta(v.mu, v.d1 * x, fit.vcov)});
  }
  return curve;
}

}  // namespace purrfect::stats
