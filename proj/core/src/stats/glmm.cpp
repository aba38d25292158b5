#include "purrfect/stats/glmm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

#include "purrfect/error.hpp"
#include "purrfect/stats/descriptive.hpp"

namespace purrfect::stats {
namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Conditional log-likelihood of one group at eta = eta0 + shift.
double group_loglik(const Eigen::Ref<const Eigen::VectorXd>& eta0,
                    const Eigen::Ref<const Eigen::VectorXd>& y, double shift) {
  double ll = 0.0;
  for (Eigen::Index j = 0; j < eta0.size(); ++j) {
    const double eta = eta0[j] + shift;
    ll += y[j] * eta - softplus(eta);
  }
  return ll;
}

/// Maximizes l(sigma * b) - b^2 / 2 over b; the objective is strictly concave.
double find_mode(const Eigen::Ref<const Eigen::VectorXd>& eta0,
                 const Eigen::Ref<const Eigen::VectorXd>& y, double sigma) {
  if (sigma == 0.0) return 0.0;
  auto objective = [&](double b) { return group_loglik(eta0, y, sigma * b) - 0.5 * b * b; };
  double b = 0.0;
  double f = objective(b);
  for (int it = 0; it < 200; ++it) {
    double resid = 0.0, weight = 0.0;
    for (Eigen::Index j = 0; j < eta0.size(); ++j) {
      const double p = logistic(eta0[j] + sigma * b);
      resid += y[j] - p;
      weight += p * (1.0 - p);
    }
    const double grad = sigma * resid - b;
    const double step = grad / (1.0 + sigma * sigma * weight);
    if (std::abs(step) < 1e-6) {
      // Inside the quadratic region: plain Newton, where objective
      // differences would be lost to rounding.
      b += step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(b))) break;
      continue;
    }
    double t = 1.0;
    double b_new = b + step;
    double f_new = objective(b_new);
    while (f_new < f && t > 1e-12) {
      t *= 0.5;
      b_new = b + t * step;
      f_new = objective(b_new);
    }
    b = b_new;
    f = f_new;
  }
  return b;
}

using Gradient = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct NewtonResult {
  Eigen::VectorXd theta;
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  int iterations = 0;
  bool converged = false;
};

Eigen::MatrixXd fd_hessian(const Gradient& f, const Eigen::VectorXd& theta) {
  const Eigen::Index n = theta.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd gp(n), gm(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double step = 1e-5 * std::max(1.0, std::abs(theta[i]));
    Eigen::VectorXd tp = theta, tm = theta;
    tp[i] += step;
    tm[i] -= step;
    f(tp, &gp);
    f(tm, &gm);
    h.col(i) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

/// Damped Newton ascent. The search direction solves (-H + lambda I) d = g with
/// the smallest lambda that makes the system positive definite.
NewtonResult maximize(const Gradient& f, Eigen::VectorXd theta, const FitOptions& options) {
  NewtonResult r;
  const Eigen::Index n = theta.size();
  Eigen::VectorXd g(n);
  double value = f(theta, &g);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    r.iterations = iter;
    const Eigen::MatrixXd neg_h = -fd_hessian(f, theta);
    const double scale = std::max(1.0, neg_h.diagonal().cwiseAbs().maxCoeff());
    Eigen::VectorXd direction;
    double lambda = 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::LLT<Eigen::MatrixXd> llt(neg_h + lambda * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        direction = llt.solve(g);
        if (direction.allFinite()) break;
      }
      lambda = lambda == 0.0 ? 1e-10 * scale : lambda * 10.0;
      direction.resize(0);
    }
    if (direction.size() == 0) break;

    const double decrement = 0.5 * g.dot(direction);
    if (decrement < options.decrement_tolerance) {
      r.converged = true;
      break;
    }
    double t = 1.0;
    Eigen::VectorXd trial(n), g_trial(n);
    double trial_value = -INFINITY;
    for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
      trial = theta + t * direction;
      trial_value = f(trial, &g_trial);
      if (std::isfinite(trial_value) && trial_value >= value - 1e-12 * std::abs(value)) break;
    }
    if (!(trial_value >= value - 1e-12 * std::abs(value))) break;
    const double moved = (trial - theta).cwiseAbs().maxCoeff();
    theta = trial;
    value = trial_value;
    g = g_trial;
    if (moved < 1e-14 * (1.0 + theta.cwiseAbs().maxCoeff())) {
      r.converged = decrement < 1e-6;
      break;
    }
  }
  r.theta = theta;
  r.value = value;
  r.gradient = g;
  r.hessian = fd_hessian(f, theta);
  return r;
}

void check_design(const ModelData& data) {
  if (data.groups() < 2) {
    throw Error(Errc::InsufficientData, "mixed model needs at least two participants");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);
  if (qr.rank() < data.X.cols()) {
    throw Error(Errc::RankDeficient, "design matrix rank " + std::to_string(qr.rank()) + " < " +
                                         std::to_string(data.X.cols()));
  }
}

/// Inverse observed information restricted to the first p parameters.
Eigen::MatrixXd beta_vcov(const Eigen::MatrixXd& hessian, Eigen::Index p, bool sigma_on_boundary) {
  const Eigen::MatrixXd info = -hessian;
  if (!sigma_on_boundary) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
      if (inv.allFinite() && (inv.diagonal().array() > 0).all()) {
        return inv.topLeftCorner(p, p);
      }
    }
  }
  // At sigma = 0 the beta/sigma cross terms vanish, so the beta block alone
  // carries the information about beta.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info.topLeftCorner(p, p));
  return ldlt.solve(Eigen::MatrixXd::Identity(p, p));
}

}  // namespace

std::string_view to_string(Family f) noexcept {
  return f == Family::BinomialLogit ? "binomial-logit" : "gaussian-identity";
}

Eigen::Vector4d design_row(double haptic, double trial) {
  return {1.0, haptic, trial, haptic * trial};
}

ModelData build_model_data(const ObservationTable& table, Family family) {
  std::vector<std::string> labels;
  std::map<std::string, std::size_t> index;
  for (const auto& o : table.rows) {
    if (index.emplace(o.participant_id, labels.size()).second) labels.push_back(o.participant_id);
  }
  std::vector<std::vector<const Observation*>> by_group(labels.size());
  for (const auto& o : table.rows) by_group[index[o.participant_id]].push_back(&o);

  ModelData data;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  data.X.resize(n, kFixedEffects);
  data.y.resize(n);
  data.group_labels = labels;
  Eigen::Index row = 0;
  for (const auto& group : by_group) {
    data.group_start.push_back(row);
    for (const Observation* o : group) {
      data.X.row(row) = design_row(o->haptic, o->trial_number).transpose();
      data.y[row] = family == Family::BinomialLogit ? o->correct : o->response_time_s;
      ++row;
    }
  }
  data.group_start.push_back(row);
  return data;
}

double LaplaceObjective::evaluate(const Eigen::VectorXd& beta, double sigma,
                                  Eigen::VectorXd* gradient, std::vector<double>* modes) const {
  const Eigen::Index p = data_.X.cols();
  const Eigen::VectorXd eta0_all = data_.X * beta;
  if (gradient) gradient->setZero(p + 1);
  if (modes) modes->assign(data_.groups(), 0.0);
  const double s2 = sigma * sigma;
  double total = 0.0;
  for (std::size_t g = 0; g < data_.groups(); ++g) {
    const Eigen::Index start = data_.group_start[g];
    const Eigen::Index len = data_.group_start[g + 1] - start;
    const auto eta0 = eta0_all.segment(start, len);
    const auto y = data_.y.segment(start, len);
    const double b = find_mode(eta0, y, sigma);
    if (modes) (*modes)[g] = b;

    double ll = 0.0, resid = 0.0, w = 0.0, w1 = 0.0;
    Eigen::VectorXd x_resid = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd x_w = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd x_w1 = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < len; ++j) {
      const double eta = eta0[j] + sigma * b;
      const double pr = logistic(eta);
      const double wj = pr * (1.0 - pr);
      const double w1j = wj * (1.0 - 2.0 * pr);
      ll += y[j] * eta - softplus(eta);
      resid += y[j] - pr;
      w += wj;
      w1 += w1j;
      if (gradient) {
        const auto x = data_.X.row(start + j).transpose();
        x_resid += (y[j] - pr) * x;
        x_w += wj * x;
        x_w1 += w1j * x;
      }
    }
    const double d = 1.0 + s2 * w;
    total += ll - 0.5 * b * b - 0.5 * std::log(d);

    if (gradient) {
      // Envelope theorem for the mode terms; the log-determinant also moves
      // through db/dtheta = -g_b,theta / g_bb.
      const Eigen::VectorXd db_dbeta = -sigma * x_w / d;
      const double db_dsigma = (resid - sigma * b * w) / d;
      gradient->head(p) += x_resid - (0.5 / d) * (s2 * x_w1 + s2 * sigma * w1 * db_dbeta);
      (*gradient)[p] += b * resid - (0.5 / d) * (2.0 * sigma * w + s2 * b * w1 +
                                                 s2 * sigma * w1 * db_dsigma);
    }
  }
  return total;
}

double GaussianObjective::evaluate(const Eigen::VectorXd& beta, double sigma_u,
                                   double log_sigma_e, Eigen::VectorXd* gradient,
                                   std::vector<double>* blups) const {
  const Eigen::Index p = data_.X.cols();
  const Eigen::VectorXd resid_all = data_.y - data_.X * beta;
  const double s2 = std::exp(2.0 * log_sigma_e);
  const double tau2 = sigma_u * sigma_u;
  if (gradient) gradient->setZero(p + 2);
  if (blups) blups->assign(data_.groups(), 0.0);
  double total = 0.0;
  for (std::size_t g = 0; g < data_.groups(); ++g) {
    const Eigen::Index start = data_.group_start[g];
    const Eigen::Index len = data_.group_start[g + 1] - start;
    const auto r = resid_all.segment(start, len);
    const double n = static_cast<double>(len);
    const double sum = r.sum();
    const double a = s2 + n * tau2;
    const double c = tau2 / a;
    const double q = r.squaredNorm() - c * sum * sum;
    total += -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * (n - 1.0) * std::log(s2) -
             0.5 * std::log(a) - q / (2.0 * s2);
    if (blups) (*blups)[g] = c * sum;
    if (gradient) {
      const auto x = data_.X.middleRows(start, len);
      gradient->head(p) += (x.transpose() * r - c * sum * x.colwise().sum().transpose()) / s2;
      (*gradient)[p] += -n * sigma_u / a + sigma_u * sum * sum / (a * a);
      (*gradient)[p + 1] += -(n - 1.0) - s2 / a + q / s2 - sum * sum * tau2 / (a * a);
    }
  }
  return total;
}

GlmmFit fit_glmm(const ModelData& data, Family family, const FitOptions& options) {
  check_design(data);
  const Eigen::Index p = data.X.cols();
  const bool free_sigma = !options.fixed_sigma_u.has_value();
  const double fixed_sigma = options.fixed_sigma_u.value_or(0.0);

  Gradient objective;
  Eigen::VectorXd start;
  const LaplaceObjective laplace(data);
  const GaussianObjective gaussian(data);
  const double log_sd_y = std::log(std::max(1e-8, sample_sd(std::span<const double>(
                                                      data.y.data(), data.y.size()))));
  if (family == Family::BinomialLogit) {
    start = Eigen::VectorXd::Zero(p + (free_sigma ? 1 : 0));
    if (free_sigma) start[p] = 1.0;
    objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd* grad) {
      const double sigma = free_sigma ? t[p] : fixed_sigma;
      Eigen::VectorXd full;
      const double v = laplace.evaluate(t.head(p), sigma, grad ? &full : nullptr);
      if (grad) *grad = full.head(t.size());
      return v;
    };
  } else {
    start = Eigen::VectorXd::Zero(p + (free_sigma ? 2 : 1));
    if (free_sigma) start[p] = 1.0;
    start[start.size() - 1] = log_sd_y;
    objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd* grad) {
      const double sigma = free_sigma ? t[p] : fixed_sigma;
      const double log_se = t[t.size() - 1];
      Eigen::VectorXd full;
      const double v = gaussian.evaluate(t.head(p), sigma, log_se, grad ? &full : nullptr);
      if (grad) {
        grad->resize(t.size());
        grad->head(p) = full.head(p);
        if (free_sigma) (*grad)[p] = full[p];
        (*grad)[t.size() - 1] = full[p + 1];
      }
      return v;
    };
  }

  const NewtonResult r = maximize(objective, start, options);
  if (!r.converged || !r.theta.allFinite()) {
    throw Error(Errc::NotConverged, "Newton iterations stopped after " +
                                        std::to_string(r.iterations) + " steps, |grad| = " +
                                        std::to_string(r.gradient.cwiseAbs().maxCoeff()));
  }

  GlmmFit fit;
  fit.family = family;
  fit.beta = r.theta.head(p);
  const double sigma = free_sigma ? r.theta[p] : fixed_sigma;
  fit.sigma_u = std::abs(sigma);
  fit.loglik = r.value;
  fit.converged = true;
  fit.iterations = r.iterations;
  fit.gradient_max_abs = r.gradient.cwiseAbs().maxCoeff();
  fit.group_labels = data.group_labels;
  fit.n_obs = static_cast<std::size_t>(data.rows());
  const bool boundary = !free_sigma || fit.sigma_u < 1e-6;
  fit.vcov = beta_vcov(r.hessian, p, boundary);

  if (family == Family::BinomialLogit) {
    std::vector<double> modes;
    laplace.evaluate(fit.beta, sigma, nullptr, &modes);
    fit.u_hat.reserve(modes.size());
    for (double b : modes) fit.u_hat.push_back(sigma * b);
  } else {
    const double log_se = r.theta[r.theta.size() - 1];
    fit.residual_sigma = std::exp(log_se);
    gaussian.evaluate(fit.beta, sigma, log_se, nullptr, &fit.u_hat);
  }
  return fit;
}

GlmmFit fit_glmm(const ObservationTable& table, const GlmmSpec& spec, const FitOptions& options) {
  return fit_glmm(build_model_data(table, spec.family), spec.family, options);
}

void to_json(nlohmann::json& j, const GlmmFit& fit) {
  nlohmann::json coefficients = nlohmann::json::array();
  const Eigen::VectorXd se = fit.std_errors();
  for (Eigen::Index i = 0; i < fit.beta.size(); ++i) {
    nlohmann::json c = wald(fit.beta[i], se[i]);
    c["name"] = kCoefficientNames[static_cast<std::size_t>(i)];
    coefficients.push_back(c);
  }
  nlohmann::json vcov = nlohmann::json::array();
  for (Eigen::Index i = 0; i < fit.vcov.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < fit.vcov.cols(); ++k) row.push_back(fit.vcov(i, k));
    vcov.push_back(row);
  }
  nlohmann::json random = nlohmann::json::object();
  for (std::size_t g = 0; g < fit.u_hat.size(); ++g) random[fit.group_labels[g]] = fit.u_hat[g];
  j = {{"family", to_string(fit.family)},
       {"coefficients", coefficients},
       {"sigma_u", fit.sigma_u},
       {"loglik", fit.loglik},
       {"vcov", vcov},
       {"random_intercepts", random},
       {"n_obs", fit.n_obs},
       {"n_groups", fit.group_labels.size()},
       {"converged", fit.converged},
       {"iterations", fit.iterations},
       {"gradient_max_abs", fit.gradient_max_abs}};
  if (fit.family == Family::GaussianIdentity) j["residual_sigma"] = fit.residual_sigma;
}

}  // namespace purrfect::stats
