#include "riccatitron/controller.hpp"

#include <algorithm>
#include <cmath>

namespace riccatitron {

int DefaultLookahead(const ProblemScales& scales, const RiccatiInfinite& ricc_inf, long T) {
  Require(T >= 1, "horizon T must be positive");
  Require(ricc_inf.gamma < 1.0, "γ∞ must be below 1");
  const double k = ricc_inf.kappa;
  const double b = scales.beta_star;
  const double g = scales.gamma_star_cap;
  const double Td = static_cast<double>(T);
  const double arg = k * k * b * b * scales.psi_star * g * g * Td * Td;
  const double h = 2.0 / (1.0 - ricc_inf.gamma) * std::log(arg);
  return std::max(0, static_cast<int>(std::ceil(h)));
}

LossRegularity ComputeLossRegularity(const LinearSystem& system, const ProblemScales& /*scales*/,
                                     const RiccatiInfinite& ricc_inf, const DapSet& set,
                                     double /*kappa0*/, double /*gamma0*/) {
  const double decay = 1.0 / (1.0 - set.gamma);
  const double sigma_norm = OpNorm(ricc_inf.Sigma);
  // ‖q*_{∞;h}‖ ≤ ‖Σ∞⁻¹Bᵀ‖ κ∞ ‖P∞‖ / (1 − γ∞) since ‖(Acl∞ᵀ)^i‖ ≤ κ∞ γ∞^i.
  const Matrix gain = ricc_inf.Sigma.llt().solve(system.B().transpose());
  const double dq_star = OpNorm(gain) * ricc_inf.kappa * OpNorm(ricc_inf.P) / (1.0 - ricc_inf.gamma);
  LossRegularity r;
  r.D_q = std::max(set.R * decay, dq_star);
  r.D_oco = 2.0 * set.R * decay * std::sqrt(static_cast<double>(std::min(system.dx(), system.du())));
  // ‖feature map‖_op ≤ √m for unit-norm disturbances; the residual is at most 2 D_q.
  r.G_oco = 4.0 * std::sqrt(static_cast<double>(set.m)) * sigma_norm * r.D_q;
  r.alpha = 1.0 / (8.0 * sigma_norm * r.D_q * r.D_q);
  return r;
}

RiccatitronConfig DefaultConfig(const LinearSystem& system, const ProblemScales& scales,
                                const RiccatiInfinite& ricc_inf, double kappa0, double gamma0, long T,
                                const ConfigOverrides& overrides) {
  RiccatitronConfig config{};
  config.ricc_inf = ricc_inf;
  config.h = overrides.h.value_or(DefaultLookahead(scales, ricc_inf, T));
  config.dap_set = DefaultDapSet(scales, ricc_inf, kappa0, gamma0, T);
  if (overrides.m) config.dap_set.m = *overrides.m;
  if (overrides.R) config.dap_set.R = *overrides.R;
  if (overrides.gamma) config.dap_set.gamma = *overrides.gamma;
  if (overrides.dap_norm) config.dap_set.norm = *overrides.dap_norm;
  Require(config.h >= 0, "lookahead h must be nonnegative");
  Require(config.dap_set.m >= 1, "DAP length m must be positive");
  Require(config.dap_set.R > 0.0, "DAP radius R must be positive");
  Require(config.dap_set.gamma >= 0.0 && config.dap_set.gamma < 1.0, "DAP decay γ must lie in [0, 1)");

  config.regularity = ComputeLossRegularity(system, scales, ricc_inf, config.dap_set, kappa0, gamma0);
  const LossRegularity& reg = config.regularity;
  const OnsParams ons = OnsDefaultParams(reg.G_oco, reg.D_oco, reg.alpha);
  config.learner = overrides.learner;
  config.eta_ons = overrides.eta_ons.value_or(ons.eta);
  config.epsilon_ons = overrides.epsilon_ons.value_or(ons.epsilon);
  config.epsilon_vaw = overrides.epsilon_vaw.value_or(OpNorm(ricc_inf.Sigma) * reg.D_q * reg.D_q /
                                                      (reg.D_oco * reg.D_oco));
  Require(config.eta_ons > 0.0 && config.epsilon_ons > 0.0 && config.epsilon_vaw > 0.0,
          "learner parameters must be positive");
  return config;
}

namespace {

LearnerFactory MakeFactory(const RiccatitronConfig& config) {
  const int du = config.ricc_inf.system.du();
  const int dx = config.ricc_inf.system.dx();
  ConstraintSet C = ConstraintSet::MakeDap(config.dap_set, du, dx);
  if (config.learner == LearnerKind::kOns) {
    return [C, eta = config.eta_ons, eps = config.epsilon_ons]() -> std::unique_ptr<OnlineLearner> {
      return std::make_unique<OnsLearner>(eta, eps, C);
    };
  }
  return [C, eps = config.epsilon_vaw, sigma = config.ricc_inf.Sigma]() -> std::unique_ptr<OnlineLearner> {
    return std::make_unique<VawLearner>(eps, sigma, C);
  };
}

}  // namespace

Riccatitron::Riccatitron(RiccatitronConfig config)
    : config_(std::move(config)),
      dx_(config_.ricc_inf.system.dx()),
      du_(config_.ricc_inf.system.du()),
      gains_(QstarInfiniteGains(config_.ricc_inf, config_.h)),
      learner_(MakeFactory(config_), config_.h),
      current_(DapPolicy::Zero(config_.dap_set.m, du_, dx_)) {}

Vector Riccatitron::DisturbanceAt(long s) const {
  // window_ ends at w_{t_−1}
  const long first = t_ - static_cast<long>(window_.size());
  if (s < 1) return Vector::Zero(dx_);
  if (s < first || s > t_ - 1) throw ProtocolError("disturbance outside the retained window");
  return window_.at(static_cast<size_t>(s - first));
}

std::vector<Vector> Riccatitron::HistoryAt(long s) const {
  const int m = config_.dap_set.m;
  std::vector<Vector> history;
  history.reserve(static_cast<size_t>(m));
  for (int i = 1; i <= m && s - i >= 1; ++i) history.push_back(DisturbanceAt(s - i));
  return history;
}

Vector Riccatitron::Act(const Vector& x) {
  if (acted_) throw ProtocolError("Act called twice in round " + std::to_string(t_));
  Require(x.size() == dx_, "state has the wrong dimension");
  const int m = config_.dap_set.m;
  const std::vector<Vector> history = HistoryAt(t_);
  const Matrix features = BiasFeatureMatrix(history, m, du_, dx_);
  const Vector theta = learner_.Predict(features);
  current_ = Devectorize(theta, m, du_, dx_);
  acted_ = true;
  return -config_.ricc_inf.K * x - features * theta;
}

void Riccatitron::Observe(const Vector& w) {
  if (!acted_) throw ProtocolError("Observe called before Act in round " + std::to_string(t_));
  if (w.size() != dx_) throw ProtocolError("disturbance has the wrong dimension");
  if (!w.allFinite() || w.norm() > 1.0 + 1e-12) {
    throw ProtocolError("disturbance violates the normalization ‖w_t‖ ≤ 1");
  }
  window_.push_back(w);
  const auto capacity = static_cast<size_t>(config_.dap_set.m + config_.h + 1);
  while (window_.size() > capacity) window_.pop_front();

  const long t = t_;
  ++t_;
  acted_ = false;
  last_loss_.reset();
  if (t < config_.h + 1) return;

  const long s = t - config_.h;
  QuadraticLoss loss;
  loss.A = BiasFeatureMatrix(HistoryAt(s), config_.dap_set.m, du_, dx_);
  loss.b = Vector::Zero(du_);
  for (int i = 1; i <= config_.h + 1; ++i) loss.b.noalias() += gains_[static_cast<size_t>(i - 1)] * DisturbanceAt(s + i - 1);
  loss.Sigma = config_.ricc_inf.Sigma;
  learner_.Feed(s, loss);
  last_loss_ = std::move(loss);
  last_loss_round_ = s;
}

}  // namespace riccatitron
