#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "riccatitron/dap.hpp"
#include "riccatitron/lqr_core.hpp"
#include "riccatitron/oco.hpp"
#include "riccatitron/policy.hpp"
#include "riccatitron/riccati.hpp"

namespace riccatitron {

enum class LearnerKind { kOns, kVaw };

/// Bounds on the approximate-advantage losses over the DAP set.
struct LossRegularity {
  double D_q;    // bound on ‖q^M‖ for M in the set and on ‖q*_{∞;h}‖
  double D_oco;  // Frobenius diameter of the DAP set
  double G_oco;  // gradient norm bound
  double alpha;  // exp-concavity constant
};

struct RiccatitronConfig {
  int h = 0;
  DapSet dap_set;
  LearnerKind learner = LearnerKind::kVaw;
  double eta_ons = 1.0;
  double epsilon_ons = 1.0;
  double epsilon_vaw = 1.0;
  RiccatiInfinite ricc_inf;
  LossRegularity regularity{};
};

/// Optional replacements for the derived parameters.
struct ConfigOverrides {
  std::optional<int> h;
  std::optional<int> m;
  std::optional<double> R;
  std::optional<double> gamma;
  std::optional<DapSet::BlockNorm> dap_norm;
  std::optional<double> eta_ons;
  std::optional<double> epsilon_ons;
  std::optional<double> epsilon_vaw;
  LearnerKind learner = LearnerKind::kVaw;
};

/// h = ⌈2(1−γ∞)⁻¹ log(κ∞² β*² Ψ* Γ*² T²)⌉.
int DefaultLookahead(const ProblemScales& scales, const RiccatiInfinite& ricc_inf, long T);

/// Concrete (D_q, D_oco, G_oco, α) for a DAP set and lookahead.
LossRegularity ComputeLossRegularity(const LinearSystem& system, const ProblemScales& scales,
                                     const RiccatiInfinite& ricc_inf, const DapSet& set, double kappa0,
                                     double gamma0);

RiccatitronConfig DefaultConfig(const LinearSystem& system, const ProblemScales& scales,
                                const RiccatiInfinite& ricc_inf, double kappa0, double gamma0, long T,
                                const ConfigOverrides& overrides = {});

/// Online controller: plays −K∞x − q^{M_t}(w_{t−1..t−m}) with M_t from h+1
/// delayed base learners trained on approximate-advantage losses.
class Riccatitron final : public Policy {
 public:
  explicit Riccatitron(RiccatitronConfig config);

  Vector Act(const Vector& x) override;
  void Observe(const Vector& w) override;

  const RiccatitronConfig& config() const { return config_; }
  long round() const { return t_; }
  /// M_t played at the most recent round.
  const DapPolicy& current_policy() const { return current_; }
  /// Loss fed at the most recent Observe, if any, and the round it scores.
  const std::optional<QuadraticLoss>& last_loss() const { return last_loss_; }
  long last_loss_round() const { return last_loss_round_; }
  const DelayedLearner& learner() const { return learner_; }

 private:
  /// History w_{s−1}, w_{s−2}, … (most recent first) as seen at round s.
  std::vector<Vector> HistoryAt(long s) const;
  Vector DisturbanceAt(long s) const;

  RiccatitronConfig config_;
  int dx_;
  int du_;
  std::vector<Matrix> gains_;  // q*_{∞;h} gains
  DelayedLearner learner_;
  long t_ = 1;  // current round
  bool acted_ = false;
  DapPolicy current_;
  std::deque<Vector> window_;  // w_{t−L}, …, w_{t−1}, oldest first
  std::optional<QuadraticLoss> last_loss_;
  long last_loss_round_ = 0;
};

}  // namespace riccatitron
