#pragma once

#include "o2o/core.hpp"
#include "o2o/envs/linear_mdp.hpp"
#include "o2o/envs/reference_q.hpp"
#include "o2o/oracle/values.hpp"
#include "o2o/regression/ridge.hpp"
#include "o2o/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace o2o {

struct AgentConfig {
  ConfidenceConfig confidence;
  double lambda = 1.0;
  /// Use min over past episodes of the optimistic estimate instead of the
  /// current episode's value alone.
  bool running_min = false;
  /// Compare the maintained inverse against a fresh dense inverse each episode.
  bool audit_inverse = true;
  /// Keep per-episode Q^k / V^k tables (needed for the telescoping check).
  bool keep_tables = false;
  /// Width threshold for the per-stage wide-interval counters; <= 0 means beta
  /// for O2O-LSVI and H for the baseline.
  double width_threshold = 0.0;
};

enum class Branch : std::uint8_t { Ref, Ucb };

struct Transition {
  std::size_t s = 0;
  std::size_t a = 0;
  double r = 0.0;
  std::size_t next = 0;
};

struct EpisodeRecord {
  std::vector<Transition> transitions;
  std::vector<Branch> branch;
  /// Q_hat - Q_check at the visited pair of each stage.
  std::vector<double> widths;
};

struct PlannedStage {
  Vector w_hat;
  Vector w_check;
  const RidgeState* ridge = nullptr;
  double alpha = 0.0;
};

/// Output of the backward planning pass of one episode.
struct EpisodePlan {
  std::vector<PlannedStage> stages;
  std::vector<Matrix> q_hat;
  std::vector<Matrix> q_check;
  /// Q^k: Q_ref where the inclusion test passes, Q_hat elsewhere.
  std::vector<Matrix> q;
  /// 1 where Q^k took the reference value.
  std::vector<Matrix> ref_mask;
  /// V^k and V_check^k with H+1 entries (the last is zero).
  std::vector<Vector> v;
  std::vector<Vector> v_check;
};

/// Sufficient statistics of all past episodes: per stage a ridge state over
/// visited features and the (feature row, next state) visit counts. Targets
/// change every episode, so the regression right-hand side is rebuilt from
/// the counts at planning time.
class LsviHistory {
 public:
  LsviHistory(const LinearMdp& mdp, double lambda) {
    for (std::size_t h = 0; h < mdp.horizon(); ++h) {
      ridges_.emplace_back(mdp.d(), lambda);
      counts_.push_back(Matrix::Zero(static_cast<Eigen::Index>(mdp.num_pairs()), static_cast<Eigen::Index>(mdp.num_states())));
    }
  }

  void absorb(const LinearMdp& mdp, const EpisodeRecord& episode) {
    for (std::size_t h = 0; h < episode.transitions.size(); ++h) {
      const auto& t = episode.transitions[h];
      const auto row = static_cast<Eigen::Index>(mdp.row(t.s, t.a));
      ridges_[h].absorb(mdp.features().row(row));
      counts_[h](row, static_cast<Eigen::Index>(t.next)) += 1.0;
    }
    ++episodes_;
  }

  std::size_t episodes() const noexcept { return episodes_; }
  const RidgeState& ridge(std::size_t h) const { return ridges_.at(h); }
  const Matrix& counts(std::size_t h) const { return counts_.at(h); }

 private:
  std::vector<RidgeState> ridges_;
  std::vector<Matrix> counts_;
  std::size_t episodes_ = 0;
};

namespace detail {

/// sum over past samples of phi * clip(r + v_next(s'), 0, H).
inline Vector regression_rhs(const LinearMdp& mdp, std::size_t h, const Matrix& counts, const Vector& v_next) {
  const double top = static_cast<double>(mdp.horizon());
  Vector rhs = Vector::Zero(static_cast<Eigen::Index>(mdp.d()));
  const auto& reward = mdp.reward(h);
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    double acc = 0.0;
    bool any = false;
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      const double n = counts(i, j);
      if (n == 0.0) continue;
      any = true;
      acc += n * std::clamp(reward[i] + v_next[j], 0.0, top);
    }
    if (any) rhs += acc * mdp.features().row(i).transpose();
  }
  return rhs;
}

}  // namespace detail

/// Backward least-squares pass for episode k (1-based) given the k-1 past
/// episodes in `history`. With `q_ref == nullptr` the inclusion test is
/// disabled and Q^k = Q_hat. `prev_q_hat` feeds the running-min variant.
inline EpisodePlan plan_backward(const LinearMdp& mdp, const LsviHistory& history, const ReferenceQ* q_ref,
                                 double beta, double alpha, std::size_t k,
                                 const std::vector<Matrix>* prev_q_hat = nullptr) {
  const auto H = mdp.horizon();
  const auto S = static_cast<Eigen::Index>(mdp.num_states());
  const auto A = static_cast<Eigen::Index>(mdp.num_actions());
  const double top = static_cast<double>(H);
  const double half = 0.5 * beta;

  EpisodePlan plan;
  plan.stages.resize(H);
  plan.q_hat.assign(H, Matrix::Zero(S, A));
  plan.q_check.assign(H, Matrix::Zero(S, A));
  plan.q.assign(H, Matrix::Zero(S, A));
  plan.ref_mask.assign(H, Matrix::Zero(S, A));
  plan.v.assign(H + 1, Vector::Zero(S));
  plan.v_check.assign(H + 1, Vector::Zero(S));

  for (std::size_t h = H; h-- > 0;) {
    const RidgeState& ridge = history.ridge(h);
    auto& stage = plan.stages[h];
    stage.ridge = &ridge;
    stage.alpha = alpha;
    auto& qh = plan.q_hat[h];
    auto& qc = plan.q_check[h];

    if (k <= 1) {
      stage.w_hat = Vector::Zero(static_cast<Eigen::Index>(mdp.d()));
      stage.w_check = stage.w_hat;
      qh.setConstant(top);
      qc.setZero();
    } else {
      stage.w_hat = ridge.solve(detail::regression_rhs(mdp, h, history.counts(h), plan.v[h + 1]));
      stage.w_check = ridge.solve(detail::regression_rhs(mdp, h, history.counts(h), plan.v_check[h + 1]));
      const Matrix& phi = mdp.features();
      const Vector fit_hat = phi * stage.w_hat;
      const Vector fit_check = phi * stage.w_check;
      const Vector quad = (phi * ridge.gram_inv()).cwiseProduct(phi).rowwise().sum();
      for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < A; ++a) {
          const Eigen::Index i = s * A + a;
          if (quad[i] < -1e-10) throw NumericalDegeneracy("negative quadratic form in bonus");
          const double bonus = alpha * std::sqrt(std::max(quad[i], 0.0));
          qh(s, a) = std::min(top, fit_hat[i] + bonus);
          qc(s, a) = std::max(0.0, fit_check[i] - bonus);
        }
      if (prev_q_hat != nullptr && !prev_q_hat->empty()) qh = qh.cwiseMin((*prev_q_hat)[h]);
    }

    auto& q = plan.q[h];
    q = qh;
    if (q_ref != nullptr) {
      const Matrix& ref = q_ref->values[h];
      for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < A; ++a) {
          if (qc(s, a) >= ref(s, a) - half && qh(s, a) <= ref(s, a) + half) {
            q(s, a) = ref(s, a);
            plan.ref_mask[h](s, a) = 1.0;
          }
        }
    }
    plan.v[h] = q.rowwise().maxCoeff();
    plan.v_check[h] = qc.rowwise().maxCoeff();
  }
  return plan;
}

/// argmax_a Q^k_h(s, a), ties to the lowest action index.
inline std::size_t act_greedy(const EpisodePlan& plan, std::size_t s, std::size_t h) {
  return argmax_lowest(plan.q[h].row(static_cast<Eigen::Index>(s)));
}

struct EpisodeRow {
  std::size_t episode = 0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  std::size_t ref_branch_hits = 0;
  std::size_t ucb_branch_hits = 0;
  double max_width_visited = 0.0;
  std::size_t optimism_violation = 0;
};

struct EpisodeTables {
  std::vector<Matrix> q;
  std::vector<Vector> v;
};

struct RunResult {
  std::vector<double> regret_trace;
  std::vector<EpisodeRow> rows;
  std::vector<std::size_t> ref_counts;
  std::vector<std::size_t> ucb_counts;
  std::vector<std::size_t> m_h_counts;
  /// Visited (k,h) with Q^k < Q* - 1e-9, out of `optimism_checks`.
  std::size_t optimism_violations = 0;
  std::size_t optimism_checks = 0;
  /// Visited (k,h) where Q_check <= Q* <= Q_hat failed.
  std::size_t sandwich_violations = 0;
  /// Visited (k,h) with Q_check > Q_hat.
  std::size_t interval_inversions = 0;
  /// REF firings at pairs where the sandwich held, and how many of those had
  /// Q_ref != Q*. Only tracked for well-specified references.
  std::size_t ref_sound_checks = 0;
  std::size_t ref_unsound = 0;
  bool well_specified = true;
  double max_inverse_error = 0.0;
  double width_threshold = 0.0;
  std::uint64_t seed = 0;
  double elapsed_seconds = 0.0;
  std::vector<EpisodeRecord> episodes;
  std::vector<EpisodeTables> tables;

  double cum_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
  double ref_fraction() const {
    std::size_t ref = 0, all = 0;
    for (std::size_t h = 0; h < ref_counts.size(); ++h) {
      ref += ref_counts[h];
      all += ref_counts[h] + ucb_counts[h];
    }
    return all == 0 ? 0.0 : static_cast<double>(ref) / static_cast<double>(all);
  }
  double optimism_rate() const {
    return optimism_checks == 0 ? 1.0
                                : 1.0 - static_cast<double>(optimism_violations) / static_cast<double>(optimism_checks);
  }
};

namespace detail {

inline double inverse_error(const RidgeState& ridge) {
  const auto d = static_cast<Eigen::Index>(ridge.dim());
  const Matrix fresh = ridge.gram().ldlt().solve(Matrix::Identity(d, d));
  return (fresh - ridge.gram_inv()).cwiseAbs().maxCoeff();
}

inline RunResult run_lsvi(const LinearMdp& mdp, const ReferenceQ* q_ref, double beta, std::size_t K,
                          const AgentConfig& cfg_in, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const auto H = mdp.horizon();
  if (K == 0) throw InvalidArgument("K must be at least 1");
  AgentConfig cfg = cfg_in;
  if (cfg.confidence.n_eff <= 0.0) cfg.confidence.n_eff = static_cast<double>(mdp.d());
  validate(cfg.confidence);
  if (q_ref != nullptr) {
    if (!(beta > 0.0 && beta <= 2.0 * static_cast<double>(H))) throw InvalidArgument("beta must lie in (0, 2H]");
    if (q_ref->horizon() != H || q_ref->num_states() != mdp.num_states() || q_ref->num_actions() != mdp.num_actions())
      throw InvalidArgument("reference Q shape does not match the MDP");
  }

  const auto q_star = solve_optimal(mdp);
  Rng rng(seed, streams::kRollout);
  LsviHistory history(mdp, cfg.lambda);

  RunResult out;
  out.seed = seed;
  out.well_specified = q_ref == nullptr || q_ref->tau == 0.0;
  out.width_threshold = cfg.width_threshold > 0.0 ? cfg.width_threshold
                        : q_ref != nullptr    ? beta
                                              : static_cast<double>(H);
  out.ref_counts.assign(H, 0);
  out.ucb_counts.assign(H, 0);
  out.m_h_counts.assign(H, 0);
  out.regret_trace.reserve(K);
  out.rows.reserve(K);

  std::vector<Matrix> prev_q_hat;
  double cum = 0.0;
  for (std::size_t k = 1; k <= K; ++k) {
    const double alpha = alpha_k(cfg.confidence, k, H, K);
    EpisodePlan plan = plan_backward(mdp, history, q_ref, beta, alpha, k, cfg.running_min ? &prev_q_hat : nullptr);
    if (cfg.audit_inverse)
      for (std::size_t h = 0; h < H; ++h) out.max_inverse_error = std::max(out.max_inverse_error, inverse_error(history.ridge(h)));

    EpisodeRecord ep;
    EpisodeRow row;
    row.episode = k;
    std::size_t s = rng.categorical(mdp.init_dist());
    const std::size_t s1 = s;
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t a = act_greedy(plan, s, h);
      const auto si = static_cast<Eigen::Index>(s), ai = static_cast<Eigen::Index>(a);
      const double r = mdp.reward(h, s, a);
      const std::size_t next = rng.categorical(mdp.transition_row(h, s, a));
      ep.transitions.push_back({s, a, r, next});

      const bool is_ref = plan.ref_mask[h](si, ai) > 0.0;
      ep.branch.push_back(is_ref ? Branch::Ref : Branch::Ucb);
      const double hi = plan.q_hat[h](si, ai), lo = plan.q_check[h](si, ai);
      const double width = hi - lo;
      ep.widths.push_back(width);
      const double qs = q_star.q[h](si, ai);

      if (is_ref) {
        ++row.ref_branch_hits;
        ++out.ref_counts[h];
      } else {
        ++row.ucb_branch_hits;
        ++out.ucb_counts[h];
      }
      row.max_width_visited = h == 0 ? width : std::max(row.max_width_visited, width);
      if (width > out.width_threshold) ++out.m_h_counts[h];
      ++out.optimism_checks;
      if (plan.q[h](si, ai) < qs - 1e-9) {
        ++out.optimism_violations;
        ++row.optimism_violation;
      }
      const bool sandwich = lo <= qs + 1e-9 && qs <= hi + 1e-9;
      if (!sandwich) ++out.sandwich_violations;
      if (lo > hi) ++out.interval_inversions;
      if (is_ref && sandwich && out.well_specified) {
        ++out.ref_sound_checks;
        if (std::abs(q_ref->values[h](si, ai) - qs) > 1e-12) ++out.ref_unsound;
      }
      s = next;
    }

    const auto value = policy_eval(mdp, greedy_policy(plan.q));
    const double inst = q_star.v[0][static_cast<Eigen::Index>(s1)] - value.v[0][static_cast<Eigen::Index>(s1)];
    cum += inst;
    row.inst_regret = inst;
    row.cum_regret = cum;
    out.regret_trace.push_back(inst);
    out.rows.push_back(row);

    history.absorb(mdp, ep);
    if (cfg.keep_tables) out.tables.push_back({plan.q, plan.v});
    if (cfg.running_min) prev_q_hat = std::move(plan.q_hat);
    out.episodes.push_back(std::move(ep));
  }
  out.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace detail

/// O2O-LSVI: LSVI with optimistic and pessimistic regressions, trusting the
/// reference wherever [Q_check, Q_hat] fits inside Q_ref +- beta/2.
inline RunResult run_o2o_lsvi(const LinearMdp& mdp, const ReferenceQ& q_ref, double beta, std::size_t K,
                              const AgentConfig& cfg, std::uint64_t seed) {
  return detail::run_lsvi(mdp, &q_ref, beta, K, cfg, seed);
}

/// LSVI-UCB baseline: the same loop with the inclusion branch disabled.
inline RunResult run_lsvi_ucb(const LinearMdp& mdp, std::size_t K, const AgentConfig& cfg, std::uint64_t seed) {
  return detail::run_lsvi(mdp, nullptr, 0.0, K, cfg, seed);
}

/// |LHS - RHS| of the exact per-episode telescoping decomposition of
/// V^k_1(s_1) - V^{pi_k}_1(s_1) along the recorded trajectory.
inline double telescope_identity_check(const LinearMdp& mdp, const EpisodeRecord& episode,
                                       const EpisodeTables& tables) {
  const auto H = mdp.horizon();
  if (episode.transitions.size() != H || tables.q.size() != H || tables.v.size() != H + 1)
    throw InvalidArgument("episode record or tables are incomplete");
  const auto pi_value = policy_eval(mdp, greedy_policy(tables.q));
  const auto& tr = episode.transitions;
  const double lhs = tables.v[0][static_cast<Eigen::Index>(tr[0].s)] - pi_value.v[0][static_cast<Eigen::Index>(tr[0].s)];
  double rhs = 0.0;
  for (std::size_t h = 0; h < H; ++h) {
    const auto& t = tr[h];
    const auto p = mdp.transition_row(h, t.s, t.a);
    const Vector gap_next = tables.v[h + 1] - pi_value.v[h + 1];
    const double bellman = tables.q[h](static_cast<Eigen::Index>(t.s), static_cast<Eigen::Index>(t.a)) -
                           mdp.reward(h, t.s, t.a) - p.dot(tables.v[h + 1].transpose());
    const double martingale = p.dot(gap_next.transpose()) - gap_next[static_cast<Eigen::Index>(t.next)];
    rhs += bellman + martingale;
  }
  return std::abs(lhs - rhs);
}

}  // namespace o2o
