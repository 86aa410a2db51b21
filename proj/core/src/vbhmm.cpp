#include "diarkit/vbhmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "diarkit/errors.hpp"
#include "diarkit/model_io.hpp"
#include "diarkit/rng.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

namespace {

constexpr double kVarFloorScale = 1e-6;
constexpr double kLog2Pi = 1.8378770664093453;

double logsumexp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

struct UbmConstants {
  Eigen::VectorXd log_weights;
  Eigen::VectorXd log_norm;  // -0.5 (D log 2pi + sum log var)
};

UbmConstants ubm_constants(const Ubm& ubm) {
  UbmConstants k;
  k.log_weights = ubm.weights.array().max(1e-300).log();
  k.log_norm.resize(ubm.num_components());
  for (Eigen::Index c = 0; c < ubm.num_components(); ++c) {
    k.log_norm(c) = -0.5 * (static_cast<double>(ubm.dim()) * kLog2Pi +
                            ubm.variances.row(c).array().log().sum());
  }
  return k;
}

// Per-component log(w_c N(o; m_c, diag var_c)) for one frame.
Eigen::VectorXd component_log_lik(const Ubm& ubm, const UbmConstants& k,
                                  const Eigen::VectorXd& frame) {
  Eigen::VectorXd out(ubm.num_components());
  for (Eigen::Index c = 0; c < ubm.num_components(); ++c) {
    Eigen::ArrayXd dev = frame.transpose().array() - ubm.means.row(c).array();
    double quad = (dev.square() / ubm.variances.row(c).transpose().array()).sum();
    out(c) = k.log_weights(c) + k.log_norm(c) - 0.5 * quad;
  }
  return out;
}

}  // namespace

void VbConfig::validate() const {
  if (!(beta > 0.0)) throw ArgumentError("beta must be > 0");
  if (!(ploop > 0.0) || !(ploop < 1.0)) throw ArgumentError("ploop must be in (0, 1)");
  if (downsamp < 1) throw ArgumentError("downsamp must be >= 1");
  if (iterations < 1) throw ArgumentError("iterations must be >= 1");
}

UbmPosteriors ubm_posteriors(const Ubm& ubm, const Eigen::MatrixXd& frames) {
  if (frames.cols() != ubm.dim()) {
    throw ArgumentError(strprintf("UBM dim %ld does not match feature dim %ld",
                                  static_cast<long>(ubm.dim()),
                                  static_cast<long>(frames.cols())));
  }
  auto k = ubm_constants(ubm);
  UbmPosteriors out;
  out.gamma.resize(frames.rows(), ubm.num_components());
  out.frame_ll.resize(frames.rows());
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    Eigen::VectorXd ll = component_log_lik(ubm, k, frames.row(t).transpose());
    double total = logsumexp(ll);
    out.frame_ll(t) = total;
    out.gamma.row(t) = (ll.array() - total).exp().transpose();
  }
  return out;
}

BwStats accumulate_stats(const Ubm& ubm, const Eigen::MatrixXd& frames) {
  auto post = ubm_posteriors(ubm, frames);
  BwStats stats;
  stats.zeroth = post.gamma.colwise().sum().transpose();
  stats.first = Eigen::MatrixXd::Zero(ubm.num_components(), ubm.dim());
  stats.second = Eigen::MatrixXd::Zero(ubm.num_components(), ubm.dim());
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (Eigen::Index c = 0; c < ubm.num_components(); ++c) {
      Eigen::ArrayXd dev = frames.row(t).array() - ubm.means.row(c).array();
      stats.first.row(c) += post.gamma(t, c) * dev.matrix();
      stats.second.row(c) += post.gamma(t, c) * dev.square().matrix();
    }
  }
  return stats;
}

namespace {

struct GmmComponent {
  double weight = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

Ubm to_ubm(const std::vector<GmmComponent>& comps) {
  Ubm out;
  const auto c_count = static_cast<Eigen::Index>(comps.size());
  const Eigen::Index d = comps.front().mean.size();
  out.weights.resize(c_count);
  out.means.resize(c_count, d);
  out.variances.resize(c_count, d);
  for (Eigen::Index c = 0; c < c_count; ++c) {
    out.weights(c) = comps[static_cast<std::size_t>(c)].weight;
    out.means.row(c) = comps[static_cast<std::size_t>(c)].mean.transpose();
    out.variances.row(c) = comps[static_cast<std::size_t>(c)].var.transpose();
  }
  return out;
}

// One EM sweep. Returns the data log-likelihood under the input parameters.
double gmm_em_step(const Eigen::MatrixXd& frames, std::vector<GmmComponent>& comps,
                   const Eigen::VectorXd& var_floor, Rng& rng) {
  auto post = ubm_posteriors(to_ubm(comps), frames);
  const double total_ll = post.frame_ll.sum();
  const Eigen::Index d = frames.cols();

  Eigen::VectorXd counts = post.gamma.colwise().sum().transpose();
  Eigen::MatrixXd weighted_sum = post.gamma.transpose() * frames;  // C x D
  Eigen::MatrixXd weighted_sq = post.gamma.transpose() * frames.array().square().matrix();

  for (std::size_t c = 0; c < comps.size(); ++c) {
    auto ci = static_cast<Eigen::Index>(c);
    if (counts(ci) < 1e-8) {
      // Re-seed a starved component from the heaviest one plus jitter.
      Eigen::Index heavy = 0;
      counts.maxCoeff(&heavy);
      warn(strprintf("GMM component %zu starved; re-seeding from component %ld", c,
                     static_cast<long>(heavy)));
      auto& source = comps[static_cast<std::size_t>(heavy)];
      GmmComponent fresh;
      fresh.weight = source.weight / 2.0;
      source.weight /= 2.0;
      fresh.mean = source.mean;
      for (Eigen::Index k = 0; k < d; ++k) {
        fresh.mean(k) += 0.1 * rng.normal() * std::sqrt(source.var(k));
      }
      fresh.var = source.var;
      comps[c] = std::move(fresh);
      continue;
    }
    GmmComponent next;
    next.weight = counts(ci) / static_cast<double>(frames.rows());
    next.mean = weighted_sum.row(ci).transpose() / counts(ci);
    next.var = (weighted_sq.row(ci).transpose() / counts(ci) -
                next.mean.array().square().matrix())
                   .cwiseMax(var_floor);
    comps[c] = std::move(next);
  }
  double weight_total = 0.0;
  for (const auto& comp : comps) weight_total += comp.weight;
  for (auto& comp : comps) comp.weight /= weight_total;
  return total_ll;
}

}  // namespace

Ubm train_ubm(const Eigen::MatrixXd& frames, int num_components, int num_iterations,
              std::uint64_t seed, std::vector<double>* loglik_trace) {
  if (num_components < 1) throw ArgumentError("num_components must be >= 1");
  if (frames.rows() < 10L * num_components) {
    throw InsufficientDataError(strprintf(
        "UBM training needs at least 10*C = %d frames, got %ld", 10 * num_components,
        static_cast<long>(frames.rows())));
  }
  Rng rng(seed);

  Eigen::VectorXd global_mean = frames.colwise().mean();
  Eigen::VectorXd global_var =
      (frames.rowwise() - global_mean.transpose()).array().square().colwise().mean();
  Eigen::VectorXd var_floor = (kVarFloorScale * global_var.array()).cwiseMax(1e-12);

  std::vector<GmmComponent> comps;
  comps.push_back({1.0, global_mean, global_var.cwiseMax(var_floor)});

  // Binary-split growth: split the heaviest component along a seeded random
  // direction (a fixed axis can sit on a symmetry saddle), settle with two
  // EM sweeps, repeat until the target size.
  while (static_cast<int>(comps.size()) < num_components) {
    std::size_t heavy = 0;
    for (std::size_t c = 1; c < comps.size(); ++c) {
      if (comps[c].weight > comps[heavy].weight) heavy = c;
    }
    GmmComponent right = comps[heavy];
    Eigen::VectorXd offset = comps[heavy].var.cwiseSqrt();
    for (Eigen::Index k = 0; k < offset.size(); ++k) offset(k) *= 0.2 * rng.normal();
    comps[heavy].weight /= 2.0;
    comps[heavy].mean -= offset;
    right.weight = comps[heavy].weight;
    right.mean += offset;
    comps.push_back(std::move(right));
    for (int it = 0; it < 2; ++it) gmm_em_step(frames, comps, var_floor, rng);
  }

  for (int it = 0; it < num_iterations; ++it) {
    double ll = gmm_em_step(frames, comps, var_floor, rng);
    if (loglik_trace) loglik_trace->push_back(ll);
  }
  return to_ubm(comps);
}

TvMatrix train_tv(const std::vector<Eigen::MatrixXd>& utterances, const Ubm& ubm, int rank,
                  int num_iterations, std::uint64_t seed,
                  std::vector<double>* objective_trace) {
  const Eigen::Index c_count = ubm.num_components();
  const Eigen::Index d = ubm.dim();
  if (rank < 1) throw ArgumentError("rank must be >= 1");
  if (rank > c_count * d) {
    throw ArgumentError(strprintf("rank %d exceeds supervector dim %ld", rank,
                                  static_cast<long>(c_count * d)));
  }
  if (utterances.empty()) throw InsufficientDataError("no utterances for TV training");
  if (static_cast<int>(utterances.size()) < rank) {
    warn(strprintf("TV training with %zu utterances for rank %d; estimate may be weak",
                   utterances.size(), rank));
  }

  std::vector<BwStats> stats;
  stats.reserve(utterances.size());
  for (const auto& u : utterances) stats.push_back(accumulate_stats(ubm, u));

  Rng rng(seed);
  Eigen::MatrixXd v(c_count * d, rank);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index k = 0; k < v.cols(); ++k) v(r, k) = 0.1 * rng.normal();
  }

  Eigen::MatrixXd inv_var = ubm.variances.cwiseInverse();  // C x D
  for (int iter = 0; iter < num_iterations; ++iter) {
    std::vector<Eigen::MatrixXd> gram(static_cast<std::size_t>(c_count));
    for (Eigen::Index c = 0; c < c_count; ++c) {
      Eigen::MatrixXd vc = v.middleRows(c * d, d);
      gram[static_cast<std::size_t>(c)] =
          vc.transpose() * inv_var.row(c).transpose().asDiagonal() * vc;
    }

    double objective = 0.0;
    std::vector<Eigen::MatrixXd> rhs(static_cast<std::size_t>(c_count),
                                     Eigen::MatrixXd::Zero(d, rank));
    std::vector<Eigen::MatrixXd> lhs(static_cast<std::size_t>(c_count),
                                     Eigen::MatrixXd::Zero(rank, rank));
    for (const auto& st : stats) {
      // Posterior of the utterance factor: precision L, mean L^-1 b.
      Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(rank, rank);
      Eigen::VectorXd linear = Eigen::VectorXd::Zero(rank);
      for (Eigen::Index c = 0; c < c_count; ++c) {
        precision += st.zeroth(c) * gram[static_cast<std::size_t>(c)];
        Eigen::MatrixXd vc = v.middleRows(c * d, d);
        linear += vc.transpose() *
                  (st.first.row(c).transpose().array() * inv_var.row(c).transpose().array())
                      .matrix();
      }
      Eigen::LLT<Eigen::MatrixXd> llt(precision);
      Eigen::VectorXd mean = llt.solve(linear);
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < rank; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
      // Evidence up to a V-independent constant: 0.5 (b^T L^-1 b - log|L|).
      objective += 0.5 * (linear.dot(mean) - logdet);
      Eigen::MatrixXd second_moment =
          llt.solve(Eigen::MatrixXd::Identity(rank, rank)) + mean * mean.transpose();
      for (Eigen::Index c = 0; c < c_count; ++c) {
        lhs[static_cast<std::size_t>(c)] += st.zeroth(c) * second_moment;
        rhs[static_cast<std::size_t>(c)] += st.first.row(c).transpose() * mean.transpose();
      }
    }
    if (objective_trace) objective_trace->push_back(objective);

    for (Eigen::Index c = 0; c < c_count; ++c) {
      // V_c solves V_c * (sum N E[xx^T]) = sum F x^T; sigma cancels.
      v.middleRows(c * d, d) = lhs[static_cast<std::size_t>(c)]
                                   .ldlt()
                                   .solve(rhs[static_cast<std::size_t>(c)].transpose())
                                   .transpose();
    }
  }
  return {v};
}

FbResult forward_backward(const Eigen::MatrixXd& log_emissions, double self_loop_prob) {
  const Eigen::Index t_count = log_emissions.rows();
  const Eigen::Index s_count = log_emissions.cols();
  if (t_count == 0 || s_count == 0) throw ArgumentError("forward_backward: empty input");
  if (!(self_loop_prob > 0.0) || !(self_loop_prob < 1.0)) {
    throw ArgumentError("self_loop_prob must be in (0, 1)");
  }
  FbResult out;
  if (s_count == 1) {
    out.log_marginals = Eigen::MatrixXd::Zero(t_count, 1);
    out.log_evidence = log_emissions.sum();
    return out;
  }
  Eigen::MatrixXd log_trans =
      Eigen::MatrixXd::Constant(s_count, s_count,
                                std::log((1.0 - self_loop_prob) /
                                         static_cast<double>(s_count - 1)));
  log_trans.diagonal().setConstant(std::log(self_loop_prob));
  const double log_init = -std::log(static_cast<double>(s_count));

  Eigen::MatrixXd alpha(t_count, s_count), beta(t_count, s_count);
  alpha.row(0) = log_emissions.row(0).array() + log_init;
  for (Eigen::Index t = 1; t < t_count; ++t) {
    for (Eigen::Index s = 0; s < s_count; ++s) {
      alpha(t, s) = log_emissions(t, s) +
                    logsumexp(alpha.row(t - 1).transpose() + log_trans.col(s));
    }
  }
  beta.row(t_count - 1).setZero();
  for (Eigen::Index t = t_count - 2; t >= 0; --t) {
    Eigen::VectorXd next =
        beta.row(t + 1).transpose() + log_emissions.row(t + 1).transpose();
    for (Eigen::Index s = 0; s < s_count; ++s) {
      beta(t, s) = logsumexp(next + log_trans.row(s).transpose());
    }
  }
  out.log_evidence = logsumexp(alpha.row(t_count - 1).transpose());
  out.log_marginals.resize(t_count, s_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    Eigen::VectorXd post = alpha.row(t).transpose() + beta.row(t).transpose();
    double total = logsumexp(post);
    out.log_marginals.row(t) = (post.array() - total).transpose();
  }
  return out;
}

namespace {

// Frames whose midpoints fall inside [begin, end): [first, last] inclusive.
std::pair<Eigen::Index, Eigen::Index> midpoint_frame_range(double begin, double end,
                                                           double step,
                                                           Eigen::Index t_full) {
  auto first = static_cast<Eigen::Index>(std::ceil(begin / step - 0.5));
  auto last = static_cast<Eigen::Index>(std::ceil(end / step - 0.5)) - 1;
  return {std::max<Eigen::Index>(first, 0), std::min(last, t_full - 1)};
}

}  // namespace

Timeline vb_resegment(const FrameFeatures& features, const Timeline& init, const Ubm& ubm,
                      const TvMatrix& tv, const VbConfig& config,
                      VbDiagnostics* diagnostics) {
  config.validate();
  if (init.empty()) throw ValidationError("vb_resegment: empty init timeline");
  if (features.frames.cols() != ubm.dim()) {
    throw ArgumentError(strprintf("feature dim %ld does not match UBM dim %ld",
                                  static_cast<long>(features.frames.cols()),
                                  static_cast<long>(ubm.dim())));
  }
  if (tv.v.rows() != ubm.num_components() * ubm.dim()) {
    throw ArgumentError(strprintf("TV supervector dim %ld does not match UBM C*D = %ld",
                                  static_cast<long>(tv.v.rows()),
                                  static_cast<long>(ubm.num_components() * ubm.dim())));
  }
  const double step = features.frame_step;
  const Eigen::Index t_full = features.frames.rows();
  if (static_cast<double>(t_full) * step + step / 2.0 < init.extent()) {
    throw ArgumentError(strprintf("features cover %.3f s but init extends to %.3f s",
                                  static_cast<double>(t_full) * step, init.extent()));
  }

  // Speaker order = first appearance in the (onset-sorted) init.
  std::vector<std::string> speaker_names;
  std::map<std::string, int> speaker_index;
  for (const auto& turn : init.turns()) {
    if (speaker_index.emplace(turn.speaker_id, static_cast<int>(speaker_names.size()))
            .second) {
      speaker_names.push_back(turn.speaker_id);
    }
  }

  // Full-rate labels by frame midpoint; overlapped frames go to the
  // earlier-onset turn (first writer wins, turns are onset-sorted).
  std::vector<int> full_labels(static_cast<std::size_t>(t_full), -1);
  for (const auto& turn : init.turns()) {
    auto [first, last] = midpoint_frame_range(turn.onset, turn.offset(), step, t_full);
    for (Eigen::Index t = first; t <= last; ++t) {
      if (full_labels[static_cast<std::size_t>(t)] < 0) {
        full_labels[static_cast<std::size_t>(t)] = speaker_index[turn.speaker_id];
      }
    }
  }

  // Subsample speech frames for statistics accumulation.
  std::vector<Eigen::Index> sub_idx;
  for (Eigen::Index t = 0; t < t_full; t += config.downsamp) {
    if (full_labels[static_cast<std::size_t>(t)] >= 0) sub_idx.push_back(t);
  }

  // Speakers that survive subsampling keep their first-appearance order.
  std::vector<int> sub_count(speaker_names.size(), 0);
  for (auto t : sub_idx) {
    ++sub_count[static_cast<std::size_t>(full_labels[static_cast<std::size_t>(t)])];
  }
  std::vector<int> dense(speaker_names.size(), -1);
  std::vector<std::string> active_names;
  for (std::size_t s = 0; s < speaker_names.size(); ++s) {
    if (sub_count[s] > 0) {
      dense[s] = static_cast<int>(active_names.size());
      active_names.push_back(speaker_names[s]);
    } else {
      warn("vb_resegment: speaker '" + speaker_names[s] +
           "' has no frames after subsampling; dropped");
      if (diagnostics) diagnostics->dropped_speakers.push_back(speaker_names[s]);
    }
  }
  const auto s_count = static_cast<Eigen::Index>(active_names.size());
  IntervalSet speech = init.speech_intervals();
  if (sub_idx.empty() || s_count == 0) {
    warn("vb_resegment: no speech frames after subsampling; init returned unchanged");
    return init;
  }

  const auto t_sub = static_cast<Eigen::Index>(sub_idx.size());
  const Eigen::Index rank = tv.rank();
  const Eigen::Index c_count = ubm.num_components();
  const Eigen::Index d = ubm.dim();

  Eigen::MatrixXd sub_frames(t_sub, d);
  for (Eigen::Index i = 0; i < t_sub; ++i) {
    sub_frames.row(i) = features.frames.row(sub_idx[static_cast<std::size_t>(i)]);
  }
  auto post = ubm_posteriors(ubm, sub_frames);

  Eigen::MatrixXd inv_var = ubm.variances.cwiseInverse();
  std::vector<Eigen::MatrixXd> gram(static_cast<std::size_t>(c_count));
  for (Eigen::Index c = 0; c < c_count; ++c) {
    Eigen::MatrixXd vc = tv.v.middleRows(c * d, d);
    gram[static_cast<std::size_t>(c)] =
        vc.transpose() * inv_var.row(c).transpose().asDiagonal() * vc;
  }

  // Per-frame quantities fixed across iterations:
  //   b_t = sum_c gamma_tc V_c^T Sigma_c^-1 (o_t - m_c)
  //   g0_t = sum_c gamma_tc log(w_c N(o_t; m_c, Sigma_c))
  auto consts = ubm_constants(ubm);
  Eigen::MatrixXd b(t_sub, rank);
  Eigen::VectorXd g0(t_sub);
  for (Eigen::Index i = 0; i < t_sub; ++i) {
    Eigen::VectorXd bi = Eigen::VectorXd::Zero(rank);
    Eigen::VectorXd comp_ll = component_log_lik(ubm, consts, sub_frames.row(i).transpose());
    double g = 0.0;
    for (Eigen::Index c = 0; c < c_count; ++c) {
      double gamma = post.gamma(i, c);
      if (gamma <= 1e-12) continue;
      Eigen::MatrixXd vc = tv.v.middleRows(c * d, d);
      Eigen::VectorXd dev =
          (sub_frames.row(i).array() - ubm.means.row(c).array()).transpose();
      bi += gamma *
            (vc.transpose() * (dev.array() * inv_var.row(c).transpose().array()).matrix());
      g += gamma * comp_ll(c);
    }
    b.row(i) = bi.transpose();
    g0(i) = g;
  }

  // Hard initial responsibilities from the init labels.
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(t_sub, s_count);
  for (Eigen::Index i = 0; i < t_sub; ++i) {
    int label = dense[static_cast<std::size_t>(
        full_labels[static_cast<std::size_t>(sub_idx[static_cast<std::size_t>(i)])])];
    q(i, label) = 1.0;
  }

  Eigen::MatrixXd alpha(s_count, rank);
  for (int iter = 0; iter < config.iterations; ++iter) {
    Eigen::MatrixXd zeroth = q.transpose() * post.gamma;  // S x C
    Eigen::MatrixXd linear = q.transpose() * b;           // S x R
    double kl_total = 0.0;
    Eigen::MatrixXd tr_cs(c_count, s_count);
    for (Eigen::Index s = 0; s < s_count; ++s) {
      Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(rank, rank);
      for (Eigen::Index c = 0; c < c_count; ++c) {
        // Posterior scaling: only the zeroth-order statistics are boosted.
        precision += config.beta * zeroth(s, c) * gram[static_cast<std::size_t>(c)];
      }
      Eigen::LLT<Eigen::MatrixXd> llt(precision);
      Eigen::VectorXd mean = llt.solve(linear.row(s).transpose());
      alpha.row(s) = mean.transpose();
      Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(rank, rank));
      Eigen::MatrixXd phi = cov + mean * mean.transpose();
      for (Eigen::Index c = 0; c < c_count; ++c) {
        tr_cs(c, s) = (gram[static_cast<std::size_t>(c)] * phi).trace();
      }
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < rank; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
      kl_total +=
          0.5 * (cov.trace() + mean.squaredNorm() - static_cast<double>(rank) + logdet);
    }
    Eigen::MatrixXd emissions = b * alpha.transpose();  // T x S
    emissions -= 0.5 * (post.gamma * tr_cs);
    emissions.colwise() += g0;
    auto fb = forward_backward(emissions, config.ploop);
    q = fb.log_marginals.array().exp();
    if (diagnostics) diagnostics->elbo.push_back(fb.log_evidence - kl_total);
  }

  // Hard labels at the subsampled rate, then nearest-frame upsampling.
  std::vector<int> sub_labels(static_cast<std::size_t>(t_sub), 0);
  for (Eigen::Index i = 0; i < t_sub; ++i) {
    Eigen::Index best = 0;
    q.row(i).maxCoeff(&best);
    sub_labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  std::vector<int> out_labels(static_cast<std::size_t>(t_full), -1);
  for (Eigen::Index t = 0; t < t_full; ++t) {
    if (full_labels[static_cast<std::size_t>(t)] < 0) continue;
    auto it = std::lower_bound(sub_idx.begin(), sub_idx.end(), t);
    Eigen::Index best_i;
    if (it == sub_idx.end()) {
      best_i = t_sub - 1;
    } else if (it == sub_idx.begin()) {
      best_i = 0;
    } else {
      auto hi = static_cast<Eigen::Index>(it - sub_idx.begin());
      auto lo = hi - 1;
      best_i = (t - sub_idx[static_cast<std::size_t>(lo)] <=
                sub_idx[static_cast<std::size_t>(hi)] - t)
                   ? lo
                   : hi;
    }
    out_labels[static_cast<std::size_t>(t)] = sub_labels[static_cast<std::size_t>(best_i)];
  }

  // Absorb label islands shorter than 2 full-rate frames.
  for (const auto& iv : speech) {
    auto [first, last] = midpoint_frame_range(iv.begin, iv.end, step, t_full);
    Eigen::Index run_start = first;
    while (run_start <= last) {
      Eigen::Index run_end = run_start;
      while (run_end + 1 <= last && out_labels[static_cast<std::size_t>(run_end + 1)] ==
                                        out_labels[static_cast<std::size_t>(run_start)]) {
        ++run_end;
      }
      if (run_end - run_start + 1 < 2) {
        int replacement =
            run_start > first
                ? out_labels[static_cast<std::size_t>(run_start - 1)]
                : (run_end < last ? out_labels[static_cast<std::size_t>(run_end + 1)]
                                  : out_labels[static_cast<std::size_t>(run_start)]);
        for (Eigen::Index t = run_start; t <= run_end; ++t) {
          out_labels[static_cast<std::size_t>(t)] = replacement;
        }
      }
      run_start = run_end + 1;
    }
  }

  return labels_to_timeline(init.recording_id(), speech, out_labels, active_names, step);
}

void save_ubm(const std::string& path, const Ubm& model) {
  ModelWriter w;
  w.scalar("components", static_cast<long>(model.num_components()));
  w.scalar("dim", static_cast<long>(model.dim()));
  w.vector("weights", model.weights);
  w.matrix("means", model.means);
  w.matrix("variances", model.variances);
  write_file(path, w.finish("ubm"));
}

Ubm load_ubm(const std::string& path) {
  ModelReader r(read_file(path), "ubm");
  long c = r.scalar_long("components");
  long d = r.scalar_long("dim");
  Ubm out;
  out.weights = r.vector("weights", c);
  out.means = r.matrix("means", c, d);
  out.variances = r.matrix("variances", c, d);
  return out;
}

void save_tv(const std::string& path, const TvMatrix& model) {
  ModelWriter w;
  w.scalar("rows", static_cast<long>(model.v.rows()));
  w.scalar("rank", static_cast<long>(model.v.cols()));
  w.matrix("v", model.v);
  write_file(path, w.finish("tv"));
}

TvMatrix load_tv(const std::string& path) {
  ModelReader r(read_file(path), "tv");
  long rows = r.scalar_long("rows");
  long rank = r.scalar_long("rank");
  TvMatrix out;
  out.v = r.matrix("v", rows, rank);
  return out;
}

}  // namespace diarkit
