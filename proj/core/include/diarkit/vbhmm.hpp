#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "diarkit/features.hpp"
#include "diarkit/timeline.hpp"

namespace diarkit {

/// Diagonal-covariance Gaussian mixture over frame features.
struct Ubm {
  Eigen::VectorXd weights;   // C, non-negative, sums to 1
  Eigen::MatrixXd means;     // C x D
  Eigen::MatrixXd variances; // C x D, all >= floor

  Eigen::Index num_components() const { return weights.size(); }
  Eigen::Index dim() const { return means.cols(); }
};

/// Eigenvoice (total variability) matrix: supervector = ubm means + V x,
/// x ~ N(0, I). Rows are grouped per component: rows [c*D, (c+1)*D).
struct TvMatrix {
  Eigen::MatrixXd v;  // (C*D) x R

  Eigen::Index rank() const { return v.cols(); }
};

/// Resegmentation hyperparameters.
struct VbConfig {
  double beta = 10.0;     // zeroth-order statistics scale
  double ploop = 0.45;    // HMM self-transition probability
  int downsamp = 25;      // keep every downsamp-th frame for statistics
  int iterations = 1;

  void validate() const;
};

/// Soft component occupancies for a frame matrix.
struct UbmPosteriors {
  Eigen::MatrixXd gamma;     // T x C
  Eigen::VectorXd frame_ll;  // T, log p(o_t) under the mixture
};
UbmPosteriors ubm_posteriors(const Ubm& ubm, const Eigen::MatrixXd& frames);

/// Zeroth / centered-first / second order Baum-Welch statistics.
struct BwStats {
  Eigen::VectorXd zeroth;   // C
  Eigen::MatrixXd first;    // C x D, gamma-weighted (o - mean_c)
  Eigen::MatrixXd second;   // C x D, gamma-weighted (o - mean_c)^2
};
BwStats accumulate_stats(const Ubm& ubm, const Eigen::MatrixXd& frames);

/// EM for the diagonal GMM from binary-split initialization. Components that
/// lose all soft counts are re-seeded from the heaviest component with a
/// seeded jitter (warning). Throws InsufficientDataError when T < 10*C.
/// loglik_trace receives the data log-likelihood at the start of each
/// iteration (non-decreasing).
Ubm train_ubm(const Eigen::MatrixXd& frames, int num_components, int num_iterations,
              std::uint64_t seed = 0, std::vector<double>* loglik_trace = nullptr);

/// EM for the total-variability model on per-utterance frame sets.
/// objective_trace receives the V-dependent part of the evidence
/// (non-decreasing). Throws ArgumentError when rank > C*D.
TvMatrix train_tv(const std::vector<Eigen::MatrixXd>& utterances, const Ubm& ubm, int rank,
                  int num_iterations, std::uint64_t seed = 0,
                  std::vector<double>* objective_trace = nullptr);

/// Exact HMM smoothing for an S-state chain with self-transition
/// `self_loop_prob`, uniform cross transitions, uniform initial state.
struct FbResult {
  Eigen::MatrixXd log_marginals;  // T x S, rows logsumexp to 0
  double log_evidence = 0.0;
};
FbResult forward_backward(const Eigen::MatrixXd& log_emissions, double self_loop_prob);

struct VbDiagnostics {
  std::vector<double> elbo;  // per iteration (logZ minus speaker-posterior KL)
  std::vector<std::string> dropped_speakers;
};

/// Frame-level VB-HMM resegmentation of `init` over `features`. Speech stays
/// exactly where init put it; only speaker identities move. Statistics are
/// accumulated on every downsamp-th frame, the speaker posteriors use
/// eigenvoice priors from `tv`, and per-frame speaker responsibilities come
/// from forward-backward smoothing. Labels return to the full frame rate by
/// nearest-subsampled-frame copy; islands shorter than 2 frames are absorbed.
Timeline vb_resegment(const FrameFeatures& features, const Timeline& init, const Ubm& ubm,
                      const TvMatrix& tv, const VbConfig& config,
                      VbDiagnostics* diagnostics = nullptr);

void save_ubm(const std::string& path, const Ubm& model);
Ubm load_ubm(const std::string& path);
void save_tv(const std::string& path, const TvMatrix& model);
TvMatrix load_tv(const std::string& path);

}  // namespace diarkit
