#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "diarkit/embedding.hpp"
#include "diarkit/timeline.hpp"

namespace diarkit {

/// Centering + whitening transform estimated from a vector population.
struct WhitenTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd transform;  // inverse principal square root of covariance

  Eigen::Index dim() const { return mean.size(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;
};

/// Two-covariance Gaussian PLDA: x = mu + y + e, y ~ N(0, B), e ~ N(0, W).
struct PldaModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd between;  // B, symmetric PSD
  Eigen::MatrixXd within;   // W, symmetric PD

  Eigen::Index dim() const { return mu.size(); }

  /// Congruence-transform into a projected space (rows of basis = components).
  PldaModel project(const Eigen::MatrixXd& basis) const;
};

struct MergeStep {
  int step = 0;
  int cluster_a = 0;  // smallest member index of each merged cluster, a < b
  int cluster_b = 0;
  double similarity = 0.0;
};

struct ClusterResult {
  std::vector<int> labels;  // in [0, num_clusters), numbered by first member
  int num_clusters = 0;
  std::vector<MergeStep> merge_trace;  // similarities non-increasing
};

/// Sample mean + inverse principal square root of the sample covariance.
/// Eigenvalues are floored at 1e-8 * trace/dim (with a warning) so that
/// degenerate inputs stay invertible. Throws InsufficientDataError when
/// fewer than dim+1 vectors are given.
WhitenTransform estimate_whitening(const Eigen::MatrixXd& vectors);

/// Scale to unit Euclidean norm. Throws ArgumentError on the zero vector.
Eigen::VectorXd length_normalize(const Eigen::VectorXd& v);
Eigen::MatrixXd length_normalize_rows(const Eigen::MatrixXd& rows);

/// Per-recording PCA keeping the smallest k components whose eigenvalue sum
/// reaches keep_fraction of total variance. Returns the k x dim basis; use
/// project_rows / PldaModel::project to move vectors and model.
Eigen::MatrixXd conversation_pca(const Eigen::MatrixXd& vectors, double keep_fraction = 0.30);

/// EM for the two-covariance model. Labels are small integers; every speaker
/// needs >= 2 vectors and there must be >= 2 speakers. Per-iteration total
/// log-likelihood (non-decreasing) is appended to loglik_trace when given.
PldaModel plda_train(const Eigen::MatrixXd& vectors, const std::vector<int>& speaker_labels,
                     int num_iterations, std::vector<double>* loglik_trace = nullptr);

/// Exact marginal log-likelihood of labeled data under the model.
double plda_log_likelihood(const PldaModel& model, const Eigen::MatrixXd& vectors,
                           const std::vector<int>& speaker_labels);

/// Pairwise same/different-speaker log-likelihood ratios; symmetric.
Eigen::MatrixXd plda_score_matrix(const PldaModel& model, const Eigen::MatrixXd& vectors);

/// Cosine similarity of row vectors (baseline comparison for PLDA).
Eigen::MatrixXd cosine_score_matrix(const Eigen::MatrixXd& vectors);

/// Average-linkage agglomerative clustering on a symmetric similarity
/// matrix: repeatedly merge the highest-similarity pair until the best pair
/// falls below `threshold`. Ties break toward the lowest (a, b) indices.
ClusterResult ahc_cluster(const Eigen::MatrixXd& similarity, double threshold);

/// Sliding-window cluster labels -> speaker turns. Overlapping windows are
/// resolved by the midpoint rule: each instant goes to the covering segment
/// whose center is nearest. Labels name speakers "spk<label>".
Timeline segments_to_timeline(const std::vector<int>& labels,
                              const std::vector<EmbeddingSegment>& segments,
                              const std::string& recording_id);

/// One dev recording prepared for threshold tuning: scores are fixed, only
/// the AHC stopping point varies.
struct TuneInput {
  std::string recording_id;
  std::vector<EmbeddingSegment> segments;
  Eigen::MatrixXd scores;
  Timeline reference;
  IntervalSet region;  // scoring region
  IntervalSet speech;  // SAD to clip system turns to
};

/// Grid point minimizing pooled dev DER of cluster -> turns -> DER;
/// ties break toward the lower threshold (fewer clusters).
double tune_threshold(const std::vector<TuneInput>& dev, std::vector<double> grid,
                      unsigned jobs = 1);

void save_whiten(const std::string& path, const WhitenTransform& model);
WhitenTransform load_whiten(const std::string& path);
void save_plda(const std::string& path, const PldaModel& model);
PldaModel load_plda(const std::string& path);

}  // namespace diarkit
