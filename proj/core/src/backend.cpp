#include "diarkit/backend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "diarkit/errors.hpp"
#include "diarkit/model_io.hpp"
#include "diarkit/parallel.hpp"
#include "diarkit/scoring.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

namespace {

constexpr double kEigFloorScale = 1e-8;

// Floor eigenvalues at kEigFloorScale * trace/dim; returns true if any
// eigenvalue was raised.
bool floor_eigenvalues(Eigen::VectorXd& eigs) {
  double tr = eigs.sum();
  double floor_val = kEigFloorScale * std::max(tr, 0.0) / static_cast<double>(eigs.size());
  if (floor_val <= 0.0) floor_val = kEigFloorScale;
  bool floored = false;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    if (eigs(i) < floor_val) {
      eigs(i) = floor_val;
      floored = true;
    }
  }
  return floored;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows, const Eigen::VectorXd& mean) {
  Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(rows.rows());
}

// Make symmetric PSD with floored spectrum; warns through `what` on flooring.
Eigen::MatrixXd floor_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  Eigen::VectorXd vals = eig.eigenvalues();
  if (floor_eigenvalues(vals)) {
    warn(std::string(what) + ": degenerate covariance, eigenvalues floored");
  }
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

Eigen::VectorXd WhitenTransform::apply(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) {
    throw ArgumentError(strprintf("whitening dim %ld does not match vector dim %ld",
                                  static_cast<long>(mean.size()),
                                  static_cast<long>(x.size())));
  }
  return transform * (x - mean);
}

Eigen::MatrixXd WhitenTransform::apply_rows(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean.size()) {
    throw ArgumentError(strprintf("whitening dim %ld does not match vector dim %ld",
                                  static_cast<long>(mean.size()),
                                  static_cast<long>(rows.cols())));
  }
  return (rows.rowwise() - mean.transpose()) * transform.transpose();
}

PldaModel PldaModel::project(const Eigen::MatrixXd& basis) const {
  if (basis.cols() != dim()) {
    throw ArgumentError(strprintf("PCA basis dim %ld does not match PLDA dim %ld",
                                  static_cast<long>(basis.cols()),
                                  static_cast<long>(dim())));
  }
  PldaModel out;
  out.mu = basis * mu;
  out.between = basis * between * basis.transpose();
  out.within = basis * within * basis.transpose();
  return out;
}

WhitenTransform estimate_whitening(const Eigen::MatrixXd& vectors) {
  const Eigen::Index n = vectors.rows();
  const Eigen::Index d = vectors.cols();
  if (d < 1) throw ArgumentError("whitening needs dim >= 1");
  if (n < d + 1) {
    throw InsufficientDataError(strprintf(
        "whitening needs at least dim+1 = %ld vectors, got %ld", static_cast<long>(d + 1),
        static_cast<long>(n)));
  }
  WhitenTransform out;
  out.mean = vectors.colwise().mean();
  Eigen::MatrixXd cov = sample_covariance(vectors, out.mean);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::VectorXd vals = eig.eigenvalues();
  if (floor_eigenvalues(vals)) {
    warn("whitening: degenerate covariance, eigenvalues floored");
  }
  out.transform = eig.eigenvectors() * vals.cwiseSqrt().cwiseInverse().asDiagonal() *
                  eig.eigenvectors().transpose();
  return out;
}

Eigen::VectorXd length_normalize(const Eigen::VectorXd& v) {
  double norm = v.norm();
  if (norm == 0.0) throw ArgumentError("cannot length-normalize the zero vector");
  return v / norm;
}

Eigen::MatrixXd length_normalize_rows(const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    out.row(i) = length_normalize(rows.row(i).transpose()).transpose();
  }
  return out;
}

Eigen::MatrixXd conversation_pca(const Eigen::MatrixXd& vectors, double keep_fraction) {
  if (vectors.rows() < 2) throw InsufficientDataError("conversation PCA needs >= 2 vectors");
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw ArgumentError("keep_fraction must be in (0, 1]");
  }
  Eigen::VectorXd mean = vectors.colwise().mean();
  Eigen::MatrixXd cov = sample_covariance(vectors, mean);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  double trace = eig.eigenvalues().sum();
  double scale = 1.0 + vectors.array().square().mean();
  if (trace <= 1e-20 * scale) {
    throw ArgumentError("conversation PCA: vectors are all identical (zero covariance)");
  }
  // Eigen returns ascending order; walk from the largest down.
  const Eigen::Index d = vectors.cols();
  double cum = 0.0;
  Eigen::Index k = 0;
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    cum += eig.eigenvalues()(i);
    ++k;
    if (cum >= keep_fraction * trace) break;
  }
  Eigen::MatrixXd basis(k, d);
  for (Eigen::Index r = 0; r < k; ++r) {
    basis.row(r) = eig.eigenvectors().col(d - 1 - r).transpose();
  }
  return basis;
}

namespace {

struct SpeakerStats {
  int count = 0;
  Eigen::VectorXd sum;
  Eigen::MatrixXd scatter;  // sum of (x - xbar)(x - xbar)^T, filled later
  Eigen::VectorXd mean;
};

std::vector<SpeakerStats> collect_speaker_stats(const Eigen::MatrixXd& vectors,
                                                const std::vector<int>& labels,
                                                bool for_training) {
  if (static_cast<Eigen::Index>(labels.size()) != vectors.rows()) {
    throw ArgumentError("speaker_labels size does not match vector count");
  }
  std::map<int, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) groups[labels[i]].push_back(i);
  if (for_training && groups.size() < 2) {
    throw InsufficientDataError("PLDA training needs >= 2 speakers");
  }
  std::vector<SpeakerStats> out;
  for (const auto& [label, rows] : groups) {
    if (for_training && rows.size() < 2) {
      throw InsufficientDataError(
          strprintf("PLDA training needs >= 2 vectors per speaker; speaker %d has %zu",
                    label, rows.size()));
    }
    SpeakerStats st;
    st.count = static_cast<int>(rows.size());
    st.sum = Eigen::VectorXd::Zero(vectors.cols());
    for (auto r : rows) st.sum += vectors.row(r).transpose();
    st.mean = st.sum / static_cast<double>(st.count);
    st.scatter = Eigen::MatrixXd::Zero(vectors.cols(), vectors.cols());
    for (auto r : rows) {
      Eigen::VectorXd dev = vectors.row(r).transpose() - st.mean;
      st.scatter += dev * dev.transpose();
    }
    out.push_back(std::move(st));
  }
  return out;
}

double gaussian_log_det_quad(const Eigen::LLT<Eigen::MatrixXd>& llt,
                             const Eigen::VectorXd& x, double* quad) {
  // log|C| and x^T C^-1 x from a Cholesky factor.
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < llt.matrixL().rows(); ++i) {
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  }
  Eigen::VectorXd solved = llt.solve(x);
  *quad = x.dot(solved);
  return logdet;
}

}  // namespace

double plda_log_likelihood(const PldaModel& model, const Eigen::MatrixXd& vectors,
                           const std::vector<int>& speaker_labels) {
  auto stats = collect_speaker_stats(vectors, speaker_labels, /*for_training=*/false);
  const double d = static_cast<double>(model.dim());
  const double log2pi = std::log(2.0 * M_PI);

  Eigen::LLT<Eigen::MatrixXd> llt_w(model.within);
  if (llt_w.info() != Eigen::Success) {
    throw ArgumentError("PLDA within-class covariance is not positive definite");
  }
  double logdet_w = 0.0;
  for (Eigen::Index i = 0; i < model.dim(); ++i) {
    logdet_w += 2.0 * std::log(llt_w.matrixL()(i, i));
  }
  Eigen::MatrixXd w_inv = llt_w.solve(Eigen::MatrixXd::Identity(model.dim(), model.dim()));

  double total = 0.0;
  for (const auto& st : stats) {
    double n = st.count;
    Eigen::MatrixXd mean_cov = model.within + n * model.between;  // covariance of sqrt(n)*mean
    Eigen::LLT<Eigen::MatrixXd> llt_m(mean_cov);
    if (llt_m.info() != Eigen::Success) {
      throw ArgumentError("PLDA covariance W + n*B is not positive definite");
    }
    double quad = 0.0;
    double logdet_m = gaussian_log_det_quad(llt_m, st.mean - model.mu, &quad);
    total += -0.5 * (n * d * log2pi + (n - 1.0) * logdet_w + logdet_m +
                     (w_inv * st.scatter).trace() + n * quad);
  }
  return total;
}

PldaModel plda_train(const Eigen::MatrixXd& vectors, const std::vector<int>& speaker_labels,
                     int num_iterations, std::vector<double>* loglik_trace) {
  auto stats = collect_speaker_stats(vectors, speaker_labels, /*for_training=*/true);
  const Eigen::Index d = vectors.cols();
  const double total_n = static_cast<double>(vectors.rows());

  PldaModel model;
  model.mu = vectors.colwise().mean();

  // Moment initialization: within-class scatter and scatter of speaker means.
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(d, d);
  for (const auto& st : stats) {
    within += st.scatter;
    Eigen::VectorXd dev = st.mean - model.mu;
    between += st.count * (dev * dev.transpose());
  }
  model.within = floor_spd(within / total_n, "PLDA within-class init");
  model.between = floor_spd(between / total_n, "PLDA between-class init");

  for (int iter = 0; iter < num_iterations; ++iter) {
    if (loglik_trace) {
      loglik_trace->push_back(plda_log_likelihood(model, vectors, speaker_labels));
    }
    Eigen::MatrixXd new_b = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd new_w = Eigen::MatrixXd::Zero(d, d);
    for (const auto& st : stats) {
      double n = st.count;
      // Posterior of the speaker offset y: N(m, C) with
      // C = B - B (B + W/n)^-1 B, m = B (B + W/n)^-1 (xbar - mu).
      Eigen::MatrixXd mean_cov = model.between + model.within / n;
      Eigen::LLT<Eigen::MatrixXd> llt(mean_cov);
      Eigen::MatrixXd gain = llt.solve(model.between).transpose();  // B (B + W/n)^-1
      Eigen::VectorXd dev = st.mean - model.mu;
      Eigen::VectorXd m = gain * dev;
      Eigen::MatrixXd c = model.between - gain * model.between;
      new_b += c + m * m.transpose();
      Eigen::VectorXd resid = dev - m;
      new_w += st.scatter + n * (resid * resid.transpose() + c);
    }
    model.between = floor_spd(new_b / static_cast<double>(stats.size()), "PLDA between-class");
    model.within = floor_spd(new_w / total_n, "PLDA within-class");
  }
  if (loglik_trace) {
    loglik_trace->push_back(plda_log_likelihood(model, vectors, speaker_labels));
  }
  return model;
}

Eigen::MatrixXd plda_score_matrix(const PldaModel& model, const Eigen::MatrixXd& vectors) {
  if (vectors.cols() != model.dim()) {
    throw ArgumentError(strprintf("PLDA dim %ld does not match vector dim %ld",
                                  static_cast<long>(model.dim()),
                                  static_cast<long>(vectors.cols())));
  }
  // Simultaneous diagonalization: T W T^T = I, T B T^T = diag(psi).
  Eigen::LLT<Eigen::MatrixXd> llt(model.within);
  if (llt.info() != Eigen::Success) {
    throw ArgumentError("PLDA within-class covariance is not positive definite");
  }
  Eigen::MatrixXd l_inv =
      llt.matrixL().solve(Eigen::MatrixXd::Identity(model.dim(), model.dim()));
  Eigen::MatrixXd b_tilde = l_inv * model.between * l_inv.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (b_tilde + b_tilde.transpose()));
  Eigen::VectorXd psi = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd t = eig.eigenvectors().transpose() * l_inv;

  Eigen::MatrixXd u = (vectors.rowwise() - model.mu.transpose()) * t.transpose();

  // Per-dimension LLR of the two-covariance model:
  //   llr = sum_d alpha_d (u_d^2 + v_d^2) + beta_d u_d v_d + gamma_d
  Eigen::VectorXd alpha(psi.size()), beta(psi.size());
  double gamma = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    double p = psi(i);
    alpha(i) = 0.5 * (1.0 / (1.0 + p) - (1.0 + p) / (1.0 + 2.0 * p));
    beta(i) = p / (1.0 + 2.0 * p);
    gamma += 0.5 * (2.0 * std::log1p(p) - std::log1p(2.0 * p));
  }
  Eigen::VectorXd q = u.array().square().matrix() * alpha;
  Eigen::MatrixXd scores = u * beta.asDiagonal() * u.transpose();
  scores.colwise() += q;
  scores.rowwise() += q.transpose();
  scores.array() += gamma;
  return 0.5 * (scores + scores.transpose());  // enforce exact symmetry
}

Eigen::MatrixXd cosine_score_matrix(const Eigen::MatrixXd& vectors) {
  Eigen::MatrixXd unit = length_normalize_rows(vectors);
  Eigen::MatrixXd scores = unit * unit.transpose();
  return 0.5 * (scores + scores.transpose());
}

ClusterResult ahc_cluster(const Eigen::MatrixXd& similarity, double threshold) {
  const Eigen::Index n = similarity.rows();
  if (similarity.cols() != n) throw ArgumentError("similarity matrix must be square");
  if (n > 0 && (similarity - similarity.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw ArgumentError("similarity matrix must be symmetric");
  }
  ClusterResult result;
  result.labels.assign(static_cast<std::size_t>(n), -1);
  if (n == 0) return result;

  Eigen::MatrixXd sim = similarity;
  std::vector<bool> active(static_cast<std::size_t>(n), true);
  std::vector<double> size(static_cast<std::size_t>(n), 1.0);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) members[static_cast<std::size_t>(i)] = {static_cast<int>(i)};

  int step = 0;
  for (;;) {
    double best = -std::numeric_limits<double>::infinity();
    Eigen::Index bi = -1, bj = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        if (sim(i, j) > best) {
          best = sim(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0 || best < threshold) break;

    result.merge_trace.push_back({step++, static_cast<int>(bi), static_cast<int>(bj), best});
    // Average linkage over the original pairwise scores.
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!active[static_cast<std::size_t>(k)] || k == bi || k == bj) continue;
      double merged = (size[static_cast<std::size_t>(bi)] * sim(bi, k) +
                       size[static_cast<std::size_t>(bj)] * sim(bj, k)) /
                      (size[static_cast<std::size_t>(bi)] + size[static_cast<std::size_t>(bj)]);
      sim(bi, k) = merged;
      sim(k, bi) = merged;
    }
    size[static_cast<std::size_t>(bi)] += size[static_cast<std::size_t>(bj)];
    auto& dst = members[static_cast<std::size_t>(bi)];
    auto& src = members[static_cast<std::size_t>(bj)];
    dst.insert(dst.end(), src.begin(), src.end());
    active[static_cast<std::size_t>(bj)] = false;
  }

  // Number clusters by their first (lowest-index) member.
  int next_label = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    for (int seg : members[static_cast<std::size_t>(i)]) {
      result.labels[static_cast<std::size_t>(seg)] = next_label;
    }
    ++next_label;
  }
  result.num_clusters = next_label;
  return result;
}

Timeline segments_to_timeline(const std::vector<int>& labels,
                              const std::vector<EmbeddingSegment>& segments,
                              const std::string& recording_id) {
  if (labels.size() != segments.size()) {
    throw ArgumentError("labels do not align with segment list");
  }
  if (segments.empty()) return Timeline(recording_id, {});

  // Atomic slice boundaries: segment edges plus midpoints between
  // center-adjacent segments (where the nearest center changes).
  std::vector<std::size_t> by_center(segments.size());
  std::iota(by_center.begin(), by_center.end(), 0u);
  auto center = [&](std::size_t i) { return segments[i].onset + segments[i].duration / 2.0; };
  std::stable_sort(by_center.begin(), by_center.end(),
                   [&](std::size_t a, std::size_t b) { return center(a) < center(b); });

  std::vector<double> bounds;
  for (const auto& seg : segments) {
    bounds.push_back(seg.onset);
    bounds.push_back(seg.onset + seg.duration);
  }
  for (std::size_t k = 0; k + 1 < by_center.size(); ++k) {
    bounds.push_back((center(by_center[k]) + center(by_center[k + 1])) / 2.0);
  }
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

  std::vector<Turn> turns;
  int open_label = -1;
  double open_begin = 0.0, open_end = 0.0;
  auto flush = [&]() {
    if (open_label >= 0) {
      turns.push_back({recording_id, strprintf("spk%d", open_label), open_begin,
                       open_end - open_begin});
      open_label = -1;
    }
  };
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    double lo = bounds[k], hi = bounds[k + 1];
    if (hi <= lo) continue;
    double mid = lo + (hi - lo) / 2.0;
    // Covering segment with the nearest center; ties to the earlier segment.
    int label = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& seg = segments[i];
      if (mid < seg.onset || mid >= seg.onset + seg.duration) continue;
      double dist = std::abs(mid - center(i));
      if (dist < best_dist) {
        best_dist = dist;
        label = labels[i];
      }
    }
    if (label < 0) {
      flush();
      continue;
    }
    if (label == open_label && lo == open_end) {
      open_end = hi;
    } else {
      flush();
      open_label = label;
      open_begin = lo;
      open_end = hi;
    }
  }
  flush();
  return Timeline(recording_id, std::move(turns));
}

double tune_threshold(const std::vector<TuneInput>& dev, std::vector<double> grid,
                      unsigned jobs) {
  if (dev.empty()) throw ArgumentError("tune_threshold: empty dev set");
  if (grid.empty()) throw ArgumentError("tune_threshold: empty grid");
  std::sort(grid.begin(), grid.end());

  std::vector<double> pooled_der(grid.size(), 0.0);
  parallel_for(grid.size(), jobs, [&](std::size_t g) {
    double err = 0.0, ref = 0.0;
    for (const auto& rec : dev) {
      std::vector<int> labels;
      if (!rec.segments.empty()) {
        labels = ahc_cluster(rec.scores, grid[g]).labels;
      }
      Timeline sys = segments_to_timeline(labels, rec.segments, rec.recording_id);
      sys = crop_to_intervals(sys, rec.speech);
      DerReport rep = compute_der(rec.reference, sys, rec.region);
      err += rep.miss + rep.false_alarm + rep.confusion;
      ref += rep.total_ref_speech;
    }
    pooled_der[g] = ref > 0.0 ? err / ref : 0.0;
  });

  // Ascending grid + strict improvement: exact ties resolve to the lower
  // threshold, i.e. fewer clusters.
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (pooled_der[g] < pooled_der[best]) best = g;
  }
  return grid[best];
}

void save_whiten(const std::string& path, const WhitenTransform& model) {
  ModelWriter w;
  w.scalar("dim", static_cast<long>(model.dim()));
  w.vector("mean", model.mean);
  w.matrix("transform", model.transform);
  write_file(path, w.finish("whiten"));
}

WhitenTransform load_whiten(const std::string& path) {
  ModelReader r(read_file(path), "whiten");
  long dim = r.scalar_long("dim");
  WhitenTransform out;
  out.mean = r.vector("mean", dim);
  out.transform = r.matrix("transform", dim, dim);
  return out;
}

void save_plda(const std::string& path, const PldaModel& model) {
  ModelWriter w;
  w.scalar("dim", static_cast<long>(model.dim()));
  w.vector("mu", model.mu);
  w.matrix("between", model.between);
  w.matrix("within", model.within);
  write_file(path, w.finish("plda"));
}

PldaModel load_plda(const std::string& path) {
  ModelReader r(read_file(path), "plda");
  long dim = r.scalar_long("dim");
  PldaModel out;
  out.mu = r.vector("mu", dim);
  out.between = r.matrix("between", dim, dim);
  out.within = r.matrix("within", dim, dim);
  return out;
}

}  // namespace diarkit
