#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "diarkit/backend.hpp"
#include "diarkit/errors.hpp"
#include "diarkit/rng.hpp"
#include "diarkit/scoring.hpp"
#include "diarkit/util.hpp"

using namespace diarkit;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index d, double scale) {
  Eigen::MatrixXd a = random_matrix(rng, d, d);
  return scale * (a * a.transpose() / static_cast<double>(d)) +
         0.05 * scale * Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd sqrtm(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

struct PldaData {
  Eigen::MatrixXd x;
  std::vector<int> labels;
};

PldaData sample_plda(Rng& rng, const Eigen::VectorXd& mu, const Eigen::MatrixXd& between,
                     const Eigen::MatrixXd& within, int speakers, int per_speaker) {
  Eigen::MatrixXd b_half = sqrtm(between);
  Eigen::MatrixXd w_half = sqrtm(within);
  const Eigen::Index d = mu.size();
  PldaData data;
  data.x.resize(speakers * per_speaker, d);
  for (int s = 0; s < speakers; ++s) {
    Eigen::VectorXd y = b_half * random_matrix(rng, d, 1);
    for (int k = 0; k < per_speaker; ++k) {
      Eigen::VectorXd e = w_half * random_matrix(rng, d, 1);
      data.x.row(s * per_speaker + k) = (mu + y + e).transpose();
      data.labels.push_back(s);
    }
  }
  return data;
}

double rel_frobenius(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  return (got - want).norm() / want.norm();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("whitening identity and scalar cases") {
  Eigen::MatrixXd x(4, 2);
  double r = std::sqrt(2.0);
  x << r, 0, -r, 0, 0, r, 0, -r;  // sample covariance exactly I
  WhitenTransform w = estimate_whitening(x);
  CHECK(w.mean.norm() == doctest::Approx(0.0));
  CHECK((w.transform - Eigen::MatrixXd::Identity(2, 2)).norm() ==
        doctest::Approx(0.0).epsilon(1e-9));

  Eigen::MatrixXd one_d(4, 1);
  one_d << -2, 2, -2, 2;  // variance 4
  WhitenTransform w1 = estimate_whitening(one_d);
  CHECK(w1.transform(0, 0) == doctest::Approx(0.5));

  Eigen::MatrixXd too_few(3, 4);
  too_few.setRandom();
  CHECK_THROWS_AS(estimate_whitening(too_few), InsufficientDataError);
}

TEST_CASE("whitened sample covariance is the identity") {
  Rng rng(61);
  Eigen::MatrixXd x = random_matrix(rng, 500, 8);
  x = x * random_spd(rng, 8, 2.0);  // correlated columns
  x.rowwise() += Eigen::RowVectorXd::Constant(8, 3.0);
  WhitenTransform w = estimate_whitening(x);
  Eigen::MatrixXd z = w.apply_rows(x);
  Eigen::VectorXd mean = z.colwise().mean();
  Eigen::MatrixXd centered = z.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / 500.0;
  CHECK((cov - Eigen::MatrixXd::Identity(8, 8)).norm() <= 1e-8);
}

TEST_CASE("length normalization") {
  Eigen::VectorXd v(2);
  v << 3, 4;
  Eigen::VectorXd n = length_normalize(v);
  CHECK(n(0) == doctest::Approx(0.6));
  CHECK(n(1) == doctest::Approx(0.8));
  CHECK((length_normalize(n) - n).norm() == doctest::Approx(0.0));  // idempotent
  CHECK((length_normalize(7.5 * v) - n).norm() == doctest::Approx(0.0));  // scale invariant
  CHECK_THROWS_AS(length_normalize(Eigen::VectorXd::Zero(3)), ArgumentError);
}

TEST_CASE("conversation PCA keep rule") {
  // Axis-aligned data with eigenvalue ratios (8, 1, 1).
  Eigen::MatrixXd x(6, 3);
  double a = std::sqrt(8.0);
  x << a, 0, 0, -a, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  Eigen::MatrixXd basis = conversation_pca(x, 0.30);
  CHECK(basis.rows() == 1);  // 8/10 >= 0.3
  CHECK(std::abs(basis(0, 0)) == doctest::Approx(1.0));

  CHECK(conversation_pca(x, 1.0).rows() == 3);

  Eigen::MatrixXd constant = Eigen::MatrixXd::Ones(5, 3);
  CHECK_THROWS_AS(conversation_pca(constant, 0.3), ArgumentError);
}

TEST_CASE("projected variance equals the kept eigenvalues") {
  Rng rng(67);
  Eigen::MatrixXd x = random_matrix(rng, 400, 6) * random_spd(rng, 6, 1.5);
  Eigen::VectorXd mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / 400.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);

  Eigen::MatrixXd basis = conversation_pca(x, 0.9);
  Eigen::MatrixXd projected = centered * basis.transpose();
  Eigen::MatrixXd pcov = projected.transpose() * projected / 400.0;
  for (Eigen::Index k = 0; k < basis.rows(); ++k) {
    CHECK(std::abs(pcov(k, k) - eig.eigenvalues()(5 - k)) <= 1e-8);
  }
}

TEST_CASE("plda log-likelihood matches the stacked Gaussian") {
  Rng rng(71);
  const Eigen::Index d = 2;
  PldaModel model;
  model.mu = random_matrix(rng, d, 1);
  model.between = random_spd(rng, d, 1.0);
  model.within = random_spd(rng, d, 0.5);

  for (int n : {2, 3}) {
    Eigen::MatrixXd x = random_matrix(rng, n, d);
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    // One speaker with n vectors: stacked covariance I_n (x) W + J_n (x) B.
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n * d, n * d);
    Eigen::VectorXd dev(n * d);
    for (int i = 0; i < n; ++i) {
      dev.segment(i * d, d) = x.row(i).transpose() - model.mu;
      for (int j = 0; j < n; ++j) {
        big.block(i * d, j * d, d, d) = model.between;
        if (i == j) big.block(i * d, j * d, d, d) += model.within;
      }
    }
    double quad = dev.dot(big.llt().solve(dev));
    double logdet = std::log(big.llt().matrixL().determinant()) * 2.0;
    double expected = -0.5 * (n * d * std::log(2.0 * M_PI) + logdet + quad);
    CHECK(plda_log_likelihood(model, x, labels) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("plda EM recovers planted covariances") {
  Rng rng(14);
  const Eigen::Index d = 2;
  Eigen::VectorXd mu(d);
  mu << 1.0, -2.0;
  Eigen::MatrixXd between(d, d), within(d, d);
  between << 9.0, 1.0, 1.0, 4.0;
  within << 1.0, 0.2, 0.2, 0.8;
  PldaData data = sample_plda(rng, mu, between, within, 50, 20);

  std::vector<double> trace;
  PldaModel model = plda_train(data.x, data.labels, 30, &trace);
  CHECK(rel_frobenius(model.between, between) <= 0.15);
  CHECK(rel_frobenius(model.within, within) <= 0.15);

  for (std::size_t i = 1; i < trace.size(); ++i) {
    CHECK(trace[i] >= trace[i - 1] - 1e-9 * (1.0 + std::abs(trace[i - 1])));
  }
}

TEST_CASE("plda EM with no speaker effect learns a small between-class term") {
  Rng rng(79);
  const Eigen::Index d = 3;
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd within = random_spd(rng, d, 1.0);
  PldaData data = sample_plda(rng, mu, between, within, 50, 20);
  PldaModel model = plda_train(data.x, data.labels, 30);
  CHECK(model.between.trace() <= 0.05 * model.within.trace());
}

TEST_CASE("an extra EM iteration at convergence leaves the likelihood fixed") {
  Rng rng(83);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd between(2, 2), within(2, 2);
  between << 4.0, 0.5, 0.5, 2.0;
  within << 1.0, 0.0, 0.0, 1.0;
  PldaData data = sample_plda(rng, mu, between, within, 30, 10);
  std::vector<double> trace;
  plda_train(data.x, data.labels, 200, &trace);
  double last = trace.back();
  double prev = trace[trace.size() - 2];
  CHECK(std::abs(last - prev) <= 1e-6 * std::abs(last));
}

TEST_CASE("plda scores are symmetric, zero for B = 0, and separate classes") {
  Rng rng(89);
  const Eigen::Index d = 4;
  PldaModel degenerate;
  degenerate.mu = Eigen::VectorXd::Zero(d);
  degenerate.between = Eigen::MatrixXd::Zero(d, d);
  degenerate.within = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd x = random_matrix(rng, 10, d);
  Eigen::MatrixXd zero_scores = plda_score_matrix(degenerate, x);
  CHECK(zero_scores.cwiseAbs().maxCoeff() <= 1e-12);

  PldaModel model;
  model.mu = random_matrix(rng, d, 1);
  model.between = random_spd(rng, d, 2.0);
  model.within = random_spd(rng, d, 0.5);
  PldaData data = sample_plda(rng, model.mu, model.between, model.within, 8, 6);
  Eigen::MatrixXd scores = plda_score_matrix(model, data.x);
  CHECK((scores - scores.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  double same = 0.0, diff = 0.0;
  int n_same = 0, n_diff = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < scores.cols(); ++j) {
      if (data.labels[static_cast<std::size_t>(i)] == data.labels[static_cast<std::size_t>(j)]) {
        same += scores(i, j);
        ++n_same;
      } else {
        diff += scores(i, j);
        ++n_diff;
      }
    }
  }
  CHECK(same / n_same > diff / n_diff);

  Eigen::MatrixXd wrong_dim = random_matrix(rng, 3, d + 1);
  CHECK_THROWS_AS(plda_score_matrix(model, wrong_dim), ArgumentError);
}

TEST_CASE("ahc threshold extremes") {
  Eigen::MatrixXd sim(3, 3);
  sim << 0, 1, 2, 1, 0, 3, 2, 3, 0;
  ClusterResult all = ahc_cluster(sim, -100.0);
  CHECK(all.num_clusters == 1);
  ClusterResult none = ahc_cluster(sim, 100.0);
  CHECK(none.num_clusters == 3);
  CHECK(none.merge_trace.empty());

  ClusterResult single = ahc_cluster(Eigen::MatrixXd::Zero(1, 1), 0.0);
  CHECK(single.num_clusters == 1);
}

TEST_CASE("ahc recovers planted blocks and orders labels by first member") {
  const int n = 6;
  Eigen::MatrixXd sim(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      bool same = (i < 3) == (j < 3);
      sim(i, j) = i == j ? 0.0 : (same ? 5.0 : -5.0);
    }
  }
  ClusterResult result = ahc_cluster(sim, 0.0);
  CHECK(result.num_clusters == 2);
  CHECK(result.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
  for (std::size_t k = 1; k < result.merge_trace.size(); ++k) {
    CHECK(result.merge_trace[k].similarity <= result.merge_trace[k - 1].similarity + 1e-12);
  }
}

TEST_CASE("ahc merge trace is non-increasing and clusters shrink with threshold") {
  Rng rng(97);
  Eigen::MatrixXd a = random_matrix(rng, 12, 12);
  Eigen::MatrixXd sim = 0.5 * (a + a.transpose());
  sim.diagonal().setZero();

  ClusterResult full = ahc_cluster(sim, -1e9);
  for (std::size_t k = 1; k < full.merge_trace.size(); ++k) {
    CHECK(full.merge_trace[k].similarity <= full.merge_trace[k - 1].similarity + 1e-12);
  }
  int prev = 1;
  for (double threshold : {-10.0, -1.0, 0.0, 1.0, 10.0}) {
    int clusters = ahc_cluster(sim, threshold).num_clusters;
    CHECK(clusters >= prev);
    prev = clusters;
  }
}

TEST_CASE("segments_to_timeline applies the midpoint rule") {
  auto window = [](double onset) {
    EmbeddingSegment seg;
    seg.onset = onset;
    seg.duration = 1.5;
    seg.vector = Eigen::VectorXd::Zero(1);
    return seg;
  };
  std::vector<EmbeddingSegment> segments = {window(0.0), window(0.25), window(0.5),
                                            window(0.75)};
  Timeline t = segments_to_timeline({0, 0, 1, 1}, segments, "r");
  REQUIRE(t.size() == 2);
  CHECK(t.turns()[0].speaker_id == "spk0");
  CHECK(t.turns()[0].onset == doctest::Approx(0.0));
  // Boundary at the midpoint between the centers of segments 2 and 3.
  CHECK(t.turns()[0].offset() == doctest::Approx(1.125));
  CHECK(t.turns()[1].onset == doctest::Approx(1.125));
  CHECK(t.turns()[1].offset() == doctest::Approx(2.25));

  Timeline whole = segments_to_timeline({0, 0, 0, 0}, segments, "r");
  REQUIRE(whole.size() == 1);
  CHECK(whole.turns()[0].offset() == doctest::Approx(2.25));

  CHECK(segments_to_timeline({}, {}, "r").empty());
}

TEST_CASE("tune_threshold minimizes pooled dev DER") {
  // Two far-apart embedding clouds per recording; cosine similarity separates
  // them crisply, so the right threshold sits between the block values.
  Rng rng(101);
  auto make_input = [&](std::uint64_t seed) {
    Rng local(seed);
    TuneInput input;
    input.recording_id = "r" + std::to_string(seed);
    std::vector<Turn> ref_turns;
    Eigen::VectorXd mean_a = 4.0 * random_matrix(local, 6, 1);
    Eigen::VectorXd mean_b = -mean_a;
    for (int k = 0; k < 8; ++k) {
      bool first = k < 4;
      double onset = k * 2.0;
      EmbeddingSegment seg;
      seg.onset = onset;
      seg.duration = 1.5;
      seg.vector = (first ? mean_a : mean_b) + 0.1 * random_matrix(local, 6, 1);
      input.segments.push_back(seg);
      ref_turns.push_back({input.recording_id, first ? "A" : "B", onset, 1.5});
    }
    input.reference = Timeline(input.recording_id, std::move(ref_turns));
    input.region = {{0.0, 16.0}};
    input.speech = input.reference.speech_intervals();
    Eigen::MatrixXd x(8, 6);
    for (int k = 0; k < 8; ++k) x.row(k) = input.segments[static_cast<std::size_t>(k)].vector;
    input.scores = cosine_score_matrix(x);
    return input;
  };
  std::vector<TuneInput> dev = {make_input(1), make_input(2), make_input(3)};

  CHECK(tune_threshold(dev, {0.25}) == 0.25);

  std::vector<double> grid = {-0.9, -0.5, 0.0, 0.5, 0.9};
  double best = tune_threshold(dev, grid, 2);
  // Exhaustive re-evaluation with the same building blocks.
  double best_der = 1e9, expect = 0.0;
  for (double threshold : grid) {
    double err = 0.0, ref = 0.0;
    for (const auto& rec : dev) {
      auto labels = ahc_cluster(rec.scores, threshold).labels;
      Timeline sys = crop_to_intervals(segments_to_timeline(labels, rec.segments,
                                                            rec.recording_id),
                                       rec.speech);
      DerReport rep = compute_der(rec.reference, sys, rec.region);
      err += rep.miss + rep.false_alarm + rep.confusion;
      ref += rep.total_ref_speech;
    }
    if (err / ref < best_der) {
      best_der = err / ref;
      expect = threshold;
    }
  }
  CHECK(best == expect);

  // The tuned threshold transfers to a matched instance.
  TuneInput eval = make_input(9);
  auto labels = ahc_cluster(eval.scores, best).labels;
  Timeline sys = crop_to_intervals(segments_to_timeline(labels, eval.segments,
                                                        eval.recording_id),
                                   eval.speech);
  CHECK(compute_der(eval.reference, sys, eval.region).der_pct < 5.0);

  CHECK_THROWS_AS(tune_threshold({}, grid), ArgumentError);
  CHECK_THROWS_AS(tune_threshold(dev, {}), ArgumentError);
}

TEST_CASE("whiten and plda model files round-trip with checksums") {
  Rng rng(103);
  WhitenTransform w;
  w.mean = random_matrix(rng, 5, 1);
  w.transform = random_spd(rng, 5, 1.0);
  std::string wpath = temp_path("diarkit_test_whiten.mdl");
  save_whiten(wpath, w);
  WhitenTransform w2 = load_whiten(wpath);
  CHECK((w2.mean - w.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((w2.transform - w.transform).cwiseAbs().maxCoeff() == 0.0);

  PldaModel p;
  p.mu = random_matrix(rng, 4, 1);
  p.between = random_spd(rng, 4, 2.0);
  p.within = random_spd(rng, 4, 0.5);
  std::string ppath = temp_path("diarkit_test_plda.mdl");
  save_plda(ppath, p);
  PldaModel p2 = load_plda(ppath);
  CHECK((p2.mu - p.mu).cwiseAbs().maxCoeff() == 0.0);
  CHECK((p2.between - p.between).cwiseAbs().maxCoeff() == 0.0);
  CHECK((p2.within - p.within).cwiseAbs().maxCoeff() == 0.0);

  // Kind mismatch and payload tampering are both rejected.
  CHECK_THROWS_AS(load_plda(wpath), IoError);
  std::string text = read_file(ppath);
  auto pos = text.find("mu ");
  text[pos + 3] = text[pos + 3] == '1' ? '2' : '1';
  write_file(ppath, text);
  CHECK_THROWS_AS(load_plda(ppath), IoError);
}
