#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include "diarkit/backend.hpp"
#include "diarkit/errors.hpp"
#include "diarkit/pipeline.hpp"
#include "diarkit/report.hpp"
#include "diarkit/rttm.hpp"
#include "diarkit/util.hpp"

using namespace diarkit;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, bool quiet = true) {
  std::string cmd = std::string(DIARKIT_CLI_PATH) + " " + args;
  if (quiet) cmd += " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("diarkit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

// Shared desk-scale setup: trained models plus dev/eval conversations.
struct Setup {
  SimConfig base;
  PipelineModels models;
  double pca_keep = 0.55;  // two to three components of these 16-dim embeddings
  double plda_threshold = 0.0;
  double cosine_threshold = 0.0;
  std::vector<SimOutput> dev;
  std::vector<SimOutput> eval;

  Setup() {
    base.duration = 60.0;
    base.speaker_separation = 3.0;
    base.posterior_noise = 0.0;

    auto train = simulate_training_embeddings(900, 24, 12, base.embedding_dim,
                                              base.speaker_separation);
    std::vector<int> labels;
    std::vector<Eigen::VectorXd> rows;
    for (std::size_t s = 0; s < train.size(); ++s) {
      for (const auto& seg : train[s].segments) {
        rows.push_back(seg.vector);
        labels.push_back(static_cast<int>(s));
      }
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), base.embedding_dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    models.whiten = estimate_whitening(x);
    Eigen::MatrixXd z = length_normalize_rows(models.whiten.apply_rows(x));
    models.plda = plda_train(z, labels, 15);

    auto feats = simulate_training_features(901, 16, 1, 20.0, base);
    Eigen::Index total = 0;
    for (const auto& f : feats) total += f.frames.rows();
    Eigen::MatrixXd pooled(total, base.feature_dim);
    Eigen::Index at = 0;
    std::vector<Eigen::MatrixXd> utterances;
    for (const auto& f : feats) {
      pooled.middleRows(at, f.frames.rows()) = f.frames;
      at += f.frames.rows();
      utterances.push_back(f.frames);
    }
    models.ubm = train_ubm(pooled, 8, 6, 902);
    models.tv = train_tv(utterances, models.ubm, 16, 6, 903);

    for (int i = 0; i < 2; ++i) dev.push_back(make_sim(910 + i, 2 + i % 2));
    dev.push_back(make_sim(912, 1));
    for (int i = 0; i < 4; ++i) eval.push_back(make_sim(930 + i, 2 + i % 3));

    plda_threshold = tune(dev, true);
    cosine_threshold = tune(dev, false);
  }

  SimOutput make_sim(std::uint64_t seed, int speakers) const {
    SimConfig cfg = base;
    cfg.seed = seed;
    cfg.recording_id = "sim_" + std::to_string(seed);
    cfg.num_speakers = speakers;
    if (speakers == 1) cfg.overlap_fraction = 0.0;
    return simulate_conversation(cfg);
  }

  TuneInput tune_input(const SimOutput& sim, bool use_plda) const {
    TuneInput input;
    input.recording_id = sim.reference.recording_id();
    input.reference = sim.reference;
    input.region = scoring_region(sim.reference, sim.reference, sim.uem);
    input.speech = sim.reference.speech_intervals();
    for (const auto& seg : sim.embeddings.segments) {
      if (covers(input.speech, seg.onset + seg.duration / 2.0)) {
        input.segments.push_back(seg);
      }
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(input.segments.size()),
                      sim.embeddings.dim);
    for (std::size_t i = 0; i < input.segments.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = input.segments[i].vector.transpose();
    }
    x = length_normalize_rows(models.whiten.apply_rows(x));
    if (use_plda) {
      Eigen::MatrixXd basis = conversation_pca(x, pca_keep);
      input.scores = plda_score_matrix(models.plda.project(basis), x * basis.transpose());
    } else {
      input.scores = cosine_score_matrix(x);
    }
    return input;
  }

  PipelineOptions base_options() const {
    PipelineOptions options;
    options.ahc_threshold = plda_threshold;
    options.pca_keep = pca_keep;
    return options;
  }

  double tune(const std::vector<SimOutput>& sims, bool use_plda) const {
    std::vector<TuneInput> inputs;
    for (const auto& sim : sims) inputs.push_back(tune_input(sim, use_plda));
    std::vector<double> grid;
    for (double v = -5.0; v <= 5.0 + 1e-9; v += 0.25) grid.push_back(v);
    return tune_threshold(inputs, grid, 2);
  }

  TrackData track_data(const std::vector<SimOutput>& sims) const {
    TrackData data;
    for (const auto& sim : sims) {
      const std::string& rec = sim.reference.recording_id();
      data.recordings.push_back(rec);
      data.embeddings[rec] = sim.embeddings;
      data.features[rec] = sim.features;
      data.reference_sad[rec] = sim.reference.speech_intervals();
      data.posteriors[rec] = sim.posteriors;
    }
    return data;
  }

  double pooled_der(const std::vector<SimOutput>& sims,
                    const std::vector<Timeline>& outputs) const {
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < sims.size(); ++i) {
      DerReport rep =
          compute_der(sims[i].reference, outputs[i],
                      scoring_region(sims[i].reference, outputs[i], sims[i].uem));
      err += rep.miss + rep.false_alarm + rep.confusion;
      ref += rep.total_ref_speech;
    }
    return 100.0 * err / ref;
  }
};

const Setup& setup() {
  static Setup instance;
  return instance;
}

}  // namespace

TEST_CASE("track 1 reaches low DER on separable instances") {
  const Setup& s = setup();
  std::vector<SimOutput> clean;
  for (int i = 0; i < 3; ++i) {
    SimConfig cfg = s.base;
    cfg.seed = 970 + static_cast<std::uint64_t>(i);
    cfg.recording_id = "clean_" + std::to_string(i);
    cfg.num_speakers = 2 + i % 2;
    cfg.overlap_fraction = 0.01;
    cfg.speaker_separation = 3.0;
    clean.push_back(simulate_conversation(cfg));
  }
  PipelineOptions options = s.base_options();
  options.vb.downsamp = 5;
  options.jobs = 2;
  auto outputs = run_track1(s.track_data(clean), s.models, options);
  CHECK(s.pooled_der(clean, outputs) < 5.0);
}

TEST_CASE("single-speaker instance yields a single output speaker") {
  const Setup& s = setup();
  auto solo = s.make_sim(955, 1);
  PipelineOptions options = s.base_options();
  auto outputs = run_track1(s.track_data({solo}), s.models, options);
  REQUIRE(outputs.size() == 1);
  CHECK(outputs[0].speakers().size() == 1);
}

TEST_CASE("VB resegmentation does not hurt on the standard suite") {
  const Setup& s = setup();
  PipelineOptions with_vb = s.base_options();
  PipelineOptions without_vb = with_vb;
  without_vb.use_vb = false;
  auto data = s.track_data(s.eval);
  double der_on = s.pooled_der(s.eval, run_track1(data, s.models, with_vb));
  double der_off = s.pooled_der(s.eval, run_track1(data, s.models, without_vb));
  CHECK(der_on <= der_off + 0.5);
}

TEST_CASE("track 2 with near-perfect posteriors matches track 1 closely") {
  const Setup& s = setup();
  PipelineOptions options = s.base_options();
  SadDecoderConfig sad;
  sad.prior_speech = 0.75;
  auto data = s.track_data(s.eval);
  double t1 = s.pooled_der(s.eval, run_track1(data, s.models, options));
  double t2 = s.pooled_der(s.eval, run_track2(data, s.models, options, sad));
  CHECK(t2 <= t1 + 1.0);
}

TEST_CASE("corrupted posteriors make track 2 at least as hard as track 1") {
  const Setup& s = setup();
  std::vector<SimOutput> noisy;
  for (int i = 0; i < 4; ++i) {
    SimConfig cfg = s.base;
    cfg.seed = 960 + static_cast<std::uint64_t>(i);
    cfg.recording_id = "noisy_" + std::to_string(i);
    cfg.num_speakers = 2 + i % 2;
    cfg.posterior_noise = 2.0;
    cfg.posterior_gain = 2.5;
    noisy.push_back(simulate_conversation(cfg));
  }
  PipelineOptions options = s.base_options();
  SadDecoderConfig sad;
  sad.prior_speech = 0.75;
  auto data = s.track_data(noisy);
  double t1 = s.pooled_der(noisy, run_track1(data, s.models, options));
  double t2 = s.pooled_der(noisy, run_track2(data, s.models, options, sad));
  CHECK(t2 >= t1);
}

TEST_CASE("PLDA scoring beats raw cosine on held-out instances") {
  const Setup& s = setup();
  auto score_with = [&](bool use_plda, double threshold) {
    double err = 0.0, ref = 0.0;
    for (const auto& sim : s.eval) {
      TuneInput input = s.tune_input(sim, use_plda);
      auto labels = ahc_cluster(input.scores, threshold).labels;
      Timeline sys = crop_to_intervals(
          segments_to_timeline(labels, input.segments, input.recording_id), input.speech);
      DerReport rep = compute_der(input.reference, sys, input.region);
      err += rep.miss + rep.false_alarm + rep.confusion;
      ref += rep.total_ref_speech;
    }
    return 100.0 * err / ref;
  };
  CHECK(score_with(true, s.plda_threshold) < score_with(false, s.cosine_threshold));
}

TEST_CASE("score_command handles missing recordings and domain sums") {
  std::string dir = scratch_dir("score_cmd");
  Timeline ref1("rec1", {{"rec1", "A", 0.0, 10.0}, {"rec1", "B", 10.0, 10.0}});
  Timeline ref2("rec2", {{"rec2", "C", 0.0, 10.0}});
  Timeline sys1("rec1", {{"rec1", "a", 0.0, 10.0}, {"rec1", "b", 10.0, 8.0}});
  DomainManifest manifest;
  manifest.entries["rec1"] = {"meeting", true};
  manifest.entries["rec2"] = {"phone", false};

  ScoreResult result = score_command({ref1, ref2}, {sys1}, {}, manifest, Partition::kFull);
  REQUIRE(result.reports.size() == 2);
  REQUIRE(result.warnings.size() == 1);  // rec2 missing from system output
  CHECK(result.warnings[0].find("rec2") != std::string::npos);

  // Per-domain rows sum (in seconds) to the overall row.
  double ref_sum = 0.0, err_sum = 0.0;
  for (const auto& row : result.aggregate.domains) {
    ref_sum += row.ref_speech;
    err_sum += row.miss + row.false_alarm + row.confusion;
  }
  CHECK(ref_sum == doctest::Approx(result.aggregate.overall.ref_speech));
  CHECK(err_sum == doctest::Approx(result.aggregate.overall.miss +
                                   result.aggregate.overall.false_alarm +
                                   result.aggregate.overall.confusion));

  // The emitted TSV parses back and satisfies the DER identity.
  std::string report = write_der_report(result.reports, result.aggregate, result.manifest);
  std::istringstream lines(report);
  std::string line;
  std::getline(lines, line);  // header
  int rows = 0;
  while (std::getline(lines, line)) {
    auto fields = split_char(line, '\t');
    REQUIRE(fields.size() == 8);
    double ref_sec = 0, miss = 0, fa = 0, conf = 0, der = 0, jer = 0;
    CHECK(parse_double(fields[2], &ref_sec));
    CHECK(parse_double(fields[3], &miss));
    CHECK(parse_double(fields[4], &fa));
    CHECK(parse_double(fields[5], &conf));
    CHECK(parse_double(fields[6], &der));
    CHECK(parse_double(fields[7], &jer));
    CHECK(der == doctest::Approx(100.0 * (miss + fa + conf) / ref_sec).epsilon(0.01));
    CHECK(jer >= 0.0);
    CHECK(jer <= 100.0);
    ++rows;
  }
  CHECK(rows == 2 + 2 + 1);  // recordings + domains + overall

  // System recordings without a reference are rejected.
  CHECK_THROWS_AS(score_command({ref1}, {sys1, ref2}, {}, manifest, Partition::kFull),
                  ValidationError);
  (void)dir;
}

TEST_CASE("score CLI runs end to end") {
  std::string dir = scratch_dir("cli_score");
  Timeline ref("rec1", {{"rec1", "A", 0.0, 10.0}});
  Timeline sys("rec1", {{"rec1", "X", 0.0, 10.0}});
  save_rttm(dir + "/ref.rttm", {ref});
  save_rttm(dir + "/sys.rttm", {sys});
  CHECK(run_cli("score --ref " + dir + "/ref.rttm --sys " + dir + "/sys.rttm --out " +
                dir + "/report.tsv") == 0);
  std::string report = read_file(dir + "/report.tsv");
  CHECK(report.find("OVERALL\t-\t10.000\t0.000\t0.000\t0.000\t0.00\t0.00") !=
        std::string::npos);

  // Validation failures exit nonzero.
  write_file(dir + "/bad.rttm", "SPEAKER rec1 1 0.5 -1 <NA> <NA> A <NA> <NA>\n");
  CHECK(run_cli("score --ref " + dir + "/bad.rttm --sys " + dir + "/sys.rttm --out -") != 0);
}

TEST_CASE("train CLI is deterministic and loadable") {
  std::string dir = scratch_dir("cli_train");
  save_embeddings(dir + "/train.tsv", simulate_training_embeddings(77, 8, 10, 6, 2.0));
  REQUIRE(run_cli("train whiten --data " + dir + "/train.tsv --out " + dir + "/w1.mdl") == 0);
  REQUIRE(run_cli("train whiten --data " + dir + "/train.tsv --out " + dir + "/w2.mdl") == 0);
  CHECK(read_file(dir + "/w1.mdl") == read_file(dir + "/w2.mdl"));

  REQUIRE(run_cli("train plda --data " + dir + "/train.tsv --whiten " + dir +
                  "/w1.mdl --iters 8 --out " + dir + "/p1.mdl") == 0);
  PldaModel plda = load_plda(dir + "/p1.mdl");
  CHECK(plda.dim() == 6);

  SimConfig like;
  save_features_text(dir + "/feat.tsv", simulate_training_features(78, 3, 2, 10.0, like));
  REQUIRE(run_cli("train ubm --data " + dir + "/feat.tsv --components 4 --iters 4 --seed 5 --out " +
                  dir + "/ubm.mdl") == 0);
  REQUIRE(run_cli("train tv --data " + dir + "/feat.tsv --ubm " + dir +
                  "/ubm.mdl --rank 2 --iters 4 --seed 5 --out " + dir + "/tv.mdl") == 0);
  Ubm ubm = load_ubm(dir + "/ubm.mdl");
  TvMatrix tv = load_tv(dir + "/tv.mdl");
  CHECK(ubm.num_components() == 4);
  CHECK(tv.rank() == 2);
  CHECK(tv.v.rows() == ubm.num_components() * ubm.dim());

  // Mismatched models are rejected with both dims named.
  save_embeddings(dir + "/dim8.tsv", simulate_training_embeddings(79, 8, 10, 8, 2.0));
  CHECK(run_cli("train plda --data " + dir + "/dim8.tsv --whiten " + dir +
                "/w1.mdl --out " + dir + "/bad.mdl") != 0);
}

TEST_CASE("golden report formats") {
  std::string dir = scratch_dir("golden");
  // Two recordings across two domains with hand-checkable errors.
  Timeline ref1("rec1", {{"rec1", "A", 0.0, 10.0}, {"rec1", "B", 10.0, 10.0}});
  Timeline sys1("rec1", {{"rec1", "a", 0.0, 10.0}, {"rec1", "b", 10.0, 8.0}});
  Timeline ref2("rec2", {{"rec2", "C", 0.0, 10.0}});
  Timeline sys2("rec2", {{"rec2", "x", 0.0, 5.0}, {"rec2", "y", 5.0, 5.0}});
  save_rttm(dir + "/ref.rttm", {ref1, ref2});
  save_rttm(dir + "/sys.rttm", {sys1, sys2});
  save_uem(dir + "/all.uem", {{"rec1", 0.0, 25.0}, {"rec2", 0.0, 15.0}});
  write_file(dir + "/manifest.tsv", "rec1\tmeeting\tcore\nrec2\tphone\tfull\n");

  REQUIRE(run_cli("score --ref " + dir + "/ref.rttm --sys " + dir +
                  "/sys.rttm --uem " + dir + "/all.uem --manifest " + dir +
                  "/manifest.tsv --partition full --out " + dir +
                  "/der.tsv --corpus-stats " + dir + "/stats.tsv") == 0);
  CHECK(read_file(dir + "/der.tsv") ==
        read_file(std::string(DIARKIT_GOLDEN_DIR) + "/der_report.tsv"));
  CHECK(read_file(dir + "/stats.tsv") ==
        read_file(std::string(DIARKIT_GOLDEN_DIR) + "/corpus_stats.tsv"));

  // SAD report golden, from simple synthetic posteriors.
  std::string posts = "#frame_step=0.03\n";
  for (int t = 0; t < 834; ++t) {
    posts += "rec1\t" + std::to_string(t) + "\t" + (t < 667 ? "0.98" : "0.02") + "\n";
  }
  for (int t = 0; t < 500; ++t) {
    posts += "rec2\t" + std::to_string(t) + "\t" + (t < 333 ? "0.98" : "0.02") + "\n";
  }
  write_file(dir + "/posteriors.tsv", posts);
  REQUIRE(run_cli("sad-decode --posteriors " + dir + "/posteriors.tsv --out " + dir +
                  "/sad.rttm --prior 0.6 --ref " + dir + "/ref.rttm --uem " + dir +
                  "/all.uem --manifest " + dir + "/manifest.tsv --report " + dir +
                  "/sad.tsv") == 0);
  CHECK(read_file(dir + "/sad.tsv") ==
        read_file(std::string(DIARKIT_GOLDEN_DIR) + "/sad_report.tsv"));
}
