// diarkit command-line interface: scoring, the diarization back-end for both
// tracks, SAD decoding, model training, threshold tuning, and the synthetic
// data generator.
//
// "Diarization from scratch" (track 2) consumes externally produced per-frame
// speech posteriors instead of raw audio; no neural inference happens here.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diarkit/backend.hpp"
#include "diarkit/embedding.hpp"
#include "diarkit/errors.hpp"
#include "diarkit/features.hpp"
#include "diarkit/pipeline.hpp"
#include "diarkit/report.hpp"
#include "diarkit/rttm.hpp"
#include "diarkit/saddecode.hpp"
#include "diarkit/scoring.hpp"
#include "diarkit/simulate.hpp"
#include "diarkit/util.hpp"
#include "diarkit/vbhmm.hpp"

namespace {

using namespace diarkit;

Partition parse_partition(const std::string& name) {
  if (name == "core") return Partition::kCore;
  if (name == "full") return Partition::kFull;
  throw ArgumentError("partition must be 'core' or 'full'");
}

void emit(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::fputs(content.c_str(), stdout);
  } else {
    write_file(path, content);
  }
}

std::map<std::string, FrameFeatures> load_features_path(const std::string& path) {
  namespace fs = std::filesystem;
  std::map<std::string, FrameFeatures> out;
  auto add = [&](std::vector<FrameFeatures> list) {
    for (auto& f : list) out[f.recording_id] = std::move(f);
  };
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) add(load_features(file.string()));
  } else {
    add(load_features(path));
  }
  return out;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string ref, sys, uem, manifest, partition = "full";
  std::string out = "-";
  std::string corpus_stats_out;
  unsigned jobs = 1;
};

int cmd_score(const ScoreArgs& args) {
  auto refs = load_rttm(args.ref);
  auto sys = load_rttm(args.sys);
  std::vector<UemRegion> uem;
  if (!args.uem.empty()) uem = load_uem(args.uem);
  std::optional<DomainManifest> manifest;
  if (!args.manifest.empty()) manifest = load_manifest(args.manifest);
  Partition partition = parse_partition(args.partition);

  ScoreResult result = score_command(refs, sys, uem, manifest, partition, args.jobs);
  emit(args.out, write_der_report(result.reports, result.aggregate, result.manifest));

  if (!args.corpus_stats_out.empty()) {
    std::vector<PartitionStats> rows;
    for (auto part : {Partition::kCore, Partition::kFull}) {
      std::vector<Timeline> kept;
      for (const auto& ref : refs) {
        const auto& entry = result.manifest.entries.at(ref.recording_id());
        if (part == Partition::kCore && !entry.in_core) continue;
        kept.push_back(ref);
      }
      if (kept.empty()) continue;
      rows.push_back({part == Partition::kCore ? "core" : "full", corpus_stats(kept, uem)});
    }
    emit(args.corpus_stats_out, write_corpus_stats(rows));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sad-decode
// ---------------------------------------------------------------------------

struct SadArgs {
  std::string posteriors, out;
  double prior = 0.0;  // 0 = not set
  std::string prior_from;
  std::string ref, uem, manifest, report, partition = "full";
  SadDecoderConfig config;
};

int cmd_sad_decode(const SadArgs& args) {
  auto tracks = load_posteriors(args.posteriors);
  std::vector<UemRegion> uem;
  if (!args.uem.empty()) uem = load_uem(args.uem);

  SadDecoderConfig config = args.config;
  if (args.prior > 0.0) {
    config.prior_speech = args.prior;
  } else if (!args.prior_from.empty()) {
    config.prior_speech = estimate_prior(load_rttm(args.prior_from), uem);
  }
  config.validate();

  std::vector<Timeline> decoded;
  for (const auto& track : tracks) {
    decoded.push_back(viterbi_sad(to_pseudo_likelihood(track, config.prior_speech),
                                  track.frame_step, config, track.recording_id));
  }
  save_rttm(args.out, decoded);

  if (!args.ref.empty()) {
    auto refs = load_rttm(args.ref);
    DomainManifest manifest;
    if (!args.manifest.empty()) {
      manifest = load_manifest(args.manifest);
    } else {
      for (const auto& ref : refs) {
        manifest.entries.emplace(ref.recording_id(), DomainManifest::Entry{"-", true});
      }
    }
    auto result = score_decoder(tracks, refs, uem, manifest, parse_partition(args.partition),
                                config);
    emit(args.report.empty() ? "-" : args.report,
         write_sad_report(result.reports, result.aggregate, manifest));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// run-track1 / run-track2
// ---------------------------------------------------------------------------

struct TrackArgs {
  std::string embeddings, features, out;
  std::string ref, sad;          // track 1 speech segmentation
  std::string posteriors;        // track 2
  std::string whiten, plda, ubm, tv;
  PipelineOptions options;
  bool no_vb = false;
  SadDecoderConfig sad_config;
  double prior = 0.0;
  std::string prior_from, uem;
};

PipelineModels load_models(const TrackArgs& args, bool need_vb) {
  PipelineModels models;
  models.whiten = load_whiten(args.whiten);
  models.plda = load_plda(args.plda);
  if (models.plda.dim() != models.whiten.dim()) {
    throw ArgumentError(strprintf("PLDA dim %ld does not match whitening dim %ld",
                                  static_cast<long>(models.plda.dim()),
                                  static_cast<long>(models.whiten.dim())));
  }
  if (need_vb) {
    if (args.ubm.empty() || args.tv.empty()) {
      throw ArgumentError("VB resegmentation needs --ubm and --tv (or pass --no-vb)");
    }
    models.ubm = load_ubm(args.ubm);
    models.tv = load_tv(args.tv);
    if (models.tv.v.rows() != models.ubm.num_components() * models.ubm.dim()) {
      throw ArgumentError(strprintf("TV supervector dim %ld does not match UBM C*D = %ld",
                                    static_cast<long>(models.tv.v.rows()),
                                    static_cast<long>(models.ubm.num_components() *
                                                      models.ubm.dim())));
    }
  }
  return models;
}

TrackData load_track_common(const TrackArgs& args) {
  TrackData data;
  for (auto& seq : load_embeddings(args.embeddings)) {
    data.recordings.push_back(seq.recording_id);
    data.embeddings.emplace(seq.recording_id, std::move(seq));
  }
  std::sort(data.recordings.begin(), data.recordings.end());
  data.features = load_features_path(args.features);
  return data;
}

int cmd_run_track1(TrackArgs& args) {
  args.options.use_vb = !args.no_vb;
  PipelineModels models = load_models(args, args.options.use_vb);
  TrackData data = load_track_common(args);
  if (args.ref.empty() == args.sad.empty()) {
    throw ArgumentError("track 1 needs exactly one of --ref (merged to SAD) or --sad");
  }
  auto sad_source = load_rttm(args.ref.empty() ? args.sad : args.ref);
  for (const auto& timeline : sad_source) {
    data.reference_sad[timeline.recording_id()] = timeline.speech_intervals();
  }
  save_rttm(args.out, run_track1(data, models, args.options));
  return 0;
}

int cmd_run_track2(TrackArgs& args) {
  args.options.use_vb = !args.no_vb;
  PipelineModels models = load_models(args, args.options.use_vb);
  TrackData data = load_track_common(args);
  if (args.posteriors.empty()) throw ArgumentError("track 2 needs --posteriors");
  for (auto& track : load_posteriors(args.posteriors)) {
    data.posteriors.emplace(track.recording_id, std::move(track));
  }
  SadDecoderConfig config = args.sad_config;
  if (args.prior > 0.0) {
    config.prior_speech = args.prior;
  } else if (!args.prior_from.empty()) {
    std::vector<UemRegion> uem;
    if (!args.uem.empty()) uem = load_uem(args.uem);
    config.prior_speech = estimate_prior(load_rttm(args.prior_from), uem);
  }
  config.validate();
  save_rttm(args.out, run_track2(data, models, args.options, config));
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string kind;
  std::vector<std::string> data;
  std::string out;
  std::string whiten;  // plda input space
  std::string ubm;     // tv dependency
  int iterations = 10;
  int components = 1024;
  int rank = 400;
  std::uint64_t seed = 0;
};

Eigen::MatrixXd stack_embedding_files(const std::vector<std::string>& paths,
                                      std::vector<int>* labels) {
  std::vector<Eigen::VectorXd> rows;
  std::vector<int> row_labels;
  std::map<std::string, int> label_ids;
  for (const auto& path : paths) {
    for (const auto& seq : load_embeddings(path)) {
      auto [it, unused] = label_ids.emplace(seq.recording_id,
                                            static_cast<int>(label_ids.size()));
      (void)unused;
      for (const auto& seg : seq.segments) {
        rows.push_back(seg.vector);
        row_labels.push_back(it->second);
      }
    }
  }
  if (rows.empty()) throw InsufficientDataError("no vectors in training data");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  if (labels) *labels = std::move(row_labels);
  return x;
}

int cmd_train(const TrainArgs& args) {
  if (args.kind == "whiten") {
    Eigen::MatrixXd x = stack_embedding_files(args.data, nullptr);
    save_whiten(args.out, estimate_whitening(x));
  } else if (args.kind == "plda") {
    if (args.whiten.empty()) throw ArgumentError("train plda needs --whiten");
    WhitenTransform whiten = load_whiten(args.whiten);
    std::vector<int> labels;
    Eigen::MatrixXd x = stack_embedding_files(args.data, &labels);
    if (x.cols() != whiten.dim()) {
      throw ArgumentError(strprintf("whitening dim %ld does not match embedding dim %ld",
                                    static_cast<long>(whiten.dim()),
                                    static_cast<long>(x.cols())));
    }
    // The recording_id column of the training file carries the speaker label.
    x = length_normalize_rows(whiten.apply_rows(x));
    save_plda(args.out, plda_train(x, labels, args.iterations));
  } else if (args.kind == "ubm") {
    Eigen::Index total = 0, dim = 0;
    std::vector<FrameFeatures> all;
    for (const auto& path : args.data) {
      for (auto& f : load_features(path)) {
        total += f.frames.rows();
        dim = f.frames.cols();
        all.push_back(std::move(f));
      }
    }
    Eigen::MatrixXd frames(total, dim);
    Eigen::Index at = 0;
    for (const auto& f : all) {
      frames.middleRows(at, f.frames.rows()) = f.frames;
      at += f.frames.rows();
    }
    save_ubm(args.out, train_ubm(frames, args.components, args.iterations, args.seed));
  } else if (args.kind == "tv") {
    if (args.ubm.empty()) throw ArgumentError("train tv needs --ubm");
    Ubm ubm = load_ubm(args.ubm);
    std::vector<Eigen::MatrixXd> utterances;
    for (const auto& path : args.data) {
      for (const auto& f : load_features(path)) utterances.push_back(f.frames);
    }
    save_tv(args.out, train_tv(utterances, ubm, args.rank, args.iterations, args.seed));
  } else {
    throw ArgumentError("train kind must be one of: whiten, plda, ubm, tv");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

struct TuneArgs {
  std::string embeddings, ref, uem;
  std::string whiten, plda;
  std::string similarity = "plda";
  double pca_keep = 0.30;
  double grid_min = -5.0, grid_max = 5.0, grid_step = 0.5;
  std::string out;
  unsigned jobs = 1;
};

int cmd_tune(const TuneArgs& args) {
  WhitenTransform whiten = load_whiten(args.whiten);
  PldaModel plda;
  if (args.similarity == "plda") plda = load_plda(args.plda);
  auto refs = load_rttm(args.ref);
  std::vector<UemRegion> uem;
  if (!args.uem.empty()) uem = load_uem(args.uem);

  std::map<std::string, const Timeline*> ref_by_rec;
  for (const auto& r : refs) ref_by_rec[r.recording_id()] = &r;

  std::vector<TuneInput> dev;
  for (const auto& seq : load_embeddings(args.embeddings)) {
    auto it = ref_by_rec.find(seq.recording_id);
    if (it == ref_by_rec.end()) {
      throw ValidationError("no reference for recording '" + seq.recording_id + "'");
    }
    const Timeline& ref = *it->second;
    TuneInput input;
    input.recording_id = seq.recording_id;
    input.reference = ref;
    input.region = scoring_region(ref, ref, uem);
    input.speech = ref.speech_intervals();
    for (const auto& seg : seq.segments) {
      if (covers(input.speech, seg.onset + seg.duration / 2.0)) {
        input.segments.push_back(seg);
      }
    }
    if (input.segments.empty()) {
      warn(seq.recording_id + ": no segments inside reference speech; skipped in tuning");
      continue;
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(input.segments.size()), seq.dim);
    for (std::size_t i = 0; i < input.segments.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = input.segments[i].vector.transpose();
    }
    x = length_normalize_rows(whiten.apply_rows(x));
    if (args.similarity == "plda") {
      PldaModel projected = plda;
      if (input.segments.size() >= 2) {
        try {
          Eigen::MatrixXd basis = conversation_pca(x, args.pca_keep);
          projected = plda.project(basis);
          x = x * basis.transpose();
        } catch (const Error& e) {
          warn(seq.recording_id + ": conversation PCA skipped (" + std::string(e.what()) +
               ")");
        }
      }
      input.scores = plda_score_matrix(projected, x);
    } else if (args.similarity == "cosine") {
      input.scores = cosine_score_matrix(x);
    } else {
      throw ArgumentError("similarity must be 'plda' or 'cosine'");
    }
    dev.push_back(std::move(input));
  }

  std::vector<double> grid;
  for (double v = args.grid_min; v <= args.grid_max + 1e-12; v += args.grid_step) {
    grid.push_back(v);
  }
  double threshold = tune_threshold(dev, grid, args.jobs);
  std::string line = strprintf("%.6g\n", threshold);
  if (args.out.empty()) {
    std::fputs(line.c_str(), stdout);
  } else {
    write_file(args.out, line);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const DatasetSpec& spec) {
  write_dataset(spec);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "diarkit - speaker diarization scoring (DER/JER/SAD), PLDA+AHC clustering "
      "with VB-HMM resegmentation, and a synthetic data generator"};
  app.require_subcommand(1);
  app.set_config("--config");

  // score ---------------------------------------------------------------
  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Score system RTTM against a reference");
  score->add_option("--ref", score_args.ref, "Reference RTTM")->required();
  score->add_option("--sys", score_args.sys, "System RTTM")->required();
  score->add_option("--uem", score_args.uem, "Scoring regions (UEM)");
  score->add_option("--manifest", score_args.manifest, "recording<TAB>domain<TAB>core|full");
  score->add_option("--partition", score_args.partition, "core|full (default full)");
  score->add_option("--out", score_args.out, "Report path ('-' = stdout)");
  score->add_option("--corpus-stats", score_args.corpus_stats_out,
                    "Also write reference %speech/%overlap per partition");
  score->add_option("--jobs", score_args.jobs, "Parallel recordings");

  // sad-decode ------------------------------------------------------------
  SadArgs sad_args;
  auto* sad = app.add_subcommand("sad-decode",
                                 "Viterbi speech activity decoding from posteriors");
  sad->add_option("--posteriors", sad_args.posteriors, "Posterior track file")->required();
  sad->add_option("--out", sad_args.out, "Decoded SAD as RTTM")->required();
  sad->add_option("--prior", sad_args.prior, "Speech prior in (0,1)");
  sad->add_option("--prior-from", sad_args.prior_from,
                  "Estimate the prior from this reference RTTM");
  sad->add_option("--min-speech", sad_args.config.min_speech, "Seconds (default 0.240)");
  sad->add_option("--min-nonspeech", sad_args.config.min_nonspeech,
                  "Seconds (default 0.030)");
  sad->add_option("--transition-penalty", sad_args.config.transition_penalty,
                  "Log-domain penalty per speech/non-speech switch");
  sad->add_option("--ref", sad_args.ref, "Reference RTTM: also score the decode");
  sad->add_option("--uem", sad_args.uem, "Scoring regions");
  sad->add_option("--manifest", sad_args.manifest, "Domain manifest for the report");
  sad->add_option("--partition", sad_args.partition, "core|full");
  sad->add_option("--report", sad_args.report, "SAD report path ('-' = stdout)");

  // run-track1 / run-track2 -----------------------------------------------
  TrackArgs t1, t2;
  auto add_common = [](CLI::App* cmd, TrackArgs& args) {
    cmd->add_option("--embeddings", args.embeddings, "Embedding file")->required();
    cmd->add_option("--features", args.features,
                    "Frame features: directory of .feat files or one file")
        ->required();
    cmd->add_option("--out", args.out, "System RTTM output")->required();
    cmd->add_option("--whiten", args.whiten, "Whitening model")->required();
    cmd->add_option("--plda", args.plda, "PLDA model")->required();
    cmd->add_option("--ubm", args.ubm, "UBM model (needed unless --no-vb)");
    cmd->add_option("--tv", args.tv, "Total-variability model (needed unless --no-vb)");
    cmd->add_option("--ahc-threshold", args.options.ahc_threshold,
                    "AHC stopping threshold (default 0)");
    cmd->add_option("--pca-keep", args.options.pca_keep,
                    "Conversation PCA variance fraction (default 0.30)");
    cmd->add_flag("--no-vb", args.no_vb, "Skip VB-HMM resegmentation");
    cmd->add_option("--vb-beta", args.options.vb.beta, "Statistics scale (default 10)");
    cmd->add_option("--vb-ploop", args.options.vb.ploop, "Loop probability (default 0.45)");
    cmd->add_option("--vb-downsamp", args.options.vb.downsamp,
                    "Frame downsampling factor (default 25)");
    cmd->add_option("--vb-iterations", args.options.vb.iterations,
                    "VB iterations (default 1)");
    cmd->add_option("--jobs", args.options.jobs, "Parallel recordings");
  };
  auto* track1 = app.add_subcommand("run-track1", "Diarization from a reference SAD");
  add_common(track1, t1);
  track1->add_option("--ref", t1.ref, "Reference RTTM (merged into SAD)");
  track1->add_option("--sad", t1.sad, "Speech segmentation RTTM (already merged)");

  auto* track2 = app.add_subcommand(
      "run-track2", "Diarization from scratch (externally supplied posteriors)");
  add_common(track2, t2);
  track2->add_option("--posteriors", t2.posteriors, "Posterior track file")->required();
  track2->add_option("--prior", t2.prior, "Speech prior in (0,1)");
  track2->add_option("--prior-from", t2.prior_from, "Estimate prior from this RTTM");
  track2->add_option("--uem", t2.uem, "Regions for the prior estimate");
  track2->add_option("--min-speech", t2.sad_config.min_speech, "Seconds (default 0.240)");
  track2->add_option("--min-nonspeech", t2.sad_config.min_nonspeech,
                     "Seconds (default 0.030)");
  track2->add_option("--transition-penalty", t2.sad_config.transition_penalty,
                     "Penalty per switch");

  // train -------------------------------------------------------------------
  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train whiten / plda / ubm / tv models");
  train->add_option("kind", train_args.kind, "whiten|plda|ubm|tv")->required();
  train->add_option("--data", train_args.data, "Training file(s)")->required();
  train->add_option("--out", train_args.out, "Model output path")->required();
  train->add_option("--whiten", train_args.whiten, "Whitening model (plda training)");
  train->add_option("--ubm", train_args.ubm, "UBM model (tv training)");
  train->add_option("--iters", train_args.iterations, "EM iterations (default 10)");
  train->add_option("--components", train_args.components,
                    "UBM components (default 1024)");
  train->add_option("--rank", train_args.rank, "Eigenvoice rank (default 400)");
  train->add_option("--seed", train_args.seed, "Training seed (default 0)");

  // tune ----------------------------------------------------------------------
  TuneArgs tune_args;
  auto* tune = app.add_subcommand("tune", "Pick the AHC threshold minimizing dev DER");
  tune->add_option("--embeddings", tune_args.embeddings, "Dev embeddings")->required();
  tune->add_option("--ref", tune_args.ref, "Dev reference RTTM")->required();
  tune->add_option("--uem", tune_args.uem, "Scoring regions");
  tune->add_option("--whiten", tune_args.whiten, "Whitening model")->required();
  tune->add_option("--plda", tune_args.plda, "PLDA model (with --similarity plda)");
  tune->add_option("--similarity", tune_args.similarity, "plda|cosine (default plda)");
  tune->add_option("--pca-keep", tune_args.pca_keep, "PCA variance fraction");
  tune->add_option("--grid-min", tune_args.grid_min, "Grid start (default -5)");
  tune->add_option("--grid-max", tune_args.grid_max, "Grid end (default 5)");
  tune->add_option("--grid-step", tune_args.grid_step, "Grid step (default 0.5)");
  tune->add_option("--out", tune_args.out, "Write the threshold here instead of stdout");
  tune->add_option("--jobs", tune_args.jobs, "Parallel grid points");

  // simulate -------------------------------------------------------------------
  DatasetSpec sim_spec;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim->add_option("--out", sim_spec.out_dir, "Output directory")->required();
  sim->add_option("--seed", sim_spec.seed, "Master seed (default 0)");
  sim->add_option("--num-recordings", sim_spec.num_recordings, "Default 4");
  sim->add_option("--min-speakers", sim_spec.min_speakers, "Default 2");
  sim->add_option("--max-speakers", sim_spec.max_speakers, "Default 4");
  sim->add_option("--duration", sim_spec.base.duration, "Seconds per recording");
  sim->add_option("--speech", sim_spec.base.speech_fraction, "Target speech fraction");
  sim->add_option("--overlap", sim_spec.base.overlap_fraction, "Target overlap fraction");
  sim->add_option("--separation", sim_spec.base.speaker_separation,
                  "Embedding between/within variance ratio");
  sim->add_option("--embedding-dim", sim_spec.base.embedding_dim, "Default 16");
  sim->add_option("--feature-dim", sim_spec.base.feature_dim, "Default 8");
  sim->add_option("--posterior-noise", sim_spec.base.posterior_noise,
                  "Logistic noise scale on clean posteriors");
  sim->add_option("--posterior-gain", sim_spec.base.posterior_gain,
                  "Logit magnitude of the clean track");
  sim->add_option("--train-speakers", sim_spec.train_speakers, "Default 24");
  sim->add_option("--train-vectors", sim_spec.train_vectors_per_speaker, "Default 12");
  sim->add_option("--train-utts", sim_spec.train_utterances_per_speaker, "Default 2");
  sim->add_option("--train-utt-seconds", sim_spec.train_utterance_seconds, "Default 20");

  CLI11_PARSE(app, argc, argv);

  try {
    if (score->parsed()) return cmd_score(score_args);
    if (sad->parsed()) return cmd_sad_decode(sad_args);
    if (track1->parsed()) return cmd_run_track1(t1);
    if (track2->parsed()) return cmd_run_track2(t2);
    if (train->parsed()) return cmd_train(train_args);
    if (tune->parsed()) return cmd_tune(tune_args);
    if (sim->parsed()) return cmd_simulate(sim_spec);
  } catch (const Error& e) {
    std::fprintf(stderr, "diarkit: error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "diarkit: internal error: %s\n", e.what());
    return 2;
  }
  return 0;
}
