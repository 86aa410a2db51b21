#include "diarkit/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "diarkit/errors.hpp"
#include "diarkit/parallel.hpp"
#include "diarkit/rng.hpp"
#include "diarkit/rttm.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

namespace {

[[noreturn]] void stage_fail(const std::string& stage, const std::string& recording,
                             const std::string& what) {
  throw Error("[" + stage + "] recording " + recording + ": " + what);
}

template <typename Fn>
auto stage(const std::string& name, const std::string& recording, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    stage_fail(name, recording, e.what());
  }
}

}  // namespace

Timeline diarize_recording(const EmbeddingSequence& embeddings,
                           const FrameFeatures& features, const IntervalSet& speech,
                           const PipelineModels& models, const PipelineOptions& options) {
  const std::string& rec = embeddings.recording_id;
  if (measure(speech) <= 0.0) {
    warn(rec + ": empty speech region; emitting no turns");
    return Timeline(rec, {});
  }

  // Keep only segments whose center lies inside the speech region.
  std::vector<EmbeddingSegment> segments;
  for (const auto& seg : embeddings.segments) {
    if (covers(speech, seg.onset + seg.duration / 2.0)) segments.push_back(seg);
  }
  if (segments.empty()) {
    warn(rec + ": no embedding segments inside the speech region; emitting no turns");
    return Timeline(rec, {});
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(segments.size()), embeddings.dim);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = segments[i].vector.transpose();
  }
  x = stage("whiten", rec, [&] { return models.whiten.apply_rows(x); });
  x = stage("length-norm", rec, [&] { return length_normalize_rows(x); });

  std::vector<int> labels(segments.size(), 0);
  if (segments.size() >= 2) {
    PldaModel plda = models.plda;
    try {
      Eigen::MatrixXd basis = conversation_pca(x, options.pca_keep);
      plda = models.plda.project(basis);
      x = x * basis.transpose();
    } catch (const Error& e) {
      warn(rec + ": conversation PCA skipped (" + e.what() + ")");
    }
    Eigen::MatrixXd scores =
        stage("plda-score", rec, [&] { return plda_score_matrix(plda, x); });
    labels = stage("ahc", rec, [&] {
      return ahc_cluster(scores, options.ahc_threshold).labels;
    });
  }

  Timeline clusters = stage("segments-to-turns", rec, [&] {
    return crop_to_intervals(segments_to_timeline(labels, segments, rec), speech);
  });
  if (!options.use_vb || clusters.empty()) return clusters;
  return stage("vb-resegment", rec, [&] {
    return vb_resegment(features, clusters, models.ubm, models.tv, options.vb);
  });
}

namespace {

const FrameFeatures& features_for(const TrackData& data, const std::string& rec) {
  auto it = data.features.find(rec);
  if (it == data.features.end()) stage_fail("features", rec, "no frame features supplied");
  return it->second;
}

const EmbeddingSequence& embeddings_for(const TrackData& data, const std::string& rec) {
  auto it = data.embeddings.find(rec);
  if (it == data.embeddings.end()) stage_fail("embeddings", rec, "no embeddings supplied");
  return it->second;
}

}  // namespace

std::vector<Timeline> run_track1(const TrackData& data, const PipelineModels& models,
                                 const PipelineOptions& options) {
  std::vector<Timeline> out(data.recordings.size());
  parallel_for(data.recordings.size(), options.jobs, [&](std::size_t i) {
    const std::string& rec = data.recordings[i];
    auto sad = data.reference_sad.find(rec);
    if (sad == data.reference_sad.end()) {
      stage_fail("reference-sad", rec, "no reference speech segmentation");
    }
    out[i] = diarize_recording(embeddings_for(data, rec), features_for(data, rec),
                               sad->second, models, options);
  });
  return out;
}

std::vector<Timeline> run_track2(const TrackData& data, const PipelineModels& models,
                                 const PipelineOptions& options,
                                 const SadDecoderConfig& sad_config) {
  std::vector<Timeline> out(data.recordings.size());
  parallel_for(data.recordings.size(), options.jobs, [&](std::size_t i) {
    const std::string& rec = data.recordings[i];
    auto post = data.posteriors.find(rec);
    if (post == data.posteriors.end()) {
      stage_fail("posteriors", rec, "no posterior track supplied");
    }
    Timeline decoded = stage("sad-decode", rec, [&] {
      return viterbi_sad(to_pseudo_likelihood(post->second, sad_config.prior_speech),
                         post->second.frame_step, sad_config, rec);
    });
    if (decoded.empty()) {
      warn(rec + ": decoded speech is empty; emitting no turns");
      out[i] = Timeline(rec, {});
      return;
    }
    out[i] = diarize_recording(embeddings_for(data, rec), features_for(data, rec),
                               decoded.speech_intervals(), models, options);
  });
  return out;
}

ScoreResult score_command(const std::vector<Timeline>& refs,
                          const std::vector<Timeline>& sys,
                          const std::vector<UemRegion>& uem,
                          const std::optional<DomainManifest>& manifest,
                          Partition partition, unsigned jobs) {
  ScoreResult out;
  if (manifest) {
    out.manifest = *manifest;
  } else {
    for (const auto& ref : refs) {
      out.manifest.entries.emplace(ref.recording_id(), DomainManifest::Entry{"-", true});
    }
  }
  std::map<std::string, const Timeline*> sys_by_rec;
  for (const auto& s : sys) sys_by_rec[s.recording_id()] = &s;
  std::map<std::string, const Timeline*> ref_by_rec;
  for (const auto& r : refs) {
    if (!out.manifest.contains(r.recording_id())) {
      throw ValidationError("reference recording '" + r.recording_id() +
                            "' not in manifest");
    }
    ref_by_rec[r.recording_id()] = &r;
  }
  for (const auto& s : sys) {
    if (!ref_by_rec.count(s.recording_id())) {
      throw ValidationError("system recording '" + s.recording_id() +
                            "' has no reference");
    }
  }

  std::vector<const Timeline*> scored;
  for (const auto& [rec, ref] : ref_by_rec) {
    if (partition == Partition::kCore && !out.manifest.entries.at(rec).in_core) continue;
    scored.push_back(ref);
  }

  std::vector<std::optional<DerReport>> reports(scored.size());
  std::vector<std::string> warnings(scored.size());
  parallel_for(scored.size(), jobs, [&](std::size_t i) {
    const Timeline& ref = *scored[i];
    const std::string& rec = ref.recording_id();
    Timeline empty(rec, {});
    const Timeline* hyp = &empty;
    auto it = sys_by_rec.find(rec);
    if (it != sys_by_rec.end()) {
      hyp = it->second;
    } else {
      warnings[i] = rec + ": missing from system output; scored as fully missed";
    }
    try {
      reports[i] = score_recording(ref, *hyp, scoring_region(ref, *hyp, uem));
    } catch (const ScoreUndefinedError& e) {
      warnings[i] = rec + ": excluded from aggregation (" + e.what() + ")";
    }
  });
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (reports[i]) out.reports.push_back(*reports[i]);
    if (!warnings[i].empty()) {
      warn(warnings[i]);
      out.warnings.push_back(warnings[i]);
    }
  }
  out.aggregate = aggregate_der(out.reports, out.manifest, partition);
  return out;
}

void write_dataset(const DatasetSpec& spec) {
  namespace fs = std::filesystem;
  fs::create_directories(spec.out_dir);
  fs::create_directories(spec.out_dir + "/features");

  static const char* kDomains[] = {"casual", "meeting", "interview", "phone"};

  std::vector<Timeline> refs;
  std::vector<UemRegion> uem;
  std::vector<EmbeddingSequence> embeddings;
  std::vector<PosteriorTrack> posteriors;
  DomainManifest manifest;

  for (int i = 0; i < spec.num_recordings; ++i) {
    SimConfig cfg = spec.base;
    cfg.seed = Rng::derive_seed(spec.seed, static_cast<std::uint64_t>(i));
    cfg.recording_id = strprintf("sim_%03d", i);
    int span = spec.max_speakers - spec.min_speakers + 1;
    cfg.num_speakers = spec.min_speakers + (span > 0 ? i % span : 0);
    if (cfg.num_speakers == 1) cfg.overlap_fraction = 0.0;
    SimOutput sim = simulate_conversation(cfg);

    refs.push_back(sim.reference);
    uem.insert(uem.end(), sim.uem.begin(), sim.uem.end());
    embeddings.push_back(sim.embeddings);
    posteriors.push_back(sim.posteriors);
    save_features_binary(spec.out_dir + "/features/" + cfg.recording_id + ".feat",
                         sim.features);
    manifest.entries.emplace(cfg.recording_id,
                             DomainManifest::Entry{kDomains[i % 4], i % 4 != 3});
  }
  save_rttm(spec.out_dir + "/ref.rttm", refs);
  save_uem(spec.out_dir + "/all.uem", uem);
  save_embeddings(spec.out_dir + "/embeddings.tsv", embeddings);
  save_posteriors(spec.out_dir + "/posteriors.tsv", posteriors);
  write_file(spec.out_dir + "/manifest.tsv", write_manifest(manifest));

  save_embeddings(spec.out_dir + "/train_embeddings.tsv",
                  simulate_training_embeddings(Rng::derive_seed(spec.seed, 1000003),
                                               spec.train_speakers,
                                               spec.train_vectors_per_speaker,
                                               spec.base.embedding_dim,
                                               spec.base.speaker_separation));
  save_features_text(spec.out_dir + "/train_features.tsv",
                     simulate_training_features(Rng::derive_seed(spec.seed, 2000003),
                                                spec.train_speakers,
                                                spec.train_utterances_per_speaker,
                                                spec.train_utterance_seconds, spec.base));
}

}  // namespace diarkit
