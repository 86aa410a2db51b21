#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diarkit/backend.hpp"
#include "diarkit/saddecode.hpp"
#include "diarkit/scoring.hpp"
#include "diarkit/simulate.hpp"
#include "diarkit/vbhmm.hpp"

namespace diarkit {

/// Trained models the diarization chain needs.
struct PipelineModels {
  WhitenTransform whiten;
  PldaModel plda;
  Ubm ubm;
  TvMatrix tv;
};

struct PipelineOptions {
  double ahc_threshold = 0.0;
  double pca_keep = 0.30;
  bool use_vb = true;
  VbConfig vb;
  unsigned jobs = 1;
};

/// Whiten -> length-normalize -> conversation PCA -> PLDA -> AHC -> turns,
/// clipped to the speech region, then optional VB-HMM refinement.
/// Stage failures surface as Error with a "track/<stage>" tag.
Timeline diarize_recording(const EmbeddingSequence& embeddings,
                           const FrameFeatures& features, const IntervalSet& speech,
                           const PipelineModels& models, const PipelineOptions& options);

/// Per-recording inputs for a multi-recording run, keyed by recording id.
struct TrackData {
  std::vector<std::string> recordings;  // sorted; drives output order
  std::map<std::string, EmbeddingSequence> embeddings;
  std::map<std::string, FrameFeatures> features;
  std::map<std::string, IntervalSet> reference_sad;      // track 1
  std::map<std::string, PosteriorTrack> posteriors;      // track 2
};

/// Track 1: diarization from the reference speech segmentation.
std::vector<Timeline> run_track1(const TrackData& data, const PipelineModels& models,
                                 const PipelineOptions& options);

/// Track 2: decode SAD from posteriors, then the same chain.
std::vector<Timeline> run_track2(const TrackData& data, const PipelineModels& models,
                                 const PipelineOptions& options,
                                 const SadDecoderConfig& sad_config);

/// Score system output against a reference. Recordings missing from the
/// system are scored as fully missed (with a warning); recordings whose
/// scoring region holds no reference speech are excluded (with a warning).
struct ScoreResult {
  std::vector<DerReport> reports;
  DerAggregate aggregate;
  std::vector<std::string> warnings;
  DomainManifest manifest;  // the manifest used (synthesized when absent)
};
ScoreResult score_command(const std::vector<Timeline>& refs,
                          const std::vector<Timeline>& sys,
                          const std::vector<UemRegion>& uem,
                          const std::optional<DomainManifest>& manifest,
                          Partition partition, unsigned jobs = 1);

/// Synthetic dataset layout written by the `simulate` subcommand.
struct DatasetSpec {
  std::string out_dir;
  std::uint64_t seed = 0;
  int num_recordings = 4;
  int min_speakers = 2;
  int max_speakers = 4;
  SimConfig base;          // per-recording template (seed/id/speakers overridden)
  int train_speakers = 24;
  int train_vectors_per_speaker = 12;
  int train_utterances_per_speaker = 2;
  double train_utterance_seconds = 20.0;
};

/// Writes ref.rttm, all.uem, manifest.tsv, embeddings.tsv, posteriors.tsv,
/// features/<recording>.feat, train_embeddings.tsv, train_features.tsv.
void write_dataset(const DatasetSpec& spec);

}  // namespace diarkit
