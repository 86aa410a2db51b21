#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diarkit/embedding.hpp"
#include "diarkit/features.hpp"
#include "diarkit/saddecode.hpp"
#include "diarkit/timeline.hpp"

namespace diarkit {

/// Synthetic conversation parameters. Turn boundaries snap to boundary_grid;
/// %speech and %overlap are driven toward the targets by feedback while
/// generating, so long recordings land within a few points of them.
struct SimConfig {
  std::uint64_t seed = 0;
  std::string recording_id = "sim_000";
  int num_speakers = 2;
  double duration = 120.0;          // seconds
  double speech_fraction = 0.78;    // target fraction of region with speech
  double overlap_fraction = 0.10;   // target fraction with >= 2 speakers
  double mean_turn = 2.0;           // seconds
  double mean_pause = 0.5;          // seconds
  int embedding_dim = 16;
  double speaker_separation = 2.0;  // between/within variance ratio
  double frame_step = 0.010;        // feature rate
  int feature_dim = 16;
  double feature_shift = 3.0;       // per-speaker offset scale in feature space
  double feature_noise = 0.7;       // within-frame noise around the mixture mean
  double posterior_step = 0.030;
  double posterior_gain = 4.0;      // logit magnitude of the clean track
  double posterior_noise = 0.0;     // logistic noise scale
  double boundary_grid = 0.010;
  double embedding_window = 1.5;
  double embedding_shift = 0.25;

  void validate() const;
};

/// Everything one synthetic recording provides, mutually consistent with the
/// reference.
struct SimOutput {
  Timeline reference;
  std::vector<UemRegion> uem;  // single region [0, duration]
  EmbeddingSequence embeddings;
  FrameFeatures features;
  PosteriorTrack posteriors;
  FrameLabels frame_labels;  // reference discretized at frame_step
};

SimOutput simulate_conversation(const SimConfig& config);

/// Speaker-labeled training vectors from the same embedding distribution the
/// simulator uses (recording_id column carries the speaker label).
std::vector<EmbeddingSequence> simulate_training_embeddings(std::uint64_t seed,
                                                            int num_speakers,
                                                            int vectors_per_speaker, int dim,
                                                            double separation);

/// Single-speaker utterances from the simulator's feature distribution, for
/// UBM / total-variability training.
std::vector<FrameFeatures> simulate_training_features(std::uint64_t seed, int num_speakers,
                                                      int utterances_per_speaker,
                                                      double utterance_seconds,
                                                      const SimConfig& like);

/// Relabel random chunks of speech (about `fraction` of speech frames) to a
/// different speaker, keeping the speech region exactly; stands in for an
/// imperfect clustering stage.
Timeline corrupt_init(const Timeline& reference, double fraction, double frame_step,
                      std::uint64_t seed);

/// Frame-quantized DER with exhaustive search over all injective speaker
/// mappings. Refuses more than 8 speakers per side.
struct BruteForceDer {
  double total_ref = 0.0;
  double miss = 0.0;
  double false_alarm = 0.0;
  double confusion = 0.0;
  double der_pct = 0.0;
  double mapped_overlap = 0.0;  // best mapping objective, seconds
};
BruteForceDer brute_force_der(const Timeline& ref, const Timeline& sys,
                              const std::vector<UemRegion>& uem, double frame = 0.001);

/// Exhaustive-search optimal assignment objective on a benefit matrix
/// (independent check of the solver).
double brute_force_assignment(const Eigen::MatrixXd& benefit);

/// Max total log score over all duration-legal binary segmentations
/// (first/last run exempt from the minimum, matching decoding at recording
/// edges). Refuses T > 30.
double brute_force_paths(const PseudoLikelihood& loglik, double frame_step,
                         const SadDecoderConfig& config);

}  // namespace diarkit
