#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "diarkit/scoring.hpp"
#include "diarkit/timeline.hpp"

namespace diarkit {

/// Externally produced per-frame speech posteriors for one recording.
struct PosteriorTrack {
  std::string recording_id;
  double frame_step = 0.030;  // seconds
  Eigen::VectorXd p_speech;   // each in [0, 1]
};

/// Viterbi SAD knobs. Durations translate to left-to-right sub-state chains
/// of ceil(dur / frame_step) states with exit only from the last sub-state.
struct SadDecoderConfig {
  double prior_speech = 0.5;
  double min_speech = 0.240;        // seconds
  double min_nonspeech = 0.030;     // seconds
  double transition_penalty = 0.0;  // log-domain, added per macro-state switch

  void validate() const;
};

/// Per-frame pseudo-likelihood pair: log(p/prior), log((1-p)/(1-prior)),
/// posteriors clamped to [1e-6, 1 - 1e-6] first.
struct PseudoLikelihood {
  Eigen::VectorXd log_speech;
  Eigen::VectorXd log_nonspeech;
};
PseudoLikelihood to_pseudo_likelihood(const PosteriorTrack& track, double prior_speech);

/// Duration-constrained Viterbi decoding to a single-pseudo-speaker "speech"
/// timeline. Segments meet the minimum durations except where they touch the
/// recording edges (chains may start/end mid-chain there). Exact emission
/// ties prefer non-speech.
Timeline viterbi_sad(const PseudoLikelihood& loglik, double frame_step,
                     const SadDecoderConfig& config, const std::string& recording_id);

/// Best-path log score of the decode above (emissions plus penalty per
/// switch), for oracle comparison.
double viterbi_sad_path_score(const PseudoLikelihood& loglik, double frame_step,
                              const SadDecoderConfig& config);

/// Empirical speech prior: speech fraction of the reference SAD over the
/// scored regions.
double estimate_prior(const std::vector<Timeline>& refs, const std::vector<UemRegion>& uem);

/// Decode + score every reference recording; throws when a posterior track is
/// missing for a manifest recording under the chosen partition.
struct DecoderScore {
  std::vector<Timeline> decoded;
  std::vector<SadReport> reports;
  SadAggregate aggregate;
};
DecoderScore score_decoder(const std::vector<PosteriorTrack>& posteriors,
                           const std::vector<Timeline>& refs,
                           const std::vector<UemRegion>& uem, const DomainManifest& manifest,
                           Partition partition, const SadDecoderConfig& config);

/// Posterior file:
///   #frame_step=<seconds>
///   <recording_id>\t<frame_index>\t<p_speech>
std::vector<PosteriorTrack> parse_posteriors_string(const std::string& text);
std::vector<PosteriorTrack> load_posteriors(const std::string& path);
std::string write_posteriors(const std::vector<PosteriorTrack>& tracks);
void save_posteriors(const std::string& path, const std::vector<PosteriorTrack>& tracks);

}  // namespace diarkit
