#include "diarkit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "diarkit/errors.hpp"
#include "diarkit/rng.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

namespace {

double snap(double t, double grid) { return std::round(t / grid) * grid; }

std::string sim_speaker(int i) { return strprintf("S%d", i); }

// Within-speaker embedding noise is anisotropic on purpose: a learned metric
// has something to gain over plain cosine scoring.
Eigen::VectorXd within_stddevs(int dim) {
  Eigen::VectorXd out(dim);
  for (int d = 0; d < dim; ++d) {
    double frac = dim > 1 ? static_cast<double>(d) / (dim - 1) : 0.5;
    out(d) = std::sqrt(0.5 * std::pow(4.0, frac));  // variances 0.5 .. 2.0
  }
  return out;
}

Eigen::VectorXd draw_speaker_mean(Rng& rng, int dim, double separation) {
  Eigen::VectorXd mean(dim);
  double scale = std::sqrt(separation);  // within variances average ~1
  for (int d = 0; d < dim; ++d) mean(d) = scale * rng.normal();
  return mean;
}

Eigen::VectorXd draw_embedding(Rng& rng, const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& stddevs) {
  Eigen::VectorXd v(mean.size());
  for (Eigen::Index d = 0; d < mean.size(); ++d) v(d) = mean(d) + stddevs(d) * rng.normal();
  return v;
}

// Base feature mixture: two well-separated components shared by every
// speaker; speaker identity rides on top as a small shift, so trained
// mixtures keep speaker-independent components.
Eigen::VectorXd draw_base_feature(Rng& rng, int dim, double noise) {
  bool second = rng.uniform() < 0.5;
  Eigen::VectorXd v(dim);
  for (int d = 0; d < dim; ++d) {
    double mean = (d % 2 == 0 ? 2.0 : -2.0) * (second ? -1.0 : 1.0);
    v(d) = mean + noise * rng.normal();
  }
  return v;
}

Eigen::VectorXd draw_feature_shift(Rng& rng, int dim, double scale) {
  Eigen::VectorXd v(dim);
  for (int d = 0; d < dim; ++d) v(d) = rng.normal();
  double norm = v.norm();
  if (norm > 0.0) v *= scale / norm;
  return v;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// float-representable value, so feature files round-trip exactly.
double as_float(double x) { return static_cast<double>(static_cast<float>(x)); }

}  // namespace

void SimConfig::validate() const {
  if (num_speakers < 1) throw ArgumentError("num_speakers must be >= 1");
  if (num_speakers == 1 && overlap_fraction > 0.0) {
    throw ArgumentError("overlap target is infeasible with a single speaker");
  }
  if (overlap_fraction < 0.0 || overlap_fraction >= 1.0) {
    throw ArgumentError("overlap_fraction must be in [0, 1)");
  }
  if (!(speech_fraction > 0.0) || speech_fraction >= 1.0) {
    throw ArgumentError("speech_fraction must be in (0, 1)");
  }
  if (overlap_fraction >= speech_fraction) {
    throw ArgumentError("overlap_fraction must be below speech_fraction");
  }
  if (!(duration > 0.0) || !(mean_turn > 0.0) || !(mean_pause > 0.0)) {
    throw ArgumentError("duration, mean_turn, and mean_pause must be > 0");
  }
  if (embedding_dim < 1 || feature_dim < 1) throw ArgumentError("dims must be >= 1");
  if (!(speaker_separation > 0.0)) throw ArgumentError("speaker_separation must be > 0");
  if (!(frame_step > 0.0) || !(posterior_step > 0.0) || !(boundary_grid > 0.0)) {
    throw ArgumentError("frame steps must be > 0");
  }
}

SimOutput simulate_conversation(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);

  // --- reference turns -----------------------------------------------------
  std::vector<Turn> raw;
  std::vector<double> speaker_last_offset(static_cast<std::size_t>(config.num_speakers), -1.0);
  double chain_end = 0.0;
  double silence_so_far = 0.0;
  double overlap_so_far = 0.0;
  int prev_speaker = -1;
  double prev_len = 0.0;

  while (chain_end < config.duration) {
    int speaker;
    if (config.num_speakers == 1) {
      speaker = 0;
    } else {
      auto pick = static_cast<int>(rng.uniform_int(
          static_cast<std::uint64_t>(config.num_speakers - (prev_speaker >= 0 ? 1 : 0))));
      speaker = (prev_speaker >= 0 && pick >= prev_speaker) ? pick + 1 : pick;
    }
    double turn_len = 0.3 + rng.exponential(std::max(0.05, config.mean_turn - 0.3));

    double onset;
    bool overlap_deficit = overlap_so_far < config.overlap_fraction * chain_end;
    bool silence_deficit =
        silence_so_far < (1.0 - config.speech_fraction) * chain_end;
    if (prev_speaker < 0) {
      onset = 0.0;
    } else if (overlap_deficit && config.num_speakers >= 2) {
      double amount = std::min({rng.exponential(0.5 * config.mean_turn), 0.7 * prev_len,
                                0.7 * turn_len});
      onset = chain_end - amount;
      overlap_so_far += amount;
    } else if (silence_deficit) {
      // Chase the silence target: top up the draw with half the deficit so
      // the measured speech fraction converges even when pauses alone are
      // too short to reach it.
      double deficit = (1.0 - config.speech_fraction) * chain_end - silence_so_far;
      double pause = rng.exponential(config.mean_pause) + std::min(2.0, 0.5 * deficit);
      onset = chain_end + pause;
      silence_so_far += pause;
    } else {
      onset = chain_end;
    }
    // Same-speaker turns must stay clear of the 200 ms merge rule.
    double floor_onset = speaker_last_offset[static_cast<std::size_t>(speaker)];
    if (floor_onset >= 0.0 && onset < floor_onset + 0.25) onset = floor_onset + 0.25;
    if (onset < 0.0) onset = 0.0;

    onset = snap(onset, config.boundary_grid);
    double offset = snap(onset + turn_len, config.boundary_grid);
    if (offset <= onset) offset = onset + config.boundary_grid;
    raw.push_back({config.recording_id, sim_speaker(speaker), onset, offset - onset});
    speaker_last_offset[static_cast<std::size_t>(speaker)] = offset;
    prev_speaker = speaker;
    prev_len = offset - onset;
    chain_end = std::max(chain_end, offset);
  }

  Timeline reference =
      enforce_pause_split(crop_to_intervals(Timeline(config.recording_id, std::move(raw)),
                                            {{0.0, config.duration}}));

  SimOutput out;
  out.reference = reference;
  out.uem = {{config.recording_id, 0.0, config.duration}};

  // --- embeddings over SAD windows ----------------------------------------
  std::vector<Eigen::VectorXd> speaker_means;
  for (int s = 0; s < config.num_speakers; ++s) {
    speaker_means.push_back(
        draw_speaker_mean(rng, config.embedding_dim, config.speaker_separation));
  }
  Eigen::VectorXd noise_std = within_stddevs(config.embedding_dim);

  std::vector<IntervalSet> per_speaker;
  std::vector<std::string> speakers = reference.speakers();
  for (const auto& id : speakers) per_speaker.push_back(reference.speaker_intervals(id));

  out.embeddings.recording_id = config.recording_id;
  out.embeddings.dim = config.embedding_dim;
  for (const auto& region : reference.speech_intervals()) {
    std::vector<double> onsets;
    if (region.length() <= config.embedding_window) {
      onsets.push_back(region.begin);
    } else {
      for (double t = region.begin; t + config.embedding_window <= region.end + 1e-9;
           t += config.embedding_shift) {
        onsets.push_back(t);
      }
      double tail = region.end - config.embedding_window;
      if (!onsets.empty() && tail > onsets.back() + 1e-9) onsets.push_back(tail);
    }
    for (double onset : onsets) {
      double win = std::min(config.embedding_window, region.length());
      Interval window{onset, onset + win};
      // Dominant speaker inside the window.
      int dominant = 0;
      double best = -1.0;
      for (std::size_t s = 0; s < speakers.size(); ++s) {
        double covered = measure(intersect(per_speaker[s], {window}));
        if (covered > best) {
          best = covered;
          dominant = static_cast<int>(s);
        }
      }
      // Speaker name "S<k>" indexes the mean table.
      long mean_idx = 0;
      parse_long(speakers[static_cast<std::size_t>(dominant)].substr(1), &mean_idx);
      EmbeddingSegment seg;
      seg.onset = window.begin;
      seg.duration = win;
      seg.vector = draw_embedding(rng, speaker_means[static_cast<std::size_t>(mean_idx)],
                                  noise_std);
      out.embeddings.segments.push_back(std::move(seg));
    }
  }
  std::stable_sort(out.embeddings.segments.begin(), out.embeddings.segments.end(),
                   [](const EmbeddingSegment& a, const EmbeddingSegment& b) {
                     return a.onset < b.onset;
                   });

  // --- frame features -------------------------------------------------------
  out.frame_labels = discretize(reference, config.frame_step, config.duration);
  std::vector<Eigen::VectorXd> shifts;
  for (int s = 0; s < config.num_speakers; ++s) {
    shifts.push_back(draw_feature_shift(rng, config.feature_dim, config.feature_shift));
  }
  // Map frame label sets to the earliest-onset active speaker.
  std::map<std::string, int> speaker_number;
  for (int s = 0; s < config.num_speakers; ++s) speaker_number[sim_speaker(s)] = s;
  std::map<std::string, double> first_onset;
  for (const auto& turn : reference.turns()) {
    first_onset.emplace(turn.speaker_id, turn.onset);
  }

  const auto t_feat = static_cast<Eigen::Index>(out.frame_labels.labels.size());
  out.features.recording_id = config.recording_id;
  out.features.frame_step = config.frame_step;
  out.features.frames.resize(t_feat, config.feature_dim);
  IntervalSet speech = reference.speech_intervals();
  for (Eigen::Index t = 0; t < t_feat; ++t) {
    const auto& active = out.frame_labels.labels[static_cast<std::size_t>(t)];
    Eigen::VectorXd frame = draw_base_feature(rng, config.feature_dim, config.feature_noise);
    if (!active.empty()) {
      // Earliest-onset active speaker claims the frame.
      std::string chosen = active.front();
      for (const auto& id : active) {
        if (first_onset[id] < first_onset[chosen]) chosen = id;
      }
      frame += shifts[static_cast<std::size_t>(speaker_number[chosen])];
    }
    for (Eigen::Index d = 0; d < frame.size(); ++d) {
      out.features.frames(t, d) = as_float(frame(d));
    }
  }

  // --- posteriors ------------------------------------------------------------
  const auto t_post = static_cast<Eigen::Index>(
      std::ceil(config.duration / config.posterior_step - 1e-9));
  out.posteriors.recording_id = config.recording_id;
  out.posteriors.frame_step = config.posterior_step;
  out.posteriors.p_speech.resize(t_post);
  for (Eigen::Index t = 0; t < t_post; ++t) {
    double mid = (static_cast<double>(t) + 0.5) * config.posterior_step;
    double clean = covers(speech, mid) ? 1.0 : -1.0;
    double noise = rng.logistic(config.posterior_noise);
    out.posteriors.p_speech(t) = sigmoid(config.posterior_gain * clean + noise);
  }
  return out;
}

std::vector<EmbeddingSequence> simulate_training_embeddings(std::uint64_t seed,
                                                            int num_speakers,
                                                            int vectors_per_speaker, int dim,
                                                            double separation) {
  if (num_speakers < 1 || vectors_per_speaker < 1 || dim < 1) {
    throw ArgumentError("training embedding counts and dim must be >= 1");
  }
  Rng rng(seed);
  Eigen::VectorXd noise_std = within_stddevs(dim);
  std::vector<EmbeddingSequence> out;
  for (int s = 0; s < num_speakers; ++s) {
    Eigen::VectorXd mean = draw_speaker_mean(rng, dim, separation);
    EmbeddingSequence seq;
    seq.recording_id = sim_speaker(s);
    seq.dim = dim;
    for (int k = 0; k < vectors_per_speaker; ++k) {
      EmbeddingSegment seg;
      seg.onset = static_cast<double>(k);
      seg.duration = 1.0;
      seg.vector = draw_embedding(rng, mean, noise_std);
      seq.segments.push_back(std::move(seg));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<FrameFeatures> simulate_training_features(std::uint64_t seed, int num_speakers,
                                                      int utterances_per_speaker,
                                                      double utterance_seconds,
                                                      const SimConfig& like) {
  if (num_speakers < 1 || utterances_per_speaker < 1 || !(utterance_seconds > 0.0)) {
    throw ArgumentError("training feature counts must be positive");
  }
  Rng rng(seed);
  std::vector<FrameFeatures> out;
  const auto frames_per_utt = static_cast<Eigen::Index>(
      std::ceil(utterance_seconds / like.frame_step - 1e-9));
  for (int s = 0; s < num_speakers; ++s) {
    Eigen::VectorXd shift = draw_feature_shift(rng, like.feature_dim, like.feature_shift);
    for (int u = 0; u < utterances_per_speaker; ++u) {
      FrameFeatures f;
      f.recording_id = strprintf("S%d_utt%d", s, u);
      f.frame_step = like.frame_step;
      f.frames.resize(frames_per_utt, like.feature_dim);
      for (Eigen::Index t = 0; t < frames_per_utt; ++t) {
        Eigen::VectorXd frame = draw_base_feature(rng, like.feature_dim, like.feature_noise) + shift;
        for (Eigen::Index d = 0; d < frame.size(); ++d) f.frames(t, d) = as_float(frame(d));
      }
      out.push_back(std::move(f));
    }
  }
  return out;
}

Timeline corrupt_init(const Timeline& reference, double fraction, double frame_step,
                      std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) throw ArgumentError("fraction must be in [0, 1)");
  auto speakers = reference.speakers();
  if (reference.empty() || speakers.size() < 2 || fraction == 0.0) return reference;
  Rng rng(seed);

  FrameLabels grid = discretize(reference, frame_step);
  std::map<std::string, double> first_onset;
  for (const auto& turn : reference.turns()) first_onset.emplace(turn.speaker_id, turn.onset);
  std::map<std::string, int> number;
  for (std::size_t s = 0; s < speakers.size(); ++s) number[speakers[s]] = static_cast<int>(s);

  const auto t_full = static_cast<long>(grid.labels.size());
  std::vector<int> labels(static_cast<std::size_t>(t_full), -1);
  std::vector<long> speech_frames;
  for (long t = 0; t < t_full; ++t) {
    const auto& active = grid.labels[static_cast<std::size_t>(t)];
    if (active.empty()) continue;
    std::string chosen = active.front();
    for (const auto& id : active) {
      if (first_onset[id] < first_onset[chosen]) chosen = id;
    }
    labels[static_cast<std::size_t>(t)] = number[chosen];
    speech_frames.push_back(t);
  }
  if (speech_frames.empty()) return reference;

  const auto target = static_cast<long>(fraction * static_cast<double>(speech_frames.size()));
  long corrupted = 0;
  std::vector<bool> touched(static_cast<std::size_t>(t_full), false);
  int guard = 0;
  while (corrupted < target && guard++ < 100000) {
    long pick = speech_frames[rng.uniform_int(speech_frames.size())];
    auto chunk = static_cast<long>((0.3 + 0.7 * rng.uniform()) / frame_step);  // 0.3-1.0 s
    int wrong = static_cast<int>(rng.uniform_int(speakers.size() - 1));
    for (long t = pick; t < std::min(pick + chunk, t_full) && corrupted < target; ++t) {
      auto ti = static_cast<std::size_t>(t);
      if (labels[ti] < 0 || touched[ti]) continue;
      int replacement = wrong >= labels[ti] ? wrong + 1 : wrong;
      labels[ti] = replacement;
      touched[ti] = true;
      ++corrupted;
    }
  }
  return labels_to_timeline(reference.recording_id(), reference.speech_intervals(), labels,
                            speakers, frame_step);
}

BruteForceDer brute_force_der(const Timeline& ref, const Timeline& sys,
                              const std::vector<UemRegion>& uem, double frame) {
  if (!(frame > 0.0)) throw ArgumentError("frame must be > 0");
  IntervalSet region = scoring_region(ref, sys, uem);
  Timeline ref_c = crop_to_intervals(ref, region);
  Timeline sys_c = crop_to_intervals(sys, region);
  auto ref_ids = ref_c.speakers();
  auto sys_ids = sys_c.speakers();
  if (ref_ids.size() > 8 || sys_ids.size() > 8) {
    throw ArgumentError("brute_force_der: more than 8 speakers per side");
  }
  std::vector<IntervalSet> ref_iv, sys_iv;
  for (const auto& id : ref_ids) ref_iv.push_back(ref_c.speaker_intervals(id));
  for (const auto& id : sys_ids) sys_iv.push_back(sys_c.speaker_intervals(id));

  double end = 0.0;
  for (const auto& iv : region) end = std::max(end, iv.end);
  const auto t_count = static_cast<long>(std::ceil(end / frame - 1e-9));

  const std::size_t r_n = ref_ids.size(), s_n = sys_ids.size();
  std::vector<std::vector<long>> pair_counts(r_n, std::vector<long>(s_n, 0));
  long total_ref = 0, miss = 0, fa = 0, summin = 0;
  std::vector<char> ra(r_n), sa(s_n);
  for (long t = 0; t < t_count; ++t) {
    double mid = (static_cast<double>(t) + 0.5) * frame;
    if (!covers(region, mid)) continue;
    int nr = 0, ns = 0;
    for (std::size_t i = 0; i < r_n; ++i) {
      ra[i] = covers(ref_iv[i], mid);
      nr += ra[i];
    }
    for (std::size_t j = 0; j < s_n; ++j) {
      sa[j] = covers(sys_iv[j], mid);
      ns += sa[j];
    }
    for (std::size_t i = 0; i < r_n; ++i) {
      if (!ra[i]) continue;
      for (std::size_t j = 0; j < s_n; ++j) {
        if (sa[j]) ++pair_counts[i][j];
      }
    }
    total_ref += nr;
    miss += std::max(0, nr - ns);
    fa += std::max(0, ns - nr);
    summin += std::min(nr, ns);
  }

  // Exhaustive search over injective ref -> sys mappings (or none).
  long best_correct = 0;
  std::vector<bool> used(s_n, false);
  auto recurse = [&](auto&& self, std::size_t i, long acc) -> void {
    if (i == r_n) {
      best_correct = std::max(best_correct, acc);
      return;
    }
    self(self, i + 1, acc);  // leave ref speaker i unmapped
    for (std::size_t j = 0; j < s_n; ++j) {
      if (used[j]) continue;
      used[j] = true;
      self(self, i + 1, acc + pair_counts[i][j]);
      used[j] = false;
    }
  };
  recurse(recurse, 0, 0);

  BruteForceDer out;
  out.total_ref = static_cast<double>(total_ref) * frame;
  out.miss = static_cast<double>(miss) * frame;
  out.false_alarm = static_cast<double>(fa) * frame;
  out.confusion = static_cast<double>(summin - best_correct) * frame;
  out.mapped_overlap = static_cast<double>(best_correct) * frame;
  if (out.total_ref <= 0.0) {
    throw ScoreUndefinedError("brute_force_der: no reference speech in scoring region");
  }
  out.der_pct = 100.0 * (out.miss + out.false_alarm + out.confusion) / out.total_ref;
  return out;
}

double brute_force_assignment(const Eigen::MatrixXd& benefit) {
  const auto rows = static_cast<std::size_t>(benefit.rows());
  const auto cols = static_cast<std::size_t>(benefit.cols());
  if (rows > 8 || cols > 8) throw ArgumentError("brute_force_assignment: matrix too large");
  double best = 0.0;
  std::vector<bool> used(cols, false);
  auto recurse = [&](auto&& self, std::size_t i, double acc) -> void {
    if (i == rows) {
      best = std::max(best, acc);
      return;
    }
    self(self, i + 1, acc);
    for (std::size_t j = 0; j < cols; ++j) {
      if (used[j]) continue;
      used[j] = true;
      self(self, i + 1, acc + benefit(static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(j)));
      used[j] = false;
    }
  };
  recurse(recurse, 0, 0.0);
  return best;
}

double brute_force_paths(const PseudoLikelihood& loglik, double frame_step,
                         const SadDecoderConfig& config) {
  const Eigen::Index t_count = loglik.log_speech.size();
  if (t_count < 1) throw ArgumentError("brute_force_paths: empty input");
  if (t_count > 30) throw ArgumentError("brute_force_paths: T > 30 refused");
  config.validate();
  const auto min_sp = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::ceil(config.min_speech / frame_step - 1e-9)));
  const auto min_ns = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::ceil(config.min_nonspeech / frame_step - 1e-9)));

  // Prefix sums of both emission tracks.
  std::vector<double> cum_sp(static_cast<std::size_t>(t_count) + 1, 0.0);
  std::vector<double> cum_ns(static_cast<std::size_t>(t_count) + 1, 0.0);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    cum_sp[static_cast<std::size_t>(t) + 1] = cum_sp[static_cast<std::size_t>(t)] + loglik.log_speech(t);
    cum_ns[static_cast<std::size_t>(t) + 1] = cum_ns[static_cast<std::size_t>(t)] + loglik.log_nonspeech(t);
  }
  double best = -std::numeric_limits<double>::infinity();
  // Runs alternate between macro states; first and last runs may be shorter
  // than the minimum (recording edges).
  auto recurse = [&](auto&& self, Eigen::Index pos, bool speech, bool is_first,
                     double acc) -> void {
    Eigen::Index min_len = speech ? min_sp : min_ns;
    for (Eigen::Index len = 1; pos + len <= t_count; ++len) {
      bool at_end = pos + len == t_count;
      if (!is_first && !at_end && len < min_len) continue;
      const auto& cum = speech ? cum_sp : cum_ns;
      double run = cum[static_cast<std::size_t>(pos + len)] - cum[static_cast<std::size_t>(pos)];
      if (at_end) {
        best = std::max(best, acc + run);
      } else {
        self(self, pos + len, !speech, false, acc + run + config.transition_penalty);
      }
    }
  };
  recurse(recurse, 0, false, true, 0.0);
  recurse(recurse, 0, true, true, 0.0);
  return best;
}

}  // namespace diarkit
