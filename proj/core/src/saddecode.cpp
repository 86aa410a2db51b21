#include "diarkit/saddecode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "diarkit/errors.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

namespace {

constexpr double kPosteriorClamp = 1e-6;

struct ChainTopology {
  Eigen::Index n_nonspeech = 1;  // states [0, n_nonspeech)
  Eigen::Index n_speech = 1;     // states [n_nonspeech, n_nonspeech + n_speech)

  Eigen::Index num_states() const { return n_nonspeech + n_speech; }
  bool is_speech(Eigen::Index s) const { return s >= n_nonspeech; }
  Eigen::Index last_nonspeech() const { return n_nonspeech - 1; }
  Eigen::Index last_speech() const { return n_nonspeech + n_speech - 1; }
  Eigen::Index first_speech() const { return n_nonspeech; }
};

ChainTopology make_topology(double frame_step, const SadDecoderConfig& config) {
  ChainTopology topo;
  topo.n_nonspeech = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::ceil(config.min_nonspeech / frame_step - 1e-9)));
  topo.n_speech = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::ceil(config.min_speech / frame_step - 1e-9)));
  return topo;
}

struct ViterbiResult {
  std::vector<char> speech;  // per frame macro label
  double score = 0.0;
};

// Non-speech states sit below speech states, and ties keep the lower state
// index, so exact ties resolve to non-speech.
ViterbiResult viterbi_decode(const PseudoLikelihood& loglik, double frame_step,
                             const SadDecoderConfig& config) {
  const Eigen::Index t_count = loglik.log_speech.size();
  if (t_count < 1) throw ArgumentError("viterbi_sad: empty posterior track");
  if (loglik.log_nonspeech.size() != t_count) {
    throw ArgumentError("viterbi_sad: mismatched likelihood pair lengths");
  }
  ChainTopology topo = make_topology(frame_step, config);
  const Eigen::Index n = topo.num_states();
  const double neg_inf = -std::numeric_limits<double>::infinity();

  auto emission = [&](Eigen::Index t, Eigen::Index s) {
    return topo.is_speech(s) ? loglik.log_speech(t) : loglik.log_nonspeech(t);
  };

  Eigen::MatrixXd score(t_count, n);
  Eigen::MatrixXi back(t_count, n);
  // Recording edge: paths may start in any sub-state.
  for (Eigen::Index s = 0; s < n; ++s) {
    score(0, s) = emission(0, s);
    back(0, s) = -1;
  }
  for (Eigen::Index t = 1; t < t_count; ++t) {
    for (Eigen::Index s = 0; s < n; ++s) {
      double best = neg_inf;
      Eigen::Index best_prev = -1;
      auto consider = [&](Eigen::Index prev, double trans) {
        double cand = score(t - 1, prev) + trans;
        if (cand > best) {
          best = cand;
          best_prev = prev;
        }
      };
      if (s == 0) {
        // First non-speech sub-state: entered from the last speech state.
        // The self-loop (when it is also the last) is considered first so
        // exact ties stay in non-speech.
        if (topo.n_nonspeech == 1) consider(s, 0.0);
        consider(topo.last_speech(), config.transition_penalty);
      } else if (s < topo.n_nonspeech) {
        consider(s - 1, 0.0);
        if (s == topo.last_nonspeech()) consider(s, 0.0);
      } else if (s == topo.first_speech()) {
        consider(topo.last_nonspeech(), config.transition_penalty);
        if (topo.n_speech == 1) consider(s, 0.0);
      } else {
        consider(s - 1, 0.0);
        if (s == topo.last_speech()) consider(s, 0.0);
      }
      score(t, s) = best + emission(t, s);
      back(t, s) = static_cast<int>(best_prev);
    }
  }
  // Recording edge: paths may end in any sub-state.
  Eigen::Index end_state = 0;
  for (Eigen::Index s = 1; s < n; ++s) {
    if (score(t_count - 1, s) > score(t_count - 1, end_state)) end_state = s;
  }
  ViterbiResult result;
  result.score = score(t_count - 1, end_state);
  result.speech.assign(static_cast<std::size_t>(t_count), 0);
  Eigen::Index s = end_state;
  for (Eigen::Index t = t_count - 1; t >= 0; --t) {
    result.speech[static_cast<std::size_t>(t)] = topo.is_speech(s) ? 1 : 0;
    if (t > 0) s = back(t, s);
  }
  return result;
}

}  // namespace

void SadDecoderConfig::validate() const {
  if (!(prior_speech > 0.0) || !(prior_speech < 1.0)) {
    throw ArgumentError("prior_speech must be in (0, 1)");
  }
  if (!(min_speech > 0.0) || !(min_nonspeech > 0.0)) {
    throw ArgumentError("minimum durations must be > 0");
  }
}

PseudoLikelihood to_pseudo_likelihood(const PosteriorTrack& track, double prior_speech) {
  if (!(prior_speech > 0.0) || !(prior_speech < 1.0)) {
    throw ArgumentError("prior_speech must be in (0, 1)");
  }
  PseudoLikelihood out;
  out.log_speech.resize(track.p_speech.size());
  out.log_nonspeech.resize(track.p_speech.size());
  for (Eigen::Index t = 0; t < track.p_speech.size(); ++t) {
    double p = std::clamp(track.p_speech(t), kPosteriorClamp, 1.0 - kPosteriorClamp);
    out.log_speech(t) = std::log(p / prior_speech);
    out.log_nonspeech(t) = std::log((1.0 - p) / (1.0 - prior_speech));
  }
  return out;
}

Timeline viterbi_sad(const PseudoLikelihood& loglik, double frame_step,
                     const SadDecoderConfig& config, const std::string& recording_id) {
  if (!(frame_step > 0.0)) throw ArgumentError("frame_step must be > 0");
  config.validate();
  const Eigen::Index t_count = loglik.log_speech.size();
  if (static_cast<double>(t_count) * frame_step < config.min_speech) {
    warn(recording_id + ": recording shorter than min_speech; segments may be truncated");
  }
  auto result = viterbi_decode(loglik, frame_step, config);
  std::vector<Turn> turns;
  Eigen::Index t = 0;
  while (t < t_count) {
    if (!result.speech[static_cast<std::size_t>(t)]) {
      ++t;
      continue;
    }
    Eigen::Index start = t;
    while (t < t_count && result.speech[static_cast<std::size_t>(t)]) ++t;
    turns.push_back({recording_id, "speech", static_cast<double>(start) * frame_step,
                     static_cast<double>(t - start) * frame_step});
  }
  return Timeline(recording_id, std::move(turns));
}

double viterbi_sad_path_score(const PseudoLikelihood& loglik, double frame_step,
                              const SadDecoderConfig& config) {
  if (!(frame_step > 0.0)) throw ArgumentError("frame_step must be > 0");
  config.validate();
  return viterbi_decode(loglik, frame_step, config).score;
}

double estimate_prior(const std::vector<Timeline>& refs, const std::vector<UemRegion>& uem) {
  double speech = 0.0, total = 0.0;
  for (const auto& ref : refs) {
    IntervalSet region = scoring_region(ref, ref, uem);
    speech += measure(intersect(ref.speech_intervals(), region));
    total += measure(region);
  }
  if (total <= 0.0) throw ScoreUndefinedError("estimate_prior: empty scoring region");
  return speech / total;
}

DecoderScore score_decoder(const std::vector<PosteriorTrack>& posteriors,
                           const std::vector<Timeline>& refs,
                           const std::vector<UemRegion>& uem, const DomainManifest& manifest,
                           Partition partition, const SadDecoderConfig& config) {
  std::map<std::string, const PosteriorTrack*> by_recording;
  for (const auto& p : posteriors) by_recording[p.recording_id] = &p;

  DecoderScore out;
  for (const auto& ref : refs) {
    if (!manifest.contains(ref.recording_id())) {
      throw ValidationError("recording '" + ref.recording_id() + "' not in manifest");
    }
    if (partition == Partition::kCore && !manifest.entries.at(ref.recording_id()).in_core) {
      continue;
    }
    auto it = by_recording.find(ref.recording_id());
    if (it == by_recording.end()) {
      throw ValidationError("no posterior track for recording '" + ref.recording_id() + "'");
    }
    const PosteriorTrack& track = *it->second;
    Timeline decoded = viterbi_sad(to_pseudo_likelihood(track, config.prior_speech),
                                   track.frame_step, config, ref.recording_id());
    IntervalSet region = scoring_region(ref, decoded, uem);
    out.reports.push_back(score_sad(merge_to_sad(ref), decoded, region));
    out.decoded.push_back(std::move(decoded));
  }
  out.aggregate = aggregate_sad(out.reports, manifest, partition);
  return out;
}

std::vector<PosteriorTrack> parse_posteriors_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  double frame_step = -1.0;
  std::map<std::string, std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    auto trimmed = trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.rfind("#frame_step=", 0) == 0) {
      if (!parse_double(trimmed.substr(12), &frame_step) || !(frame_step > 0.0)) {
        throw ParseError("bad #frame_step header", lineno);
      }
      continue;
    }
    if (frame_step <= 0.0) {
      throw ParseError("missing #frame_step header before data", lineno);
    }
    auto fields = split_char(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(strprintf("expected 3 fields, got %zu", fields.size()), lineno);
    }
    long index = 0;
    double p = 0.0;
    if (!parse_long(fields[1], &index) || index < 0) throw ParseError("bad frame index", lineno);
    if (!parse_double(fields[2], &p) || p < 0.0 || p > 1.0) {
      throw ParseError("posterior must be in [0, 1]", lineno);
    }
    auto& track = rows[fields[0]];
    if (static_cast<long>(track.size()) != index) {
      throw ParseError(strprintf("frame index %ld out of order (expected %zu)", index,
                                 track.size()),
                       lineno);
    }
    track.push_back(p);
  }
  std::vector<PosteriorTrack> out;
  for (auto& [rec, values] : rows) {
    PosteriorTrack track;
    track.recording_id = rec;
    track.frame_step = frame_step;
    track.p_speech =
        Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    out.push_back(std::move(track));
  }
  return out;
}

std::vector<PosteriorTrack> load_posteriors(const std::string& path) {
  return parse_posteriors_string(read_file(path));
}

std::string write_posteriors(const std::vector<PosteriorTrack>& tracks) {
  std::string out;
  if (!tracks.empty()) out += strprintf("#frame_step=%.17g\n", tracks.front().frame_step);
  std::vector<const PosteriorTrack*> sorted;
  for (const auto& t : tracks) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(),
            [](const PosteriorTrack* a, const PosteriorTrack* b) {
              return a->recording_id < b->recording_id;
            });
  for (const PosteriorTrack* track : sorted) {
    for (Eigen::Index t = 0; t < track->p_speech.size(); ++t) {
      out += track->recording_id +
             strprintf("\t%ld\t%.17g\n", static_cast<long>(t), track->p_speech(t));
    }
  }
  return out;
}

void save_posteriors(const std::string& path, const std::vector<PosteriorTrack>& tracks) {
  write_file(path, write_posteriors(tracks));
}

}  // namespace diarkit
