#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "diarkit/timeline.hpp"

namespace diarkit {

/// Pairwise co-activity durations between reference and system speakers,
/// computed over a common scoring region.
struct OverlapMatrix {
  std::vector<std::string> ref_speakers;  // sorted
  std::vector<std::string> sys_speakers;  // sorted
  Eigen::MatrixXd seconds;                // ref x sys
};

/// One-to-one partial speaker mapping. Pairs plus the unmapped lists
/// partition both speaker sets.
struct SpeakerMapping {
  std::vector<std::pair<std::string, std::string>> pairs;  // (ref, sys)
  std::vector<std::string> unmapped_ref;
  std::vector<std::string> unmapped_sys;
  double objective = 0.0;  // total mapped benefit
};

/// DER components in seconds plus derived percentages for one recording.
struct DerReport {
  std::string recording_id;
  double total_ref_speech = 0.0;
  double miss = 0.0;
  double false_alarm = 0.0;
  double confusion = 0.0;
  double der_pct = 0.0;
  double jer_pct = 0.0;
  int num_ref_speakers = 0;  // JER aggregation weight
};

/// Frame-wise SAD error rates plus the pooled seconds behind them.
struct SadReport {
  std::string recording_id;
  double miss_pct = 0.0;
  double fa_pct = 0.0;
  double overall_error_pct = 0.0;
  double ref_sec = 0.0;
  double miss_sec = 0.0;
  double fa_sec = 0.0;
  double nonspeech_sec = 0.0;
  double region_sec = 0.0;
};

enum class Partition { kCore, kFull };

/// Recording -> (domain, core membership). Every scored recording appears
/// exactly once.
struct DomainManifest {
  struct Entry {
    std::string domain;
    bool in_core = true;
  };
  std::map<std::string, Entry> entries;

  bool contains(const std::string& recording_id) const {
    return entries.count(recording_id) > 0;
  }
};

DomainManifest parse_manifest_string(const std::string& text);
DomainManifest load_manifest(const std::string& path);
std::string write_manifest(const DomainManifest& manifest);

/// Region to score when no UEM is supplied: [0, max offset over ref and sys].
IntervalSet scoring_region(const Timeline& ref, const Timeline& sys,
                           const std::vector<UemRegion>& uem);

/// Entry (i, j) = duration where ref speaker i and sys speaker j are both
/// active, inputs cropped to `region`.
OverlapMatrix speaker_overlap_matrix(const Timeline& ref, const Timeline& sys,
                                     const IntervalSet& region);

/// Partial one-to-one mapping maximizing total mapped overlap.
SpeakerMapping optimal_der_mapping(const OverlapMatrix& overlap);

/// Exact event-sweep DER, no collar, overlap scored. jer_pct is left NaN;
/// see score_recording for the combined report.
/// Throws ScoreUndefinedError when the cropped reference has no speech.
DerReport compute_der(const Timeline& ref, const Timeline& sys, const IntervalSet& region);

/// Jaccard error rate, averaged over reference speakers only.
/// Throws ScoreUndefinedError when the cropped reference has no speakers.
double compute_jer(const Timeline& ref, const Timeline& sys, const IntervalSet& region);

/// compute_der + compute_jer in one report.
DerReport score_recording(const Timeline& ref, const Timeline& sys,
                          const IntervalSet& region);

/// Frame-wise SAD error components. Inputs are single-pseudo-speaker SADs.
SadReport score_sad(const Timeline& ref_sad, const Timeline& sys_sad,
                    const IntervalSet& region);

/// Pooled-seconds aggregate (never an average of percentages); JER is the
/// reference-speaker-count weighted mean of per-recording JER.
struct AggregateRow {
  std::string label;
  int num_recordings = 0;
  double ref_speech = 0.0;
  double miss = 0.0;
  double false_alarm = 0.0;
  double confusion = 0.0;
  double der_pct = 0.0;
  double jer_pct = 0.0;
};

struct DerAggregate {
  AggregateRow overall;
  std::vector<AggregateRow> domains;  // sorted by domain name
};

DerAggregate aggregate_der(const std::vector<DerReport>& reports,
                           const DomainManifest& manifest, Partition partition);

struct SadAggregateRow {
  std::string label;
  int num_recordings = 0;
  double miss_pct = 0.0;
  double fa_pct = 0.0;
  double overall_error_pct = 0.0;
};

struct SadAggregate {
  SadAggregateRow overall;
  std::vector<SadAggregateRow> domains;
};

SadAggregate aggregate_sad(const std::vector<SadReport>& reports,
                           const DomainManifest& manifest, Partition partition);

/// Pooled %speech / %overlap over a set of reference timelines.
struct CorpusStats {
  int num_recordings = 0;
  double hours = 0.0;
  double speech_pct = 0.0;
  double overlap_pct = 0.0;
};

CorpusStats corpus_stats(const std::vector<Timeline>& refs,
                         const std::vector<UemRegion>& uem);

}  // namespace diarkit
