#include "diarkit/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "diarkit/assignment.hpp"
#include "diarkit/errors.hpp"
#include "diarkit/util.hpp"

namespace diarkit {

namespace {

struct SpeakerIntervals {
  std::vector<std::string> ids;   // sorted
  std::vector<IntervalSet> sets;  // parallel to ids
};

SpeakerIntervals cropped_speaker_intervals(const Timeline& t, const IntervalSet& region) {
  Timeline cropped = crop_to_intervals(t, region);
  SpeakerIntervals out;
  out.ids = cropped.speakers();
  out.sets.reserve(out.ids.size());
  for (const auto& id : out.ids) out.sets.push_back(cropped.speaker_intervals(id));
  return out;
}

std::vector<double> sweep_boundaries(const SpeakerIntervals& a, const SpeakerIntervals& b) {
  std::vector<double> pts;
  for (const auto& set : a.sets) {
    for (const auto& iv : set) {
      pts.push_back(iv.begin);
      pts.push_back(iv.end);
    }
  }
  for (const auto& set : b.sets) {
    for (const auto& iv : set) {
      pts.push_back(iv.begin);
      pts.push_back(iv.end);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace

DomainManifest parse_manifest_string(const std::string& text) {
  DomainManifest out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_char(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(strprintf("expected 3 tab-separated fields, got %zu", fields.size()),
                       lineno);
    }
    bool in_core;
    if (fields[2] == "core") {
      in_core = true;
    } else if (fields[2] == "full") {
      in_core = false;
    } else {
      throw ParseError("partition must be 'core' or 'full', got '" + fields[2] + "'", lineno);
    }
    auto [it, inserted] = out.entries.emplace(fields[0], DomainManifest::Entry{fields[1], in_core});
    (void)it;
    if (!inserted) {
      throw ParseError("duplicate recording '" + fields[0] + "'", lineno);
    }
  }
  return out;
}

DomainManifest load_manifest(const std::string& path) {
  return parse_manifest_string(read_file(path));
}

std::string write_manifest(const DomainManifest& manifest) {
  std::string out;
  for (const auto& [rec, entry] : manifest.entries) {
    out += rec + "\t" + entry.domain + "\t" + (entry.in_core ? "core" : "full") + "\n";
  }
  return out;
}

IntervalSet scoring_region(const Timeline& ref, const Timeline& sys,
                           const std::vector<UemRegion>& uem) {
  IntervalSet region = uem_intervals(uem, ref.recording_id());
  if (region.empty()) {
    double end = std::max(ref.extent(), sys.extent());
    if (end > 0.0) region.push_back({0.0, end});
  }
  return region;
}

OverlapMatrix speaker_overlap_matrix(const Timeline& ref, const Timeline& sys,
                                     const IntervalSet& region) {
  auto r = cropped_speaker_intervals(ref, region);
  auto s = cropped_speaker_intervals(sys, region);
  OverlapMatrix out;
  out.ref_speakers = r.ids;
  out.sys_speakers = s.ids;
  out.seconds.resize(static_cast<Eigen::Index>(r.ids.size()),
                     static_cast<Eigen::Index>(s.ids.size()));
  for (std::size_t i = 0; i < r.ids.size(); ++i) {
    for (std::size_t j = 0; j < s.ids.size(); ++j) {
      out.seconds(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          measure(intersect(r.sets[i], s.sets[j]));
    }
  }
  return out;
}

SpeakerMapping optimal_der_mapping(const OverlapMatrix& overlap) {
  auto assignment = max_assignment(overlap.seconds);
  SpeakerMapping out;
  out.objective = assignment.total;
  std::vector<bool> sys_used(overlap.sys_speakers.size(), false);
  for (std::size_t i = 0; i < overlap.ref_speakers.size(); ++i) {
    int j = assignment.row_to_col[i];
    if (j >= 0) {
      out.pairs.emplace_back(overlap.ref_speakers[i], overlap.sys_speakers[j]);
      sys_used[static_cast<std::size_t>(j)] = true;
    } else {
      out.unmapped_ref.push_back(overlap.ref_speakers[i]);
    }
  }
  for (std::size_t j = 0; j < overlap.sys_speakers.size(); ++j) {
    if (!sys_used[j]) out.unmapped_sys.push_back(overlap.sys_speakers[j]);
  }
  return out;
}

DerReport compute_der(const Timeline& ref, const Timeline& sys, const IntervalSet& region) {
  auto r = cropped_speaker_intervals(ref, region);
  auto s = cropped_speaker_intervals(sys, region);

  OverlapMatrix overlap = speaker_overlap_matrix(ref, sys, region);
  SpeakerMapping mapping = optimal_der_mapping(overlap);
  // Mapped pairs as index pairs into r.ids / s.ids.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [ref_id, sys_id] : mapping.pairs) {
    auto ri = std::lower_bound(r.ids.begin(), r.ids.end(), ref_id) - r.ids.begin();
    auto si = std::lower_bound(s.ids.begin(), s.ids.end(), sys_id) - s.ids.begin();
    pairs.emplace_back(static_cast<std::size_t>(ri), static_cast<std::size_t>(si));
  }

  DerReport report;
  report.recording_id = ref.recording_id();
  report.num_ref_speakers = static_cast<int>(r.ids.size());
  report.jer_pct = std::numeric_limits<double>::quiet_NaN();

  auto pts = sweep_boundaries(r, s);
  std::vector<char> ref_active(r.ids.size()), sys_active(s.ids.size());
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double dt = pts[k + 1] - pts[k];
    if (dt <= 0.0) continue;
    double mid = pts[k] + dt / 2.0;
    int n_ref = 0, n_sys = 0, n_correct = 0;
    for (std::size_t i = 0; i < r.ids.size(); ++i) {
      ref_active[i] = covers(r.sets[i], mid);
      n_ref += ref_active[i];
    }
    for (std::size_t j = 0; j < s.ids.size(); ++j) {
      sys_active[j] = covers(s.sets[j], mid);
      n_sys += sys_active[j];
    }
    for (const auto& [i, j] : pairs) {
      if (ref_active[i] && sys_active[j]) ++n_correct;
    }
    report.total_ref_speech += n_ref * dt;
    report.miss += std::max(0, n_ref - n_sys) * dt;
    report.false_alarm += std::max(0, n_sys - n_ref) * dt;
    report.confusion += (std::min(n_ref, n_sys) - n_correct) * dt;
  }

  if (report.total_ref_speech <= 0.0) {
    throw ScoreUndefinedError("recording " + ref.recording_id() +
                              ": no reference speech in scoring region");
  }
  report.der_pct =
      100.0 * (report.miss + report.false_alarm + report.confusion) / report.total_ref_speech;
  return report;
}

double compute_jer(const Timeline& ref, const Timeline& sys, const IntervalSet& region) {
  auto r = cropped_speaker_intervals(ref, region);
  auto s = cropped_speaker_intervals(sys, region);
  if (r.ids.empty()) {
    throw ScoreUndefinedError("recording " + ref.recording_id() +
                              ": no reference speakers in scoring region");
  }
  // J(i, j) = |ref_i n sys_j| / |ref_i u sys_j|; the assignment minimizing
  // sum(1 - J) over mapped pairs is the one maximizing sum(J).
  Eigen::MatrixXd jaccard(static_cast<Eigen::Index>(r.ids.size()),
                          static_cast<Eigen::Index>(s.ids.size()));
  for (std::size_t i = 0; i < r.ids.size(); ++i) {
    double ref_len = measure(r.sets[i]);
    for (std::size_t j = 0; j < s.ids.size(); ++j) {
      double inter = measure(intersect(r.sets[i], s.sets[j]));
      double uni = ref_len + measure(s.sets[j]) - inter;
      jaccard(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          uni > 0.0 ? inter / uni : 0.0;
    }
  }
  auto assignment = max_assignment(jaccard);
  double total_score = 0.0;
  for (std::size_t i = 0; i < r.ids.size(); ++i) {
    int j = assignment.row_to_col[i];
    if (j >= 0) total_score += jaccard(static_cast<Eigen::Index>(i), j);
  }
  double mean_score = total_score / static_cast<double>(r.ids.size());
  return 100.0 * (1.0 - mean_score);
}

DerReport score_recording(const Timeline& ref, const Timeline& sys,
                          const IntervalSet& region) {
  DerReport report = compute_der(ref, sys, region);
  report.jer_pct = compute_jer(ref, sys, region);
  return report;
}

SadReport score_sad(const Timeline& ref_sad, const Timeline& sys_sad,
                    const IntervalSet& region) {
  IntervalSet ref = intersect(ref_sad.speech_intervals(), region);
  IntervalSet sys = intersect(sys_sad.speech_intervals(), region);

  SadReport report;
  report.recording_id = ref_sad.recording_id();
  report.region_sec = measure(region);
  report.ref_sec = measure(ref);
  report.miss_sec = measure(subtract(ref, sys));
  report.fa_sec = measure(subtract(sys, ref));
  report.nonspeech_sec = report.region_sec - report.ref_sec;

  if (report.ref_sec <= 0.0) {
    throw ScoreUndefinedError("recording " + ref_sad.recording_id() +
                              ": SAD miss rate undefined (no reference speech)");
  }
  if (report.nonspeech_sec <= 0.0) {
    throw ScoreUndefinedError("recording " + ref_sad.recording_id() +
                              ": SAD false alarm rate undefined (no reference non-speech)");
  }
  report.miss_pct = 100.0 * report.miss_sec / report.ref_sec;
  report.fa_pct = 100.0 * report.fa_sec / report.nonspeech_sec;
  report.overall_error_pct = 100.0 * (report.miss_sec + report.fa_sec) / report.region_sec;
  return report;
}

namespace {

template <typename Report>
void check_manifest(const std::vector<Report>& reports, const DomainManifest& manifest) {
  for (const auto& rep : reports) {
    if (!manifest.contains(rep.recording_id)) {
      throw ValidationError("recording '" + rep.recording_id + "' not in manifest");
    }
  }
}

}  // namespace

DerAggregate aggregate_der(const std::vector<DerReport>& reports,
                           const DomainManifest& manifest, Partition partition) {
  check_manifest(reports, manifest);
  struct Acc {
    int n = 0;
    double ref = 0.0, miss = 0.0, fa = 0.0, conf = 0.0;
    double jer_weighted = 0.0;
    int jer_speakers = 0;
  };
  std::map<std::string, Acc> by_domain;
  Acc overall;
  for (const auto& rep : reports) {
    const auto& entry = manifest.entries.at(rep.recording_id);
    if (partition == Partition::kCore && !entry.in_core) continue;
    for (Acc* acc : {&overall, &by_domain[entry.domain]}) {
      acc->n += 1;
      acc->ref += rep.total_ref_speech;
      acc->miss += rep.miss;
      acc->fa += rep.false_alarm;
      acc->conf += rep.confusion;
      acc->jer_weighted += rep.jer_pct * rep.num_ref_speakers;
      acc->jer_speakers += rep.num_ref_speakers;
    }
  }
  auto to_row = [](const std::string& label, const Acc& acc) {
    AggregateRow row;
    row.label = label;
    row.num_recordings = acc.n;
    row.ref_speech = acc.ref;
    row.miss = acc.miss;
    row.false_alarm = acc.fa;
    row.confusion = acc.conf;
    row.der_pct = acc.ref > 0.0 ? 100.0 * (acc.miss + acc.fa + acc.conf) / acc.ref : 0.0;
    row.jer_pct = acc.jer_speakers > 0 ? acc.jer_weighted / acc.jer_speakers : 0.0;
    return row;
  };
  DerAggregate out;
  out.overall = to_row("OVERALL", overall);
  for (const auto& [domain, acc] : by_domain) out.domains.push_back(to_row(domain, acc));
  return out;
}

SadAggregate aggregate_sad(const std::vector<SadReport>& reports,
                           const DomainManifest& manifest, Partition partition) {
  check_manifest(reports, manifest);
  struct Acc {
    int n = 0;
    double ref = 0.0, miss = 0.0, fa = 0.0, nonspeech = 0.0, region = 0.0;
  };
  std::map<std::string, Acc> by_domain;
  Acc overall;
  for (const auto& rep : reports) {
    const auto& entry = manifest.entries.at(rep.recording_id);
    if (partition == Partition::kCore && !entry.in_core) continue;
    for (Acc* acc : {&overall, &by_domain[entry.domain]}) {
      acc->n += 1;
      acc->ref += rep.ref_sec;
      acc->miss += rep.miss_sec;
      acc->fa += rep.fa_sec;
      acc->nonspeech += rep.nonspeech_sec;
      acc->region += rep.region_sec;
    }
  }
  auto to_row = [](const std::string& label, const Acc& acc) {
    SadAggregateRow row;
    row.label = label;
    row.num_recordings = acc.n;
    row.miss_pct = acc.ref > 0.0 ? 100.0 * acc.miss / acc.ref : 0.0;
    row.fa_pct = acc.nonspeech > 0.0 ? 100.0 * acc.fa / acc.nonspeech : 0.0;
    row.overall_error_pct = acc.region > 0.0 ? 100.0 * (acc.miss + acc.fa) / acc.region : 0.0;
    return row;
  };
  SadAggregate out;
  out.overall = to_row("OVERALL", overall);
  for (const auto& [domain, acc] : by_domain) out.domains.push_back(to_row(domain, acc));
  return out;
}

CorpusStats corpus_stats(const std::vector<Timeline>& refs,
                         const std::vector<UemRegion>& uem) {
  CorpusStats stats;
  double region_total = 0.0, speech_total = 0.0, overlap_total = 0.0;
  for (const auto& ref : refs) {
    IntervalSet region = scoring_region(ref, ref, uem);
    double region_sec = measure(region);
    if (region_sec <= 0.0) {
      throw ScoreUndefinedError("recording " + ref.recording_id() + ": empty scoring region");
    }
    auto r = cropped_speaker_intervals(ref, region);
    speech_total += measure(intersect(ref.speech_intervals(), region));
    // Time with >= 2 simultaneously active speakers, by event sweep.
    auto pts = sweep_boundaries(r, r);
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      double dt = pts[k + 1] - pts[k];
      if (dt <= 0.0) continue;
      double mid = pts[k] + dt / 2.0;
      int active = 0;
      for (const auto& set : r.sets) active += covers(set, mid);
      if (active >= 2) overlap_total += dt;
    }
    region_total += region_sec;
    stats.num_recordings += 1;
  }
  if (region_total <= 0.0) throw ScoreUndefinedError("corpus_stats: empty scoring region");
  stats.hours = region_total / 3600.0;
  stats.speech_pct = 100.0 * speech_total / region_total;
  stats.overlap_pct = 100.0 * overlap_total / region_total;
  return stats;
}

}  // namespace diarkit
