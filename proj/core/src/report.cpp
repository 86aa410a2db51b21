#include "diarkit/report.hpp"

#include <algorithm>

#include "diarkit/util.hpp"

namespace diarkit {

namespace {

std::string domain_of(const DomainManifest& manifest, const std::string& rec) {
  auto it = manifest.entries.find(rec);
  return it == manifest.entries.end() ? "-" : it->second.domain;
}

template <typename Report>
std::vector<const Report*> sorted_by_recording(const std::vector<Report>& reports) {
  std::vector<const Report*> out;
  for (const auto& r : reports) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const Report* a, const Report* b) {
    return a->recording_id < b->recording_id;
  });
  return out;
}

}  // namespace

std::string write_der_report(const std::vector<DerReport>& reports,
                             const DerAggregate& aggregate,
                             const DomainManifest& manifest) {
  std::string out = "recording\tdomain\tref_speech\tmiss\tfa\tconfusion\tder\tjer\n";
  for (const DerReport* r : sorted_by_recording(reports)) {
    out += strprintf("%s\t%s\t%.3f\t%.3f\t%.3f\t%.3f\t%.2f\t%.2f\n",
                     r->recording_id.c_str(), domain_of(manifest, r->recording_id).c_str(),
                     r->total_ref_speech, r->miss, r->false_alarm, r->confusion, r->der_pct,
                     r->jer_pct);
  }
  for (const auto& row : aggregate.domains) {
    out += strprintf("DOMAIN\t%s\t%.3f\t%.3f\t%.3f\t%.3f\t%.2f\t%.2f\n", row.label.c_str(),
                     row.ref_speech, row.miss, row.false_alarm, row.confusion, row.der_pct,
                     row.jer_pct);
  }
  const auto& o = aggregate.overall;
  out += strprintf("OVERALL\t-\t%.3f\t%.3f\t%.3f\t%.3f\t%.2f\t%.2f\n", o.ref_speech, o.miss,
                   o.false_alarm, o.confusion, o.der_pct, o.jer_pct);
  return out;
}

std::string write_sad_report(const std::vector<SadReport>& reports,
                             const SadAggregate& aggregate,
                             const DomainManifest& manifest) {
  std::string out = "recording\tdomain\tmiss\tfa\toverall_error\n";
  for (const SadReport* r : sorted_by_recording(reports)) {
    out += strprintf("%s\t%s\t%.2f\t%.2f\t%.2f\n", r->recording_id.c_str(),
                     domain_of(manifest, r->recording_id).c_str(), r->miss_pct, r->fa_pct,
                     r->overall_error_pct);
  }
  for (const auto& row : aggregate.domains) {
    out += strprintf("DOMAIN\t%s\t%.2f\t%.2f\t%.2f\n", row.label.c_str(), row.miss_pct,
                     row.fa_pct, row.overall_error_pct);
  }
  const auto& o = aggregate.overall;
  out += strprintf("OVERALL\t-\t%.2f\t%.2f\t%.2f\n", o.miss_pct, o.fa_pct,
                   o.overall_error_pct);
  return out;
}

std::string write_corpus_stats(const std::vector<PartitionStats>& rows) {
  std::string out = "partition\tnum_recordings\thours\tspeech_pct\toverlap_pct\n";
  for (const auto& row : rows) {
    out += strprintf("%s\t%d\t%.2f\t%.2f\t%.2f\n", row.partition.c_str(),
                     row.stats.num_recordings, row.stats.hours, row.stats.speech_pct,
                     row.stats.overlap_pct);
  }
  return out;
}

}  // namespace diarkit
