#pragma once

#include <string>
#include <vector>

#include "diarkit/scoring.hpp"

namespace diarkit {

/// Tab-separated DER/JER report: header, one row per recording, then
/// per-domain rows (recording column "DOMAIN") and an "OVERALL" row.
/// Seconds carry 3 decimals, percentages 2.
std::string write_der_report(const std::vector<DerReport>& reports,
                             const DerAggregate& aggregate,
                             const DomainManifest& manifest);

/// Same layout for SAD miss / false alarm / overall error.
std::string write_sad_report(const std::vector<SadReport>& reports,
                             const SadAggregate& aggregate,
                             const DomainManifest& manifest);

/// Corpus statistics rows (one per partition): recordings, hours,
/// %speech, %overlap.
struct PartitionStats {
  std::string partition;
  CorpusStats stats;
};
std::string write_corpus_stats(const std::vector<PartitionStats>& rows);

}  // namespace diarkit
