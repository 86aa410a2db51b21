#include <doctest.h>

#include <cmath>
#include <map>
#include <tuple>

#include "diarkit/assignment.hpp"
#include "diarkit/errors.hpp"
#include "diarkit/rng.hpp"
#include "diarkit/scoring.hpp"
#include "diarkit/simulate.hpp"

using namespace diarkit;

namespace {

Timeline make(const std::string& rec,
              std::vector<std::tuple<std::string, double, double>> turns) {
  std::vector<Turn> out;
  for (auto& [spk, onset, offset] : turns) out.push_back({rec, spk, onset, offset - onset});
  return Timeline(rec, std::move(out));
}

IntervalSet region_to(double end) { return {{0.0, end}}; }

// Random diarization on a 10 ms grid; speakers overlap freely.
Timeline random_diar(Rng& rng, const std::string& rec, int num_speakers, double duration) {
  std::vector<Turn> turns;
  for (int s = 0; s < num_speakers; ++s) {
    double t = 0.01 * static_cast<double>(rng.uniform_int(100));
    while (t < duration - 0.5) {
      double dur = 0.01 * static_cast<double>(30 + rng.uniform_int(270));
      dur = std::min(dur, duration - t);
      if (dur < 0.05) break;
      turns.push_back({rec, "spk" + std::to_string(s), t, dur});
      t += dur + 0.25 + 0.01 * static_cast<double>(rng.uniform_int(200));
      t = std::round(t * 100.0) / 100.0;
    }
  }
  return Timeline(rec, std::move(turns));
}

// Perturbed copy acting as a system output: relabeled, shifted, thinned.
Timeline perturb(Rng& rng, const Timeline& ref, int num_sys_speakers) {
  std::map<std::string, IntervalSet> per;
  for (const auto& turn : ref.turns()) {
    if (rng.uniform() < 0.1) continue;  // dropped turn
    int label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_sys_speakers)));
    double shift = 0.01 * static_cast<double>(rng.uniform_int(21)) - 0.1;
    double onset = std::max(0.0, std::round((turn.onset + shift) * 100.0) / 100.0);
    per["sys" + std::to_string(label)].push_back({onset, onset + turn.duration});
  }
  // Relabeling can create same-speaker overlap; merge it away.
  std::vector<Turn> clean;
  for (auto& [spk, ivs] : per) {
    for (const auto& iv : normalize(std::move(ivs))) {
      clean.push_back({ref.recording_id(), spk, iv.begin, iv.length()});
    }
  }
  return Timeline(ref.recording_id(), std::move(clean));
}

}  // namespace

TEST_CASE("speaker overlap matrix on simple cases") {
  auto o1 = speaker_overlap_matrix(make("r", {{"A", 0, 5}}), make("r", {{"X", 0, 5}}),
                                   region_to(10));
  REQUIRE(o1.seconds.rows() == 1);
  CHECK(o1.seconds(0, 0) == doctest::Approx(5.0));

  auto o2 = speaker_overlap_matrix(make("r", {{"A", 0, 5}}), make("r", {{"X", 5, 10}}),
                                   region_to(10));
  CHECK(o2.seconds(0, 0) == doctest::Approx(0.0));

  auto o3 = speaker_overlap_matrix(make("r", {{"A", 0, 10}, {"B", 0, 10}}),
                                   make("r", {{"X", 0, 10}}), region_to(10));
  CHECK(o3.seconds(0, 0) == doctest::Approx(10.0));
  CHECK(o3.seconds(1, 0) == doctest::Approx(10.0));

  auto empty = speaker_overlap_matrix(Timeline("r", {}), Timeline("r", {}), region_to(10));
  CHECK(empty.seconds.size() == 0);
}

TEST_CASE("optimal mapping picks the dominant diagonal and drops zero pairs") {
  OverlapMatrix o;
  o.ref_speakers = {"a", "b"};
  o.sys_speakers = {"x", "y"};
  o.seconds.resize(2, 2);
  o.seconds << 5, 0, 0, 5;
  auto mapping = optimal_der_mapping(o);
  REQUIRE(mapping.pairs.size() == 2);
  CHECK(mapping.pairs[0] == std::pair<std::string, std::string>{"a", "x"});
  CHECK(mapping.pairs[1] == std::pair<std::string, std::string>{"b", "y"});

  o.seconds.setZero();
  auto degenerate = optimal_der_mapping(o);
  CHECK(degenerate.pairs.empty());
  CHECK(degenerate.objective == 0.0);
  CHECK(degenerate.unmapped_ref.size() == 2);
  CHECK(degenerate.unmapped_sys.size() == 2);
}

TEST_CASE("assignment objective matches exhaustive search on random matrices") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd benefit(5, 6);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 6; ++j) benefit(i, j) = 10.0 * rng.uniform();
    }
    auto fast = max_assignment(benefit);
    double slow = brute_force_assignment(benefit);
    CHECK(fast.total == doctest::Approx(slow).epsilon(1e-12));
  }
}

TEST_CASE("DER is zero when system equals reference up to renaming") {
  Timeline ref = make("r", {{"A", 0, 4}, {"B", 2, 6}, {"A", 7, 9}});
  Timeline sys = make("r", {{"x", 0, 4}, {"y", 2, 6}, {"x", 7, 9}});
  DerReport rep = compute_der(ref, sys, region_to(10));
  CHECK(rep.miss == 0.0);
  CHECK(rep.false_alarm == 0.0);
  CHECK(rep.confusion == 0.0);
  CHECK(rep.der_pct == 0.0);
  CHECK(compute_jer(ref, sys, region_to(10)) == 0.0);
}

TEST_CASE("DER on forced examples") {
  Timeline ref = make("r", {{"A", 0, 10}});
  DerReport missed = compute_der(ref, Timeline("r", {}), region_to(10));
  CHECK(missed.miss == doctest::Approx(10.0));
  CHECK(missed.der_pct == doctest::Approx(100.0));

  Timeline split = make("r", {{"X", 0, 5}, {"Y", 5, 10}});
  DerReport confused = compute_der(ref, split, region_to(10));
  CHECK(confused.confusion == doctest::Approx(5.0));
  CHECK(confused.der_pct == doctest::Approx(50.0));

  CHECK_THROWS_AS(compute_der(Timeline("r", {}), split, region_to(10)),
                  ScoreUndefinedError);
}

TEST_CASE("DER decomposition identity and renaming invariance") {
  Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    Timeline ref = random_diar(rng, "r", 2 + static_cast<int>(rng.uniform_int(3)), 30.0);
    if (ref.empty()) continue;
    Timeline sys = perturb(rng, ref, 3);
    DerReport rep = compute_der(ref, sys, region_to(30));
    CHECK(std::abs(rep.der_pct * rep.total_ref_speech / 100.0 -
                   (rep.miss + rep.false_alarm + rep.confusion)) <= 1e-9);

    std::vector<Turn> renamed;
    for (const auto& t : sys.turns()) {
      renamed.push_back({t.recording_id, "Z_" + t.speaker_id, t.onset, t.duration});
    }
    Timeline sys2("r", std::move(renamed));
    DerReport rep2 = compute_der(ref, sys2, region_to(30));
    CHECK(rep2.der_pct == doctest::Approx(rep.der_pct).epsilon(1e-12));
    if (!sys.empty()) {
      CHECK(compute_jer(ref, sys2, region_to(30)) ==
            doctest::Approx(compute_jer(ref, sys, region_to(30))).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact sweep DER agrees with the 1 ms frame oracle") {
  Rng rng(31);
  int done = 0;
  for (int trial = 0; trial < 150 && done < 100; ++trial) {
    Timeline ref = random_diar(rng, "r", 2, 20.0);
    if (ref.empty()) continue;
    Timeline sys = perturb(rng, ref, 2);
    ++done;
    DerReport exact = compute_der(ref, sys, region_to(20));
    BruteForceDer oracle = brute_force_der(ref, sys, {{"r", 0.0, 20.0}}, 0.001);
    CHECK(std::abs(exact.der_pct - oracle.der_pct) <= 0.5);
  }
  CHECK(done == 100);
}

TEST_CASE("deleting a system turn never decreases miss nor increases false alarm") {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    Timeline ref = random_diar(rng, "r", 3, 20.0);
    if (ref.empty()) continue;
    Timeline sys = perturb(rng, ref, 3);
    if (sys.empty()) continue;
    DerReport before = compute_der(ref, sys, region_to(20));
    auto turns = sys.turns();
    turns.erase(turns.begin() + static_cast<long>(rng.uniform_int(turns.size())));
    DerReport after = compute_der(ref, Timeline("r", std::move(turns)), region_to(20));
    CHECK(after.miss >= before.miss - 1e-12);
    CHECK(after.false_alarm <= before.false_alarm + 1e-12);
  }
}

TEST_CASE("JER on forced examples") {
  Timeline ref = make("r", {{"A", 0, 10}});
  CHECK(compute_jer(ref, make("r", {{"X", 0, 5}}), region_to(10)) == doctest::Approx(50.0));

  // Second reference speaker entirely unmatched scores zero.
  Timeline ref2 = make("r", {{"A", 0, 10}, {"B", 12, 20}});
  Timeline sys2 = make("r", {{"X", 0, 10}});
  CHECK(compute_jer(ref2, sys2, region_to(20)) == doctest::Approx(50.0));

  CHECK_THROWS_AS(compute_jer(Timeline("r", {}), sys2, region_to(20)), ScoreUndefinedError);
}

TEST_CASE("SAD scoring components") {
  Timeline ref = make("r", {{"speech", 0, 50}});
  Timeline sys_same = ref;
  SadReport same = score_sad(ref, sys_same, region_to(100));
  CHECK(same.miss_pct == doctest::Approx(0.0));
  CHECK(same.fa_pct == doctest::Approx(0.0));
  CHECK(same.overall_error_pct == doctest::Approx(0.0));

  SadReport all_miss = score_sad(ref, Timeline("r", {}), region_to(100));
  CHECK(all_miss.miss_pct == doctest::Approx(100.0));
  CHECK(all_miss.fa_pct == doctest::Approx(0.0));
  CHECK(all_miss.overall_error_pct == doctest::Approx(50.0));

  SadReport all_fa = score_sad(ref, make("r", {{"speech", 0, 100}}), region_to(100));
  CHECK(all_fa.miss_pct == doctest::Approx(0.0));
  CHECK(all_fa.fa_pct == doctest::Approx(100.0));
  CHECK(all_fa.overall_error_pct == doctest::Approx(50.0));

  CHECK_THROWS_AS(score_sad(Timeline("r", {}), sys_same, region_to(100)),
                  ScoreUndefinedError);
  CHECK_THROWS_AS(score_sad(make("r", {{"speech", 0, 100}}), sys_same, region_to(100)),
                  ScoreUndefinedError);
}

TEST_CASE("manifest parsing") {
  auto m = parse_manifest_string("rec1\tmeeting\tcore\nrec2\tcts\tfull\n");
  CHECK(m.entries.at("rec1").domain == "meeting");
  CHECK(m.entries.at("rec1").in_core);
  CHECK_FALSE(m.entries.at("rec2").in_core);
  CHECK_THROWS_AS(parse_manifest_string("rec1\tmeeting\tweird\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest_string("rec1 meeting core\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest_string("rec1\ta\tcore\nrec1\tb\tfull\n"), ParseError);
}

TEST_CASE("aggregation pools seconds and weights JER by speaker count") {
  DomainManifest manifest;
  manifest.entries["r1"] = {"meeting", true};
  manifest.entries["r2"] = {"cts", false};

  DerReport a{"r1", 10.0, 0.5, 0.25, 0.25, 10.0, 20.0, 2};
  DerReport b{"r2", 10.0, 2.0, 0.5, 0.5, 30.0, 50.0, 3};

  DerAggregate full = aggregate_der({a, b}, manifest, Partition::kFull);
  CHECK(full.overall.num_recordings == 2);
  CHECK(full.overall.der_pct == doctest::Approx(100.0 * 4.0 / 20.0));
  CHECK(full.overall.jer_pct == doctest::Approx((20.0 * 2 + 50.0 * 3) / 5.0));
  REQUIRE(full.domains.size() == 2);

  DerAggregate core = aggregate_der({a, b}, manifest, Partition::kCore);
  CHECK(core.overall.num_recordings == 1);
  CHECK(core.overall.der_pct == doctest::Approx(a.der_pct));
  CHECK(core.overall.jer_pct == doctest::Approx(a.jer_pct));

  // The full aggregate pools every core recording's seconds too.
  CHECK(full.overall.ref_speech ==
        doctest::Approx(core.overall.ref_speech + b.total_ref_speech));

  DerReport stray{"zz", 1.0, 0, 0, 0, 0, 0, 1};
  CHECK_THROWS_AS(aggregate_der({stray}, manifest, Partition::kFull), ValidationError);
}

TEST_CASE("corpus stats") {
  Timeline half = make("r", {{"A", 0, 50}});
  CorpusStats s1 = corpus_stats({half}, {{"r", 0.0, 100.0}});
  CHECK(s1.speech_pct == doctest::Approx(50.0));
  CHECK(s1.overlap_pct == doctest::Approx(0.0));

  Timeline both = make("r", {{"A", 0, 100}, {"B", 0, 100}});
  CorpusStats s2 = corpus_stats({both}, {{"r", 0.0, 100.0}});
  CHECK(s2.speech_pct == doctest::Approx(100.0));
  CHECK(s2.overlap_pct == doctest::Approx(100.0));

  CHECK_THROWS_AS(corpus_stats({Timeline("r", {})}, {}), ScoreUndefinedError);
}
