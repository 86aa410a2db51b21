#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace diarkit {

/// Fixed-dimension segment vectors for one recording, onsets non-decreasing.
struct EmbeddingSegment {
  double onset = 0.0;     // seconds
  double duration = 0.0;  // seconds, > 0
  Eigen::VectorXd vector;
};

struct EmbeddingSequence {
  std::string recording_id;
  int dim = 0;
  std::vector<EmbeddingSegment> segments;

  /// Segments stacked as rows.
  Eigen::MatrixXd matrix() const;
};

/// Tab-separated embedding file:
///   #dim=D
///   <recording_id>\t<onset>\t<duration>\t<v1>\t...\t<vD>
/// Values round-trip exactly (%.17g). Sequences are returned sorted by
/// recording id. For model training files the recording_id column may carry
/// a class label (e.g. the speaker) instead of a recording.
std::vector<EmbeddingSequence> parse_embeddings_string(const std::string& text);
std::vector<EmbeddingSequence> load_embeddings(const std::string& path);
std::string write_embeddings(const std::vector<EmbeddingSequence>& sequences);
void save_embeddings(const std::string& path, const std::vector<EmbeddingSequence>& sequences);

}  // namespace diarkit
