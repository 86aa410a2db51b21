#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace diarkit {

/// Fixed-rate frame features for one recording (rows = frames).
struct FrameFeatures {
  std::string recording_id;
  double frame_step = 0.0;  // seconds
  Eigen::MatrixXd frames;   // T x D
};

/// Binary layout (little-endian):
///   magic "DKFEAT01" (8 bytes), u32 version = 1,
///   u32 recording_id length, recording_id bytes,
///   f64 frame_step, u64 T, u64 D, row-major f32 frames.
void save_features_binary(const std::string& path, const FrameFeatures& features);
FrameFeatures load_features_binary(const std::string& path);

/// Equivalent text form (multiple recordings per file):
///   #frame_step=<seconds>
///   #dim=<D>
///   <recording_id>\t<frame_index>\t<f1>\t...\t<fD>
std::string write_features_text(const std::vector<FrameFeatures>& features);
std::vector<FrameFeatures> parse_features_text(const std::string& text);
void save_features_text(const std::string& path, const std::vector<FrameFeatures>& features);

/// Loads either form, sniffing the binary magic.
std::vector<FrameFeatures> load_features(const std::string& path);

}  // namespace diarkit
