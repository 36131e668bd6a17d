#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vbp {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved RGB, row-major

  std::uint8_t at(int x, int y, int c) const {
    return rgb[static_cast<std::size_t>(3) * (static_cast<std::size_t>(y) * width + x) + c];
  }
  std::uint8_t& at(int x, int y, int c) {
    return rgb[static_cast<std::size_t>(3) * (static_cast<std::size_t>(y) * width + x) + c];
  }
};

struct FrameSequence {
  std::vector<Image> frames;
  double fps = 30.0;

  int length() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline constexpr int kNumLandmarks = 68;
using LandmarkFrame = std::array<Point, kNumLandmarks>;

struct LandmarkTrack {
  std::vector<LandmarkFrame> frames;
  int length() const { return static_cast<int>(frames.size()); }
};

struct BpRecord {
  double sbp = 0.0;
  double dbp = 0.0;
};

struct ManifestEntry {
  std::string sample_id;
  std::string frames_path;     // frame dir, raw blob, or precomputed .stm
  std::string landmarks_path;  // "-" when frames_path is a precomputed map
  double sbp = 0.0;
  double dbp = 0.0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

inline constexpr double kBpLowerBound = 40.0;   // physiological envelope, mmHg
inline constexpr double kBpUpperBound = 250.0;

}  // namespace vbp
