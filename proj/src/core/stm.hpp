#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace vbp {

inline constexpr int kNumRois = 4;
inline constexpr int kNumChannels = 3;

// The four skin regions, in fixed order.
enum RoiIndex { kRoiForehead = 0, kRoiLeftCheek = 1, kRoiRightCheek = 2, kRoiLowerBand = 3 };

// The ROI tessellation references exactly these seven landmarks (iBUG 68-point
// scheme, 0-indexed); every polygon vertex is derived from them.
inline constexpr int kAnchorBrowLeft = 17;   // outer end of image-left brow
inline constexpr int kAnchorBrowRight = 26;  // outer end of image-right brow
inline constexpr int kAnchorEyeLeft = 36;    // outer corner of image-left eye
inline constexpr int kAnchorEyeRight = 45;   // outer corner of image-right eye
inline constexpr int kAnchorNoseBase = 33;   // subnasale
inline constexpr int kAnchorJawLeft = 4;     // image-left mid-jaw
inline constexpr int kAnchorJawRight = 12;   // image-right mid-jaw

// Forehead rectangle: spans the outer-brow x extents, extrapolated upward from
// the brow line by this fraction of the eye-to-brow distance.
inline constexpr double kForeheadHeightRatio = 0.6;
// Lower band: trapezoid between these fractions of the way from the jaw
// anchors toward the nose base reflected across the jaw chord (on the chin).
inline constexpr double kLowerBandTop = 0.4;
inline constexpr double kLowerBandBottom = 0.8;

struct Polygon {
  std::vector<Point> vertices;
  double area() const;  // unsigned shoelace area
};

struct RoiFrame {
  std::array<Polygon, kNumRois> rois;
};

struct RoiSet {
  std::vector<RoiFrame> frames;
  int length() const { return static_cast<int>(frames.size()); }
};

// Per-ROI per-frame channel means. RGB order, 8-bit intensity scale [0,255].
struct IstmTensor {
  int frames = 0;
  std::vector<double> values;      // [roi][t][channel] row-major
  std::vector<std::uint8_t> mask;  // roi x t augmentation cells; empty = none

  double at(int roi, int t, int c) const {
    return values[(static_cast<std::size_t>(roi) * frames + t) * kNumChannels + c];
  }
  double& at(int roi, int t, int c) {
    return values[(static_cast<std::size_t>(roi) * frames + t) * kNumChannels + c];
  }
  bool masked(int roi, int t) const {
    return !mask.empty() && mask[static_cast<std::size_t>(roi) * frames + t] != 0;
  }
};

// The augmented map after the YUV transform (and optionally normalization).
struct StmTensor {
  int frames = 0;
  std::vector<double> values;  // [roi][t][channel] row-major, YUV order
  std::vector<std::uint8_t> mask;
  bool normalized = false;

  double at(int roi, int t, int c) const {
    return values[(static_cast<std::size_t>(roi) * frames + t) * kNumChannels + c];
  }
  double& at(int roi, int t, int c) {
    return values[(static_cast<std::size_t>(roi) * frames + t) * kNumChannels + c];
  }
  bool masked(int roi, int t) const {
    return !mask.empty() && mask[static_cast<std::size_t>(roi) * frames + t] != 0;
  }
};

struct AugmentConfig {
  double mask_probability = 0.5;
  double max_time_mask_fraction = 0.1;
  int max_roi_masked = 1;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// One drawn masking decision: a contiguous time span on a subset of ROIs.
struct MaskPlan {
  bool active = false;
  std::vector<int> rois;
  int start = 0;
  int length = 0;
};

RoiFrame define_rois(const LandmarkFrame& landmarks);
RoiSet define_rois(const LandmarkTrack& track);

IstmTensor compute_istm(const FrameSequence& frames, const RoiSet& rois);

MaskPlan draw_mask_plan(const AugmentConfig& cfg, int frames);
IstmTensor random_mask(const IstmTensor& istm, const AugmentConfig& cfg);
void apply_mask(IstmTensor& istm, const MaskPlan& plan);
// Same masking applied after normalization: zeroes the cells directly.
// Equivalent to masking before the YUV transform, since masked cells are
// forced to zero by normalize() either way.
void apply_mask(StmTensor& stm, const MaskPlan& plan);

StmTensor rgb_to_yuv(const IstmTensor& istm);
// Affine map to [0,1] from the analytic channel ranges: Y from [0,255],
// U and V from [-127.5,127.5]. Masked cells come out exactly 0.
StmTensor normalize(const StmTensor& stm);
StmTensor denormalize(const StmTensor& stm);

// Container format shared by ISTM (normalized_flag=0, RGB) and STM
// (normalized_flag=1, YUV): header u32 n_roi, u32 T, u32 channels(=3),
// u8 normalized_flag, then little-endian 32-bit floats row-major
// (roi, t, channel). A `.mask` sidecar holds n_roi x T bytes.
struct StmFileData {
  int n_roi = 0;
  int frames = 0;
  bool normalized = false;
  std::vector<float> values;
  std::vector<std::uint8_t> mask;
};

void save_stm_file(const std::string& path, const StmTensor& stm);
void save_istm_file(const std::string& path, const IstmTensor& istm);
StmFileData load_stm_file(const std::string& path);
IstmTensor as_istm(const StmFileData& data);
StmTensor as_stm(const StmFileData& data);

// Exact Eq.-style column transform used by rgb_to_yuv; exposed so tests can
// check single triples against direct matrix multiplication.
void yuv_from_rgb(double r, double g, double b, double& y, double& u, double& v);

}  // namespace vbp
