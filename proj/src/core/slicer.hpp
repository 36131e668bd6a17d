#pragma once

#include <string>
#include <vector>

#include "core/stm.hpp"

namespace vbp {

inline constexpr int kFrameVectorSize = kNumRois * kNumChannels;  // 12

// One frame flattened to [roi0.Y, roi0.U, roi0.V, roi1.Y, ...].
using FrameVector = std::array<double, kFrameVectorSize>;

// M consecutive non-overlapping clips of L frames each; trailing remainder
// frames are dropped.
struct SliceBatch {
  std::vector<std::vector<FrameVector>> clips;  // clips[m][i], i in [0, L)
  int clip_length = 0;
  std::string sample_id;

  int clip_count() const { return static_cast<int>(clips.size()); }
};

FrameVector flatten_frame(const StmTensor& stm, int t);
SliceBatch make_slices(const StmTensor& stm, int clip_length,
                       const std::string& sample_id = {});

}  // namespace vbp
