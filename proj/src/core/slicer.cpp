#include "core/slicer.hpp"

#include "core/errors.hpp"

namespace vbp {

FrameVector flatten_frame(const StmTensor& stm, int t) {
  if (t < 0 || t >= stm.frames) {
    throw DataError(msg("flatten_frame: frame index ", t, " out of range [0,", stm.frames, ")"));
  }
  FrameVector v;
  for (int n = 0; n < kNumRois; ++n) {
    for (int c = 0; c < kNumChannels; ++c) {
      v[n * kNumChannels + c] = stm.at(n, t, c);
    }
  }
  return v;
}

SliceBatch make_slices(const StmTensor& stm, int clip_length, const std::string& sample_id) {
  if (clip_length < 1) throw ConfigError("clip length must be >= 1");
  if (stm.frames < clip_length) {
    throw DataError(
        msg("video shorter than clip length: ", stm.frames, " frames < L=", clip_length));
  }
  SliceBatch batch;
  batch.clip_length = clip_length;
  batch.sample_id = sample_id;
  const int clip_count = stm.frames / clip_length;
  batch.clips.resize(clip_count);
  for (int m = 0; m < clip_count; ++m) {
    batch.clips[m].reserve(clip_length);
    for (int i = 0; i < clip_length; ++i) {
      batch.clips[m].push_back(flatten_frame(stm, m * clip_length + i));
    }
  }
  return batch;
}

}  // namespace vbp
