#pragma once

#include <string>

#include "core/types.hpp"

namespace vbp {

// On-disk formats owned here:
//   Manifest   — UTF-8, one record per line:
//                sample_id<TAB>frames_path<TAB>landmarks_path<TAB>sbp<TAB>dbp
//                '#' comments and blank lines allowed. landmarks_path may be
//                "-" when frames_path points at a precomputed .stm map.
//   Landmarks  — UTF-8 CSV, T rows x 136 numeric columns (x1,y1,...,x68,y68),
//                no header.
//   Frames     — directory of *.png files sorted lexicographically, or a raw
//                planar blob: little-endian u32 T, u32 H, u32 W, followed by
//                T frames of three H*W channel planes (R, G, B), one byte per
//                value.

Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path);

// Entry paths resolve relative to the manifest file's directory.
std::string resolve_manifest_path(const std::string& manifest_path,
                                  const std::string& entry_path);

LandmarkTrack load_landmarks(const std::string& path, int expected_frames);

FrameSequence load_frames(const std::string& path, double fps = 30.0);
void save_frames_blob(const std::string& path, const FrameSequence& seq);

}  // namespace vbp
