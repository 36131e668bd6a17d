#include "core/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "core/errors.hpp"
#include "core/image_png.hpp"
#include "core/text.hpp"

namespace fs = std::filesystem;

namespace vbp {

namespace {

// Entry paths resolve relative to the manifest file's directory.
std::string resolve_relative(const std::string& manifest_path, const std::string& entry_path) {
  fs::path p(entry_path);
  if (p.is_absolute()) return entry_path;
  return (fs::path(manifest_path).parent_path() / p).string();
}

void check_entry_paths(const std::string& manifest_path, const ManifestEntry& e, int lineno) {
  if (!fs::exists(resolve_relative(manifest_path, e.frames_path))) {
    throw DataError(msg(manifest_path, ":", lineno, ": frames path not found: ", e.frames_path));
  }
  if (e.landmarks_path != "-" &&
      !fs::exists(resolve_relative(manifest_path, e.landmarks_path))) {
    throw DataError(
        msg(manifest_path, ":", lineno, ": landmarks path not found: ", e.landmarks_path));
  }
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

FrameSequence load_frames_blob(const std::string& path, double fps) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(msg("cannot open frame blob: ", path));
  const std::uint32_t t = read_u32_le(in);
  const std::uint32_t h = read_u32_le(in);
  const std::uint32_t w = read_u32_le(in);
  if (!in) throw DataError(msg("truncated frame blob header: ", path));
  if (t == 0 || h == 0 || w == 0) {
    throw DataError(msg("frame blob has empty dimensions: ", path));
  }
  FrameSequence seq;
  seq.fps = fps;
  seq.frames.resize(t);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<std::uint8_t> planes(3 * plane);
  for (std::uint32_t i = 0; i < t; ++i) {
    in.read(reinterpret_cast<char*>(planes.data()), static_cast<std::streamsize>(3 * plane));
    if (!in) throw DataError(msg("truncated frame blob at frame ", i, ": ", path));
    Image& img = seq.frames[i];
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.rgb.resize(3 * plane);
    for (std::size_t p = 0; p < plane; ++p) {
      img.rgb[3 * p + 0] = planes[p];
      img.rgb[3 * p + 1] = planes[plane + p];
      img.rgb[3 * p + 2] = planes[2 * plane + p];
    }
  }
  return seq;
}

FrameSequence load_frames_dir(const std::string& path, double fps) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() == ".png") files.push_back(entry.path().string());
  }
  if (files.empty()) throw DataError(msg("no .png frames in directory: ", path));
  std::sort(files.begin(), files.end());

  FrameSequence seq;
  seq.fps = fps;
  seq.frames.reserve(files.size());
  for (const auto& f : files) {
    Image img = read_png(f);
    if (!seq.frames.empty() &&
        (img.width != seq.width() || img.height != seq.height())) {
      throw DataError(msg("frame dimension mismatch in ", path, ": ", f, " is ", img.width, "x",
                          img.height, ", expected ", seq.width(), "x", seq.height()));
    }
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

}  // namespace

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(msg("cannot open manifest: ", path));

  Manifest manifest;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    auto fields = split(sv, '\t');
    if (fields.size() != 5) {
      throw DataError(
          msg(path, ":", lineno, ": expected 5 tab-separated fields, got ", fields.size()));
    }
    ManifestEntry e;
    e.sample_id = std::string(trim(fields[0]));
    e.frames_path = std::string(trim(fields[1]));
    e.landmarks_path = std::string(trim(fields[2]));
    auto sbp = parse_double(trim(fields[3]));
    auto dbp = parse_double(trim(fields[4]));
    if (e.sample_id.empty()) throw DataError(msg(path, ":", lineno, ": empty sample_id"));
    if (!sbp || !dbp) throw DataError(msg(path, ":", lineno, ": non-numeric blood pressure"));
    e.sbp = *sbp;
    e.dbp = *dbp;
    if (!seen_ids.insert(e.sample_id).second) {
      throw DataError(msg(path, ":", lineno, ": duplicate sample_id '", e.sample_id, "'"));
    }
    if (e.dbp < kBpLowerBound || e.sbp > kBpUpperBound) {
      throw DataError(msg(path, ":", lineno, ": blood pressure outside ", kBpLowerBound, "-",
                          kBpUpperBound, " mmHg: sbp=", e.sbp, " dbp=", e.dbp));
    }
    if (e.dbp >= e.sbp) {
      throw DataError(msg(path, ":", lineno, ": dbp >= sbp (sbp=", e.sbp, " dbp=", e.dbp, ")"));
    }
    check_entry_paths(path, e, lineno);
    manifest.entries.push_back(std::move(e));
  }
  if (manifest.entries.empty()) {
    std::fprintf(stderr, "warning: manifest is empty: %s\n", path.c_str());
  }
  return manifest;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(msg("cannot write manifest: ", path));
  for (const auto& e : manifest.entries) {
    out << e.sample_id << '\t' << e.frames_path << '\t' << e.landmarks_path << '\t'
        << format_double(e.sbp) << '\t' << format_double(e.dbp) << '\n';
  }
}

LandmarkTrack load_landmarks(const std::string& path, int expected_frames) {
  std::ifstream in(path);
  if (!in) throw DataError(msg("cannot open landmark file: ", path));

  LandmarkTrack track;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    auto fields = split(sv, ',');
    if (fields.size() != 2 * kNumLandmarks) {
      throw DataError(msg(path, ":", lineno, ": malformed row: expected ", 2 * kNumLandmarks,
                          " columns, got ", fields.size()));
    }
    LandmarkFrame frame;
    for (int i = 0; i < kNumLandmarks; ++i) {
      auto x = parse_double(trim(fields[2 * i]));
      auto y = parse_double(trim(fields[2 * i + 1]));
      if (!x || !y) {
        throw DataError(msg(path, ":", lineno, ": non-numeric cell in column ", 2 * i + 1));
      }
      frame[i] = Point{*x, *y};
    }
    track.frames.push_back(frame);
  }
  if (track.length() != expected_frames) {
    throw DataError(msg(path, ": length mismatch: ", track.length(), " landmark rows for ",
                        expected_frames, " frames"));
  }
  return track;
}

FrameSequence load_frames(const std::string& path, double fps) {
  if (fs::is_directory(path)) return load_frames_dir(path, fps);
  if (!fs::exists(path)) throw DataError(msg("frames path not found: ", path));
  return load_frames_blob(path, fps);
}

void save_frames_blob(const std::string& path, const FrameSequence& seq) {
  if (seq.frames.empty()) throw DataError("save_frames_blob: empty sequence");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(msg("cannot write frame blob: ", path));
  const int h = seq.height();
  const int w = seq.width();
  write_u32_le(out, static_cast<std::uint32_t>(seq.length()));
  write_u32_le(out, static_cast<std::uint32_t>(h));
  write_u32_le(out, static_cast<std::uint32_t>(w));
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<std::uint8_t> planes(3 * plane);
  for (const Image& img : seq.frames) {
    if (img.width != w || img.height != h) {
      throw DataError("save_frames_blob: frame dimension mismatch");
    }
    for (std::size_t p = 0; p < plane; ++p) {
      planes[p] = img.rgb[3 * p + 0];
      planes[plane + p] = img.rgb[3 * p + 1];
      planes[2 * plane + p] = img.rgb[3 * p + 2];
    }
    out.write(reinterpret_cast<const char*>(planes.data()),
              static_cast<std::streamsize>(3 * plane));
  }
  if (!out) throw DataError(msg("failed writing frame blob: ", path));
}

std::string resolve_manifest_path(const std::string& manifest_path,
                                  const std::string& entry_path) {
  return resolve_relative(manifest_path, entry_path);
}

}  // namespace vbp
