#include "core/stm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace vbp {

namespace {

constexpr double kYuvMatrix[3][3] = {
    {0.299, 0.587, 0.114},
    {-0.169, -0.331, 0.5},
    {0.5, -0.419, -0.081},
};

Point lerp(const Point& a, const Point& b, double t) {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
}

Point reflect_across_line(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 <= 0.0) throw DataError("degenerate ROI: jaw anchors coincide");
  const double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  const Point proj{a.x + t * dx, a.y + t * dy};
  return {2.0 * proj.x - p.x, 2.0 * proj.y - p.y};
}

void require_nondegenerate(const Polygon& poly, const char* name) {
  if (poly.area() <= 0.0) throw DataError(msg("degenerate ROI: ", name));
}

}  // namespace

double Polygon::area() const {
  double twice = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = vertices[i];
    const Point& b = vertices[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice) * 0.5;
}

RoiFrame define_rois(const LandmarkFrame& lm) {
  const Point& brow_l = lm[kAnchorBrowLeft];
  const Point& brow_r = lm[kAnchorBrowRight];
  const Point& eye_l = lm[kAnchorEyeLeft];
  const Point& eye_r = lm[kAnchorEyeRight];
  const Point& nose = lm[kAnchorNoseBase];
  const Point& jaw_l = lm[kAnchorJawLeft];
  const Point& jaw_r = lm[kAnchorJawRight];

  RoiFrame out;

  // Forehead: axis-aligned rectangle above the brow line. Image y grows
  // downward, so "above" is toward smaller y.
  const double brow_y = 0.5 * (brow_l.y + brow_r.y);
  const double eye_y = 0.5 * (eye_l.y + eye_r.y);
  const double eye_to_brow = eye_y - brow_y;
  if (eye_to_brow <= 0.0) throw DataError("degenerate ROI: eye line not below brow line");
  const double height = kForeheadHeightRatio * eye_to_brow;
  const double x0 = std::min(brow_l.x, brow_r.x);
  const double x1 = std::max(brow_l.x, brow_r.x);
  out.rois[kRoiForehead].vertices = {
      {x0, brow_y - height}, {x1, brow_y - height}, {x1, brow_y}, {x0, brow_y}};

  out.rois[kRoiLeftCheek].vertices = {eye_l, nose, jaw_l};
  out.rois[kRoiRightCheek].vertices = {eye_r, nose, jaw_r};

  // Lower band: trapezoid between the jaw chord and the chin, built from the
  // nose base reflected across the jaw chord.
  const Point chin = reflect_across_line(nose, jaw_l, jaw_r);
  out.rois[kRoiLowerBand].vertices = {
      lerp(jaw_l, chin, kLowerBandTop), lerp(jaw_r, chin, kLowerBandTop),
      lerp(jaw_r, chin, kLowerBandBottom), lerp(jaw_l, chin, kLowerBandBottom)};

  require_nondegenerate(out.rois[kRoiForehead], "forehead");
  require_nondegenerate(out.rois[kRoiLeftCheek], "left cheek");
  require_nondegenerate(out.rois[kRoiRightCheek], "right cheek");
  require_nondegenerate(out.rois[kRoiLowerBand], "lower band");
  return out;
}

RoiSet define_rois(const LandmarkTrack& track) {
  RoiSet set;
  set.frames.reserve(track.frames.size());
  for (const auto& frame : track.frames) set.frames.push_back(define_rois(frame));
  return set;
}

IstmTensor compute_istm(const FrameSequence& frames, const RoiSet& rois) {
  const int t_count = frames.length();
  if (t_count == 0) throw DataError("compute_istm: empty frame sequence");
  if (rois.length() != t_count) {
    throw DataError(msg("compute_istm: ", rois.length(), " ROI frames for ", t_count, " frames"));
  }
  const int w = frames.width();
  const int h = frames.height();

  IstmTensor istm;
  istm.frames = t_count;
  istm.values.assign(static_cast<std::size_t>(kNumRois) * t_count * kNumChannels, 0.0);

  std::vector<double> xs;
  for (int t = 0; t < t_count; ++t) {
    const Image& img = frames.frames[t];
    for (int n = 0; n < kNumRois; ++n) {
      const Polygon& poly = rois.frames[t].rois[n];
      for (const Point& v : poly.vertices) {
        if (v.x < 0.0 || v.x > w || v.y < 0.0 || v.y > h) {
          throw DataError(
              msg("ROI ", n, " outside frame bounds at frame ", t, " (", v.x, ",", v.y, ")"));
        }
      }
      // Scanline rasterization with pixel-center-in-polygon semantics
      // (even-odd rule, half-open edges), row by row.
      double sum[kNumChannels] = {0.0, 0.0, 0.0};
      long count = 0;
      double ymin = poly.vertices[0].y, ymax = ymin;
      for (const Point& v : poly.vertices) {
        ymin = std::min(ymin, v.y);
        ymax = std::max(ymax, v.y);
      }
      const int row0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
      const int row1 = std::min(h - 1, static_cast<int>(std::ceil(ymax)));
      for (int y = row0; y <= row1; ++y) {
        const double cy = y + 0.5;
        xs.clear();
        const std::size_t nv = poly.vertices.size();
        for (std::size_t i = 0, j = nv - 1; i < nv; j = i++) {
          const Point& a = poly.vertices[i];
          const Point& b = poly.vertices[j];
          if ((a.y > cy) != (b.y > cy)) {
            xs.push_back((b.x - a.x) * (cy - a.y) / (b.y - a.y) + a.x);
          }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
          // centers cx with xs[k] <= cx < xs[k+1]
          int px0 = static_cast<int>(std::ceil(xs[k] - 0.5));
          int px1 = static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1;
          px0 = std::max(px0, 0);
          px1 = std::min(px1, w - 1);
          for (int x = px0; x <= px1; ++x) {
            for (int c = 0; c < kNumChannels; ++c) sum[c] += img.at(x, y, c);
            ++count;
          }
        }
      }
      if (count == 0) {
        throw DataError(msg("ROI ", n, " rasterizes to zero pixels at frame ", t));
      }
      for (int c = 0; c < kNumChannels; ++c) {
        istm.at(n, t, c) = sum[c] / static_cast<double>(count);
      }
    }
  }
  return istm;
}

void AugmentConfig::validate() const {
  if (mask_probability < 0.0 || mask_probability > 1.0) {
    throw ConfigError("augment.mask_probability must be in [0,1]");
  }
  if (max_time_mask_fraction < 0.0 || max_time_mask_fraction > 1.0) {
    throw ConfigError("augment.max_time_mask_fraction must be in [0,1]");
  }
  if (max_roi_masked < 0 || max_roi_masked > kNumRois - 1) {
    throw ConfigError(msg("augment.max_roi_masked must be in [0,", kNumRois - 1, "]"));
  }
}

MaskPlan draw_mask_plan(const AugmentConfig& cfg, int frames) {
  cfg.validate();
  MaskPlan plan;
  const int max_len = static_cast<int>(std::floor(cfg.max_time_mask_fraction * frames));
  if (cfg.max_roi_masked == 0 || max_len < 1 || cfg.mask_probability <= 0.0) return plan;

  Rng rng(cfg.rng_seed);
  if (rng.uniform() >= cfg.mask_probability) return plan;

  const int roi_count = rng.uniform_int(1, cfg.max_roi_masked);
  std::vector<int> all(kNumRois);
  std::iota(all.begin(), all.end(), 0);
  rng.shuffle(all);
  plan.rois.assign(all.begin(), all.begin() + roi_count);
  std::sort(plan.rois.begin(), plan.rois.end());

  plan.length = rng.uniform_int(1, max_len);
  plan.start = rng.uniform_int(0, frames - plan.length);
  plan.active = true;
  return plan;
}

namespace {

template <typename Tensor>
void apply_mask_impl(Tensor& tensor, const MaskPlan& plan, bool zero_values) {
  if (!plan.active) return;
  if (tensor.mask.empty()) {
    tensor.mask.assign(static_cast<std::size_t>(kNumRois) * tensor.frames, 0);
  }
  for (int roi : plan.rois) {
    for (int t = plan.start; t < plan.start + plan.length; ++t) {
      tensor.mask[static_cast<std::size_t>(roi) * tensor.frames + t] = 1;
      if (zero_values) {
        for (int c = 0; c < kNumChannels; ++c) tensor.at(roi, t, c) = 0.0;
      }
    }
  }
}

}  // namespace

void apply_mask(IstmTensor& istm, const MaskPlan& plan) { apply_mask_impl(istm, plan, true); }
void apply_mask(StmTensor& stm, const MaskPlan& plan) {
  // Post-transform masking zeroes cells directly; normalize() does the same
  // for pre-transform masks, so the two application points agree.
  apply_mask_impl(stm, plan, stm.normalized);
}

IstmTensor random_mask(const IstmTensor& istm, const AugmentConfig& cfg) {
  IstmTensor out = istm;
  apply_mask(out, draw_mask_plan(cfg, istm.frames));
  return out;
}

void yuv_from_rgb(double r, double g, double b, double& y, double& u, double& v) {
  y = kYuvMatrix[0][0] * r + kYuvMatrix[0][1] * g + kYuvMatrix[0][2] * b;
  u = kYuvMatrix[1][0] * r + kYuvMatrix[1][1] * g + kYuvMatrix[1][2] * b;
  v = kYuvMatrix[2][0] * r + kYuvMatrix[2][1] * g + kYuvMatrix[2][2] * b;
}

StmTensor rgb_to_yuv(const IstmTensor& istm) {
  StmTensor stm;
  stm.frames = istm.frames;
  stm.mask = istm.mask;
  stm.normalized = false;
  stm.values.resize(istm.values.size());
  for (int n = 0; n < kNumRois; ++n) {
    for (int t = 0; t < istm.frames; ++t) {
      yuv_from_rgb(istm.at(n, t, 0), istm.at(n, t, 1), istm.at(n, t, 2), stm.at(n, t, 0),
                   stm.at(n, t, 1), stm.at(n, t, 2));
    }
  }
  return stm;
}

StmTensor normalize(const StmTensor& stm) {
  if (stm.normalized) throw DataError("normalize: tensor is already normalized");
  StmTensor out = stm;
  out.normalized = true;
  for (int n = 0; n < kNumRois; ++n) {
    for (int t = 0; t < stm.frames; ++t) {
      if (out.masked(n, t)) {
        for (int c = 0; c < kNumChannels; ++c) out.at(n, t, c) = 0.0;
        continue;
      }
      out.at(n, t, 0) = out.at(n, t, 0) / 255.0;
      out.at(n, t, 1) = (out.at(n, t, 1) + 127.5) / 255.0;
      out.at(n, t, 2) = (out.at(n, t, 2) + 127.5) / 255.0;
    }
  }
  return out;
}

StmTensor denormalize(const StmTensor& stm) {
  if (!stm.normalized) throw DataError("denormalize: tensor is not normalized");
  StmTensor out = stm;
  out.normalized = false;
  for (int n = 0; n < kNumRois; ++n) {
    for (int t = 0; t < stm.frames; ++t) {
      out.at(n, t, 0) = out.at(n, t, 0) * 255.0;
      out.at(n, t, 1) = out.at(n, t, 1) * 255.0 - 127.5;
      out.at(n, t, 2) = out.at(n, t, 2) * 255.0 - 127.5;
    }
  }
  return out;
}

namespace {

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void save_map_file(const std::string& path, int frames, bool normalized,
                   const std::vector<double>& values, const std::vector<std::uint8_t>& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(msg("cannot write map file: ", path));
  write_u32_le(out, static_cast<std::uint32_t>(kNumRois));
  write_u32_le(out, static_cast<std::uint32_t>(frames));
  write_u32_le(out, static_cast<std::uint32_t>(kNumChannels));
  const char flag = normalized ? 1 : 0;
  out.write(&flag, 1);
  for (double v : values) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32_le(out, bits);
  }
  if (!out) throw DataError(msg("failed writing map file: ", path));

  std::ofstream mout(path + ".mask", std::ios::binary);
  if (!mout) throw DataError(msg("cannot write mask sidecar: ", path, ".mask"));
  std::vector<std::uint8_t> bytes = mask;
  if (bytes.empty()) bytes.assign(static_cast<std::size_t>(kNumRois) * frames, 0);
  mout.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!mout) throw DataError(msg("failed writing mask sidecar: ", path, ".mask"));
}

}  // namespace

void save_stm_file(const std::string& path, const StmTensor& stm) {
  save_map_file(path, stm.frames, stm.normalized, stm.values, stm.mask);
}

void save_istm_file(const std::string& path, const IstmTensor& istm) {
  save_map_file(path, istm.frames, false, istm.values, istm.mask);
}

StmFileData load_stm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(msg("cannot open map file: ", path));
  StmFileData data;
  data.n_roi = static_cast<int>(read_u32_le(in));
  data.frames = static_cast<int>(read_u32_le(in));
  const int channels = static_cast<int>(read_u32_le(in));
  char flag = 0;
  in.read(&flag, 1);
  if (!in) throw DataError(msg("truncated map header: ", path));
  if (data.n_roi != kNumRois || channels != kNumChannels || data.frames <= 0) {
    throw DataError(msg("unsupported map header in ", path, ": n_roi=", data.n_roi,
                        " T=", data.frames, " channels=", channels));
  }
  data.normalized = flag != 0;
  const std::size_t count = static_cast<std::size_t>(kNumRois) * data.frames * kNumChannels;
  data.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = read_u32_le(in);
    if (!in) throw DataError(msg("truncated map data at value ", i, ": ", path));
    float f;
    std::memcpy(&f, &bits, 4);
    data.values[i] = f;
  }

  std::ifstream min(path + ".mask", std::ios::binary);
  if (min) {
    data.mask.resize(static_cast<std::size_t>(kNumRois) * data.frames);
    min.read(reinterpret_cast<char*>(data.mask.data()),
             static_cast<std::streamsize>(data.mask.size()));
    if (!min) throw DataError(msg("truncated mask sidecar: ", path, ".mask"));
    const bool any = std::any_of(data.mask.begin(), data.mask.end(),
                                 [](std::uint8_t b) { return b != 0; });
    if (!any) data.mask.clear();
  }
  return data;
}

IstmTensor as_istm(const StmFileData& data) {
  if (data.normalized) throw DataError("map file is normalized; expected a raw ISTM");
  IstmTensor istm;
  istm.frames = data.frames;
  istm.mask = data.mask;
  istm.values.assign(data.values.begin(), data.values.end());
  return istm;
}

StmTensor as_stm(const StmFileData& data) {
  StmTensor stm;
  stm.frames = data.frames;
  stm.mask = data.mask;
  stm.normalized = data.normalized;
  stm.values.assign(data.values.begin(), data.values.end());
  return stm;
}

}  // namespace vbp
