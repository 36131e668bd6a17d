#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/stm.hpp"
#include "core/types.hpp"

namespace vbp {

// Synthetic map generator with a known signal -> blood-pressure law, so the
// trainer, sampler, and evaluation stack are testable end to end. Each sample
// carries a sinusoid-plus-harmonic pulse with per-ROI amplitude scaling and
// small per-ROI phase lags, on skin-like channel baselines, plus optional
// Gaussian noise. The blue channel carries the pure fundamental, which makes
// frequency, amplitude and phase recoverable in closed form on noise-free
// data.

inline constexpr std::array<double, 3> kSynthBaseline = {150.0, 120.0, 105.0};     // R, G, B
inline constexpr std::array<double, 3> kSynthChannelScale = {0.5, 1.0, 0.35};      // R, G, B
inline constexpr std::array<double, 4> kSynthRoiScale = {1.0, 0.85, 0.9, 0.7};
inline constexpr double kSynthHarmonic = 0.3;  // second-harmonic weight on R and G
inline constexpr double kSynthLagStepLo = 0.02;  // radians between adjacent ROIs
inline constexpr double kSynthLagStepHi = 0.15;

// BP law: value = c0 + c1 * freq_hz + c2 * ln(amplitude) + c3 * lag_spread,
// where lag_spread is the phase offset between the last and first ROI.
struct BpLaw {
  std::array<double, 4> coeffs{};
  double operator()(double freq, double amplitude, double lag_spread) const {
    return coeffs[0] + coeffs[1] * freq + coeffs[2] * std::log(amplitude) +
           coeffs[3] * lag_spread;
  }
};

struct FreqBand {
  double lo = 0.0;
  double hi = 0.0;
  double weight = 1.0;
};

struct SynthSpec {
  int n_samples = 100;
  int frames = 450;  // T
  double fps = 30.0;
  double freq_lo = 0.9;  // Hz
  double freq_hi = 2.4;
  double amp_lo = 1.0;  // 8-bit intensity units
  double amp_hi = 6.0;
  double noise_sd = 0.0;
  std::vector<FreqBand> freq_bands;  // empty = uniform over [freq_lo, freq_hi]
  BpLaw sbp_law{{60.0, 35.0, 8.0, 10.0}};
  BpLaw dbp_law{{45.0, 20.0, 4.0, 5.0}};
  std::uint64_t seed = 1;

  static SynthSpec from(const RunConfig& cfg);
  void validate() const;
};

struct SynthSampleInfo {
  double freq = 0.0;        // Hz
  double amplitude = 0.0;   // pre-scaling pulse amplitude
  double phase = 0.0;       // radians
  double lag_step = 0.0;    // radians between adjacent ROIs
  double lag_spread() const { return (kNumRois - 1) * lag_step; }
};

struct SynthDataset {
  std::vector<std::string> sample_ids;
  std::vector<IstmTensor> maps;
  std::vector<BpRecord> labels;
  std::vector<SynthSampleInfo> info;
  Manifest manifest;  // frames_path holds "<id>.stm", landmarks_path "-"
};

SynthDataset generate(const SynthSpec& spec);

// Writes <id>.stm (+ .mask) files and manifest.tsv; returns the manifest path.
std::string write_dataset(const SynthDataset& dataset, const std::string& out_dir);

}  // namespace vbp
