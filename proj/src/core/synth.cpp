#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "core/dataset_io.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

namespace fs = std::filesystem;

namespace vbp {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

std::vector<FreqBand> parse_bands(const std::string& raw) {
  std::vector<FreqBand> bands;
  if (raw.empty()) return bands;
  for (auto part : split(raw, ',')) {
    auto fields = split(part, ':');
    if (fields.size() != 3) {
      throw ConfigError(msg("synth.freq_bands entry must be lo:hi:weight, got '", part, "'"));
    }
    auto lo = parse_double(trim(fields[0]));
    auto hi = parse_double(trim(fields[1]));
    auto w = parse_double(trim(fields[2]));
    if (!lo || !hi || !w) {
      throw ConfigError(msg("synth.freq_bands entry is not numeric: '", part, "'"));
    }
    bands.push_back({*lo, *hi, *w});
  }
  return bands;
}

BpLaw law_from(const RunConfig& cfg, const char* key) {
  const auto values = cfg.get_list(key);
  if (values.size() != 4) throw ConfigError(msg(key, " must have 4 coefficients"));
  BpLaw law;
  std::copy(values.begin(), values.end(), law.coeffs.begin());
  return law;
}

}  // namespace

SynthSpec SynthSpec::from(const RunConfig& cfg) {
  SynthSpec spec;
  spec.n_samples = static_cast<int>(cfg.get_int("synth.n_samples"));
  spec.frames = static_cast<int>(cfg.get_int("synth.frames"));
  spec.fps = cfg.get_double("synth.fps");
  spec.freq_lo = cfg.get_double("synth.freq_lo");
  spec.freq_hi = cfg.get_double("synth.freq_hi");
  spec.amp_lo = cfg.get_double("synth.amp_lo");
  spec.amp_hi = cfg.get_double("synth.amp_hi");
  spec.noise_sd = cfg.get_double("synth.noise_sd");
  spec.freq_bands = parse_bands(cfg.get("synth.freq_bands"));
  spec.sbp_law = law_from(cfg, "synth.law.sbp");
  spec.dbp_law = law_from(cfg, "synth.law.dbp");
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("synth.seed"));
  spec.validate();
  return spec;
}

void SynthSpec::validate() const {
  if (n_samples < 1) throw ConfigError("synth.n_samples must be >= 1");
  if (frames < 2) throw ConfigError("synth.frames must be >= 2");
  if (fps <= 0.0) throw ConfigError("synth.fps must be positive");
  if (freq_hi < freq_lo || freq_lo <= 0.0) {
    throw ConfigError("degenerate frequency range: need 0 < freq_lo <= freq_hi");
  }
  if (amp_hi < amp_lo || amp_lo <= 0.0) {
    throw ConfigError("degenerate amplitude range: need 0 < amp_lo <= amp_hi");
  }
  if (noise_sd < 0.0) throw ConfigError("synth.noise_sd must be >= 0");
  // the sampled fundamental must stay below Nyquist
  if (freq_hi >= 0.5 * fps) throw ConfigError("freq_hi must be below fps/2");
  for (const auto& band : freq_bands) {
    if (band.hi < band.lo || band.lo < freq_lo || band.hi > freq_hi || band.weight <= 0.0) {
      throw ConfigError("synth.freq_bands must be positive-weight sub-ranges of the freq range");
    }
  }
}

SynthDataset generate(const SynthSpec& spec) {
  spec.validate();
  SynthDataset ds;
  ds.sample_ids.reserve(spec.n_samples);
  ds.maps.reserve(spec.n_samples);
  ds.labels.reserve(spec.n_samples);
  ds.info.reserve(spec.n_samples);

  double total_weight = 0.0;
  for (const auto& band : spec.freq_bands) total_weight += band.weight;

  for (int s = 0; s < spec.n_samples; ++s) {
    Rng rng(splitmix64(spec.seed ^ (0x3C6EF372FE94F82BULL + static_cast<std::uint64_t>(s))));

    SynthSampleInfo info;
    if (spec.freq_bands.empty()) {
      info.freq = rng.uniform(spec.freq_lo, spec.freq_hi);
    } else {
      double pick = rng.uniform() * total_weight;
      const FreqBand* chosen = &spec.freq_bands.back();
      for (const auto& band : spec.freq_bands) {
        if (pick < band.weight) {
          chosen = &band;
          break;
        }
        pick -= band.weight;
      }
      info.freq = rng.uniform(chosen->lo, chosen->hi);
    }
    info.amplitude = rng.uniform(spec.amp_lo, spec.amp_hi);
    info.phase = rng.uniform(0.0, kTwoPi);
    info.lag_step = rng.uniform(kSynthLagStepLo, kSynthLagStepHi);

    IstmTensor istm;
    istm.frames = spec.frames;
    istm.values.assign(static_cast<std::size_t>(kNumRois) * spec.frames * kNumChannels, 0.0);
    const double omega = kTwoPi * info.freq / spec.fps;
    for (int n = 0; n < kNumRois; ++n) {
      const double a = info.amplitude * kSynthRoiScale[n];
      const double lag = info.lag_step * n;
      for (int t = 0; t < spec.frames; ++t) {
        const double theta = omega * t + info.phase + lag;
        const double fundamental = std::sin(theta);
        const double with_harmonic = fundamental + kSynthHarmonic * std::sin(2.0 * theta);
        istm.at(n, t, 0) = kSynthBaseline[0] + kSynthChannelScale[0] * a * with_harmonic;
        istm.at(n, t, 1) = kSynthBaseline[1] + kSynthChannelScale[1] * a * with_harmonic;
        istm.at(n, t, 2) = kSynthBaseline[2] + kSynthChannelScale[2] * a * fundamental;
      }
    }
    if (spec.noise_sd > 0.0) {
      for (double& v : istm.values) v += spec.noise_sd * rng.normal();
    }
    for (double& v : istm.values) v = std::clamp(v, 0.0, 255.0);

    BpRecord label;
    label.sbp = spec.sbp_law(info.freq, info.amplitude, info.lag_spread());
    label.dbp = spec.dbp_law(info.freq, info.amplitude, info.lag_spread());
    if (label.dbp < kBpLowerBound || label.sbp > kBpUpperBound || label.dbp >= label.sbp) {
      throw DataError(msg("bp law escapes physiological bounds at sample ", s, ": sbp=",
                          label.sbp, " dbp=", label.dbp));
    }

    char id[16];
    std::snprintf(id, sizeof(id), "synth%04d", s);
    ds.sample_ids.push_back(id);
    ds.maps.push_back(std::move(istm));
    ds.labels.push_back(label);
    ds.info.push_back(info);

    ManifestEntry entry;
    entry.sample_id = id;
    entry.frames_path = std::string(id) + ".stm";
    entry.landmarks_path = "-";
    entry.sbp = label.sbp;
    entry.dbp = label.dbp;
    ds.manifest.entries.push_back(std::move(entry));
  }
  return ds;
}

std::string write_dataset(const SynthDataset& dataset, const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < dataset.maps.size(); ++i) {
    save_istm_file((fs::path(out_dir) / (dataset.sample_ids[i] + ".stm")).string(),
                   dataset.maps[i]);
  }
  const std::string manifest_path = (fs::path(out_dir) / "manifest.tsv").string();
  save_manifest(dataset.manifest, manifest_path);
  return manifest_path;
}

}  // namespace vbp
