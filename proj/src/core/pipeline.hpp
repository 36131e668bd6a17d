#pragma once

#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/estimator.hpp"
#include "core/evaluation.hpp"
#include "core/stm.hpp"
#include "core/types.hpp"

namespace vbp {

// A fully preprocessed sample: normalized YUV map plus its label. Training
// augmentation works on copies of this (masked cells zeroed after
// normalization, which is equivalent to masking the raw map first).
struct DatasetSample {
  std::string sample_id;
  StmTensor stm;  // normalized, unmasked
  BpRecord label;
};

struct LoadedDataset {
  std::vector<DatasetSample> samples;
};

// Runs the deterministic map pipeline for one manifest entry: precomputed
// .stm files are loaded (raw maps get the YUV transform and normalization),
// anything else goes through frames + landmarks -> ROIs -> ISTM -> STM.
DatasetSample load_sample(const std::string& manifest_path, const ManifestEntry& entry,
                          const RunConfig& cfg);
LoadedDataset load_dataset(const std::string& manifest_path, const RunConfig& cfg);

struct PrepareResult {
  int written = 0;
  std::vector<std::string> failures;  // "<sample_id>: <error>"
  std::string index_path;
};

// frames+landmarks -> normalized STM files + prepared.tsv index. Per-sample
// failures are collected, not fatal.
PrepareResult run_prepare(const RunConfig& cfg, const std::string& manifest_path,
                          const std::string& out_dir);

struct TrainResult {
  std::vector<std::string> checkpoint_paths;
  std::vector<std::string> metric_paths;
};

// Group-balanced oversampled k-fold cross-validation training for the
// configured target(s); writes per-fold checkpoints, fold plans, loss curves,
// metric CSVs and pooled Bland-Altman data.
TrainResult run_train(const RunConfig& cfg, const std::string& manifest_path,
                      const std::string& out_dir);

void run_synth(const RunConfig& cfg, const std::string& out_dir);

struct PredictionRecord {
  std::string sample_id;
  std::string target;
  EstimatorOutput output;
};

class Predictor {
 public:
  explicit Predictor(const std::string& checkpoint_path);

  const std::string& target() const { return target_; }
  const RunConfig& run_config() const { return run_config_; }

  EstimatorOutput predict_stm(const StmTensor& normalized_stm);
  EstimatorOutput predict_file(const std::string& stm_path);
  EstimatorOutput predict_raw(const std::string& frames_path, const std::string& landmarks_path);

 private:
  std::unique_ptr<Estimator> model_;
  RunConfig run_config_;
  std::string target_;
};

// Evaluates checkpoints over a labeled manifest; writes metrics and
// Bland-Altman CSVs per target.
std::vector<MetricReport> run_evaluate(const RunConfig& cfg, const std::string& manifest_path,
                                       const std::vector<std::string>& checkpoint_paths,
                                       const std::string& out_dir);

}  // namespace vbp
