#include "core/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "core/dataset_io.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/sampler.hpp"
#include "core/slicer.hpp"
#include "core/synth.hpp"
#include "core/text.hpp"

namespace fs = std::filesystem;

namespace vbp {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::uint64_t derive_seed(std::uint64_t global, const std::string& tag, std::uint64_t index) {
  return splitmix64(global ^ fnv1a64(tag) ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
}

double label_value(const BpRecord& label, const std::string& target) {
  return target == "sbp" ? label.sbp : label.dbp;
}

StmTensor normalized_from_file(const std::string& path) {
  const StmFileData data = load_stm_file(path);
  if (data.normalized) return as_stm(data);
  return normalize(rgb_to_yuv(as_istm(data)));
}

AugmentConfig augment_config(const RunConfig& cfg) {
  AugmentConfig a;
  a.mask_probability = cfg.get_double("augment.mask_probability");
  a.max_time_mask_fraction = cfg.get_double("augment.max_time_mask_fraction");
  a.max_roi_masked = static_cast<int>(cfg.get_int("augment.max_roi_masked"));
  a.validate();
  return a;
}

std::vector<std::string> targets_from(const RunConfig& cfg) {
  const std::string& target = cfg.get("target");
  if (target == "both") return {"sbp", "dbp"};
  return {target};
}

// Simple deterministic-output worker pool: items are independent and write
// disjoint results.
void parallel_for(int count, const std::function<void(int)>& fn) {
  const unsigned workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(), static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

DatasetSample load_sample(const std::string& manifest_path, const ManifestEntry& entry,
                          const RunConfig& cfg) {
  DatasetSample sample;
  sample.sample_id = entry.sample_id;
  sample.label = BpRecord{entry.sbp, entry.dbp};

  const std::string frames_path = resolve_manifest_path(manifest_path, entry.frames_path);
  if (ends_with(entry.frames_path, ".stm")) {
    sample.stm = normalized_from_file(frames_path);
    return sample;
  }
  const FrameSequence frames = load_frames(frames_path, cfg.get_double("fps"));
  const LandmarkTrack landmarks = load_landmarks(
      resolve_manifest_path(manifest_path, entry.landmarks_path), frames.length());
  const IstmTensor istm = compute_istm(frames, define_rois(landmarks));
  sample.stm = normalize(rgb_to_yuv(istm));
  return sample;
}

LoadedDataset load_dataset(const std::string& manifest_path, const RunConfig& cfg) {
  const Manifest manifest = load_manifest(manifest_path);
  if (manifest.entries.empty()) throw DataError(msg("manifest has no samples: ", manifest_path));
  LoadedDataset ds;
  ds.samples.resize(manifest.entries.size());
  std::mutex error_mutex;
  std::string first_error;
  parallel_for(static_cast<int>(manifest.entries.size()), [&](int i) {
    try {
      ds.samples[i] = load_sample(manifest_path, manifest.entries[i], cfg);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (first_error.empty()) {
        first_error = msg("sample '", manifest.entries[i].sample_id, "': ", e.what());
      }
    }
  });
  if (!first_error.empty()) throw DataError(first_error);
  return ds;
}

PrepareResult run_prepare(const RunConfig& cfg, const std::string& manifest_path,
                          const std::string& out_dir) {
  const Manifest manifest = load_manifest(manifest_path);
  fs::create_directories(out_dir);

  PrepareResult result;
  std::vector<ManifestEntry> prepared(manifest.entries.size());
  std::vector<char> ok(manifest.entries.size(), 0);
  std::mutex failure_mutex;

  parallel_for(static_cast<int>(manifest.entries.size()), [&](int i) {
    const ManifestEntry& entry = manifest.entries[i];
    try {
      DatasetSample sample = load_sample(manifest_path, entry, cfg);
      const std::string file_name = entry.sample_id + ".stm";
      save_stm_file((fs::path(out_dir) / file_name).string(), sample.stm);
      ManifestEntry out_entry;
      out_entry.sample_id = entry.sample_id;
      out_entry.frames_path = file_name;
      out_entry.landmarks_path = "-";
      out_entry.sbp = entry.sbp;
      out_entry.dbp = entry.dbp;
      prepared[i] = std::move(out_entry);
      ok[i] = 1;
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      result.failures.push_back(msg(entry.sample_id, ": ", e.what()));
    }
  });

  Manifest index;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    if (ok[i]) index.entries.push_back(std::move(prepared[i]));
  }
  std::sort(result.failures.begin(), result.failures.end());
  result.written = static_cast<int>(index.entries.size());
  result.index_path = (fs::path(out_dir) / "prepared.tsv").string();
  save_manifest(index, result.index_path);
  cfg.save_file((fs::path(out_dir) / "run_config.txt").string());
  return result;
}

void run_synth(const RunConfig& cfg, const std::string& out_dir) {
  const SynthSpec spec = SynthSpec::from(cfg);
  const SynthDataset dataset = generate(spec);
  write_dataset(dataset, out_dir);
  cfg.save_file((fs::path(out_dir) / "run_config.txt").string());
}

namespace {

struct FoldOutcome {
  MetricReport report;
  std::vector<std::string> val_ids;
  std::vector<double> val_preds;
  std::vector<double> val_truths;
};

FoldOutcome train_one_fold(const RunConfig& cfg, const LoadedDataset& ds,
                           const std::vector<int>& groups_of, const FoldPlan& plan,
                           const std::string& target, int fold, const std::string& out_dir,
                           std::ofstream& loss_csv, TrainResult& result) {
  const ModelConfig model_cfg = ModelConfig::from(cfg, target);
  const AugmentConfig base_augment = augment_config(cfg);
  const std::uint64_t global_seed = cfg.seed();

  Estimator model(model_cfg, derive_seed(global_seed, "model:" + target, fold));

  auto train_groups = plan.training_groups(fold);
  OversampleIterator batches(train_groups, static_cast<int>(cfg.get_int("train.batch_size")),
                             derive_seed(global_seed, "batches:" + target, fold));

  const int epochs = static_cast<int>(cfg.get_int("train.epochs"));
  const double momentum = cfg.get_double("train.momentum");
  const double lr_decay = cfg.get_double("train.lr_decay");
  double lr = cfg.get_double("train.lr");

  const int clip_length = model_cfg.clip_length;
  int step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (int b = 0; b < batches.batches_per_epoch(); ++b) {
      const std::vector<int> indices = batches.next();
      std::vector<TrainSample> storage;
      storage.reserve(indices.size());
      for (int idx : indices) {
        const DatasetSample& src = ds.samples[idx];
        StmTensor augmented = src.stm;
        AugmentConfig aug = base_augment;
        aug.rng_seed = mix_seed(global_seed, src.sample_id, static_cast<std::uint64_t>(epoch));
        apply_mask(augmented, draw_mask_plan(aug, augmented.frames));
        TrainSample ts;
        ts.slices = make_slices(augmented, clip_length, src.sample_id);
        ts.truth_value = label_value(src.label, target);
        ts.truth_group = groups_of[idx];
        ts.sample_id = src.sample_id;
        storage.push_back(std::move(ts));
      }
      std::vector<const TrainSample*> batch;
      batch.reserve(storage.size());
      for (const auto& ts : storage) batch.push_back(&ts);
      const double loss = train_step(model, batch, lr, momentum);
      loss_csv << fold << ',' << step << ',' << format_double(loss) << '\n';
      ++step;
    }
    lr *= lr_decay;
  }

  FoldOutcome outcome;
  for (int idx : plan.validation_indices(fold)) {
    const DatasetSample& src = ds.samples[idx];
    SliceBatch slices = make_slices(src.stm, clip_length, src.sample_id);
    const EstimatorOutput out = model.forward(slices);
    outcome.val_ids.push_back(src.sample_id);
    outcome.val_preds.push_back(out.fused);
    outcome.val_truths.push_back(label_value(src.label, target));
  }
  outcome.report =
      compute_metrics(outcome.val_preds, outcome.val_truths, target, format_u64(fold));

  const std::string ckpt_path =
      (fs::path(out_dir) / msg(target, "_fold", fold, ".ckpt")).string();
  model.save_checkpoint(ckpt_path, cfg);
  result.checkpoint_paths.push_back(ckpt_path);
  return outcome;
}

}  // namespace

TrainResult run_train(const RunConfig& cfg, const std::string& manifest_path,
                      const std::string& out_dir) {
  const LoadedDataset ds = load_dataset(manifest_path, cfg);
  fs::create_directories(out_dir);
  cfg.save_file((fs::path(out_dir) / "run_config.txt").string());

  const int folds = static_cast<int>(cfg.get_int("train.folds"));
  const std::string config_text = cfg.serialize();
  TrainResult result;

  for (const std::string& target : targets_from(cfg)) {
    const GroupBoundaries bounds = GroupBoundaries::from(cfg, target);
    std::vector<int> groups_of(ds.samples.size());
    std::vector<std::string> sample_ids(ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      groups_of[i] = assign_group(label_value(ds.samples[i].label, target), bounds);
      sample_ids[i] = ds.samples[i].sample_id;
    }
    const FoldPlan plan =
        make_folds(groups_of, folds, derive_seed(cfg.seed(), "folds:" + target, 0));
    save_fold_plan(plan, sample_ids, (fs::path(out_dir) / (target + "_folds.tsv")).string());

    std::ofstream loss_csv((fs::path(out_dir) / (target + "_loss.csv")).string(),
                           std::ios::binary);
    loss_csv << "fold,step,loss\n";

    std::vector<MetricReport> reports;
    std::vector<std::string> pooled_ids;
    std::vector<double> pooled_preds, pooled_truths;
    for (int fold = 0; fold < folds; ++fold) {
      FoldOutcome outcome =
          train_one_fold(cfg, ds, groups_of, plan, target, fold, out_dir, loss_csv, result);
      reports.push_back(outcome.report);
      pooled_ids.insert(pooled_ids.end(), outcome.val_ids.begin(), outcome.val_ids.end());
      pooled_preds.insert(pooled_preds.end(), outcome.val_preds.begin(),
                          outcome.val_preds.end());
      pooled_truths.insert(pooled_truths.end(), outcome.val_truths.begin(),
                           outcome.val_truths.end());
    }
    reports.push_back(aggregate_folds(reports, folds));

    const std::string metrics_path = (fs::path(out_dir) / (target + "_metrics.csv")).string();
    save_metrics_csv(reports, metrics_path, config_text);
    result.metric_paths.push_back(metrics_path);
    save_bland_altman_csv(bland_altman(pooled_preds, pooled_truths, pooled_ids),
                          (fs::path(out_dir) / (target + "_bland_altman.csv")).string(),
                          config_text);
  }
  return result;
}

Predictor::Predictor(const std::string& checkpoint_path) {
  Estimator::Loaded loaded = Estimator::load_checkpoint(checkpoint_path);
  model_ = std::move(loaded.model);
  run_config_ = std::move(loaded.run_config);
  target_ = model_->config().target;
}

EstimatorOutput Predictor::predict_stm(const StmTensor& normalized_stm) {
  SliceBatch slices = make_slices(normalized_stm, model_->config().clip_length);
  return model_->forward(slices);
}

EstimatorOutput Predictor::predict_file(const std::string& stm_path) {
  return predict_stm(normalized_from_file(stm_path));
}

EstimatorOutput Predictor::predict_raw(const std::string& frames_path,
                                       const std::string& landmarks_path) {
  const FrameSequence frames = load_frames(frames_path, run_config_.get_double("fps"));
  const LandmarkTrack landmarks = load_landmarks(landmarks_path, frames.length());
  const IstmTensor istm = compute_istm(frames, define_rois(landmarks));
  return predict_stm(normalize(rgb_to_yuv(istm)));
}

std::vector<MetricReport> run_evaluate(const RunConfig& cfg, const std::string& manifest_path,
                                       const std::vector<std::string>& checkpoint_paths,
                                       const std::string& out_dir) {
  if (checkpoint_paths.empty()) throw ConfigError("evaluate: no checkpoints given");
  const LoadedDataset ds = load_dataset(manifest_path, cfg);
  fs::create_directories(out_dir);
  const std::string config_text = cfg.serialize();

  std::vector<MetricReport> all_reports;
  for (const std::string& ckpt : checkpoint_paths) {
    Predictor predictor(ckpt);
    const std::string& target = predictor.target();
    std::vector<std::string> ids;
    std::vector<double> preds, truths;
    for (const DatasetSample& sample : ds.samples) {
      const EstimatorOutput out = predictor.predict_stm(sample.stm);
      ids.push_back(sample.sample_id);
      preds.push_back(out.fused);
      truths.push_back(label_value(sample.label, target));
    }
    MetricReport report = compute_metrics(preds, truths, target, "all");
    save_metrics_csv({report}, (fs::path(out_dir) / (target + "_metrics.csv")).string(),
                     config_text);
    if (preds.size() >= 2) {
      save_bland_altman_csv(bland_altman(preds, truths, ids),
                            (fs::path(out_dir) / (target + "_bland_altman.csv")).string(),
                            config_text);
    }
    all_reports.push_back(std::move(report));
  }
  return all_reports;
}

}  // namespace vbp
