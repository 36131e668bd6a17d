#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/nn.hpp"
#include "core/slicer.hpp"

namespace vbp {

inline constexpr int kNumGroups = 4;

struct ModelConfig {
  std::vector<int> stage_blocks;    // residual blocks per stage
  std::vector<int> stage_channels;  // channel width per stage
  int hidden = 16;                  // recurrent hidden size per direction
  bool bidirectional = true;
  int clip_length = 150;  // L
  int clips = 3;          // M, fixed by the head dimensions
  double alpha = 0.5;     // classifier reference weight in the fusion
  double beta = 0.5;      // regressor weight in the fusion
  std::array<double, kNumGroups> class_refs{100.0, 115.0, 130.0, 150.0};  // mmHg
  std::string target = "sbp";

  static ModelConfig from(const RunConfig& cfg, const std::string& target);
  void validate() const;

  int hidden_out() const { return bidirectional ? 2 * hidden : hidden; }
  int feature_dim() const { return clips * hidden_out(); }
  int embedding_dim() const { return stage_channels.back(); }
};

struct EstimatorOutput {
  std::array<double, kNumGroups> class_logits{};
  std::array<double, kNumGroups> class_probs{};
  double reg_value = 0.0;  // mmHg
  double fused = 0.0;      // mmHg
  int group = 0;           // argmax of class_probs
};

struct LossTerms {
  double cross_entropy = 0.0;
  double mae = 0.0;
  double total() const { return cross_entropy + mae; }
};

double fuse(const std::array<double, kNumGroups>& class_probs, double reg_value,
            const ModelConfig& cfg);

LossTerms loss_terms(const std::array<double, kNumGroups>& class_logits, double reg_value,
                     double truth_value, int truth_group);

struct TrainSample {
  SliceBatch slices;
  double truth_value = 0.0;  // mmHg
  int truth_group = 0;       // 0-based interval index
  std::string sample_id;
};

// The trainable model: weight-shared per-clip residual backbone, cross-clip
// (bi)directional recurrence, interval classifier head, value regressor head.
class Estimator {
 public:
  Estimator(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  // Forward pass for one sample; caches activations for a following backward().
  EstimatorOutput forward(const SliceBatch& slices);
  // Pre-recurrent clip embeddings from the last forward (testing hook).
  const std::vector<double>& clip_embeddings() const { return embeddings_; }

  // Backpropagates d(loss)/d(logits) and d(loss)/d(reg) for the sample passed
  // to the preceding forward(). Gradients accumulate until zero_grads().
  void backward(const std::array<double, kNumGroups>& dlogits, double dreg);

  void zero_grads();
  std::vector<nn::ParamView> params();

  // One SGD-with-momentum update from the accumulated gradients, scaled by
  // 1/batch_size.
  void sgd_step(double lr, double momentum, int batch_size);

  // Header (format version, target, canonical run config) plus a hashed
  // little-endian 32-bit float blob with a named tensor manifest. Identical
  // runs produce byte-identical files.
  void save_checkpoint(const std::string& path, const RunConfig& run_config);
  struct Loaded {
    std::unique_ptr<Estimator> model;
    RunConfig run_config;
  };
  static Loaded load_checkpoint(const std::string& path);

 private:
  struct BlockLayers {
    nn::Conv1d conv1;
    nn::Conv1d conv2;
  };
  struct StageLayers {
    std::unique_ptr<nn::Conv1d> transition;  // null for the first stage
    std::vector<BlockLayers> blocks;
  };

  struct BlockCache {
    std::vector<double> in, z1, r1, z2, sum, out;
  };
  struct StageCache {
    std::vector<double> pooled, trans_z, trans_out;
    std::vector<BlockCache> blocks;
    int len_in = 0, len_out = 0;
  };
  struct ClipCache {
    std::vector<double> input;  // [12][L]
    std::vector<double> stem_z, stem_out;
    std::vector<StageCache> stages;
    int final_len = 0;
  };

  void backbone_forward(const std::vector<FrameVector>& clip, ClipCache& cache,
                        double* embedding) const;
  void backbone_backward(const ClipCache& cache, const double* dembedding);

  ModelConfig cfg_;
  nn::Conv1d stem_;
  std::vector<StageLayers> stages_;
  nn::Lstm lstm_fwd_;
  nn::Lstm lstm_bwd_;
  nn::Linear cla_;
  nn::Linear reg_;

  // per-forward caches
  std::vector<ClipCache> clip_caches_;
  std::vector<double> embeddings_;      // M x embedding_dim
  nn::Lstm::Cache lstm_fwd_cache_;
  nn::Lstm::Cache lstm_bwd_cache_;
  std::vector<double> features_;        // F, length feature_dim()
  std::vector<double> reg_input_;       // [F, logits]
  std::array<double, kNumGroups> logits_{};

  // optimizer state
  std::vector<std::vector<double>> velocity_;
};

// One optimizer update over a batch; returns the mean loss. Aborts with
// NumericError when the loss turns non-finite.
double train_step(Estimator& model, const std::vector<const TrainSample*>& batch, double lr,
                  double momentum);

}  // namespace vbp
