#include "core/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "core/errors.hpp"
#include "core/text.hpp"

namespace vbp {

ModelConfig ModelConfig::from(const RunConfig& cfg, const std::string& target) {
  ModelConfig m;
  m.stage_blocks = cfg.get_int_list("model.stage_blocks");
  m.stage_channels = cfg.get_int_list("model.stage_channels");
  m.hidden = static_cast<int>(cfg.get_int("model.hidden"));
  m.bidirectional = cfg.get_bool("model.bidirectional");
  m.clip_length = static_cast<int>(cfg.get_int("model.clip_length"));
  m.clips = static_cast<int>(cfg.get_int("model.clips"));
  m.alpha = cfg.get_double("model.alpha");
  m.beta = cfg.get_double("model.beta");
  m.target = target;
  const auto refs = cfg.get_list(msg("model.class_refs.", target));
  if (refs.size() != kNumGroups) {
    throw ConfigError(msg("model.class_refs.", target, " must have ", kNumGroups, " values"));
  }
  std::copy(refs.begin(), refs.end(), m.class_refs.begin());
  m.validate();
  return m;
}

void ModelConfig::validate() const {
  if (target != "sbp" && target != "dbp") {
    throw ConfigError(msg("model target must be sbp or dbp, got '", target, "'"));
  }
  if (stage_blocks.empty() || stage_blocks.size() != stage_channels.size()) {
    throw ConfigError("model.stage_blocks and model.stage_channels must be equal-length, non-empty");
  }
  for (int v : stage_blocks) {
    if (v < 1) throw ConfigError("model.stage_blocks entries must be >= 1");
  }
  for (int v : stage_channels) {
    if (v < 1) throw ConfigError("model.stage_channels entries must be >= 1");
  }
  if (hidden < 1) throw ConfigError("model.hidden must be >= 1");
  if (clip_length < 1) throw ConfigError("model.clip_length must be >= 1");
  if (clips < 1) throw ConfigError("model.clips must be >= 1");
  // every stage after the first halves the temporal length
  int len = clip_length;
  for (std::size_t s = 1; s < stage_channels.size(); ++s) {
    len /= 2;
    if (len < 1) throw ConfigError("model has more stages than clip_length supports");
  }
  if (alpha < 0.0 || beta < 0.0 || std::abs(alpha + beta - 1.0) > 1e-9) {
    throw ConfigError("model.alpha and model.beta must be nonnegative and sum to 1");
  }
  for (int i = 1; i < kNumGroups; ++i) {
    if (!(class_refs[i] > class_refs[i - 1])) {
      throw ConfigError("model.class_refs must be strictly increasing");
    }
  }
}

double fuse(const std::array<double, kNumGroups>& class_probs, double reg_value,
            const ModelConfig& cfg) {
  int g = 0;
  for (int i = 1; i < kNumGroups; ++i) {
    if (class_probs[i] > class_probs[g]) g = i;
  }
  return cfg.alpha * cfg.class_refs[g] + cfg.beta * reg_value;
}

LossTerms loss_terms(const std::array<double, kNumGroups>& class_logits, double reg_value,
                     double truth_value, int truth_group) {
  if (truth_group < 0 || truth_group >= kNumGroups) {
    throw DataError(msg("truth group ", truth_group, " out of range"));
  }
  std::array<double, kNumGroups> probs;
  nn::softmax(class_logits.data(), kNumGroups, probs.data());
  LossTerms terms;
  terms.cross_entropy = -std::log(std::max(probs[truth_group], 1e-300));
  terms.mae = std::abs(reg_value - truth_value);
  return terms;
}

Estimator::Estimator(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      stem_("stem", kFrameVectorSize, cfg.stage_channels.at(0)),
      lstm_fwd_("lstm_fwd", cfg.stage_channels.back(), cfg.hidden),
      lstm_bwd_("lstm_bwd", cfg.stage_channels.back(), cfg.hidden),
      cla_("cla", cfg.feature_dim(), kNumGroups),
      reg_("reg", cfg.feature_dim() + kNumGroups, 1) {
  cfg_.validate();
  for (std::size_t s = 0; s < cfg_.stage_channels.size(); ++s) {
    StageLayers stage;
    if (s > 0) {
      stage.transition = std::make_unique<nn::Conv1d>(msg("stage", s, ".transition"),
                                                      cfg_.stage_channels[s - 1],
                                                      cfg_.stage_channels[s]);
    }
    for (int bidx = 0; bidx < cfg_.stage_blocks[s]; ++bidx) {
      stage.blocks.push_back(
          BlockLayers{nn::Conv1d(msg("stage", s, ".block", bidx, ".conv1"),
                                 cfg_.stage_channels[s], cfg_.stage_channels[s]),
                      nn::Conv1d(msg("stage", s, ".block", bidx, ".conv2"),
                                 cfg_.stage_channels[s], cfg_.stage_channels[s])});
    }
    stages_.push_back(std::move(stage));
  }

  Rng rng(seed);
  stem_.init(rng);
  for (auto& stage : stages_) {
    if (stage.transition) stage.transition->init(rng);
    for (auto& block : stage.blocks) {
      block.conv1.init(rng);
      block.conv2.init(rng);
    }
  }
  lstm_fwd_.init(rng);
  if (cfg_.bidirectional) lstm_bwd_.init(rng);
  cla_.init(rng);
  reg_.init(rng);
  // Start the value head at the center of the reference scale so early
  // training is not dominated by a huge constant offset.
  reg_.b[0] = std::accumulate(cfg_.class_refs.begin(), cfg_.class_refs.end(), 0.0) / kNumGroups;

  auto views = params();
  velocity_.resize(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    velocity_[i].assign(views[i].value->size(), 0.0);
  }
}

std::vector<nn::ParamView> Estimator::params() {
  std::vector<nn::ParamView> out;
  stem_.collect(out);
  for (auto& stage : stages_) {
    if (stage.transition) stage.transition->collect(out);
    for (auto& block : stage.blocks) {
      block.conv1.collect(out);
      block.conv2.collect(out);
    }
  }
  lstm_fwd_.collect(out);
  if (cfg_.bidirectional) lstm_bwd_.collect(out);
  cla_.collect(out);
  reg_.collect(out);
  return out;
}

void Estimator::zero_grads() {
  for (auto& view : params()) std::fill(view.grad->begin(), view.grad->end(), 0.0);
}

void Estimator::backbone_forward(const std::vector<FrameVector>& clip, ClipCache& cache,
                                 double* embedding) const {
  const int L = cfg_.clip_length;
  cache.input.assign(static_cast<std::size_t>(kFrameVectorSize) * L, 0.0);
  for (int t = 0; t < L; ++t) {
    for (int c = 0; c < kFrameVectorSize; ++c) {
      cache.input[static_cast<std::size_t>(c) * L + t] = clip[t][c];
    }
  }

  const int c0 = cfg_.stage_channels[0];
  cache.stem_z.assign(static_cast<std::size_t>(c0) * L, 0.0);
  stem_.forward(cache.input.data(), L, cache.stem_z.data());
  cache.stem_out.resize(cache.stem_z.size());
  nn::relu_forward(cache.stem_z.data(), static_cast<int>(cache.stem_z.size()),
                   cache.stem_out.data());

  const std::vector<double>* cur = &cache.stem_out;
  int cur_len = L;
  cache.stages.assign(stages_.size(), {});
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    StageCache& sc = cache.stages[s];
    sc.len_in = cur_len;
    const int ch = cfg_.stage_channels[s];
    if (s > 0) {
      const int prev_ch = cfg_.stage_channels[s - 1];
      const int pooled_len = nn::pool2_out_len(cur_len);
      sc.pooled.assign(static_cast<std::size_t>(prev_ch) * pooled_len, 0.0);
      nn::pool2_forward(cur->data(), prev_ch, cur_len, sc.pooled.data());
      sc.trans_z.assign(static_cast<std::size_t>(ch) * pooled_len, 0.0);
      stages_[s].transition->forward(sc.pooled.data(), pooled_len, sc.trans_z.data());
      sc.trans_out.resize(sc.trans_z.size());
      nn::relu_forward(sc.trans_z.data(), static_cast<int>(sc.trans_z.size()),
                       sc.trans_out.data());
      cur = &sc.trans_out;
      cur_len = pooled_len;
    }
    sc.len_out = cur_len;
    sc.blocks.assign(stages_[s].blocks.size(), {});
    for (std::size_t bi = 0; bi < stages_[s].blocks.size(); ++bi) {
      BlockCache& bc = sc.blocks[bi];
      const std::size_t n = static_cast<std::size_t>(ch) * cur_len;
      bc.in = *cur;
      bc.z1.assign(n, 0.0);
      stages_[s].blocks[bi].conv1.forward(bc.in.data(), cur_len, bc.z1.data());
      bc.r1.resize(n);
      nn::relu_forward(bc.z1.data(), static_cast<int>(n), bc.r1.data());
      bc.z2.assign(n, 0.0);
      stages_[s].blocks[bi].conv2.forward(bc.r1.data(), cur_len, bc.z2.data());
      bc.sum.resize(n);
      for (std::size_t i = 0; i < n; ++i) bc.sum[i] = bc.z2[i] + bc.in[i];
      bc.out.resize(n);
      nn::relu_forward(bc.sum.data(), static_cast<int>(n), bc.out.data());
      cur = &bc.out;
    }
  }
  cache.final_len = cur_len;
  nn::gap_forward(cur->data(), cfg_.stage_channels.back(), cur_len, embedding);
}

void Estimator::backbone_backward(const ClipCache& cache, const double* dembedding) {
  const int last_ch = cfg_.stage_channels.back();
  std::vector<double> d_cur(static_cast<std::size_t>(last_ch) * cache.final_len);
  nn::gap_backward(dembedding, last_ch, cache.final_len, d_cur.data());

  for (std::size_t s = stages_.size(); s-- > 0;) {
    const StageCache& sc = cache.stages[s];
    const int ch = cfg_.stage_channels[s];
    for (std::size_t bi = stages_[s].blocks.size(); bi-- > 0;) {
      const BlockCache& bc = sc.blocks[bi];
      const std::size_t n = bc.out.size();
      std::vector<double> d_sum(n);
      nn::relu_backward(bc.out.data(), d_cur.data(), static_cast<int>(n), d_sum.data());
      std::vector<double> d_r1(n);
      stages_[s].blocks[bi].conv2.backward(bc.r1.data(), d_sum.data(), sc.len_out, d_r1.data());
      std::vector<double> d_z1(n);
      nn::relu_backward(bc.r1.data(), d_r1.data(), static_cast<int>(n), d_z1.data());
      std::vector<double> d_in(n);
      stages_[s].blocks[bi].conv1.backward(bc.in.data(), d_z1.data(), sc.len_out, d_in.data());
      for (std::size_t i = 0; i < n; ++i) d_in[i] += d_sum[i];  // skip connection
      d_cur = std::move(d_in);
    }
    if (s > 0) {
      const int prev_ch = cfg_.stage_channels[s - 1];
      const int pooled_len = sc.len_out;
      std::vector<double> d_trans_z(static_cast<std::size_t>(ch) * pooled_len);
      nn::relu_backward(sc.trans_out.data(), d_cur.data(),
                        static_cast<int>(d_trans_z.size()), d_trans_z.data());
      std::vector<double> d_pooled(static_cast<std::size_t>(prev_ch) * pooled_len);
      stages_[s].transition->backward(sc.pooled.data(), d_trans_z.data(), pooled_len,
                                      d_pooled.data());
      std::vector<double> d_prev(static_cast<std::size_t>(prev_ch) * sc.len_in);
      nn::pool2_backward(d_pooled.data(), prev_ch, sc.len_in, d_prev.data());
      d_cur = std::move(d_prev);
    }
  }

  const std::size_t stem_n = cache.stem_out.size();
  std::vector<double> d_stem_z(stem_n);
  nn::relu_backward(cache.stem_out.data(), d_cur.data(), static_cast<int>(stem_n),
                    d_stem_z.data());
  stem_.backward(cache.input.data(), d_stem_z.data(), cfg_.clip_length, nullptr);
}

EstimatorOutput Estimator::forward(const SliceBatch& slices) {
  const int clip_count = cfg_.clips;
  if (slices.clip_length != cfg_.clip_length) {
    throw DataError(msg("slice clip length ", slices.clip_length, " != model clip length ",
                        cfg_.clip_length));
  }
  if (slices.clip_count() < clip_count) {
    throw DataError(msg("sample has ", slices.clip_count(), " clips, model needs ", clip_count));
  }
  const int emb = cfg_.embedding_dim();

  clip_caches_.assign(clip_count, {});
  embeddings_.assign(static_cast<std::size_t>(clip_count) * emb, 0.0);
  for (int m = 0; m < clip_count; ++m) {
    backbone_forward(slices.clips[m], clip_caches_[m],
                     embeddings_.data() + static_cast<std::size_t>(m) * emb);
  }

  const int hidden = cfg_.hidden;
  const int hidden_out = cfg_.hidden_out();
  lstm_fwd_.forward(embeddings_.data(), clip_count, lstm_fwd_cache_);
  features_.assign(cfg_.feature_dim(), 0.0);
  if (cfg_.bidirectional) {
    std::vector<double> reversed(embeddings_.size());
    for (int m = 0; m < clip_count; ++m) {
      std::copy_n(embeddings_.data() + static_cast<std::size_t>(clip_count - 1 - m) * emb, emb,
                  reversed.data() + static_cast<std::size_t>(m) * emb);
    }
    lstm_bwd_.forward(reversed.data(), clip_count, lstm_bwd_cache_);
    for (int m = 0; m < clip_count; ++m) {
      std::copy_n(lstm_fwd_cache_.h.data() + static_cast<std::size_t>(m) * hidden, hidden,
                  features_.data() + static_cast<std::size_t>(m) * hidden_out);
      std::copy_n(
          lstm_bwd_cache_.h.data() + static_cast<std::size_t>(clip_count - 1 - m) * hidden,
          hidden, features_.data() + static_cast<std::size_t>(m) * hidden_out + hidden);
    }
  } else {
    std::copy(lstm_fwd_cache_.h.begin(), lstm_fwd_cache_.h.end(), features_.begin());
  }

  cla_.forward(features_.data(), logits_.data());
  reg_input_.assign(cfg_.feature_dim() + kNumGroups, 0.0);
  std::copy(features_.begin(), features_.end(), reg_input_.begin());
  std::copy(logits_.begin(), logits_.end(), reg_input_.begin() + cfg_.feature_dim());
  double reg_value = 0.0;
  reg_.forward(reg_input_.data(), &reg_value);

  EstimatorOutput out;
  out.class_logits = logits_;
  nn::softmax(logits_.data(), kNumGroups, out.class_probs.data());
  out.reg_value = reg_value;
  out.fused = fuse(out.class_probs, reg_value, cfg_);
  out.group = 0;
  for (int i = 1; i < kNumGroups; ++i) {
    if (out.class_probs[i] > out.class_probs[out.group]) out.group = i;
  }
  return out;
}

void Estimator::backward(const std::array<double, kNumGroups>& dlogits, double dreg) {
  const int feature_dim = cfg_.feature_dim();
  std::vector<double> d_reg_input(feature_dim + kNumGroups);
  reg_.backward(reg_input_.data(), &dreg, d_reg_input.data());

  // The regressor consumes the classifier features, so logits receive gradient
  // from both the loss and the regression path.
  std::array<double, kNumGroups> dlogits_total;
  for (int i = 0; i < kNumGroups; ++i) {
    dlogits_total[i] = dlogits[i] + d_reg_input[feature_dim + i];
  }
  std::vector<double> d_feat_cla(feature_dim);
  cla_.backward(features_.data(), dlogits_total.data(), d_feat_cla.data());

  std::vector<double> d_features(feature_dim);
  for (int i = 0; i < feature_dim; ++i) d_features[i] = d_reg_input[i] + d_feat_cla[i];

  const int clip_count = cfg_.clips;
  const int hidden = cfg_.hidden;
  const int hidden_out = cfg_.hidden_out();
  const int emb = cfg_.embedding_dim();
  std::vector<double> d_embeddings(static_cast<std::size_t>(clip_count) * emb, 0.0);

  if (cfg_.bidirectional) {
    std::vector<double> dh_fwd(static_cast<std::size_t>(clip_count) * hidden);
    std::vector<double> dh_bwd(static_cast<std::size_t>(clip_count) * hidden);
    for (int m = 0; m < clip_count; ++m) {
      for (int j = 0; j < hidden; ++j) {
        dh_fwd[static_cast<std::size_t>(m) * hidden + j] =
            d_features[static_cast<std::size_t>(m) * hidden_out + j];
        dh_bwd[static_cast<std::size_t>(clip_count - 1 - m) * hidden + j] =
            d_features[static_cast<std::size_t>(m) * hidden_out + hidden + j];
      }
    }
    std::vector<double> dx_fwd(d_embeddings.size());
    std::vector<double> dx_bwd(d_embeddings.size());
    lstm_fwd_.backward(lstm_fwd_cache_, dh_fwd.data(), dx_fwd.data());
    lstm_bwd_.backward(lstm_bwd_cache_, dh_bwd.data(), dx_bwd.data());
    for (int m = 0; m < clip_count; ++m) {
      for (int e = 0; e < emb; ++e) {
        d_embeddings[static_cast<std::size_t>(m) * emb + e] =
            dx_fwd[static_cast<std::size_t>(m) * emb + e] +
            dx_bwd[static_cast<std::size_t>(clip_count - 1 - m) * emb + e];
      }
    }
  } else {
    std::vector<double> dx_fwd(d_embeddings.size());
    lstm_fwd_.backward(lstm_fwd_cache_, d_features.data(), dx_fwd.data());
    d_embeddings = std::move(dx_fwd);
  }

  for (int m = 0; m < clip_count; ++m) {
    backbone_backward(clip_caches_[m], d_embeddings.data() + static_cast<std::size_t>(m) * emb);
  }
}

void Estimator::sgd_step(double lr, double momentum, int batch_size) {
  auto views = params();
  const double scale = 1.0 / std::max(1, batch_size);
  for (std::size_t i = 0; i < views.size(); ++i) {
    auto& value = *views[i].value;
    auto& grad = *views[i].grad;
    auto& vel = velocity_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      vel[j] = momentum * vel[j] + grad[j] * scale;
      value[j] -= lr * vel[j];
    }
  }
}

namespace {

constexpr char kCheckpointMagic[] = "VBPCKPT1";

std::uint64_t hash_bytes(const std::vector<unsigned char>& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_header_line(std::istream& in, const std::string& path) {
  const auto offset = in.tellg();
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(msg("checkpoint truncated at offset ", static_cast<long long>(offset), ": ",
                        path));
  }
  return line;
}

}  // namespace

void Estimator::save_checkpoint(const std::string& path, const RunConfig& run_config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(msg("cannot write checkpoint: ", path));

  const std::string config_text = run_config.serialize();
  auto views = params();

  std::vector<unsigned char> blob;
  for (const auto& view : views) {
    for (double v : *view.value) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      blob.push_back(static_cast<unsigned char>(bits & 0xFF));
      blob.push_back(static_cast<unsigned char>((bits >> 8) & 0xFF));
      blob.push_back(static_cast<unsigned char>((bits >> 16) & 0xFF));
      blob.push_back(static_cast<unsigned char>((bits >> 24) & 0xFF));
    }
  }

  out << kCheckpointMagic << '\n';
  out << "target " << cfg_.target << '\n';
  out << "config " << config_text.size() << '\n' << config_text;
  out << "tensors " << views.size() << '\n';
  for (const auto& view : views) {
    out << view.name << ' ' << view.shape.size();
    for (int d : view.shape) out << ' ' << d;
    out << '\n';
  }
  out << "blob " << blob.size() << ' ' << hex64(hash_bytes(blob)) << '\n';
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!out) throw DataError(msg("failed writing checkpoint: ", path));
}

Estimator::Loaded Estimator::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(msg("cannot open checkpoint: ", path));

  std::string line = read_header_line(in, path);
  if (line != kCheckpointMagic) {
    throw DataError(msg("checkpoint integrity error at offset 0: bad magic in ", path));
  }

  line = read_header_line(in, path);
  if (line.rfind("target ", 0) != 0) {
    throw DataError(msg("checkpoint integrity error: missing target line in ", path));
  }
  const std::string target = line.substr(7);

  line = read_header_line(in, path);
  if (line.rfind("config ", 0) != 0) {
    throw DataError(msg("checkpoint integrity error: missing config line in ", path));
  }
  const auto config_len = parse_int(std::string_view(line).substr(7));
  if (!config_len || *config_len < 0) {
    throw DataError(msg("checkpoint integrity error: bad config length in ", path));
  }
  std::string config_text(static_cast<std::size_t>(*config_len), '\0');
  const auto config_offset = in.tellg();
  in.read(config_text.data(), *config_len);
  if (!in) {
    throw DataError(msg("checkpoint truncated at offset ",
                        static_cast<long long>(config_offset), ": ", path));
  }

  RunConfig run_config = RunConfig::from_string(config_text);
  ModelConfig model_config = ModelConfig::from(run_config, target);
  auto model = std::make_unique<Estimator>(model_config, 0);
  auto views = model->params();

  line = read_header_line(in, path);
  auto tensor_count = parse_int(std::string_view(line).rfind("tensors ", 0) == 0
                                    ? std::string_view(line).substr(8)
                                    : std::string_view());
  if (!tensor_count || static_cast<std::size_t>(*tensor_count) != views.size()) {
    throw DataError(msg("checkpoint tensor manifest mismatch: expected ", views.size(),
                        " tensors in ", path));
  }
  for (const auto& view : views) {
    line = read_header_line(in, path);
    std::string expected = view.name + ' ' + format_u64(view.shape.size());
    for (int d : view.shape) expected += ' ' + format_u64(static_cast<std::uint64_t>(d));
    if (line != expected) {
      throw DataError(msg("checkpoint tensor manifest mismatch: got '", line, "', expected '",
                          expected, "' in ", path));
    }
  }

  line = read_header_line(in, path);
  if (line.rfind("blob ", 0) != 0) {
    throw DataError(msg("checkpoint integrity error: missing blob line in ", path));
  }
  auto rest = split(std::string_view(line).substr(5), ' ');
  if (rest.size() != 2) {
    throw DataError(msg("checkpoint integrity error: malformed blob line in ", path));
  }
  const auto blob_len = parse_int(rest[0]);
  const std::string stored_hash(rest[1]);
  std::size_t expected_len = 0;
  for (const auto& view : views) expected_len += view.value->size() * 4;
  if (!blob_len || static_cast<std::size_t>(*blob_len) != expected_len) {
    throw DataError(msg("checkpoint blob length mismatch: expected ", expected_len, " bytes in ",
                        path));
  }

  const auto blob_offset = in.tellg();
  std::vector<unsigned char> blob(expected_len);
  in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(expected_len));
  if (!in) {
    throw DataError(msg("checkpoint blob truncated at offset ",
                        static_cast<long long>(blob_offset), ": ", path));
  }
  if (hex64(hash_bytes(blob)) != stored_hash) {
    throw DataError(msg("checkpoint integrity error: blob hash mismatch at offset ",
                        static_cast<long long>(blob_offset), ": ", path));
  }

  std::size_t pos = 0;
  for (auto& view : views) {
    for (double& v : *view.value) {
      std::uint32_t bits = static_cast<std::uint32_t>(blob[pos]) |
                           (static_cast<std::uint32_t>(blob[pos + 1]) << 8) |
                           (static_cast<std::uint32_t>(blob[pos + 2]) << 16) |
                           (static_cast<std::uint32_t>(blob[pos + 3]) << 24);
      float f;
      std::memcpy(&f, &bits, 4);
      v = f;
      pos += 4;
    }
  }
  return Loaded{std::move(model), std::move(run_config)};
}

double train_step(Estimator& model, const std::vector<const TrainSample*>& batch, double lr,
                  double momentum) {
  if (batch.empty()) throw DataError("train_step: empty batch");
  model.zero_grads();
  double total_loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const TrainSample* sample : batch) {
    EstimatorOutput out = model.forward(sample->slices);
    LossTerms terms =
        loss_terms(out.class_logits, out.reg_value, sample->truth_value, sample->truth_group);
    const double loss = terms.total();
    if (!std::isfinite(loss)) {
      throw NumericError(msg("non-finite loss on sample '", sample->sample_id,
                             "': ce=", terms.cross_entropy, " mae=", terms.mae));
    }
    total_loss += loss;

    std::array<double, kNumGroups> dlogits;
    nn::softmax(out.class_logits.data(), kNumGroups, dlogits.data());
    dlogits[sample->truth_group] -= 1.0;
    double dreg = 0.0;
    if (out.reg_value > sample->truth_value) {
      dreg = 1.0;
    } else if (out.reg_value < sample->truth_value) {
      dreg = -1.0;
    }
    model.backward(dlogits, dreg);
  }
  model.sgd_step(lr, momentum, static_cast<int>(batch.size()));
  return total_loss * scale;
}

}  // namespace vbp
