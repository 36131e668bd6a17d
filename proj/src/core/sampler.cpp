#include "core/sampler.hpp"

#include <algorithm>
#include <fstream>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/types.hpp"

namespace vbp {

GroupBoundaries GroupBoundaries::from(const RunConfig& cfg, const std::string& target) {
  GroupBoundaries gb;
  const auto values = cfg.get_list(msg("groups.", target));
  if (values.size() != kGroupCount - 1) {
    throw ConfigError(msg("groups.", target, " must have ", kGroupCount - 1, " thresholds"));
  }
  std::copy(values.begin(), values.end(), gb.bounds.begin());
  gb.validate();
  return gb;
}

void GroupBoundaries::validate() const {
  for (int i = 1; i < kGroupCount - 1; ++i) {
    if (!(bounds[i] > bounds[i - 1])) {
      throw ConfigError("group boundaries must be strictly ascending");
    }
  }
  if (bounds.front() < kBpLowerBound || bounds.back() > kBpUpperBound) {
    throw ConfigError(msg("group boundaries must lie within ", kBpLowerBound, "-", kBpUpperBound,
                          " mmHg"));
  }
}

int assign_group(double bp_mmhg, const GroupBoundaries& bounds) {
  int g = 0;
  while (g < kGroupCount - 1 && bp_mmhg >= bounds.bounds[g]) ++g;
  return g;
}

std::vector<int> FoldPlan::validation_indices(int fold) const {
  std::vector<int> out;
  for (int g = 0; g < kGroupCount; ++g) {
    for (std::size_t i = 0; i < members[g].size(); ++i) {
      if (small_group[g][i] == fold) out.push_back(members[g][i]);
    }
  }
  return out;
}

std::vector<int> FoldPlan::training_indices(int fold) const {
  std::vector<int> out;
  for (int g = 0; g < kGroupCount; ++g) {
    for (std::size_t i = 0; i < members[g].size(); ++i) {
      if (small_group[g][i] != fold) out.push_back(members[g][i]);
    }
  }
  return out;
}

std::array<std::vector<int>, kGroupCount> FoldPlan::training_groups(int fold) const {
  std::array<std::vector<int>, kGroupCount> out;
  for (int g = 0; g < kGroupCount; ++g) {
    for (std::size_t i = 0; i < members[g].size(); ++i) {
      if (small_group[g][i] != fold) out[g].push_back(members[g][i]);
    }
  }
  return out;
}

FoldPlan make_folds(const std::vector<int>& group_of_sample, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be >= 2");
  FoldPlan plan;
  plan.folds = k;
  for (std::size_t i = 0; i < group_of_sample.size(); ++i) {
    const int g = group_of_sample[i];
    if (g < 0 || g >= kGroupCount) throw DataError(msg("sample ", i, " has invalid group ", g));
    plan.members[g].push_back(static_cast<int>(i));
  }
  for (int g = 0; g < kGroupCount; ++g) {
    if (static_cast<int>(plan.members[g].size()) < k) {
      throw DataError(msg("group G", g + 1, " has ", plan.members[g].size(),
                          " samples, fewer than k=", k));
    }
    Rng rng(splitmix64(seed ^ (0x5851F42D4C957F2DULL + g)));
    rng.shuffle(plan.members[g]);
    plan.small_group[g].resize(plan.members[g].size());
    for (std::size_t i = 0; i < plan.members[g].size(); ++i) {
      plan.small_group[g][i] = static_cast<int>(i % k);  // round-robin, sizes within 1
    }
  }
  return plan;
}

void save_fold_plan(const FoldPlan& plan, const std::vector<std::string>& sample_ids,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(msg("cannot write fold plan: ", path));
  out << "# sample_id\tgroup\tsmall_group (1-based)\n";
  for (int g = 0; g < kGroupCount; ++g) {
    for (std::size_t i = 0; i < plan.members[g].size(); ++i) {
      out << sample_ids.at(plan.members[g][i]) << '\t' << (g + 1) << '\t'
          << (plan.small_group[g][i] + 1) << '\n';
    }
  }
}

OversampleIterator::OversampleIterator(const std::array<std::vector<int>, kGroupCount>& groups,
                                       int batch_size, std::uint64_t seed)
    : rngs_{Rng(splitmix64(seed ^ 0xA24BAED4963EE407ULL)),
            Rng(splitmix64(seed ^ 0x9FB21C651E98DF25ULL)),
            Rng(splitmix64(seed ^ 0xE220A8397B1DCDAFULL)),
            Rng(splitmix64(seed ^ 0x6E789E6AA1B965F4ULL))},
      batch_size_(batch_size) {
  if (batch_size_ < kGroupCount || batch_size_ % kGroupCount != 0) {
    throw ConfigError(msg("batch size must be a positive multiple of ", kGroupCount, ", got ",
                          batch_size_));
  }
  per_group_ = batch_size_ / kGroupCount;
  std::size_t largest = 0;
  for (int g = 0; g < kGroupCount; ++g) {
    if (groups[g].empty()) throw DataError(msg("group G", g + 1, " is empty"));
    order_[g] = groups[g];
    rngs_[g].shuffle(order_[g]);
    largest = std::max(largest, order_[g].size());
  }
  batches_per_epoch_ =
      static_cast<int>((largest + per_group_ - 1) / static_cast<std::size_t>(per_group_));
}

std::vector<int> OversampleIterator::next() {
  std::vector<int> batch;
  batch.reserve(batch_size_);
  for (int g = 0; g < kGroupCount; ++g) {
    for (int i = 0; i < per_group_; ++i) {
      if (cursor_[g] == order_[g].size()) {
        rngs_[g].shuffle(order_[g]);
        cursor_[g] = 0;
      }
      batch.push_back(order_[g][cursor_[g]++]);
    }
  }
  return batch;
}

}  // namespace vbp
