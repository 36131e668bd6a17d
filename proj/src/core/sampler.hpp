#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "core/config.hpp"

namespace vbp {

inline constexpr int kGroupCount = 4;

// Three ascending thresholds defining groups G1..G4 via half-open intervals
// (-inf,b1), [b1,b2), [b2,b3), [b3,inf).
struct GroupBoundaries {
  std::array<double, kGroupCount - 1> bounds{110.0, 120.0, 140.0};

  static GroupBoundaries from(const RunConfig& cfg, const std::string& target);
  void validate() const;
};

// 0-based group index.
int assign_group(double bp_mmhg, const GroupBoundaries& bounds);

// Per big group, a seeded partition into k near-equal small groups; fold c
// takes small group c of every big group as validation.
struct FoldPlan {
  int folds = 0;
  // members[g] lists dataset indices of big group g, in shuffled order;
  // small_group[g][i] in [0,folds) is the small-group index of members[g][i].
  std::array<std::vector<int>, kGroupCount> members;
  std::array<std::vector<int>, kGroupCount> small_group;

  std::vector<int> validation_indices(int fold) const;
  std::vector<int> training_indices(int fold) const;
  // training indices of fold, still grouped by big group (oversampler input)
  std::array<std::vector<int>, kGroupCount> training_groups(int fold) const;
};

FoldPlan make_folds(const std::vector<int>& group_of_sample, int k, std::uint64_t seed);

void save_fold_plan(const FoldPlan& plan, const std::vector<std::string>& sample_ids,
                    const std::string& path);

// The 1:1:1:1 oversampling iterator: sequential per-group cursors, exhausted
// groups wrap to a reshuffled start, one epoch ends when the largest group has
// been consumed once.
class OversampleIterator {
 public:
  OversampleIterator(const std::array<std::vector<int>, kGroupCount>& groups, int batch_size,
                     std::uint64_t seed);

  int batches_per_epoch() const { return batches_per_epoch_; }
  int batch_size() const { return batch_size_; }

  // Next batch: batch_size/4 indices from each group, group-major order.
  std::vector<int> next();

 private:
  std::array<std::vector<int>, kGroupCount> order_;
  std::array<std::size_t, kGroupCount> cursor_{};
  std::array<Rng, kGroupCount> rngs_;
  int batch_size_;
  int per_group_;
  int batches_per_epoch_;
};

}  // namespace vbp
