#pragma once

#include <string>
#include <vector>

namespace vbp {

// Metrics over signed errors e = pred - truth. sd is the population (1/N)
// standard deviation of e, matching the limits-of-agreement convention.
struct MetricReport {
  std::string target;  // "sbp" | "dbp"
  std::string fold;    // "0".."k-1" or "aggregate"
  int n = 0;
  double sd = 0.0;    // mmHg
  double rmse = 0.0;  // mmHg
  double mae = 0.0;   // mmHg
  std::vector<double> errors;  // per-sample signed errors, kept for pooling
};

struct BlandAltmanSummary {
  double bias = 0.0;
  double loa_lower = 0.0;  // bias - 1.96 * sd(diff)
  double loa_upper = 0.0;  // bias + 1.96 * sd(diff)
};

struct BlandAltmanRecord {
  std::string sample_id;
  double mean = 0.0;  // (pred + truth) / 2
  double diff = 0.0;  // pred - truth
};

struct BlandAltmanData {
  std::vector<BlandAltmanRecord> records;
  BlandAltmanSummary summary;
};

MetricReport compute_metrics(const std::vector<double>& preds, const std::vector<double>& truths,
                             const std::string& target = {}, const std::string& fold = {});

BlandAltmanData bland_altman(const std::vector<double>& preds, const std::vector<double>& truths,
                             const std::vector<std::string>& sample_ids = {});

// Pools per-sample errors across folds (not an average of fold metrics).
MetricReport aggregate_folds(const std::vector<MetricReport>& reports, int expected_folds = 5);

// CSV export: `target,fold,n,sd,rmse,mae`, preceded by '#' header comments.
void save_metrics_csv(const std::vector<MetricReport>& reports, const std::string& path,
                      const std::string& config_text);
// CSV export: `sample_id,mean,diff` rows plus '#' summary footer rows.
void save_bland_altman_csv(const BlandAltmanData& data, const std::string& path,
                           const std::string& config_text);

}  // namespace vbp
