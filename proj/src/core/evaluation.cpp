#include "core/evaluation.hpp"

#include <cmath>
#include <fstream>

#include "core/errors.hpp"
#include "core/text.hpp"

namespace vbp {

namespace {

struct ErrorStats {
  double mean = 0.0;
  double mean_abs = 0.0;
  double mean_sq = 0.0;
};

ErrorStats accumulate(const std::vector<double>& errors) {
  ErrorStats s;
  for (double e : errors) {
    s.mean += e;
    s.mean_abs += std::abs(e);
    s.mean_sq += e * e;
  }
  const double n = static_cast<double>(errors.size());
  s.mean /= n;
  s.mean_abs /= n;
  s.mean_sq /= n;
  return s;
}

}  // namespace

MetricReport compute_metrics(const std::vector<double>& preds, const std::vector<double>& truths,
                             const std::string& target, const std::string& fold) {
  if (preds.empty()) throw DataError("compute_metrics: empty input");
  if (preds.size() != truths.size()) {
    throw DataError(msg("compute_metrics: length mismatch: ", preds.size(), " predictions vs ",
                        truths.size(), " truths"));
  }
  MetricReport report;
  report.target = target;
  report.fold = fold;
  report.n = static_cast<int>(preds.size());
  report.errors.resize(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) report.errors[i] = preds[i] - truths[i];

  const ErrorStats s = accumulate(report.errors);
  report.mae = s.mean_abs;
  report.rmse = std::sqrt(s.mean_sq);
  const double var = s.mean_sq - s.mean * s.mean;
  report.sd = std::sqrt(std::max(0.0, var));
  return report;
}

BlandAltmanData bland_altman(const std::vector<double>& preds, const std::vector<double>& truths,
                             const std::vector<std::string>& sample_ids) {
  if (preds.size() != truths.size()) {
    throw DataError(msg("bland_altman: length mismatch: ", preds.size(), " predictions vs ",
                        truths.size(), " truths"));
  }
  if (preds.size() < 2) {
    throw DataError("bland_altman: need at least 2 pairs for limits of agreement");
  }
  BlandAltmanData data;
  data.records.resize(preds.size());
  std::vector<double> diffs(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    diffs[i] = preds[i] - truths[i];
    data.records[i].sample_id = i < sample_ids.size() ? sample_ids[i] : format_u64(i);
    data.records[i].mean = (preds[i] + truths[i]) / 2.0;
    data.records[i].diff = diffs[i];
  }
  const ErrorStats s = accumulate(diffs);
  const double sd = std::sqrt(std::max(0.0, s.mean_sq - s.mean * s.mean));
  data.summary.bias = s.mean;
  data.summary.loa_lower = s.mean - 1.96 * sd;
  data.summary.loa_upper = s.mean + 1.96 * sd;
  return data;
}

MetricReport aggregate_folds(const std::vector<MetricReport>& reports, int expected_folds) {
  if (static_cast<int>(reports.size()) != expected_folds) {
    throw DataError(msg("aggregate_folds: expected ", expected_folds, " fold reports, got ",
                        reports.size()));
  }
  std::vector<double> pooled;
  for (const auto& r : reports) {
    if (r.errors.empty() || static_cast<int>(r.errors.size()) != r.n) {
      throw DataError("aggregate_folds: fold report missing per-sample errors");
    }
    pooled.insert(pooled.end(), r.errors.begin(), r.errors.end());
  }
  // Recomputing from the pooled errors makes the aggregate bit-identical to a
  // whole-set computation over the concatenated folds.
  std::vector<double> zeros(pooled.size(), 0.0);
  MetricReport out = compute_metrics(pooled, zeros, reports.front().target, "aggregate");
  return out;
}

void save_metrics_csv(const std::vector<MetricReport>& reports, const std::string& path,
                      const std::string& config_text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(msg("cannot write metrics csv: ", path));
  out << "# sd is the population (1/N) standard deviation of signed error pred-truth\n";
  for (auto line : split(config_text, '\n')) {
    if (!line.empty()) out << "# " << line << '\n';
  }
  out << "target,fold,n,sd,rmse,mae\n";
  for (const auto& r : reports) {
    out << r.target << ',' << r.fold << ',' << r.n << ',' << format_double(r.sd) << ','
        << format_double(r.rmse) << ',' << format_double(r.mae) << '\n';
  }
}

void save_bland_altman_csv(const BlandAltmanData& data, const std::string& path,
                           const std::string& config_text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(msg("cannot write bland-altman csv: ", path));
  for (auto line : split(config_text, '\n')) {
    if (!line.empty()) out << "# " << line << '\n';
  }
  out << "sample_id,mean,diff\n";
  for (const auto& r : data.records) {
    out << r.sample_id << ',' << format_double(r.mean) << ',' << format_double(r.diff) << '\n';
  }
  out << "# bias," << format_double(data.summary.bias) << '\n';
  out << "# loa_lower," << format_double(data.summary.loa_lower) << '\n';
  out << "# loa_upper," << format_double(data.summary.loa_upper) << '\n';
}

}  // namespace vbp
