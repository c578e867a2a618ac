#include "snapfit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace snapfit::eval {

namespace {

void check_lengths(const oracle::ForceProfile& a, const oracle::ForceProfile& b) {
  if (a.size() != b.size()) {
    throw LengthMismatch("metrics: profiles differ in length");
  }
}

MetricsRow aggregate(const std::string& method, const std::string& scope,
                     const std::vector<const oracle::ForceProfile*>& preds,
                     const std::vector<const oracle::ForceProfile*>& truths) {
  MetricsRow row;
  row.method = method;
  row.scope = scope;
  row.n_profiles = preds.size();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    row.mae += mae(*preds[i], *truths[i]);
    row.mse += mse(*preds[i], *truths[i]);
  }
  if (!preds.empty()) {
    row.mae /= static_cast<double>(preds.size());
    row.mse /= static_cast<double>(preds.size());
  }
  return row;
}

}  // namespace

double mae(const oracle::ForceProfile& pred, const oracle::ForceProfile& truth) {
  check_lengths(pred, truth);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    acc += std::abs(pred.force[i] - truth.force[i]);
  }
  return acc / static_cast<double>(pred.size());
}

double mse(const oracle::ForceProfile& pred, const oracle::ForceProfile& truth) {
  check_lengths(pred, truth);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.force[i] - truth.force[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

MetricsReport compare(const std::vector<oracle::ForceProfile>& truth,
                      const std::vector<MethodPredictions>& methods,
                      const std::vector<std::string>& test_ids) {
  std::map<std::string, const oracle::ForceProfile*> truth_by_id;
  for (const oracle::ForceProfile& p : truth) truth_by_id[p.run_id] = &p;
  const std::set<std::string> test_set(test_ids.begin(), test_ids.end());

  MetricsReport report;
  for (const MethodPredictions& method : methods) {
    std::vector<const oracle::ForceProfile*> all_p, all_t, train_p, train_t,
        test_p, test_t;
    for (const oracle::ForceProfile& pred : method.predictions) {
      auto it = truth_by_id.find(pred.run_id);
      if (it == truth_by_id.end()) {
        throw RunIdMismatch("compare: prediction for unknown run " +
                            pred.run_id);
      }
      all_p.push_back(&pred);
      all_t.push_back(it->second);
      if (test_set.count(pred.run_id)) {
        test_p.push_back(&pred);
        test_t.push_back(it->second);
      } else {
        train_p.push_back(&pred);
        train_t.push_back(it->second);
      }
    }
    report.rows.push_back(aggregate(method.method, "all", all_p, all_t));
    if (!test_set.empty()) {
      report.rows.push_back(aggregate(method.method, "train", train_p, train_t));
      report.rows.push_back(aggregate(method.method, "test", test_p, test_t));
    }
  }

  // Methods ordered by their all-scope MAE; scopes keep all/train/test order.
  std::map<std::string, double> all_mae;
  std::map<std::string, int> scope_rank{{"all", 0}, {"train", 1}, {"test", 2}};
  for (const MetricsRow& row : report.rows) {
    if (row.scope == "all") all_mae[row.method] = row.mae;
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [&](const MetricsRow& a, const MetricsRow& b) {
                     if (all_mae[a.method] != all_mae[b.method]) {
                       return all_mae[a.method] < all_mae[b.method];
                     }
                     if (a.method != b.method) return a.method < b.method;
                     return scope_rank[a.scope] < scope_rank[b.scope];
                   });
  return report;
}

std::string metrics_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "method,scope,n_profiles,mae,mse\n";
  for (const MetricsRow& row : report.rows) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g", row.mae, row.mse);
    out << row.method << ',' << row.scope << ',' << row.n_profiles << ','
        << buf << '\n';
  }
  return out.str();
}

}  // namespace snapfit::eval
