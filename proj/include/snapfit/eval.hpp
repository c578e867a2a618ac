#pragma once

#include <string>
#include <vector>

#include "snapfit/errors.hpp"
#include "snapfit/oracle.hpp"

namespace snapfit::eval {

struct MetricsRow {
  std::string method;
  std::string scope;  // train, test or all
  std::size_t n_profiles = 0;
  double mae = 0.0;
  double mse = 0.0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
};

double mae(const oracle::ForceProfile& pred, const oracle::ForceProfile& truth);
double mse(const oracle::ForceProfile& pred, const oracle::ForceProfile& truth);

// One prediction set to score against the truth profiles. run_ids in
// scope_test name the held-out runs; everything else counts as train.
struct MethodPredictions {
  std::string method;
  std::vector<oracle::ForceProfile> predictions;
};

// Scores every method against the truth profiles, aligned by run_id,
// aggregating per-profile metrics by unweighted mean. Emits rows per
// (method, scope) for scopes all/train/test (train/test only when
// test_ids is nonempty), sorted by ascending all-scope MAE.
MetricsReport compare(const std::vector<oracle::ForceProfile>& truth,
                      const std::vector<MethodPredictions>& methods,
                      const std::vector<std::string>& test_ids = {});

std::string metrics_to_csv(const MetricsReport& report);

}  // namespace snapfit::eval
