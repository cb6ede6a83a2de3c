#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evlat/pipeline/model.hpp"

namespace evlat {

struct EvalOptions {
  int bootstrap_resamples = 10000;
  std::uint64_t bootstrap_seed = 1234;
  // Collapse control: report a constant inferred rate instead of the model's,
  // reproducing the constant-rate failure signature.
  bool frozen_constant_rate = false;
  double frozen_rate = 1.0;
};

struct RecordEval {
  std::string band;
  int label = 0;
  int pred = 0;
  double cs = 0.0;
  double inferred_rate = 0.0;
  std::vector<double> pred_times;
  std::vector<double> true_times;
};

struct BandEval {
  std::string band;
  double lo = 0.0, hi = 0.0;
  int n = 0;
  double median_rate = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // bootstrap 95% CI of the median
  double rate_p2_5 = 0.0, rate_p97_5 = 0.0;
  double iou = 0.0;  // percentile rate interval vs the generating band
  double mean_cs = 0.0;
};

struct EvalReport {
  std::vector<RecordEval> records;
  std::vector<BandEval> bands;
  double mean_cs = 0.0;
  double accuracy = 0.0;
  double f1_macro = 0.0;

  std::string to_json() const;
  std::string boundary_csv() const;  // band,record,index,pred_t,true_t
  std::string rates_csv() const;     // band,record,rate
};

/// Deterministic expectation-mode evaluation with percentile-bootstrap CIs.
EvalReport evaluate(const ModelParams& params, const std::vector<ToyRecord>& records,
                    const EvalOptions& options);

/// Interval intersection-over-union; IoU(X, X) = 1, disjoint intervals = 0.
double interval_iou(double a_lo, double a_hi, double b_lo, double b_hi);

}  // namespace evlat
