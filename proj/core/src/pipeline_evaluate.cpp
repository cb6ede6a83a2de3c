#include "evlat/pipeline/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "evlat/util.hpp"

namespace evlat {

double interval_iou(double a_lo, double a_hi, double b_lo, double b_hi) {
  double inter = std::min(a_hi, b_hi) - std::max(a_lo, b_lo);
  if (inter < 0.0) inter = 0.0;
  double uni = (a_hi - a_lo) + (b_hi - b_lo) - inter;
  if (uni <= 0.0) return std::max(a_lo, b_lo) <= std::min(a_hi, b_hi) ? 1.0 : 0.0;
  return inter / uni;
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  double x = p / 100.0 * static_cast<double>(v.size() - 1);
  size_t i = static_cast<size_t>(x);
  if (i + 1 >= v.size()) return v.back();
  double w = x - static_cast<double>(i);
  return v[i] + w * (v[i + 1] - v[i]);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

EvalReport evaluate(const ModelParams& params, const std::vector<ToyRecord>& records,
                    const EvalOptions& options) {
  if (records.empty()) throw Error(ErrorKind::EmptyBand, "no records to evaluate");

  EvalReport report;
  Tape tape;
  ObjectiveWeights weights;
  double cs_sum = 0.0;
  int correct = 0;
  std::vector<std::vector<int>> confusion(3, std::vector<int>(3, 0));

  for (const ToyRecord& rec : records) {
    tape.reset();
    BoundVars bound = bind_model(tape, params);
    ForwardOptions fopt;
    fopt.mode = UnrollMode::Expectation;
    fopt.want_loss = false;
    Rng rng(0);
    RecordForward fwd = forward_record(tape, bound, params, rec, weights, fopt, rng);

    RecordEval ev;
    ev.band = rec.band;
    ev.label = band_index(rec.band);
    ev.pred = static_cast<int>(std::max_element(fwd.logits.begin(), fwd.logits.end()) -
                               fwd.logits.begin());
    ev.cs = cosine(fwd.y_hat, rec.obs);
    ev.inferred_rate = options.frozen_constant_rate ? options.frozen_rate : fwd.inferred_rate;
    ev.pred_times = fwd.event_times;
    ev.true_times = rec.times;
    cs_sum += ev.cs;
    if (ev.pred == ev.label) ++correct;
    confusion[ev.label][ev.pred] += 1;
    report.records.push_back(std::move(ev));
  }
  report.mean_cs = cs_sum / static_cast<double>(records.size());
  report.accuracy = static_cast<double>(correct) / static_cast<double>(records.size());

  double f1_sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    int tp = confusion[c][c];
    int fp = 0, fn = 0;
    for (int o = 0; o < 3; ++o) {
      if (o == c) continue;
      fp += confusion[o][c];
      fn += confusion[c][o];
    }
    double denom = 2.0 * tp + fp + fn;
    f1_sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  report.f1_macro = f1_sum / 3.0;

  for (const BandSpec& band : BandSpec::all()) {
    std::vector<double> rates;
    double band_cs = 0.0;
    for (const RecordEval& ev : report.records)
      if (ev.band == band.name) {
        rates.push_back(ev.inferred_rate);
        band_cs += ev.cs;
      }
    if (rates.empty())
      throw Error(ErrorKind::EmptyBand, "band '" + band.name + "' has no records");

    BandEval be;
    be.band = band.name;
    be.lo = band.lo;
    be.hi = band.hi;
    be.n = static_cast<int>(rates.size());
    be.median_rate = median_of(rates);
    be.mean_cs = band_cs / static_cast<double>(rates.size());

    // Percentile bootstrap of the median.
    Rng brng = Rng(options.bootstrap_seed).split(fnv1a64(band.name));
    std::vector<double> medians;
    medians.reserve(options.bootstrap_resamples);
    std::vector<double> resample(rates.size());
    for (int b = 0; b < options.bootstrap_resamples; ++b) {
      for (size_t i = 0; i < rates.size(); ++i)
        resample[i] = rates[brng.below(rates.size())];
      medians.push_back(median_of(resample));
    }
    be.ci_lo = percentile(medians, 2.5);
    be.ci_hi = percentile(medians, 97.5);

    be.rate_p2_5 = percentile(rates, 2.5);
    be.rate_p97_5 = percentile(rates, 97.5);
    be.iou = interval_iou(be.rate_p2_5, be.rate_p97_5, band.lo, band.hi);
    report.bands.push_back(be);
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["mean_cs"] = mean_cs;
  j["accuracy"] = accuracy;
  j["f1_macro"] = f1_macro;
  nlohmann::ordered_json jb = nlohmann::ordered_json::array();
  for (const BandEval& b : bands) {
    nlohmann::ordered_json row;
    row["band"] = b.band;
    row["lo"] = b.lo;
    row["hi"] = b.hi;
    row["records"] = b.n;
    row["median_rate"] = b.median_rate;
    row["ci_lo"] = b.ci_lo;
    row["ci_hi"] = b.ci_hi;
    row["rate_p2_5"] = b.rate_p2_5;
    row["rate_p97_5"] = b.rate_p97_5;
    row["iou"] = b.iou;
    row["mean_cs"] = b.mean_cs;
    jb.push_back(row);
  }
  j["bands"] = jb;
  return j.dump(2);
}

std::string EvalReport::boundary_csv() const {
  std::ostringstream os;
  os << "band,record,index,pred_t,true_t\n";
  char buf[160];
  for (size_t r = 0; r < records.size(); ++r) {
    const RecordEval& ev = records[r];
    size_t n = std::min(ev.pred_times.size(), ev.true_times.size());
    for (size_t i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%.17g,%.17g\n", ev.band.c_str(), r, i,
                    ev.pred_times[i], ev.true_times[i]);
      os << buf;
    }
  }
  return os.str();
}

std::string EvalReport::rates_csv() const {
  std::ostringstream os;
  os << "band,record,rate\n";
  char buf[96];
  for (size_t r = 0; r < records.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g\n", records[r].band.c_str(), r,
                  records[r].inferred_rate);
    os << buf;
  }
  return os.str();
}

}  // namespace evlat
