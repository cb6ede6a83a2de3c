#include "evlat/stability.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "evlat/erg.hpp"
#include "evlat/errors.hpp"
#include "evlat/tensor.hpp"

namespace evlat {

namespace {

constexpr double kSqrtTwoOverPi = 0.79788456080286535587989211986876;
constexpr double kNumericSlack = 1e-12;

struct TrialDelta {
  Tensor delta;          // noisy - clean adjacency
  double frob_avg_bound; // (alpha/MS) sum ||Xi||_F
};

template <class NoiseFn>
TrialDelta run_trial(int channels, double alpha, int ms, Rng& rng, NoiseFn&& noise) {
  std::vector<Tensor> base(ms, Tensor(channels, channels));
  std::vector<Tensor> noisy(ms, Tensor(channels, channels));
  double xi_frob_sum = 0.0;
  for (int k = 0; k < ms; ++k) {
    double xi_sq = 0.0;
    for (int i = 0; i < channels; ++i)
      for (int j = 0; j < channels; ++j) {
        if (i == j) continue;
        double lag = rng.uniform(-1.0, 1.0);
        double xi = noise(rng);
        base[k].at(i, j) = lag;
        noisy[k].at(i, j) = lag + xi;
        xi_sq += xi * xi;
      }
    xi_frob_sum += std::sqrt(xi_sq);
  }
  Adjacency clean = adjacency_from_lags(base, alpha, false);
  Adjacency pert = adjacency_from_lags(noisy, alpha, false);
  TrialDelta out;
  out.delta = Tensor(channels, channels);
  for (int i = 0; i < channels * channels; ++i) out.delta.data[i] = pert.a[i] - clean.a[i];
  out.frob_avg_bound = alpha / static_cast<double>(ms) * xi_frob_sum;
  return out;
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.data) m = std::max(m, std::fabs(v));
  return m;
}

double frob(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data) s += v * v;
  return std::sqrt(s);
}

}  // namespace

StabilityReport run_deterministic_check(int channels, double alpha, double eps_inf, int ms,
                                        int trials, Rng& rng) {
  if (!(eps_inf >= 0.0)) throw Error(ErrorKind::DomainError, "eps_inf must be >= 0");
  if (trials < 1) throw Error(ErrorKind::DomainError, "need >= 1 trial");

  StabilityReport rep;
  rep.check = "deterministic";
  rep.noise_model = "uniform";
  rep.channels = channels;
  rep.alpha = alpha;
  rep.noise_param = eps_inf;
  rep.ms = ms;
  rep.trials = trials;
  rep.seed = rng.key();

  const double entry_bound = alpha * eps_inf;
  const double frob_bound = alpha * eps_inf * std::sqrt(static_cast<double>(channels) * (channels - 1));
  for (int t = 0; t < trials; ++t) {
    auto td = run_trial(channels, alpha, ms, rng,
                        [eps_inf](Rng& r) { return r.uniform(-eps_inf, eps_inf); });
    StabilityTrial rec;
    rec.trial = t;
    rec.max_entry_dev = max_abs(td.delta);
    rec.frob_dev = frob(td.delta);
    rec.entry_bound = entry_bound;
    rec.frob_bound = frob_bound;
    rec.frob_avg_bound = td.frob_avg_bound;
    rec.entry_violation = rec.max_entry_dev > entry_bound + kNumericSlack;
    rec.frob_violation = rec.frob_dev > std::min(frob_bound, td.frob_avg_bound) + kNumericSlack;
    if (rec.entry_violation || rec.frob_violation) {
      rep.violations += 1;
      throw Error(ErrorKind::TheoremViolation,
                  "deterministic bound violated at trial " + std::to_string(t) + ": entry dev " +
                      std::to_string(rec.max_entry_dev) + " vs " + std::to_string(entry_bound));
    }
    rep.records.push_back(rec);
  }
  return rep;
}

StabilityReport run_subgaussian_check(int channels, double alpha, double sigma, int ms,
                                      int trials, const std::vector<double>& tau_grid, Rng& rng) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::DomainError, "sigma must be > 0");

  StabilityReport rep;
  rep.check = "subgaussian_tail";
  rep.noise_model = "gauss";
  rep.channels = channels;
  rep.alpha = alpha;
  rep.noise_param = sigma;
  rep.ms = ms;
  rep.trials = trials;
  rep.seed = rng.key();

  std::vector<long> exceed(tau_grid.size(), 0);
  long entries = 0;
  for (int t = 0; t < trials; ++t) {
    auto td = run_trial(channels, alpha, ms, rng, [sigma](Rng& r) { return r.normal(0.0, sigma); });
    StabilityTrial rec;
    rec.trial = t;
    rec.max_entry_dev = max_abs(td.delta);
    rec.frob_dev = frob(td.delta);
    rec.frob_avg_bound = td.frob_avg_bound;
    rep.records.push_back(rec);
    for (int i = 0; i < channels; ++i)
      for (int j = 0; j < channels; ++j) {
        if (i == j) continue;
        ++entries;
        double d = std::fabs(td.delta.at(i, j));
        for (size_t k = 0; k < tau_grid.size(); ++k)
          if (d >= tau_grid[k]) exceed[k] += 1;
      }
  }

  for (size_t k = 0; k < tau_grid.size(); ++k) {
    double tau = tau_grid[k];
    double bound = 2.0 * std::exp(-static_cast<double>(ms) * tau * tau /
                                  (2.0 * alpha * alpha * sigma * sigma));
    double freq = static_cast<double>(exceed[k]) / static_cast<double>(entries);
    double p = std::min(bound, 1.0);
    double slack = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(entries));
    StabilityTailRow row;
    row.tau = tau;
    row.bound = bound;
    row.empirical = freq;
    row.slack = slack;
    row.ok = freq <= bound + slack;
    rep.tail.push_back(row);
    if (!row.ok) {
      rep.violations += 1;
      throw Error(ErrorKind::TheoremViolation,
                  "tail bound exceeded at tau=" + std::to_string(tau) + ": empirical " +
                      std::to_string(freq) + " vs bound " + std::to_string(bound) + " + slack " +
                      std::to_string(slack));
    }
  }
  return rep;
}

StabilityReport run_gaussian_expectation_check(int channels, double alpha, double sigma, int ms,
                                               int trials, Rng& rng) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::DomainError, "sigma must be > 0");

  StabilityReport rep;
  rep.check = "gaussian_expectation";
  rep.noise_model = "gauss";
  rep.channels = channels;
  rep.alpha = alpha;
  rep.noise_param = sigma;
  rep.ms = ms;
  rep.trials = trials;
  rep.seed = rng.key();

  double abs_sum = 0.0, abs_sq = 0.0;
  double frob_sum = 0.0, frob_sq = 0.0;
  long entries = 0;
  for (int t = 0; t < trials; ++t) {
    auto td = run_trial(channels, alpha, ms, rng, [sigma](Rng& r) { return r.normal(0.0, sigma); });
    StabilityTrial rec;
    rec.trial = t;
    rec.max_entry_dev = max_abs(td.delta);
    rec.frob_dev = frob(td.delta);
    rec.frob_avg_bound = td.frob_avg_bound;
    rep.records.push_back(rec);
    for (int i = 0; i < channels; ++i)
      for (int j = 0; j < channels; ++j) {
        if (i == j) continue;
        double d = std::fabs(td.delta.at(i, j));
        abs_sum += d;
        abs_sq += d * d;
        ++entries;
      }
    frob_sum += rec.frob_dev;
    frob_sq += rec.frob_dev * rec.frob_dev;
  }

  const double n = static_cast<double>(entries);
  rep.mean_abs_dev = abs_sum / n;
  rep.mean_abs_bound = alpha * sigma * kSqrtTwoOverPi;
  double var = std::max(0.0, abs_sq / n - rep.mean_abs_dev * rep.mean_abs_dev);
  rep.mean_abs_slack = 3.0 * std::sqrt(var / n);

  const double nt = static_cast<double>(trials);
  rep.mean_frob_dev = frob_sum / nt;
  rep.mean_frob_bound =
      alpha * sigma * kSqrtTwoOverPi * std::sqrt(static_cast<double>(channels) * (channels - 1));
  double fvar = std::max(0.0, frob_sq / nt - rep.mean_frob_dev * rep.mean_frob_dev);
  rep.mean_frob_slack = 3.0 * std::sqrt(fvar / nt);

  if (rep.mean_abs_dev > rep.mean_abs_bound + rep.mean_abs_slack ||
      rep.mean_frob_dev > rep.mean_frob_bound + rep.mean_frob_slack) {
    rep.violations += 1;
    throw Error(ErrorKind::TheoremViolation,
                "expectation bound exceeded: E|Delta| " + std::to_string(rep.mean_abs_dev) +
                    " vs " + std::to_string(rep.mean_abs_bound));
  }
  return rep;
}

std::string StabilityReport::to_json() const {
  nlohmann::ordered_json j;
  j["check"] = check;
  j["noise_model"] = noise_model;
  j["channels"] = channels;
  j["alpha"] = alpha;
  j["noise_param"] = noise_param;
  j["ms"] = ms;
  j["trials"] = trials;
  j["seed"] = seed;
  j["violations"] = violations;
  if (!tail.empty()) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : tail) {
      nlohmann::ordered_json r;
      r["tau"] = row.tau;
      r["bound"] = row.bound;
      r["empirical"] = row.empirical;
      r["slack"] = row.slack;
      r["ok"] = row.ok;
      rows.push_back(r);
    }
    j["tail"] = rows;
  }
  if (check == "gaussian_expectation") {
    j["mean_abs_dev"] = mean_abs_dev;
    j["mean_abs_bound"] = mean_abs_bound;
    j["mean_abs_slack"] = mean_abs_slack;
    j["mean_frob_dev"] = mean_frob_dev;
    j["mean_frob_bound"] = mean_frob_bound;
    j["mean_frob_slack"] = mean_frob_slack;
  }
  double worst_entry = 0.0, worst_frob = 0.0;
  for (const auto& r : records) {
    worst_entry = std::max(worst_entry, r.max_entry_dev);
    worst_frob = std::max(worst_frob, r.frob_dev);
  }
  j["worst_entry_dev"] = worst_entry;
  j["worst_frob_dev"] = worst_frob;
  return j.dump(2);
}

std::string StabilityReport::to_csv() const {
  std::ostringstream os;
  os << "trial,max_entry_dev,frob_dev,entry_bound,frob_bound,frob_avg_bound,entry_violation,"
        "frob_violation\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", r.trial,
                  r.max_entry_dev, r.frob_dev, r.entry_bound, r.frob_bound, r.frob_avg_bound,
                  r.entry_violation ? 1 : 0, r.frob_violation ? 1 : 0);
    os << buf;
  }
  return os.str();
}

}  // namespace evlat
