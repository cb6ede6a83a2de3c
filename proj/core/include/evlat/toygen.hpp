#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evlat/rng.hpp"

namespace evlat {

/// Frequency band: rates are TruncNormal(mu, sigma; [lo, hi]).
struct BandSpec {
  std::string name;
  double mu = 0.0;
  double sigma = 1.0;
  double lo = 0.0;
  double hi = 0.0;

  void validate() const;

  static BandSpec low() { return {"low", 7.5, 1.0, 5.0, 10.0}; }
  static BandSpec mid() { return {"mid", 12.5, 1.0, 10.0, 15.0}; }
  static BandSpec high() { return {"high", 17.5, 1.0, 15.0, 20.0}; }
  static BandSpec by_name(const std::string& name);
  static std::vector<BandSpec> all() { return {low(), mid(), high()}; }
};

/// One synthetic sequence: rate, cumulative event times, noisy sinusoid
/// observations, band label and split tag.
struct ToyRecord {
  double rate = 0.0;
  std::vector<double> times;
  std::vector<double> obs;
  std::string band;
  std::string split;
  std::uint64_t seed = 0;

  std::string to_jsonl() const;
  static ToyRecord from_jsonl(const std::string& line);
};

constexpr int kToyObservations = 20;
constexpr double kToyNoise = 0.07;

/// Rejection-sampled truncated normal rate.
double sample_rate(const BandSpec& band, Rng& rng);

/// Exponential(rate) inter-event times, y_i = sin(t_i) + N(0, noise^2).
ToyRecord gen_sequence(double rate, int n, double noise, Rng& rng);

/// n_rates distinct rates with seqs_per_rate sequences each. Rates must be
/// pairwise distinct (exact float inequality) across everything drawn from
/// the same stream; collisions redraw up to 100 times.
std::vector<ToyRecord> gen_split(const BandSpec& band, int n_rates, int seqs_per_rate,
                                 const std::string& split_tag, double noise, Rng& rng,
                                 std::vector<double>* used_rates = nullptr);

struct ToyDataset {
  std::vector<ToyRecord> records;
  std::string manifest_json;  // bands, counts, seed, noise
};

/// Full train/val/test generation for the given bands; all splits' rates come
/// from one stream so cross-split distinctness can be asserted exactly.
ToyDataset gen_dataset(const std::vector<BandSpec>& bands, int train_rates, int val_rates,
                       int test_rates, int seqs_per_rate, double noise, std::uint64_t seed);

void write_jsonl(const std::vector<ToyRecord>& records, std::ostream& os);
std::vector<ToyRecord> read_jsonl(std::istream& is);

}  // namespace evlat
