#include "evlat/toygen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "evlat/errors.hpp"
#include "evlat/util.hpp"

namespace evlat {

void BandSpec::validate() const {
  if (!(lo < mu && mu < hi))
    throw Error(ErrorKind::DegenerateBand, "band requires lo < mu < hi");
  if (!(sigma > 0.0)) throw Error(ErrorKind::DegenerateBand, "band requires sigma > 0");
}

BandSpec BandSpec::by_name(const std::string& name) {
  if (name == "low") return low();
  if (name == "mid") return mid();
  if (name == "high") return high();
  throw Error(ErrorKind::ConfigError, "unknown band '" + name + "' (expected low|mid|high)");
}

double sample_rate(const BandSpec& band, Rng& rng) {
  band.validate();
  constexpr long kMaxTries = 2'000'000;
  for (long i = 0; i < kMaxTries; ++i) {
    double x = rng.normal(band.mu, band.sigma);
    if (x >= band.lo && x <= band.hi) return x;
  }
  throw Error(ErrorKind::DegenerateBand,
              "acceptance rate below 1e-6 for band " + band.name);
}

ToyRecord gen_sequence(double rate, int n, double noise, Rng& rng) {
  if (!(rate > 0.0)) throw Error(ErrorKind::DomainError, "rate must be positive");
  if (n < 1) throw Error(ErrorKind::DomainError, "need at least one observation");
  ToyRecord rec;
  rec.rate = rate;
  rec.seed = rng.key();
  rec.times.reserve(n);
  rec.obs.reserve(n);
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    t += rng.exponential(rate);
    rec.times.push_back(t);
    double eta = noise > 0.0 ? rng.normal(0.0, noise) : 0.0;
    rec.obs.push_back(std::sin(t) + eta);
  }
  return rec;
}

std::vector<ToyRecord> gen_split(const BandSpec& band, int n_rates, int seqs_per_rate,
                                 const std::string& split_tag, double noise, Rng& rng,
                                 std::vector<double>* used_rates) {
  if (n_rates < 1 || seqs_per_rate < 1)
    throw Error(ErrorKind::DomainError, "counts must be positive");
  std::vector<ToyRecord> out;
  out.reserve(static_cast<size_t>(n_rates) * seqs_per_rate);
  for (int r = 0; r < n_rates; ++r) {
    double rate = 0.0;
    bool fresh = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
      rate = sample_rate(band, rng);
      fresh = !used_rates ||
              std::find(used_rates->begin(), used_rates->end(), rate) == used_rates->end();
      if (fresh) break;
    }
    if (!fresh)
      throw Error(ErrorKind::CollisionError, "rate collision persisted after 100 redraws");
    if (used_rates) used_rates->push_back(rate);
    for (int s = 0; s < seqs_per_rate; ++s) {
      ToyRecord rec = gen_sequence(rate, kToyObservations, noise, rng);
      rec.band = band.name;
      rec.split = split_tag;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

ToyDataset gen_dataset(const std::vector<BandSpec>& bands, int train_rates, int val_rates,
                       int test_rates, int seqs_per_rate, double noise, std::uint64_t seed) {
  ToyDataset ds;
  std::vector<double> used;
  Rng root(seed);
  for (const BandSpec& band : bands) {
    Rng stream = root.split(fnv1a64(band.name));
    auto train = gen_split(band, train_rates, seqs_per_rate, "train", noise, stream, &used);
    auto val = gen_split(band, val_rates, seqs_per_rate, "val", noise, stream, &used);
    auto test = gen_split(band, test_rates, seqs_per_rate, "test", noise, stream, &used);
    for (auto* part : {&train, &val, &test})
      for (auto& r : *part) ds.records.push_back(std::move(r));
  }

  nlohmann::ordered_json manifest;
  manifest["seed"] = seed;
  manifest["noise"] = noise;
  manifest["observations_per_sequence"] = kToyObservations;
  manifest["seqs_per_rate"] = seqs_per_rate;
  manifest["rates"] = {{"train", train_rates}, {"val", val_rates}, {"test", test_rates}};
  nlohmann::ordered_json jb = nlohmann::ordered_json::array();
  for (const BandSpec& band : bands) {
    nlohmann::ordered_json b;
    b["name"] = band.name;
    b["mu"] = band.mu;
    b["sigma"] = band.sigma;
    b["lo"] = band.lo;
    b["hi"] = band.hi;
    jb.push_back(b);
  }
  manifest["bands"] = jb;
  manifest["records"] = ds.records.size();
  ds.manifest_json = manifest.dump(2);
  return ds;
}

std::string ToyRecord::to_jsonl() const {
  nlohmann::ordered_json j;
  j["rate"] = rate;
  j["times"] = times;
  j["obs"] = obs;
  j["band"] = band;
  j["split"] = split;
  j["seed"] = seed;
  return j.dump();
}

ToyRecord ToyRecord::from_jsonl(const std::string& line) {
  auto j = nlohmann::json::parse(line);
  ToyRecord rec;
  rec.rate = j.at("rate").get<double>();
  rec.times = j.at("times").get<std::vector<double>>();
  rec.obs = j.at("obs").get<std::vector<double>>();
  rec.band = j.at("band").get<std::string>();
  rec.split = j.at("split").get<std::string>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  return rec;
}

void write_jsonl(const std::vector<ToyRecord>& records, std::ostream& os) {
  for (const auto& rec : records) os << rec.to_jsonl() << "\n";
}

std::vector<ToyRecord> read_jsonl(std::istream& is) {
  std::vector<ToyRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(ToyRecord::from_jsonl(line));
  }
  return out;
}

}  // namespace evlat
