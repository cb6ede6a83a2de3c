#pragma once

#include <cstdint>
#include <vector>

namespace evlat {

/// Per-channel latent event times, strictly increasing within each channel.
struct EventRealization {
  std::vector<std::vector<double>> channels;
  std::uint64_t seed = 0;

  int channel_count() const { return static_cast<int>(channels.size()); }

  bool strictly_increasing() const {
    for (const auto& ch : channels)
      for (size_t k = 1; k < ch.size(); ++k)
        if (!(ch[k] > ch[k - 1])) return false;
    return true;
  }
};

}  // namespace evlat
