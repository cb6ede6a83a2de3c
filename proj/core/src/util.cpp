#include "evlat/util.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "evlat/errors.hpp"

namespace evlat {

std::string to_hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return to_hex(fnv1a64(ss.str()));
}

}  // namespace evlat
