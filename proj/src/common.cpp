#include "hoi/common.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace hoi {

double Rng::uniform() {
  // 53-bit mantissa from the top bits.
  return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(eng_() % span);
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 1e-300);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * kPi * u2);
}

Vec3 Rng::gaussian3(double sigma) {
  return Vec3(gaussian() * sigma, gaussian() * sigma, gaussian() * sigma);
}

Vec3 Rng::unit_vector() {
  Vec3 v;
  do {
    v = Vec3(gaussian(), gaussian(), gaussian());
  } while (v.norm() < 1e-12);
  return v.normalized();
}

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

uint64_t hash_combine(uint64_t h, uint64_t v) { return mix64(h ^ mix64(v)); }

uint64_t hash_point(const Vec3& p, uint64_t seed) {
  uint64_t h = mix64(seed);
  for (int i = 0; i < 3; ++i) {
    const auto q = static_cast<int64_t>(std::llround(p[i] * 1e6));
    h = hash_combine(h, static_cast<uint64_t>(q));
  }
  return h;
}

double hash_to_unit(uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double hash_to_gaussian(uint64_t h) {
  const double u1 = hash_to_unit(mix64(h));
  const double u2 = hash_to_unit(mix64(h ^ 0xa5a5a5a5a5a5a5a5ull));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace hoi
