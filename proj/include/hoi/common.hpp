#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace hoi {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Base for every error this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateInput : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct BehindCamera : Error { using Error::Error; };
struct UnknownPart : Error { using Error::Error; };
struct UnknownTemplate : Error { using Error::Error; };
struct UnknownProgram : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct CorruptFile : Error { using Error::Error; };
struct MissingInitialization : Error { using Error::Error; };
struct NonFiniteEnergy : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct NoConvergedPoints : Error { using Error::Error; };
struct NoVisibleFrames : Error { using Error::Error; };
struct NoVisibleContext : Error { using Error::Error; };
struct EmptyRender : Error { using Error::Error; };

// Deterministic RNG. Gaussian samples go through an explicit Box-Muller so
// streams are reproducible independent of the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform();
  double uniform(double lo, double hi);
  // inclusive bounds
  int uniform_int(int lo, int hi);
  double gaussian();
  double gaussian(double mu, double sigma) { return mu + sigma * gaussian(); }
  Vec3 gaussian3(double sigma);
  Vec3 unit_vector();

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64-style mixing; used to derive per-frame / per-point noise seeds.
uint64_t mix64(uint64_t x);
uint64_t hash_combine(uint64_t h, uint64_t v);
// Quantizes to 1e-6 so queries at the same point always hash alike.
uint64_t hash_point(const Vec3& p, uint64_t seed);
// Maps a hash to (0,1).
double hash_to_unit(uint64_t h);
// Two independent hashes -> one standard normal sample.
double hash_to_gaussian(uint64_t h);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace hoi
