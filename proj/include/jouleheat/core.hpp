#ifndef JOULEHEAT_CORE_HPP
#define JOULEHEAT_CORE_HPP

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace jouleheat {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// Scalar field of space and time.
using SpaceTimeFn = std::function<double(const Vec3&, double)>;
/// Vector field of space and time (analytic gradients).
using SpaceTimeGradFn = std::function<Vec3(const Vec3&, double)>;

// Error categories. The CLI maps ConfigError to exit code 2 and
// SolverError to exit code 3; everything else is a plain failure.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct MeshError : std::runtime_error {
  explicit MeshError(const std::string& msg) : std::runtime_error(msg) {}
};
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace jouleheat

#endif
