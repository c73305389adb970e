#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "swsfno/core.hpp"
#include "swsfno/grid.hpp"

namespace swsfno {

/// Radial velocity v_r(r, theta, phi) in km/s, radius-major, then latitude,
/// then longitude.
struct VelocityCube {
  RadialGrid radial;
  SphericalGrid grid;
  std::vector<double> values;

  VelocityCube() = default;
  VelocityCube(RadialGrid r, SphericalGrid g)
      : radial(std::move(r)), grid(std::move(g)), values(radial.size() * grid.size(), 0.0) {}
  VelocityCube(RadialGrid r, SphericalGrid g, std::vector<double> v)
      : radial(std::move(r)), grid(std::move(g)), values(std::move(v)) {
    if (values.size() != radial.size() * grid.size())
      throw ShapeError("VelocityCube: payload size does not match dimensions");
  }

  std::size_t n_r() const { return radial.size(); }
  std::size_t n_lat() const { return grid.n_lat(); }
  std::size_t n_lon() const { return grid.n_lon(); }
  std::size_t slice_size() const { return grid.size(); }

  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return values[(i * n_lat() + j) * n_lon() + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * n_lat() + j) * n_lon() + k];
  }

  std::span<double> slice(std::size_t i) {
    return {values.data() + i * slice_size(), slice_size()};
  }
  std::span<const double> slice(std::size_t i) const {
    return {values.data() + i * slice_size(), slice_size()};
  }

  bool same_dims(const VelocityCube& o) const {
    return n_r() == o.n_r() && n_lat() == o.n_lat() && n_lon() == o.n_lon();
  }

  /// Positivity and finiteness of every value.
  bool physical() const {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return std::isfinite(v) && v > 0.0; });
  }
};

}  // namespace swsfno
