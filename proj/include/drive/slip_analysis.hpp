#pragma once

// Steady-state slip per hold and its interpolation over the command space
// with a Gaussian kernel smoother (Nadaraya-Watson) on a uniform grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drive/command_space.hpp"
#include "drive/drive_protocol.hpp"
#include "drive/polygon.hpp"
#include "drive/stats.hpp"

namespace drive {

/// Commanded minus realised velocity for one hold, in both frames.
struct SlipSample {
  std::size_t id = 0;
  WheelCommand command;
  BodyVelocity command_body;
  WheelCommand wheel_slip;  // rad/s
  BodyVelocity body_slip;   // m/s, m/s, rad/s
  BodyVelocity measured_body;
  double steadiness = 0.0;
};

inline SlipSample compute_slip(const WindowedEpisode& w) {
  SlipSample s;
  s.id = w.id;
  s.command = w.command;
  s.command_body = w.command_body;
  s.wheel_slip = w.command - w.steady_mean_wheels;
  // Commanded lateral velocity is zero, so g_vy = -measured vy.
  s.body_slip = w.command_body - w.steady_mean_body;
  s.measured_body = w.steady_mean_body;
  s.steadiness = w.steadiness;
  return s;
}

inline std::vector<SlipSample> compute_slips(const DriveRun& run) {
  std::vector<SlipSample> out;
  out.reserve(run.episodes.size());
  for (const auto& w : segment_all(run)) out.push_back(compute_slip(w));
  return out;
}

enum class Channel { gx, gy, gtheta, wheel_l, wheel_r };

inline Channel parse_channel(std::string_view name) {
  if (name == "gx") return Channel::gx;
  if (name == "gy") return Channel::gy;
  if (name == "gtheta") return Channel::gtheta;
  if (name == "wheel_l") return Channel::wheel_l;
  if (name == "wheel_r") return Channel::wheel_r;
  throw std::invalid_argument("unknown slip channel '" + std::string(name) +
                              "' (expected gx, gy, gtheta, wheel_l or wheel_r)");
}

inline std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::gx: return "gx";
    case Channel::gy: return "gy";
    case Channel::gtheta: return "gtheta";
    case Channel::wheel_l: return "wheel_l";
    case Channel::wheel_r: return "wheel_r";
  }
  return "?";
}

inline double channel_value(const SlipSample& s, Channel c) {
  switch (c) {
    case Channel::gx: return s.body_slip.vx;
    case Channel::gy: return s.body_slip.vy;
    case Channel::gtheta: return s.body_slip.wz;
    case Channel::wheel_l: return s.wheel_slip.left;
    case Channel::wheel_r: return s.wheel_slip.right;
  }
  return 0.0;
}

/// Same channel, evaluated on the terrain's ground truth at a body command.
inline double channel_value(const WheelCommand& wheel_slip, const BodyVelocity& body_slip,
                            Channel c) {
  SlipSample s;
  s.wheel_slip = wheel_slip;
  s.body_slip = body_slip;
  return channel_value(s, c);
}

/// Diagonal kernel covariance over (vx, wz).
struct KernelCovariance {
  double var_vx = 0.64;
  double var_wz = 0.64;

  static KernelCovariance isotropic(double var) { return {var, var}; }

  void validate() const {
    if (!(var_vx > 0.0) || !(var_wz > 0.0) || !std::isfinite(var_vx) || !std::isfinite(var_wz)) {
      throw std::invalid_argument("kernel covariance entries must be finite and positive");
    }
  }
};

/// `gaussian` is the normal density. `positive_exponent` keeps the exponent
/// without the -1/2 factor, exp(+d^T S^-1 d); it is only there to compare
/// against that variant and grows with distance.
enum class KernelForm { gaussian, positive_exponent };

namespace detail {
inline double mahalanobis2(const poly::Point& u, const poly::Point& node,
                           const KernelCovariance& cov) {
  const double dx = u.x() - node.x();
  const double dw = u.y() - node.y();
  return dx * dx / cov.var_vx + dw * dw / cov.var_wz;
}
inline double exponent_of(double q, KernelForm form) {
  return form == KernelForm::gaussian ? -0.5 * q : q;
}
inline double kernel_exponent(const poly::Point& u, const poly::Point& node,
                              const KernelCovariance& cov, KernelForm form) {
  return exponent_of(mahalanobis2(u, node, cov), form);
}
inline double kernel_norm(const KernelCovariance& cov) {
  return 1.0 / (2.0 * std::numbers::pi * std::sqrt(cov.var_vx * cov.var_wz));
}
}  // namespace detail

/// Weight of a sample at command `u` for the grid node `node`.
inline double kernel_weight(const poly::Point& u, const poly::Point& node,
                            const KernelCovariance& cov,
                            KernelForm form = KernelForm::gaussian) {
  cov.validate();
  return detail::kernel_norm(cov) * std::exp(detail::kernel_exponent(u, node, cov, form));
}

/// A scalar observed at a body-frame command (vx, wz).
struct ScatterPoint {
  poly::Point command;
  double value = 0.0;
};

/// Uniform axis-aligned grid over the polygon's bounding box.
struct SlipGrid {
  double resolution = 0.1;
  KernelCovariance covariance;
  std::vector<double> vx_ticks;
  std::vector<double> wz_ticks;
  // Row-major with vx as the slow index.
  std::vector<double> value;
  std::vector<double> support;
  std::vector<std::uint8_t> inside;
  std::vector<std::uint8_t> low_support;
  /// Samples within one standard deviation (Mahalanobis distance <= 1).
  std::vector<std::uint32_t> neighbours;

  std::size_t index(std::size_t i_vx, std::size_t j_wz) const {
    return i_vx * wz_ticks.size() + j_wz;
  }
  std::size_t size() const { return value.size(); }
  poly::Point node(std::size_t k) const {
    return {vx_ticks[k / wz_ticks.size()], wz_ticks[k % wz_ticks.size()]};
  }
  /// Node is inside the command polygon and has enough kernel support.
  bool usable(std::size_t k) const { return inside[k] != 0 && low_support[k] == 0; }
  /// Inside node with at least `min_neighbours` samples within one sigma.
  bool adequate(std::size_t k, std::uint32_t min_neighbours = 4) const {
    return inside[k] != 0 && neighbours[k] >= min_neighbours;
  }
};

namespace detail {
inline std::vector<double> ticks(double lo, double hi, double res) {
  const auto first = static_cast<long long>(std::floor(lo / res + 1e-9));
  const auto last = static_cast<long long>(std::ceil(hi / res - 1e-9));
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(last - first + 1));
  for (long long i = first; i <= last; ++i) t.push_back(static_cast<double>(i) * res);
  return t;
}
}  // namespace detail

/// Empty grid (values zero) with ticks and polygon mask filled in.
inline SlipGrid make_grid(const CommandPolygon& polygon, double resolution) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  const poly::Box box = poly::bounding_box(polygon.body);
  SlipGrid g;
  g.resolution = resolution;
  g.vx_ticks = detail::ticks(box.lo.x(), box.hi.x(), resolution);
  g.wz_ticks = detail::ticks(box.lo.y(), box.hi.y(), resolution);
  const std::size_t n = g.vx_ticks.size() * g.wz_ticks.size();
  g.value.assign(n, 0.0);
  g.support.assign(n, 0.0);
  g.inside.assign(n, 0);
  g.low_support.assign(n, 0);
  g.neighbours.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    g.inside[k] = poly::contains(polygon.body, g.node(k), 1e-9) ? 1 : 0;
  }
  return g;
}

/// Kernel-weighted average of `points` at every grid node.
///
/// Values are computed with the largest exponent factored out so that tiny
/// covariances still return the nearest sample instead of 0/0; `support`
/// keeps the raw sum of weights. Nodes whose support is below
/// `low_support_fraction` of the best inside node are flagged.
inline SlipGrid smooth_grid(const std::vector<ScatterPoint>& points,
                            const CommandPolygon& polygon, double resolution,
                            const KernelCovariance& cov, KernelForm form = KernelForm::gaussian,
                            double low_support_fraction = 0.01) {
  if (points.empty()) throw std::invalid_argument("smooth_grid: no samples");
  cov.validate();
  SlipGrid g = make_grid(polygon, resolution);
  g.covariance = cov;
  const double norm = detail::kernel_norm(cov);

  std::vector<double> expo(points.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const poly::Point node = g.node(k);
    double top = -std::numeric_limits<double>::infinity();
    std::uint32_t near = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double q = detail::mahalanobis2(points[i].command, node, cov);
      expo[i] = detail::exponent_of(q, form);
      top = std::max(top, expo[i]);
      if (q <= 1.0) ++near;
    }
    g.neighbours[k] = near;
    double wsum = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double w = std::exp(expo[i] - top);
      wsum += w;
      acc += w * points[i].value;
    }
    g.value[k] = acc / wsum;
    g.support[k] = norm * std::exp(top) * wsum;
  }

  double best = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.inside[k]) best = std::max(best, g.support[k]);
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    g.low_support[k] = g.support[k] < low_support_fraction * best ? 1 : 0;
  }
  return g;
}

inline std::vector<ScatterPoint> scatter(const std::vector<SlipSample>& samples, Channel c) {
  std::vector<ScatterPoint> pts;
  pts.reserve(samples.size());
  for (const auto& s : samples) {
    pts.push_back({{s.command_body.vx, s.command_body.wz}, channel_value(s, c)});
  }
  return pts;
}

inline SlipGrid smooth_slip_grid(const std::vector<SlipSample>& samples, Channel c,
                                 const CommandPolygon& polygon, double resolution,
                                 const KernelCovariance& cov,
                                 KernelForm form = KernelForm::gaussian) {
  return smooth_grid(scatter(samples, c), polygon, resolution, cov, form);
}

/// Average number of samples within one standard deviation (Mahalanobis
/// distance <= 1) of the grid nodes inside the polygon.
inline double mean_neighbours(const std::vector<poly::Point>& commands, const SlipGrid& grid,
                              const KernelCovariance& cov) {
  std::size_t nodes = 0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.inside[k]) continue;
    ++nodes;
    const poly::Point node = grid.node(k);
    for (const auto& u : commands) {
      if (detail::mahalanobis2(u, node, cov) <= 1.0) ++hits;
    }
  }
  return nodes ? static_cast<double>(hits) / static_cast<double>(nodes) : 0.0;
}

/// Smallest isotropic variance giving at least `min_neighbours` samples within
/// one standard deviation of the grid nodes on average.
inline double auto_isotropic_variance(const std::vector<poly::Point>& commands,
                                      const CommandPolygon& polygon, double resolution,
                                      double min_neighbours = 4.0) {
  if (commands.size() < static_cast<std::size_t>(std::ceil(min_neighbours))) {
    throw std::invalid_argument("auto covariance: fewer samples than required neighbours");
  }
  const SlipGrid grid = make_grid(polygon, resolution);
  auto enough = [&](double var) {
    return mean_neighbours(commands, grid, KernelCovariance::isotropic(var)) >= min_neighbours;
  };
  double hi = resolution * resolution;
  while (!enough(hi)) hi *= 2.0;
  double lo = hi / 2.0;
  if (enough(lo)) lo = 0.0;
  for (int it = 0; it < 60 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (enough(mid) ? hi : lo) = mid;
  }
  return hi;
}

inline std::vector<poly::Point> commands_of(const std::vector<SlipSample>& samples) {
  std::vector<poly::Point> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.emplace_back(s.command_body.vx, s.command_body.wz);
  return out;
}

/// Command window used before pooling slips into a distribution.
struct CommandFilter {
  double max_abs_vx = 4.0;
  double max_abs_wz = 4.0;

  bool accepts(const BodyVelocity& u) const {
    return std::abs(u.vx) <= max_abs_vx && std::abs(u.wz) <= max_abs_wz;
  }
};

/// Quartiles and central 95 % of one slip channel. With `magnitude` set the
/// distribution is over |g|.
inline stats::Distribution slip_distribution(const std::vector<SlipSample>& samples, Channel c,
                                             const CommandFilter& filter = {},
                                             bool magnitude = false) {
  std::vector<double> values;
  for (const auto& s : samples) {
    if (!filter.accepts(s.command_body)) continue;
    const double v = channel_value(s, c);
    values.push_back(magnitude ? std::abs(v) : v);
  }
  if (values.size() < 5) {
    throw std::invalid_argument("slip_distribution: need at least 5 samples, got " +
                                std::to_string(values.size()));
  }
  return stats::summarize(std::move(values));
}

}  // namespace drive
