#include "anisr/degradation/fir_design.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace anisr::degradation {

double transition_width_factor(double pass_ripple, double stop_ripple) {
  constexpr double a1 = 5.309e-3, a2 = 7.114e-2, a3 = -4.761e-1;
  constexpr double a4 = -2.66e-3, a5 = -5.941e-1, a6 = -4.278e-1;
  const double l1 = std::log10(pass_ripple);
  const double l2 = std::log10(stop_ripple);
  return (a1 * l1 * l1 + a2 * l1 + a3) * l2 + (a4 * l1 * l1 + a5 * l1 + a6);
}

double zero_phase_response(std::span<const double> taps, double freq) {
  const auto n = static_cast<std::ptrdiff_t>(taps.size());
  const std::ptrdiff_t mid = n / 2;
  double acc = taps[static_cast<std::size_t>(mid)];
  for (std::ptrdiff_t m = 1; m <= mid; ++m) {
    acc += 2.0 * taps[static_cast<std::size_t>(mid + m)] * std::cos(2.0 * std::numbers::pi * freq * static_cast<double>(m));
  }
  return acc;
}

RippleMeasurement measure_ripple(std::span<const double> taps, double pass_edge, double stop_edge, int points) {
  RippleMeasurement r;
  for (int i = 0; i < points; ++i) {
    const double f = 0.5 * static_cast<double>(i) / static_cast<double>(points - 1);
    const double a = zero_phase_response(taps, f);
    if (f <= pass_edge) r.pass = std::max(r.pass, std::abs(a - 1.0));
    if (f >= stop_edge) r.stop = std::max(r.stop, std::abs(a));
  }
  return r;
}

std::vector<double> design_minimax_lowpass(int num_taps, double pass_edge, double stop_edge, double stop_weight,
                                           int iterations) {
  if (num_taps < 3 || num_taps % 2 == 0) throw std::invalid_argument("lowpass design needs an odd tap count >= 3");
  if (!(pass_edge > 0.0 && pass_edge < stop_edge && stop_edge < 0.5)) {
    throw std::invalid_argument("band edges must satisfy 0 < pass < stop < 0.5");
  }
  const int order = num_taps / 2;
  const int basis = order + 1;

  // Dense grid split between the bands in proportion to their widths.
  const int total = 32 * basis;
  const double pass_width = pass_edge;
  const double stop_width = 0.5 - stop_edge;
  const int n_pass = std::max(8, static_cast<int>(std::lround(total * pass_width / (pass_width + stop_width))));
  const int n_stop = std::max(8, total - n_pass);
  const int g = n_pass + n_stop;

  Eigen::MatrixXd basis_at(g, basis);
  Eigen::VectorXd desired(g), band_weight(g);
  for (int i = 0; i < g; ++i) {
    double f;
    if (i < n_pass) {
      f = pass_edge * i / (n_pass - 1);
      desired(i) = 1.0;
      band_weight(i) = 1.0;
    } else {
      f = stop_edge + (0.5 - stop_edge) * (i - n_pass) / (n_stop - 1);
      desired(i) = 0.0;
      band_weight(i) = stop_weight;
    }
    for (int m = 0; m < basis; ++m) basis_at(i, m) = std::cos(2.0 * std::numbers::pi * f * m);
  }

  Eigen::VectorXd lawson = Eigen::VectorXd::Constant(g, 1.0 / g);
  Eigen::VectorXd coeffs(basis);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd w = lawson.array() * band_weight.array().square();
    const Eigen::MatrixXd weighted = basis_at.transpose() * w.asDiagonal();
    coeffs = (weighted * basis_at).ldlt().solve(weighted * desired);
    const Eigen::VectorXd err = (band_weight.array() * (basis_at * coeffs - desired).array()).abs();
    lawson = lawson.array() * err.array();
    const double s = lawson.sum();
    if (!(s > 0.0)) break;
    lawson /= s;
  }

  std::vector<double> taps(static_cast<std::size_t>(num_taps));
  taps[static_cast<std::size_t>(order)] = coeffs(0);
  for (int m = 1; m <= order; ++m) {
    taps[static_cast<std::size_t>(order + m)] = 0.5 * coeffs(m);
    taps[static_cast<std::size_t>(order - m)] = 0.5 * coeffs(m);
  }
  return taps;
}

std::vector<double> windowed_sinc(int num_taps, double cutoff) {
  if (num_taps < 3 || num_taps % 2 == 0) throw std::invalid_argument("windowed sinc needs an odd tap count >= 3");
  const int half = num_taps / 2;
  std::vector<double> taps(static_cast<std::size_t>(num_taps));
  double sum = 0.0;
  for (int j = -half; j <= half; ++j) {
    const double x = 2.0 * cutoff * j;
    const double sinc = j == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double window = 0.54 + 0.46 * std::cos(std::numbers::pi * j / half);
    taps[static_cast<std::size_t>(j + half)] = sinc * window;
    sum += sinc * window;
  }
  for (double& v : taps) v /= sum;
  return taps;
}

}  // namespace anisr::degradation
