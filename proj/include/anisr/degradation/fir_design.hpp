#pragma once

#include <span>
#include <vector>

namespace anisr::degradation {

/// Empirical transition-width factor D_inf(d1, d2) for equiripple lowpass
/// filters; the transition band of a time-bandwidth-`tb` design spans
/// D_inf / tb of the band centre on each side.
double transition_width_factor(double pass_ripple, double stop_ripple);

/// Zero-phase amplitude of a symmetric odd-length FIR at `freq` (cycles/sample).
double zero_phase_response(std::span<const double> taps, double freq);

struct RippleMeasurement {
  double pass = 0.0;  ///< max |A(f) - 1| over the passband
  double stop = 0.0;  ///< max |A(f)| over the stopband
};

/// Ripple on a uniform grid of `points` samples over [0, 0.5].
RippleMeasurement measure_ripple(std::span<const double> taps, double pass_edge, double stop_edge, int points = 8192);

/// Linear-phase lowpass with `num_taps` (odd) coefficients approximating the
/// weighted Chebyshev optimum via Lawson's iteratively reweighted least squares.
/// Edges in cycles/sample; stopband errors are weighted by `stop_weight`.
std::vector<double> design_minimax_lowpass(int num_taps, double pass_edge, double stop_edge, double stop_weight,
                                           int iterations = 300);

/// Hamming-windowed sinc with `num_taps` (odd) coefficients and the given
/// cutoff (cycles/sample), scaled to unit DC gain.
std::vector<double> windowed_sinc(int num_taps, double cutoff);

}  // namespace anisr::degradation
