// spectra.hpp: 2D Fourier spectra, peak picking and the eigen-gap stick oracle
//
// F(W_a, W_b) = int dt_a int dt_b exp(+i (W_a t_a + W_b t_b)) S(t_a, t_b), discretized
// with trapezoid end weights (half weight on the first sample of each axis),
// zero padding and optional exponential apodization exp(-r (t_a + t_b)).
// Axes are two-sided, centered, in rad/ms.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polariton/protocol.hpp"

namespace polariton::spectra {

enum class Transform { s13, s23 };

const char* transform_name(Transform t);  // "s13" / "s23"

struct FourierOptions {
    int padding{4};                    // zero-padding factor per axis
    std::optional<double> window_rate;  // 1/ms
};

struct Spectrum2D {
    Transform which{Transform::s23};
    std::vector<double> axis_a;  // rad/ms, ascending, length padding * n_a
    std::vector<double> axis_b;
    Matrix values;  // values(i, j) at (axis_a[i], axis_b[j])
    int fixed_axis{1};
    double fixed_delay{0.0};
    int samples_a{0};
    int samples_b{0};
    double bin_a{0.0};  // native resolution 2*pi / (n dt)
    double bin_b{0.0};
    double sinc_fwhm_a{0.0};  // instrumental width of an undamped line
    double sinc_fwhm_b{0.0};
    FourierOptions options;
};

// Throws ParameterError if the grid axes are not the pair of `which` or a
// sample is not finite.
Spectrum2D fourier_2d(const protocol::SignalGrid& grid, Transform which, const FourierOptions& opts = {});

// Same transform on raw samples (rows: axis a). Used for synthetic signals.
Spectrum2D fourier_2d(const Matrix& samples, double dt_a, double dt_b, const FourierOptions& opts = {});

// sum |F|^2 against N_pad dt_a^2 dt_b^2 sum |w s|^2 (discrete Parseval).
struct ParsevalCheck {
    double time_power{0.0};
    double spectral_power{0.0};
    double relative_error{0.0};
};
ParsevalCheck parseval(const Matrix& samples, double dt_a, double dt_b, const Spectrum2D& spectrum);

struct Peak {
    double omega_a{0.0};
    double omega_b{0.0};
    double magnitude{0.0};
    double fwhm_a{0.0};
    double fwhm_b{0.0};
    int index_a{0};
    int index_b{0};
    std::string label;
};

// Local maxima of |F| above threshold_rel * max (boundary cells excluded),
// merged strongest-first within merge_radius_bins native bins.
std::vector<Peak> find_peaks(const Spectrum2D& spectrum, double threshold_rel, double merge_radius_bins = 3.0);

// FWHM of |F| through cell (i, j) along axis a (axis = 0) or b (axis = 1).
double fwhm_through(const Spectrum2D& spectrum, int i, int j, int axis);

struct ResonancePrediction {
    double omega_a{0.0};
    double omega_b{0.0};
    Complex amplitude{0.0};
    // Eigen-indices (ascending energy) of the dominant contribution:
    // coherence (ket_a, bra_a) in the first scanned interval, (ket_b, bra_b) in t3.
    int ket_a{0};
    int bra_a{0};
    int ket_b{0};
    int bra_b{0};
    int order_a{0};  // spin-excitation difference across the coherence
    int order_b{0};
    std::string label;
};

// Closed-system eigen-expansion of the signal: every term
// A exp(-i w_a t_a - i w_b t_b) contributes a stick at (+w_a, +w_b). Terms at
// the same position are summed; sticks below 1e-8 of the largest are dropped.
// Sorted by |amplitude|, descending.
std::vector<ResonancePrediction> stick_spectrum(const protocol::ModelContext& ctx, Transform which,
                                                double fixed_delay, int readout_ion = 1);

struct LineshapeRow {
    int peak{0};
    std::optional<int> prediction;  // index into the prediction list
    double distance_bins{0.0};      // Chebyshev distance in native bins
    double anisotropy{0.0};         // fwhm_a / fwhm_b
    double sinc_ratio_a{0.0};       // fwhm / instrumental width
    double sinc_ratio_b{0.0};
    std::string label;
};

// Nearest-prediction assignment within tolerance_bins; unmatched peaks have no
// prediction. Throws ParameterError on empty inputs.
std::vector<LineshapeRow> lineshape_report(const Spectrum2D& spectrum, const std::vector<Peak>& peaks,
                                           const std::vector<ResonancePrediction>& predictions,
                                           double tolerance_bins = 3.0);

}  // namespace polariton::spectra
