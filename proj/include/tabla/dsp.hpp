#pragma once

#include <complex>
#include <span>
#include <vector>

#include "tabla/audio.hpp"
#include "tabla/matrix.hpp"

namespace tabla {

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse = false);

// Short-time analysis settings shared by the whole pipeline.
// fft_size 0 means "next power of two >= window length".
struct AnalysisConfig {
  double window_ms = 25.0;
  double hop_ms = 5.0;
  int fft_size = 0;
  int n_mel_bands = 40;
  int n_mfcc = 13;
  double log_floor = 1e-10;  // applied to mel band energies (power)

  int window_length(int sample_rate) const;
  int hop_length(int sample_rate) const;
  int effective_fft_size(int sample_rate) const;
};

// Frame-wise magnitude spectra on the 25 ms / 5 ms grid.
struct Spectrogram {
  Matrix mags;                     // n_frames x n_bins
  double bin_hz = 0.0;             // Hz per bin
  std::vector<double> frame_times; // seconds, at frame centers

  std::size_t n_frames() const { return mags.rows; }
  std::size_t n_bins() const { return mags.cols; }
};

// Half-open frequency band [low_hz, high_hz).
struct Band {
  double low_hz = 0.0;
  double high_hz = 0.0;
};

// Cut the signal into hop-spaced frames. A clip shorter than one window
// yields a single zero-padded frame. Windowed frames carry a Hann window.
Matrix frame_signal(const AudioClip& clip, const AnalysisConfig& cfg, bool windowed = true);

std::vector<double> hann_window(int length);

// Per-frame FFT magnitudes, bins 0..fft/2. OpenMP over frames;
// the _serial variant is the reference the tests compare against.
Spectrogram magnitude_spectrogram(const Matrix& frames, const AnalysisConfig& cfg, int sample_rate);
Spectrogram magnitude_spectrogram_serial(const Matrix& frames, const AnalysisConfig& cfg,
                                         int sample_rate);

// Per-frame sum of squared magnitudes over bins whose center frequency
// falls in the band. Errors if the band covers no bins.
std::vector<double> band_energy(const Spectrogram& spec, const Band& band);

// Triangular mel filterbank, 0 Hz..Nyquist: n_bands x n_bins weights.
Matrix mel_filterbank(int n_bands, int n_bins, double bin_hz, double nyquist_hz);

// 13 cepstral coefficients per frame (power mel energies, log floored,
// orthonormal DCT-II).
Matrix mfcc(const Spectrogram& spec, const AnalysisConfig& cfg, int sample_rate);

// The log+DCT stage alone, for one frame of mel band energies.
std::vector<double> mfcc_from_mel_energies(std::span<const double> mel_energies, int n_mfcc,
                                           double log_floor);

struct SpectralShape {
  double centroid_hz = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
};

// Moments of the normalized magnitude distribution over bin frequencies.
// All-zero spectrum -> (0,0,0); zero spread -> (centroid, 0, 0).
SpectralShape spectral_shape(std::span<const double> spectrum_row, double bin_hz);

// Fraction of adjacent sample pairs with a strict sign change, per frame
// of the raw (unwindowed) signal.
std::vector<double> zero_crossing_rate(const Matrix& raw_frames);

// Moving RMS of the signal over consecutive hop-length cells; one value
// per cell, timestamped at cell centers.
std::vector<double> amplitude_envelope(const AudioClip& clip, const AnalysisConfig& cfg);

}  // namespace tabla
