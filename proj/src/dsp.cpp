#include "tabla/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tabla/error.hpp"
#include "tabla/fsutil.hpp"

namespace tabla {

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw Error("fft: size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

int AnalysisConfig::window_length(int sample_rate) const {
  return std::max(1, static_cast<int>(std::lround(window_ms * 1e-3 * sample_rate)));
}

int AnalysisConfig::hop_length(int sample_rate) const {
  return std::max(1, static_cast<int>(std::lround(hop_ms * 1e-3 * sample_rate)));
}

int AnalysisConfig::effective_fft_size(int sample_rate) const {
  if (fft_size > 0) return fft_size;
  int n = 1;
  while (n < window_length(sample_rate)) n <<= 1;
  return n;
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i)
    w[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / static_cast<double>(length));
  return w;
}

Matrix frame_signal(const AudioClip& clip, const AnalysisConfig& cfg, bool windowed) {
  const int win = cfg.window_length(clip.sample_rate);
  const int hop = cfg.hop_length(clip.sample_rate);
  if (hop > win) throw Error("frame_signal: hop exceeds window length");

  const auto n = static_cast<long>(clip.samples.size());
  const long n_frames = n >= win ? (n - win) / hop + 1 : 1;  // short clip: one padded frame

  const std::vector<double> w = windowed ? hann_window(win) : std::vector<double>();
  Matrix frames(static_cast<std::size_t>(n_frames), static_cast<std::size_t>(win));
  for (long f = 0; f < n_frames; ++f) {
    const long start = f * hop;
    auto row = frames.row(static_cast<std::size_t>(f));
    for (int i = 0; i < win; ++i) {
      const long idx = start + i;
      double s = idx < n ? clip.samples[static_cast<std::size_t>(idx)] : 0.0;
      if (windowed) s *= w[static_cast<std::size_t>(i)];
      row[static_cast<std::size_t>(i)] = s;
    }
  }
  return frames;
}

namespace {

void spectrogram_one_frame(std::span<const double> frame, int fft_size,
                           std::span<double> out_mags) {
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(fft_size));
  const std::size_t copy = std::min(frame.size(), buf.size());
  for (std::size_t i = 0; i < copy; ++i) buf[i] = frame[i];
  fft_inplace(buf);
  for (std::size_t k = 0; k < out_mags.size(); ++k) out_mags[k] = std::abs(buf[k]);
}

Spectrogram spectrogram_shell(const Matrix& frames, const AnalysisConfig& cfg, int sample_rate) {
  if (frames.rows == 0) throw Error("magnitude_spectrogram: no frames");
  const int fft_size = cfg.effective_fft_size(sample_rate);
  if (static_cast<int>(frames.cols) > fft_size)
    throw Error("magnitude_spectrogram: fft size smaller than window");

  Spectrogram spec;
  spec.bin_hz = static_cast<double>(sample_rate) / fft_size;
  spec.mags = Matrix(frames.rows, static_cast<std::size_t>(fft_size / 2 + 1));
  const int hop = cfg.hop_length(sample_rate);
  const double half_win = 0.5 * static_cast<double>(frames.cols);
  spec.frame_times.resize(frames.rows);
  for (std::size_t f = 0; f < frames.rows; ++f)
    spec.frame_times[f] = (static_cast<double>(f) * hop + half_win) / sample_rate;
  return spec;
}

}  // namespace

Spectrogram magnitude_spectrogram(const Matrix& frames, const AnalysisConfig& cfg,
                                  int sample_rate) {
  Spectrogram spec = spectrogram_shell(frames, cfg, sample_rate);
  const int fft_size = cfg.effective_fft_size(sample_rate);
  const auto n = static_cast<long>(frames.rows);
#pragma omp parallel for schedule(static)
  for (long f = 0; f < n; ++f)
    spectrogram_one_frame(frames.row(static_cast<std::size_t>(f)), fft_size,
                          spec.mags.row(static_cast<std::size_t>(f)));
  return spec;
}

Spectrogram magnitude_spectrogram_serial(const Matrix& frames, const AnalysisConfig& cfg,
                                         int sample_rate) {
  Spectrogram spec = spectrogram_shell(frames, cfg, sample_rate);
  const int fft_size = cfg.effective_fft_size(sample_rate);
  for (std::size_t f = 0; f < frames.rows; ++f)
    spectrogram_one_frame(frames.row(f), fft_size, spec.mags.row(f));
  return spec;
}

std::vector<double> band_energy(const Spectrogram& spec, const Band& band) {
  std::size_t lo = spec.n_bins(), hi = 0;
  for (std::size_t k = 0; k < spec.n_bins(); ++k) {
    const double f = static_cast<double>(k) * spec.bin_hz;
    if (f >= band.low_hz && f < band.high_hz) {
      lo = std::min(lo, k);
      hi = std::max(hi, k + 1);
    }
  }
  if (lo >= hi)
    throw Error(strprintf("band_energy: band [%g, %g) Hz covers no spectrogram bins",
                          band.low_hz, band.high_hz));

  std::vector<double> energy(spec.n_frames());
  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    const auto row = spec.mags.row(t);
    double acc = 0.0;
    for (std::size_t k = lo; k < hi; ++k) acc += row[k] * row[k];
    energy[t] = acc;
  }
  return energy;
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

Matrix mel_filterbank(int n_bands, int n_bins, double bin_hz, double nyquist_hz) {
  std::vector<double> edges(static_cast<std::size_t>(n_bands) + 2);
  const double mel_max = hz_to_mel(nyquist_hz);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / (n_bands + 1));

  Matrix fb(static_cast<std::size_t>(n_bands), static_cast<std::size_t>(n_bins));
  for (int m = 0; m < n_bands; ++m) {
    const double f_lo = edges[static_cast<std::size_t>(m)];
    const double f_c = edges[static_cast<std::size_t>(m) + 1];
    const double f_hi = edges[static_cast<std::size_t>(m) + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > f_lo && f < f_c)
        w = (f - f_lo) / (f_c - f_lo);
      else if (f >= f_c && f < f_hi)
        w = (f_hi - f) / (f_hi - f_c);
      fb.at(static_cast<std::size_t>(m), static_cast<std::size_t>(k)) = w;
    }
  }
  return fb;
}

std::vector<double> mfcc_from_mel_energies(std::span<const double> mel_energies, int n_mfcc,
                                           double log_floor) {
  const std::size_t m = mel_energies.size();
  std::vector<double> logs(m);
  for (std::size_t i = 0; i < m; ++i) logs[i] = std::log(std::max(mel_energies[i], log_floor));

  // orthonormal DCT-II
  std::vector<double> out(static_cast<std::size_t>(n_mfcc), 0.0);
  for (int k = 0; k < n_mfcc; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      acc += logs[i] * std::cos(std::numbers::pi * k * (static_cast<double>(i) + 0.5) /
                                static_cast<double>(m));
    const double scale = k == 0 ? std::sqrt(1.0 / static_cast<double>(m))
                                : std::sqrt(2.0 / static_cast<double>(m));
    out[static_cast<std::size_t>(k)] = acc * scale;
  }
  return out;
}

Matrix mfcc(const Spectrogram& spec, const AnalysisConfig& cfg, int sample_rate) {
  if (cfg.n_mfcc > cfg.n_mel_bands) throw Error("mfcc: n_mfcc exceeds n_mel_bands");
  const Matrix fb = mel_filterbank(cfg.n_mel_bands, static_cast<int>(spec.n_bins()), spec.bin_hz,
                                   sample_rate / 2.0);

  Matrix out(spec.n_frames(), static_cast<std::size_t>(cfg.n_mfcc));
  std::vector<double> mel(static_cast<std::size_t>(cfg.n_mel_bands));
  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    const auto row = spec.mags.row(t);
    for (int m = 0; m < cfg.n_mel_bands; ++m) {
      const auto w = fb.row(static_cast<std::size_t>(m));
      double acc = 0.0;
      for (std::size_t k = 0; k < row.size(); ++k) acc += w[k] * row[k] * row[k];
      mel[static_cast<std::size_t>(m)] = acc;
    }
    const auto coeffs = mfcc_from_mel_energies(mel, cfg.n_mfcc, cfg.log_floor);
    std::copy(coeffs.begin(), coeffs.end(), out.row(t).begin());
  }
  return out;
}

SpectralShape spectral_shape(std::span<const double> spectrum_row, double bin_hz) {
  double total = 0.0;
  for (double m : spectrum_row) total += m;
  if (total <= 0.0) return {0.0, 0.0, 0.0};

  double centroid = 0.0;
  for (std::size_t k = 0; k < spectrum_row.size(); ++k)
    centroid += (spectrum_row[k] / total) * (static_cast<double>(k) * bin_hz);

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t k = 0; k < spectrum_row.size(); ++k) {
    const double p = spectrum_row[k] / total;
    const double d = static_cast<double>(k) * bin_hz - centroid;
    m2 += p * d * d;
    m3 += p * d * d * d;
    m4 += p * d * d * d * d;
  }
  if (m2 <= 1e-9) return {centroid, 0.0, 0.0};  // all mass in one bin
  return {centroid, m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

std::vector<double> zero_crossing_rate(const Matrix& raw_frames) {
  if (raw_frames.cols < 2) throw Error("zero_crossing_rate: frames shorter than 2 samples");
  std::vector<double> zcr(raw_frames.rows);
  for (std::size_t f = 0; f < raw_frames.rows; ++f) {
    const auto row = raw_frames.row(f);
    int crossings = 0;
    for (std::size_t i = 0; i + 1 < row.size(); ++i)
      if (row[i] * row[i + 1] < 0.0) ++crossings;
    zcr[f] = static_cast<double>(crossings) / static_cast<double>(row.size() - 1);
  }
  return zcr;
}

std::vector<double> amplitude_envelope(const AudioClip& clip, const AnalysisConfig& cfg) {
  if (clip.samples.empty()) throw Error("amplitude_envelope: empty clip");
  const auto hop = static_cast<std::size_t>(cfg.hop_length(clip.sample_rate));
  const std::size_t n_cells = (clip.samples.size() + hop - 1) / hop;
  std::vector<double> env(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    const std::size_t start = c * hop;
    const std::size_t end = std::min(start + hop, clip.samples.size());
    double acc = 0.0;
    for (std::size_t i = start; i < end; ++i) acc += clip.samples[i] * clip.samples[i];
    env[c] = std::sqrt(acc / static_cast<double>(end - start));
  }
  return env;
}

}  // namespace tabla
