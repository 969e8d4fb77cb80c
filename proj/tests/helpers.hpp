#pragma once

// Shared test utilities. The oracles here (Goertzel scan, brute-force
// matching) are deliberately independent of the library code paths they
// check.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <unistd.h>
#include <vector>

#include "tabla/audio.hpp"

namespace testutil {

inline std::vector<double> tone(double freq_hz, double duration_s, int rate, double amp = 0.5,
                                double phase = 0.1) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  std::vector<double> x(n);
  const double w = 2.0 * std::numbers::pi * freq_hz / rate;
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(w * static_cast<double>(i) + phase);
  return x;
}

inline tabla::AudioClip tone_clip(double freq_hz, double duration_s, int rate, double amp = 0.5) {
  tabla::AudioClip c;
  c.sample_rate = rate;
  c.samples = tone(freq_hz, duration_s, rate, amp);
  return c;
}

// Hann-windowed Goertzel power at one frequency; leakage-safe enough to
// compare peaks tens of dB apart.
inline double goertzel_power(std::span<const double> x, int rate, double freq_hz) {
  const std::size_t n = x.size();
  const double w = 2.0 * std::numbers::pi * freq_hz / rate;
  const double c = 2.0 * std::cos(w);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double win =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
    const double s0 = x[i] * win + c * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  return s1 * s1 + s2 * s2 - c * s1 * s2;
}

// argmax of Goertzel power over [lo, hi] at the given step
inline double peak_frequency(std::span<const double> x, int rate, double lo, double hi,
                             double step) {
  double best_f = lo, best_p = -1.0;
  for (double f = lo; f <= hi; f += step) {
    const double p = goertzel_power(x, rate, f);
    if (p > best_p) {
      best_p = p;
      best_f = f;
    }
  }
  return best_f;
}

// Exhaustive maximum matching between pred and truth within tolerance;
// exponential, fine for the <=6-onset oracle instances.
inline int brute_force_max_matching(const std::vector<double>& pred,
                                    const std::vector<double>& truth, double tol) {
  std::vector<char> used(pred.size(), 0);
  auto rec = [&](auto&& self, std::size_t j) -> int {
    if (j == truth.size()) return 0;
    int best = self(self, j + 1);  // leave truth j unmatched
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (used[i] || std::abs(pred[i] - truth[j]) > tol) continue;
      used[i] = 1;
      best = std::max(best, 1 + self(self, j + 1));
      used[i] = 0;
    }
    return best;
  };
  return rec(rec, 0);
}

// Unique scratch directory per test binary run, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tablatrans_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

// Raw WAV byte writer independent of tabla::save_wav.
inline void write_wav_bytes(const std::filesystem::path& path, int rate, int channels, int bits,
                            int format_tag, const std::vector<double>& interleaved) {
  auto put16 = [](std::string& s, int v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
  };
  auto put32 = [](std::string& s, long v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  const int bytes = bits / 8;
  const long data_len = static_cast<long>(interleaved.size()) * bytes;
  std::string out = "RIFF";
  put32(out, 36 + data_len);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, format_tag);
  put16(out, channels);
  put32(out, rate);
  put32(out, static_cast<long>(rate) * channels * bytes);
  put16(out, channels * bytes);
  put16(out, bits);
  out += "data";
  put32(out, data_len);
  for (double v : interleaved) {
    if (bits == 16) {
      const auto q = static_cast<std::int16_t>(std::lrint(std::clamp(v, -1.0, 1.0) * 32767.0));
      put16(out, static_cast<std::uint16_t>(q));
    } else if (format_tag == 3) {
      const float f = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put32(out, static_cast<long>(u));
    } else {
      put32(out, std::lrint(v * 2147483647.0));  // PCM32, only for header-error tests
    }
  }
  std::ofstream(path, std::ios::binary) << out;
}

inline double db_ratio(double power_a, double power_b) {
  return 10.0 * std::log10(power_a / power_b);
}

}  // namespace testutil
