#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tabla {

// Mono audio at a known rate; the unit of ingestion for the whole
// pipeline. Samples are amplitudes in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;
  std::string source_path;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// RIFF/WAVE reader. Accepts PCM 16-bit and IEEE float 32-bit, 1 or 2
// channels; stereo is averaged to mono. Anything else is rejected with
// an error naming the offending header field.
AudioClip load_wav(const std::filesystem::path& path);

enum class WavFormat { Pcm16, Float32 };

void save_wav(const AudioClip& clip, const std::filesystem::path& path,
              WavFormat format = WavFormat::Float32);

// Band-limited resampling with a 64-tap windowed-sinc kernel. Output
// length is round(n * target_rate / source_rate). Resampling to the
// source rate returns the clip unchanged.
AudioClip resample(const AudioClip& clip, int target_rate);

// Same kernel, arbitrary ratio: produces exactly n_out samples spanning
// the input. Used by the pitch shifter to restore segment length.
std::vector<double> resample_to_length(const std::vector<double>& in, std::size_t n_out);

}  // namespace tabla
