#include "tabla/augment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <set>

#include "tabla/dsp.hpp"
#include "tabla/error.hpp"
#include "tabla/rng.hpp"

namespace tabla {

std::vector<int> StrokeDataset::class_counts() const {
  std::vector<int> counts(kNumClasses, 0);
  for (const auto& row : rows) ++counts[static_cast<std::size_t>(row.label)];
  return counts;
}

std::vector<std::string> StrokeDataset::tabla_sets() const {
  std::set<std::string> s;
  for (const auto& row : rows) s.insert(row.tabla_set);
  return {s.begin(), s.end()};
}

AugmentStrategy parse_strategy(const std::string& s) {
  if (s == "none") return AugmentStrategy::None;
  if (s == "oversample") return AugmentStrategy::Oversample;
  if (s == "smote") return AugmentStrategy::Smote;
  if (s == "pitch") return AugmentStrategy::Pitch;
  if (s == "pitch+oversample") return AugmentStrategy::PitchOversample;
  if (s == "pitch+smote") return AugmentStrategy::PitchSmote;
  throw Error("unknown augmentation strategy '" + s +
              "' (none, oversample, smote, pitch, pitch+oversample, pitch+smote)");
}

std::string to_string(AugmentStrategy s) {
  switch (s) {
    case AugmentStrategy::None: return "none";
    case AugmentStrategy::Oversample: return "oversample";
    case AugmentStrategy::Smote: return "smote";
    case AugmentStrategy::Pitch: return "pitch";
    case AugmentStrategy::PitchOversample: return "pitch+oversample";
    case AugmentStrategy::PitchSmote: return "pitch+smote";
  }
  return "none";
}

namespace {

constexpr int kVocoderWin = 1024;
constexpr int kVocoderHop = 256;

double princarg(double phase) {
  const double two_pi = 2.0 * std::numbers::pi;
  return phase - two_pi * std::round(phase / two_pi);
}

// STFT magnitudes/phases at a fixed hop, signal padded by half a window
// on both sides so the edges reconstruct.
struct Stft {
  std::vector<std::vector<std::complex<double>>> frames;
  std::size_t padded_len = 0;
};

Stft stft(const std::vector<double>& x) {
  const std::vector<double> win = hann_window(kVocoderWin);
  std::vector<double> padded(x.size() + kVocoderWin, 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + kVocoderWin / 2);

  Stft out;
  out.padded_len = padded.size();
  const std::size_t n_frames = (padded.size() - kVocoderWin) / kVocoderHop + 1;
  out.frames.resize(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    auto& buf = out.frames[f];
    buf.resize(kVocoderWin);
    const std::size_t start = f * kVocoderHop;
    for (int i = 0; i < kVocoderWin; ++i)
      buf[static_cast<std::size_t>(i)] =
          padded[start + static_cast<std::size_t>(i)] * win[static_cast<std::size_t>(i)];
    fft_inplace(buf);
  }
  return out;
}

std::vector<double> istft(const std::vector<std::vector<std::complex<double>>>& frames,
                          std::size_t out_len) {
  const std::vector<double> win = hann_window(kVocoderWin);
  const std::size_t padded_len = (frames.size() - 1) * kVocoderHop + kVocoderWin;
  std::vector<double> acc(padded_len, 0.0), norm(padded_len, 0.0);

  std::vector<std::complex<double>> buf;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    buf = frames[f];
    fft_inplace(buf, /*inverse=*/true);
    const std::size_t start = f * kVocoderHop;
    for (int i = 0; i < kVocoderWin; ++i) {
      acc[start + static_cast<std::size_t>(i)] +=
          buf[static_cast<std::size_t>(i)].real() * win[static_cast<std::size_t>(i)];
      norm[start + static_cast<std::size_t>(i)] +=
          win[static_cast<std::size_t>(i)] * win[static_cast<std::size_t>(i)];
    }
  }
  for (std::size_t i = 0; i < padded_len; ++i)
    if (norm[i] > 1e-9) acc[i] /= norm[i];

  std::vector<double> out(out_len, 0.0);
  for (std::size_t i = 0; i < out_len && i + kVocoderWin / 2 < padded_len; ++i)
    out[i] = acc[i + kVocoderWin / 2];
  return out;
}

// Time-stretch by `stretch` (output duration / input duration) with the
// standard magnitude-interpolating, phase-accumulating vocoder.
std::vector<double> phase_vocoder_stretch(const std::vector<double>& x, double stretch) {
  const Stft analysis = stft(x);
  const std::size_t n_in = analysis.frames.size();
  if (n_in < 2) return x;

  const double step = 1.0 / stretch;
  std::vector<double> positions;
  for (double p = 0.0; p < static_cast<double>(n_in - 1); p += step) positions.push_back(p);

  const int n_bins = kVocoderWin;
  std::vector<double> phase(static_cast<std::size_t>(n_bins));
  for (int k = 0; k < n_bins; ++k)
    phase[static_cast<std::size_t>(k)] = std::arg(analysis.frames[0][static_cast<std::size_t>(k)]);

  std::vector<std::vector<std::complex<double>>> out_frames(positions.size());
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const double p = positions[j];
    const auto i0 = static_cast<std::size_t>(p);
    const double frac = p - static_cast<double>(i0);
    const auto& a = analysis.frames[i0];
    const auto& b = analysis.frames[std::min(i0 + 1, n_in - 1)];

    auto& frame = out_frames[j];
    frame.resize(static_cast<std::size_t>(n_bins));
    for (int k = 0; k < n_bins; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const double mag = (1.0 - frac) * std::abs(a[ks]) + frac * std::abs(b[ks]);
      frame[ks] = std::polar(mag, phase[ks]);
      // bins above Nyquist mirror the conjugate structure automatically
      // because we synthesize them the same way from the full spectrum
      const double bin_freq =
          2.0 * std::numbers::pi * static_cast<double>(k <= n_bins / 2 ? k : k - n_bins) /
          n_bins;
      const double expected = bin_freq * kVocoderHop;
      const double dphi = princarg(std::arg(b[ks]) - std::arg(a[ks]) - expected);
      phase[ks] += expected + dphi;
    }
  }

  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * stretch));
  return istft(out_frames, out_len);
}

}  // namespace

std::vector<double> pitch_shift(const std::vector<double>& samples, int sample_rate,
                                double semitones) {
  (void)sample_rate;
  if (std::abs(semitones) > 12.0) throw Error("pitch_shift: |semitones| must be <= 12");
  if (samples.empty()) throw Error("pitch_shift: empty audio");
  if (semitones == 0.0) return samples;
  if (samples.size() < 2 * kVocoderWin) {
    // too short for the vocoder frame grid; plain resample changes pitch
    // and the length restore keeps duration
    const double factor = std::pow(2.0, semitones / 12.0);
    const auto stretched = resample_to_length(
        samples, static_cast<std::size_t>(std::llround(samples.size() * factor)));
    return resample_to_length(stretched, samples.size());
  }

  const double factor = std::pow(2.0, semitones / 12.0);  // frequency ratio
  const std::vector<double> stretched = phase_vocoder_stretch(samples, factor);
  return resample_to_length(stretched, samples.size());
}

StrokeDataset augment_pitch(const StrokeDataset& ds, const AugmentConfig& cfg,
                            const FeatureConfig& fcfg) {
  StrokeDataset out = ds;
  if (cfg.pitch_levels.empty()) return out;
  for (double s : cfg.pitch_levels)
    if (s == 0.0) throw Error("augment_pitch: pitch level 0 is not a shift");

  // collect targets first so appended rows are not re-augmented
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& row = ds.rows[i];
    if (std::find(cfg.pitch_categories.begin(), cfg.pitch_categories.end(), row.label) ==
        cfg.pitch_categories.end())
      continue;
    if (!row.audio)
      throw Error("augment_pitch: row " + std::to_string(i) + " (" + to_string(row.label) +
                  ") has no audio reference");
    targets.push_back(i);
  }

  struct Generated {
    std::size_t source;
    std::vector<StrokeRow> rows;
  };
  std::vector<Generated> generated(targets.size());

  const auto n_targets = static_cast<long>(targets.size());
#pragma omp parallel for schedule(dynamic)
  for (long ti = 0; ti < n_targets; ++ti) {
    const std::size_t i = targets[static_cast<std::size_t>(ti)];
    const StrokeRow& row = ds.rows[i];
    Generated g;
    g.source = i;
    for (double semitones : cfg.pitch_levels) {
      auto shifted = std::make_shared<AudioClip>();
      shifted->sample_rate = row.audio->sample_rate;
      shifted->samples = pitch_shift(row.audio->samples, row.audio->sample_rate, semitones);

      StrokeSegment seg;
      seg.clip = *shifted;
      StrokeRow nr = row;
      nr.synthetic = true;
      nr.audio = shifted;
      nr.parent_a = static_cast<int>(i);
      nr.parent_b = -1;
      nr.features = extract_features(seg, nullptr, fcfg);
      // the previous stroke is unchanged, so deltas are rebuilt against
      // the parent's implied previous-stroke values
      for (const DeltaPair& p : delta_pairs()) {
        const double prev_value = row.features[static_cast<std::size_t>(p.source)] -
                                  row.features[static_cast<std::size_t>(p.delta)];
        nr.features[static_cast<std::size_t>(p.delta)] =
            nr.features[static_cast<std::size_t>(p.source)] - prev_value;
      }
      g.rows.push_back(std::move(nr));
    }
    generated[static_cast<std::size_t>(ti)] = std::move(g);
  }

  for (auto& g : generated)
    for (auto& row : g.rows) out.rows.push_back(std::move(row));
  return out;
}

StrokeDataset oversample_repeat(const StrokeDataset& ds) {
  if (ds.rows.empty()) throw Error("oversample_repeat: empty dataset");
  const std::vector<int> counts = ds.class_counts();
  const int majority = *std::max_element(counts.begin(), counts.end());

  std::vector<std::vector<std::size_t>> by_class(kNumClasses);
  for (std::size_t i = 0; i < ds.rows.size(); ++i)
    by_class[static_cast<std::size_t>(ds.rows[i].label)].push_back(i);

  StrokeDataset out = ds;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& members = by_class[static_cast<std::size_t>(c)];
    if (members.empty()) continue;
    const int needed = majority - static_cast<int>(members.size());
    for (int j = 0; j < needed; ++j) {
      StrokeRow copy = ds.rows[members[static_cast<std::size_t>(j) % members.size()]];
      copy.synthetic = true;
      out.rows.push_back(std::move(copy));
    }
  }
  return out;
}

namespace {

// z-scoring over the whole (training) dataset so neighbor distances are
// not dominated by the large-scale energy features
struct ZScale {
  std::array<double, kNumFeatures> mean{};
  std::array<double, kNumFeatures> inv_std{};
};

ZScale fit_zscale(const StrokeDataset& ds) {
  ZScale z;
  const double n = static_cast<double>(ds.rows.size());
  for (const auto& row : ds.rows)
    for (int f = 0; f < kNumFeatures; ++f) z.mean[static_cast<std::size_t>(f)] += row.features[static_cast<std::size_t>(f)];
  for (auto& m : z.mean) m /= n;
  std::array<double, kNumFeatures> var{};
  for (const auto& row : ds.rows)
    for (int f = 0; f < kNumFeatures; ++f) {
      const double d = row.features[static_cast<std::size_t>(f)] - z.mean[static_cast<std::size_t>(f)];
      var[static_cast<std::size_t>(f)] += d * d;
    }
  for (int f = 0; f < kNumFeatures; ++f) {
    const double s = std::sqrt(var[static_cast<std::size_t>(f)] / n);
    z.inv_std[static_cast<std::size_t>(f)] = s > 1e-12 ? 1.0 / s : 0.0;  // constant feature: no weight
  }
  return z;
}

double zdist2(const FeatureVector& a, const FeatureVector& b, const ZScale& z) {
  double acc = 0.0;
  for (int f = 0; f < kNumFeatures; ++f) {
    const auto fs = static_cast<std::size_t>(f);
    const double d = (a[fs] - b[fs]) * z.inv_std[fs];
    acc += d * d;
  }
  return acc;
}

}  // namespace

StrokeDataset smote(const StrokeDataset& ds, const AugmentConfig& cfg, std::uint64_t seed) {
  if (ds.rows.empty()) throw Error("smote: empty dataset");
  if (cfg.smote_k < 1) throw Error("smote: k must be >= 1");

  const std::vector<int> counts = ds.class_counts();
  const int majority = *std::max_element(counts.begin(), counts.end());
  const ZScale z = fit_zscale(ds);

  std::vector<std::vector<std::size_t>> by_class(kNumClasses);
  for (std::size_t i = 0; i < ds.rows.size(); ++i)
    by_class[static_cast<std::size_t>(ds.rows[i].label)].push_back(i);

  StrokeDataset out = ds;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& members = by_class[static_cast<std::size_t>(c)];
    if (members.empty()) continue;
    const int needed = majority - static_cast<int>(members.size());
    if (needed <= 0) continue;

    if (members.size() == 1) {
      std::fprintf(stderr,
                   "smote: class %s has a single sample; falling back to repetition\n",
                   stroke_names()[static_cast<std::size_t>(c)].c_str());
      for (int j = 0; j < needed; ++j) {
        StrokeRow copy = ds.rows[members[0]];
        copy.synthetic = true;
        out.rows.push_back(std::move(copy));
      }
      continue;
    }

    const int k_eff = std::min<int>(cfg.smote_k, static_cast<int>(members.size()) - 1);

    // k nearest same-class neighbors per member
    std::vector<std::vector<std::size_t>> neighbors(members.size());
    for (std::size_t a = 0; a < members.size(); ++a) {
      std::vector<std::pair<double, std::size_t>> dists;
      dists.reserve(members.size() - 1);
      for (std::size_t b = 0; b < members.size(); ++b) {
        if (a == b) continue;
        dists.emplace_back(zdist2(ds.rows[members[a]].features, ds.rows[members[b]].features, z),
                           members[b]);
      }
      std::sort(dists.begin(), dists.end());
      for (int j = 0; j < k_eff; ++j) neighbors[a].push_back(dists[static_cast<std::size_t>(j)].second);
    }

    for (int j = 0; j < needed; ++j) {
      Rng rng(mix64(seed, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(j)));
      const std::size_t base_pos = static_cast<std::size_t>(j) % members.size();
      const std::size_t base = members[base_pos];
      const std::size_t nn = neighbors[base_pos][rng.below(static_cast<std::size_t>(k_eff))];
      const double u = rng.unit();

      StrokeRow row = ds.rows[base];
      row.synthetic = true;
      row.audio.reset();
      row.parent_a = static_cast<int>(base);
      row.parent_b = static_cast<int>(nn);
      for (int f = 0; f < kNumFeatures; ++f) {
        const auto fs = static_cast<std::size_t>(f);
        row.features[fs] = ds.rows[base].features[fs] +
                           u * (ds.rows[nn].features[fs] - ds.rows[base].features[fs]);
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

StrokeDataset apply_augmentation(const StrokeDataset& ds, const AugmentConfig& cfg,
                                 const FeatureConfig& fcfg, std::uint64_t seed) {
  switch (cfg.strategy) {
    case AugmentStrategy::None:
      return ds;
    case AugmentStrategy::Oversample:
      return oversample_repeat(ds);
    case AugmentStrategy::Smote:
      return smote(ds, cfg, seed);
    case AugmentStrategy::Pitch:
      return augment_pitch(ds, cfg, fcfg);
    case AugmentStrategy::PitchOversample:
      return oversample_repeat(augment_pitch(ds, cfg, fcfg));
    case AugmentStrategy::PitchSmote:
      return smote(augment_pitch(ds, cfg, fcfg), cfg, seed);
  }
  return ds;
}

}  // namespace tabla
