#include "tabla/features.hpp"

#include <algorithm>
#include <cmath>

#include "tabla/error.hpp"

namespace tabla {

namespace {

enum FeatureId : int {
  kCentroidMean = 0,
  kCentroidStd,
  kSkewMean,
  kSkewStd,
  kKurtMean,
  kKurtStd,
  kMfcc0,  // ..kMfcc0 + 12
  kFluxMaxBass = kMfcc0 + 13,
  kFluxMaxTreble,
  kEnergySumBass,
  kEnergySumTreble,
  kEnergyMeanBass,
  kEnergyMeanTreble,
  kEnergyStdBass,
  kEnergyStdTreble,
  kLogAttackTime,
  kTemporalCentroid,
  kZcrMean,
  kZcrStd,
  kEarlySlopeBass,
  kEarlySlopeTreble,
  kEarlyIcptBass,
  kEarlyIcptTreble,
  kLateSlopeBass,
  kLateSlopeTreble,
  kLateIcptBass,
  kLateIcptTreble,
  kR2HmeanBass,
  kR2HmeanTreble,
  kKnotLocBass,
  kKnotLocTreble,
  kDeltaEnergySumBass,
  kDeltaEnergySumTreble,
  kDeltaEnergyMeanBass,
  kDeltaEnergyMeanTreble,
  kDeltaLateSlopeBass,
  kDeltaLateSlopeTreble,
};

static_assert(kDeltaLateSlopeTreble == kNumFeatures - 1);

}  // namespace

const std::array<std::string, kNumFeatures>& feature_names() {
  static const std::array<std::string, kNumFeatures> names = [] {
    std::array<std::string, kNumFeatures> n;
    n[kCentroidMean] = "centroid_mean";
    n[kCentroidStd] = "centroid_std";
    n[kSkewMean] = "skew_mean";
    n[kSkewStd] = "skew_std";
    n[kKurtMean] = "kurt_mean";
    n[kKurtStd] = "kurt_std";
    for (int i = 0; i < 13; ++i) n[kMfcc0 + i] = "mfcc_mean_" + std::to_string(i);
    n[kFluxMaxBass] = "flux_max_bass";
    n[kFluxMaxTreble] = "flux_max_treble";
    n[kEnergySumBass] = "energy_sum_bass";
    n[kEnergySumTreble] = "energy_sum_treble";
    n[kEnergyMeanBass] = "energy_mean_bass";
    n[kEnergyMeanTreble] = "energy_mean_treble";
    n[kEnergyStdBass] = "energy_std_bass";
    n[kEnergyStdTreble] = "energy_std_treble";
    n[kLogAttackTime] = "log_attack_time";
    n[kTemporalCentroid] = "temporal_centroid";
    n[kZcrMean] = "zcr_mean";
    n[kZcrStd] = "zcr_std";
    n[kEarlySlopeBass] = "early_slope_bass";
    n[kEarlySlopeTreble] = "early_slope_treble";
    n[kEarlyIcptBass] = "early_icpt_bass";
    n[kEarlyIcptTreble] = "early_icpt_treble";
    n[kLateSlopeBass] = "late_slope_bass";
    n[kLateSlopeTreble] = "late_slope_treble";
    n[kLateIcptBass] = "late_icpt_bass";
    n[kLateIcptTreble] = "late_icpt_treble";
    n[kR2HmeanBass] = "r2_hmean_bass";
    n[kR2HmeanTreble] = "r2_hmean_treble";
    n[kKnotLocBass] = "knot_loc_bass";
    n[kKnotLocTreble] = "knot_loc_treble";
    n[kDeltaEnergySumBass] = "delta_energy_sum_bass";
    n[kDeltaEnergySumTreble] = "delta_energy_sum_treble";
    n[kDeltaEnergyMeanBass] = "delta_energy_mean_bass";
    n[kDeltaEnergyMeanTreble] = "delta_energy_mean_treble";
    n[kDeltaLateSlopeBass] = "delta_late_slope_bass";
    n[kDeltaLateSlopeTreble] = "delta_late_slope_treble";
    return n;
  }();
  return names;
}

int feature_index(const std::string& name) {
  const auto& names = feature_names();
  for (int i = 0; i < kNumFeatures; ++i)
    if (names[static_cast<std::size_t>(i)] == name) return i;
  return -1;
}

const std::array<DeltaPair, 6>& delta_pairs() {
  static const std::array<DeltaPair, 6> pairs = {{
      {kEnergySumBass, kDeltaEnergySumBass},
      {kEnergySumTreble, kDeltaEnergySumTreble},
      {kEnergyMeanBass, kDeltaEnergyMeanBass},
      {kEnergyMeanTreble, kDeltaEnergyMeanTreble},
      {kLateSlopeBass, kDeltaLateSlopeBass},
      {kLateSlopeTreble, kDeltaLateSlopeTreble},
  }};
  return pairs;
}

std::vector<StrokeSegment> segment_strokes(const OnsetList& onsets, const AudioClip& clip,
                                           double last_segment_cap_s) {
  std::vector<StrokeSegment> segments;
  if (onsets.empty()) return segments;
  const double clip_end = clip.duration_s();

  for (std::size_t i = 0; i < onsets.size(); ++i) {
    const double start = onsets[i];
    const double end = i + 1 < onsets.size() ? onsets[i + 1]
                                             : std::min(clip_end, start + last_segment_cap_s);
    if (start > clip_end)
      throw Error("segment_strokes: onset beyond the end of the clip");

    const auto a = static_cast<std::size_t>(std::lround(start * clip.sample_rate));
    const auto b = std::min(clip.samples.size(),
                            static_cast<std::size_t>(std::lround(end * clip.sample_rate)));
    StrokeSegment seg;
    seg.start_s = start;
    seg.end_s = end;
    seg.clip.sample_rate = clip.sample_rate;
    seg.clip.source_path = clip.source_path;
    seg.clip.samples.assign(clip.samples.begin() + static_cast<long>(a),
                            clip.samples.begin() + static_cast<long>(std::max(a, b)));
    if (seg.clip.samples.empty()) seg.clip.samples.push_back(0.0);
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<double> log_energy_envelope(const StrokeSegment& seg, const Band& band,
                                        const FeatureConfig& cfg) {
  const Matrix frames = frame_signal(seg.clip, cfg.analysis);
  const Spectrogram spec = magnitude_spectrogram_serial(frames, cfg.analysis, cfg.sample_rate);
  std::vector<double> energy = band_energy(spec, band);
  const double floor_log = std::log(1e-10);
  for (double& e : energy) e = std::max(std::log(std::max(e, 0.0)), floor_log);
  return energy;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

// Least squares over y[lo..hi] inclusive, x = global decay index.
LineFit fit_line(std::span<const double> y, std::size_t lo, std::size_t hi) {
  LineFit out;
  const std::size_t n = hi - lo + 1;
  if (n == 1) {
    out.intercept = y[lo] - 0.0;
    out.slope = 0.0;
    out.r2 = 1.0;
    return out;
  }
  double sx = 0, sy = 0;
  for (std::size_t i = lo; i <= hi; ++i) {
    sx += static_cast<double>(i);
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = lo; i <= hi; ++i) {
    const double dx = static_cast<double>(i) - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  out.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  out.intercept = my - out.slope * mx;
  if (syy <= 0.0) {
    out.r2 = 1.0;  // zero variance in y: perfect by definition
  } else {
    double ss_res = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
      const double r = y[i] - (out.slope * static_cast<double>(i) + out.intercept);
      ss_res += r * r;
    }
    out.r2 = std::max(0.0, 1.0 - ss_res / syy);
  }
  return out;
}

double harmonic_mean(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

}  // namespace

DecayFit spline_decay_fit(std::span<const double> log_env, int min_seg) {
  if (log_env.empty()) throw Error("spline_decay_fit: empty envelope");

  // decay portion: from the (first) global max to the end
  std::size_t peak = 0;
  for (std::size_t i = 1; i < log_env.size(); ++i)
    if (log_env[i] > log_env[peak]) peak = i;
  const std::span<const double> y = log_env.subspan(peak);
  const std::size_t m = y.size();
  const auto ms = static_cast<std::size_t>(min_seg);

  DecayFit fit;
  if (m < 2 * ms) {
    // too short: one line, knot at the midpoint
    const LineFit single = m >= 1 ? fit_line(y, 0, m - 1) : LineFit{};
    fit.early_slope = fit.late_slope = single.slope;
    fit.early_intercept = fit.late_intercept = single.intercept;
    fit.r2_hmean = single.r2;
    fit.knot_index = m / 2;
    fit.degraded = true;
    return fit;
  }

  double best_score = -1.0;
  for (std::size_t k = ms; k + ms <= m; ++k) {
    const LineFit early = fit_line(y, 0, k);  // knot shared by both sides
    const LineFit late = fit_line(y, k, m - 1);
    const double score = harmonic_mean(early.r2, late.r2);
    if (score > best_score) {  // ties keep the earliest knot
      best_score = score;
      fit.early_slope = early.slope;
      fit.early_intercept = early.intercept;
      fit.late_slope = late.slope;
      fit.late_intercept = late.intercept;
      fit.r2_hmean = score;
      fit.knot_index = k;
    }
  }
  return fit;
}

double log_attack_time(std::span<const double> envelope, double hop_s) {
  double peak = 0.0;
  std::size_t peak_i = 0;
  for (std::size_t i = 0; i < envelope.size(); ++i)
    if (envelope[i] > peak) {
      peak = envelope[i];
      peak_i = i;
    }
  if (peak <= 0.0 || envelope.empty()) return std::log10(hop_s);

  auto first_crossing = [&](double level) {
    for (std::size_t i = 0; i <= peak_i; ++i)
      if (envelope[i] >= level) return i;
    return peak_i;
  };
  const std::size_t t20 = first_crossing(0.2 * peak);
  const std::size_t t90 = first_crossing(0.9 * peak);
  const double rise = t90 > t20 ? static_cast<double>(t90 - t20) * hop_s : hop_s;
  return std::log10(rise);
}

double temporal_centroid(std::span<const double> envelope, double hop_s) {
  double sum = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    const double t = (static_cast<double>(i) + 0.5) * hop_s;
    sum += envelope[i];
    weighted += t * envelope[i];
  }
  if (sum <= 0.0) return 0.5 * static_cast<double>(envelope.size()) * hop_s;  // midpoint
  return weighted / sum;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(std::span<const double> x) {
  MeanStd out;
  if (x.empty()) return out;
  double s = 0.0;
  for (double v : x) s += v;
  out.mean = s / static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(var / static_cast<double>(x.size()));
  return out;
}

double flux_max(std::span<const double> energy) {
  double best = 0.0;
  for (std::size_t t = 1; t < energy.size(); ++t)
    best = std::max(best, std::max(0.0, energy[t] - energy[t - 1]));
  return best;
}

}  // namespace

FeatureVector extract_features(const StrokeSegment& seg, const FeatureVector* prev,
                               const FeatureConfig& cfg) {
  FeatureVector fv;

  const Matrix frames = frame_signal(seg.clip, cfg.analysis);
  const Spectrogram spec = magnitude_spectrogram_serial(frames, cfg.analysis, cfg.sample_rate);
  const std::size_t n_frames = spec.n_frames();

  // frame-wise spectral shape
  std::vector<double> centroid(n_frames), skew(n_frames), kurt(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const SpectralShape s = spectral_shape(spec.mags.row(t), spec.bin_hz);
    centroid[t] = s.centroid_hz;
    skew[t] = s.skewness;
    kurt[t] = s.kurtosis;
  }
  const MeanStd c = mean_std(centroid), sk = mean_std(skew), ku = mean_std(kurt);
  fv[kCentroidMean] = c.mean;
  fv[kCentroidStd] = c.std;
  fv[kSkewMean] = sk.mean;
  fv[kSkewStd] = sk.std;
  fv[kKurtMean] = ku.mean;
  fv[kKurtStd] = ku.std;

  // MFCC means
  const Matrix coeffs = mfcc(spec, cfg.analysis, cfg.sample_rate);
  for (int j = 0; j < cfg.analysis.n_mfcc && j < 13; ++j) {
    double s = 0.0;
    for (std::size_t t = 0; t < coeffs.rows; ++t) s += coeffs.at(t, static_cast<std::size_t>(j));
    fv[kMfcc0 + j] = s / static_cast<double>(coeffs.rows);
  }

  // band energies and flux
  const std::vector<double> bass_e = band_energy(spec, cfg.bass);
  const std::vector<double> treble_e = band_energy(spec, cfg.treble);
  fv[kFluxMaxBass] = flux_max(bass_e);
  fv[kFluxMaxTreble] = flux_max(treble_e);
  double bass_sum = 0.0, treble_sum = 0.0;
  for (double e : bass_e) bass_sum += e;
  for (double e : treble_e) treble_sum += e;
  const MeanStd bm = mean_std(bass_e), tm = mean_std(treble_e);
  fv[kEnergySumBass] = bass_sum;
  fv[kEnergySumTreble] = treble_sum;
  fv[kEnergyMeanBass] = bm.mean;
  fv[kEnergyMeanTreble] = tm.mean;
  fv[kEnergyStdBass] = bm.std;
  fv[kEnergyStdTreble] = tm.std;

  // temporal features from the amplitude envelope
  const double hop_s = cfg.analysis.hop_length(cfg.sample_rate) /
                       static_cast<double>(cfg.sample_rate);
  const std::vector<double> env = amplitude_envelope(seg.clip, cfg.analysis);
  fv[kLogAttackTime] = log_attack_time(env, hop_s);
  fv[kTemporalCentroid] = temporal_centroid(env, hop_s);

  const Matrix raw = frame_signal(seg.clip, cfg.analysis, /*windowed=*/false);
  const std::vector<double> zcr = zero_crossing_rate(raw);
  const MeanStd z = mean_std(zcr);
  fv[kZcrMean] = z.mean;
  fv[kZcrStd] = z.std;

  // band-wise log-energy decay fits
  const double floor_log = std::log(1e-10);
  auto fit_band = [&](const std::vector<double>& energy, int slope_i, int icpt_i, int late_i,
                      int licpt_i, int r2_i, int knot_i) {
    std::vector<double> log_e(energy.size());
    for (std::size_t t = 0; t < energy.size(); ++t)
      log_e[t] = std::max(std::log(std::max(energy[t], 0.0)), floor_log);
    const DecayFit fit = spline_decay_fit(log_e, cfg.min_spline_points);
    fv[static_cast<std::size_t>(slope_i)] = fit.early_slope;
    fv[static_cast<std::size_t>(icpt_i)] = fit.early_intercept;
    fv[static_cast<std::size_t>(late_i)] = fit.late_slope;
    fv[static_cast<std::size_t>(licpt_i)] = fit.late_intercept;
    fv[static_cast<std::size_t>(r2_i)] = fit.r2_hmean;
    // knot as a fraction of the decay length, tempo independent
    std::size_t peak = 0;
    for (std::size_t t = 1; t < log_e.size(); ++t)
      if (log_e[t] > log_e[peak]) peak = t;
    const std::size_t decay_len = log_e.size() - peak;
    fv[static_cast<std::size_t>(knot_i)] =
        decay_len > 1 ? static_cast<double>(fit.knot_index) / static_cast<double>(decay_len - 1)
                      : 0.0;
  };
  fit_band(bass_e, kEarlySlopeBass, kEarlyIcptBass, kLateSlopeBass, kLateIcptBass, kR2HmeanBass,
           kKnotLocBass);
  fit_band(treble_e, kEarlySlopeTreble, kEarlyIcptTreble, kLateSlopeTreble, kLateIcptTreble,
           kR2HmeanTreble, kKnotLocTreble);

  for (const DeltaPair& p : delta_pairs())
    fv[static_cast<std::size_t>(p.delta)] =
        prev ? fv[static_cast<std::size_t>(p.source)] - (*prev)[static_cast<std::size_t>(p.source)]
             : 0.0;

  for (double v : fv.values)
    if (!std::isfinite(v)) throw Error("extract_features: non-finite feature value");
  return fv;
}

std::vector<FeatureVector> extract_track_features(const std::vector<StrokeSegment>& segments,
                                                  const FeatureConfig& cfg) {
  std::vector<FeatureVector> out;
  out.reserve(segments.size());
  const FeatureVector* prev = nullptr;
  for (const auto& seg : segments) {
    out.push_back(extract_features(seg, prev, cfg));
    prev = &out.back();
  }
  return out;
}

}  // namespace tabla
