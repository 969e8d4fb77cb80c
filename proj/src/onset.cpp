#include "tabla/onset.hpp"

#include <algorithm>
#include <cmath>

#include "tabla/error.hpp"

namespace tabla {

std::vector<double> hfc(const Spectrogram& spec) {
  if (spec.n_frames() == 0) throw Error("hfc: empty spectrogram");
  std::vector<double> odf(spec.n_frames());
  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    const auto row = spec.mags.row(t);
    double acc = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) acc += static_cast<double>(k) * row[k] * row[k];
    odf[t] = acc;
  }
  return odf;
}

namespace {

constexpr double kMinGapS = 0.030;

std::vector<double> moving_average_centered(std::span<const double> x, int length) {
  const auto n = static_cast<long>(x.size());
  std::vector<double> out(x.size());
  const long before = (length - 1) / 2;
  const long after = length - 1 - before;
  for (long i = 0; i < n; ++i) {
    const long lo = std::max(0L, i - before);
    const long hi = std::min(n - 1, i + after);
    double acc = 0.0;
    for (long j = lo; j <= hi; ++j) acc += x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace

OnsetList smooth_and_pick(std::span<const double> odf, std::span<const double> frame_times,
                          const OnsetConfig& cfg) {
  if (odf.empty()) throw Error("smooth_and_pick: empty ODF");
  if (odf.size() != frame_times.size())
    throw Error("smooth_and_pick: ODF and frame time lengths differ");
  if (cfg.delay < 1) throw Error("smooth_and_pick: delay must be >= 1");
  if (cfg.alpha < 0.0) throw Error("smooth_and_pick: alpha must be >= 0");

  const double peak = *std::max_element(odf.begin(), odf.end());
  if (peak <= 0.0) return {};

  std::vector<double> norm(odf.size());
  for (std::size_t i = 0; i < odf.size(); ++i) norm[i] = odf[i] / peak;
  const std::vector<double> smoothed = moving_average_centered(norm, cfg.delay);

  // local maxima above alpha; plateaus emit their first frame
  std::vector<std::size_t> peaks;
  const std::size_t n = smoothed.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (smoothed[i] <= cfg.alpha) continue;
    const bool rising = i == 0 || smoothed[i] > smoothed[i - 1];
    const bool falling = i + 1 == n || smoothed[i] >= smoothed[i + 1];
    if (rising && falling) peaks.push_back(i);
  }

  // enforce the minimum gap, keeping the larger peak
  std::vector<std::size_t> kept;
  for (std::size_t p : peaks) {
    if (!kept.empty() && frame_times[p] - frame_times[kept.back()] < kMinGapS) {
      if (smoothed[p] > smoothed[kept.back()]) kept.back() = p;
    } else {
      kept.push_back(p);
    }
  }

  OnsetList onsets(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) onsets[i] = frame_times[kept[i]];
  return onsets;
}

MatchCounts match_onsets(const OnsetList& pred, const OnsetList& truth, double tolerance_s) {
  const std::size_t np = pred.size(), nt = truth.size();

  // Kuhn's augmenting paths; graphs here are tiny per track.
  std::vector<std::vector<int>> adj(np);
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < nt; ++j)
      if (std::abs(pred[i] - truth[j]) <= tolerance_s) adj[i].push_back(static_cast<int>(j));

  std::vector<int> match_t(nt, -1);
  std::vector<char> used;

  auto try_augment = [&](auto&& self, int u) -> bool {
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = 1;
      if (match_t[static_cast<std::size_t>(v)] < 0 ||
          self(self, match_t[static_cast<std::size_t>(v)])) {
        match_t[static_cast<std::size_t>(v)] = u;
        return true;
      }
    }
    return false;
  };

  int hits = 0;
  for (std::size_t u = 0; u < np; ++u) {
    used.assign(nt, 0);
    if (try_augment(try_augment, static_cast<int>(u))) ++hits;
  }

  MatchCounts c;
  c.hits = hits;
  c.false_positives = static_cast<int>(np) - hits;
  c.false_negatives = static_cast<int>(nt) - hits;
  return c;
}

Prf onset_prf(int hits, int false_positives, int false_negatives) {
  Prf r;
  const int hp = hits + false_positives;
  const int hn = hits + false_negatives;
  r.precision = hp > 0 ? static_cast<double>(hits) / hp : 0.0;
  r.recall = hn > 0 ? static_cast<double>(hits) / hn : 0.0;
  const double pr = r.precision + r.recall;
  r.f_score = pr > 0.0 ? 2.0 * r.precision * r.recall / pr : 0.0;
  return r;
}

TuneTrack make_tune_track(const AudioClip& clip, const OnsetList& truth,
                          const AnalysisConfig& acfg) {
  const Matrix frames = frame_signal(clip, acfg);
  const Spectrogram spec = magnitude_spectrogram(frames, acfg, clip.sample_rate);
  TuneTrack t;
  t.odf = hfc(spec);
  t.frame_times = spec.frame_times;
  t.truth = truth;
  return t;
}

namespace {

double grid_point_score(std::span<const TuneTrack> tracks, double alpha, int delay,
                        double tolerance_s) {
  OnsetConfig cfg;
  cfg.alpha = alpha;
  cfg.delay = delay;
  cfg.tolerance_s = tolerance_s;
  double sum_f = 0.0;
  for (const auto& track : tracks) {
    const OnsetList pred = smooth_and_pick(track.odf, track.frame_times, cfg);
    const MatchCounts m = match_onsets(pred, track.truth, tolerance_s);
    sum_f += onset_prf(m.hits, m.false_positives, m.false_negatives).f_score;
  }
  return sum_f / static_cast<double>(tracks.size());
}

TuneResult pick_best(std::span<const double> alpha_grid, std::span<const int> delay_grid,
                     const std::vector<GridPoint>& table) {
  TuneResult best;
  best.mean_f = -1.0;
  for (const auto& pt : table) {
    const bool better =
        pt.mean_f > best.mean_f ||
        (pt.mean_f == best.mean_f &&
         (pt.alpha > best.alpha || (pt.alpha == best.alpha && pt.delay < best.delay)));
    if (better) {
      best.alpha = pt.alpha;
      best.delay = pt.delay;
      best.mean_f = pt.mean_f;
    }
  }
  best.table = table;
  (void)alpha_grid;
  (void)delay_grid;
  return best;
}

}  // namespace

TuneResult tune_grid(std::span<const TuneTrack> tracks, std::span<const double> alpha_grid,
                     std::span<const int> delay_grid, double tolerance_s) {
  if (tracks.empty() || alpha_grid.empty() || delay_grid.empty())
    throw Error("tune_grid: tracks and grids must be nonempty");
  const long n_points = static_cast<long>(alpha_grid.size() * delay_grid.size());
  std::vector<GridPoint> table(static_cast<std::size_t>(n_points));
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n_points; ++i) {
    const double alpha = alpha_grid[static_cast<std::size_t>(i) / delay_grid.size()];
    const int delay = delay_grid[static_cast<std::size_t>(i) % delay_grid.size()];
    table[static_cast<std::size_t>(i)] = {alpha, delay,
                                          grid_point_score(tracks, alpha, delay, tolerance_s)};
  }
  return pick_best(alpha_grid, delay_grid, table);
}

TuneResult tune_grid_serial(std::span<const TuneTrack> tracks, std::span<const double> alpha_grid,
                            std::span<const int> delay_grid, double tolerance_s) {
  if (tracks.empty() || alpha_grid.empty() || delay_grid.empty())
    throw Error("tune_grid: tracks and grids must be nonempty");
  std::vector<GridPoint> table;
  table.reserve(alpha_grid.size() * delay_grid.size());
  for (double alpha : alpha_grid)
    for (int delay : delay_grid)
      table.push_back({alpha, delay, grid_point_score(tracks, alpha, delay, tolerance_s)});
  return pick_best(alpha_grid, delay_grid, table);
}

}  // namespace tabla
