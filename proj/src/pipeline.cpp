#include "tabla/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tabla/error.hpp"
#include "tabla/fsutil.hpp"
#include "tabla/jsonw.hpp"

namespace fs = std::filesystem;

namespace tabla {

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
  JsonWriter w;
  w.begin_object();
  w.key("sample_rate");
  w.value(cfg.features.sample_rate);
  w.key("analysis");
  w.begin_object();
  w.key("window_ms");
  w.value(cfg.features.analysis.window_ms);
  w.key("hop_ms");
  w.value(cfg.features.analysis.hop_ms);
  w.key("fft_size");
  w.value(cfg.features.analysis.fft_size);
  w.key("n_mel_bands");
  w.value(cfg.features.analysis.n_mel_bands);
  w.key("n_mfcc");
  w.value(cfg.features.analysis.n_mfcc);
  w.end_object();
  w.key("bands");
  w.begin_object();
  w.key("bass_low_hz");
  w.value(cfg.features.bass.low_hz);
  w.key("bass_high_hz");
  w.value(cfg.features.bass.high_hz);
  w.key("treble_low_hz");
  w.value(cfg.features.treble.low_hz);
  w.key("treble_high_hz");
  w.value(cfg.features.treble.high_hz);
  w.end_object();
  w.key("last_segment_cap_s");
  w.value(cfg.features.last_segment_cap_s);
  w.key("onset");
  w.begin_object();
  w.key("alpha");
  w.value(cfg.onset.alpha);
  w.key("delay");
  w.value(cfg.onset.delay);
  w.key("tolerance_s");
  w.value(cfg.onset.tolerance_s);
  w.end_object();
  w.end_object();
  return w.str();
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
  PipelineConfig cfg;
  if (text.empty()) return cfg;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("pipeline config: malformed JSON: ") + e.what());
  }
  try {
    cfg.features.sample_rate = doc.at("sample_rate").get<int>();
    const auto& a = doc.at("analysis");
    cfg.features.analysis.window_ms = a.at("window_ms").get<double>();
    cfg.features.analysis.hop_ms = a.at("hop_ms").get<double>();
    cfg.features.analysis.fft_size = a.at("fft_size").get<int>();
    cfg.features.analysis.n_mel_bands = a.at("n_mel_bands").get<int>();
    cfg.features.analysis.n_mfcc = a.at("n_mfcc").get<int>();
    const auto& b = doc.at("bands");
    cfg.features.bass = {b.at("bass_low_hz").get<double>(), b.at("bass_high_hz").get<double>()};
    cfg.features.treble = {b.at("treble_low_hz").get<double>(),
                           b.at("treble_high_hz").get<double>()};
    cfg.features.last_segment_cap_s = doc.at("last_segment_cap_s").get<double>();
    const auto& o = doc.at("onset");
    cfg.onset.alpha = o.at("alpha").get<double>();
    cfg.onset.delay = o.at("delay").get<int>();
    cfg.onset.tolerance_s = o.at("tolerance_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("pipeline config: invalid structure: ") + e.what());
  }
  return cfg;
}

void save_trained_model(const TrainedModel& model, const fs::path& path) {
  forest::save_model(model.forest, path, pipeline_config_to_json(model.pipeline));
}

TrainedModel load_trained_model(const fs::path& path) {
  TrainedModel out;
  std::string extra;
  out.forest = forest::load_model(path, &extra);
  out.pipeline = pipeline_config_from_json(extra);
  return out;
}

OnsetList detect_onsets(const AudioClip& clip, const PipelineConfig& cfg) {
  const Matrix frames = frame_signal(clip, cfg.features.analysis);
  const Spectrogram spec = magnitude_spectrogram(frames, cfg.features.analysis, clip.sample_rate);
  return smooth_and_pick(hfc(spec), spec.frame_times, cfg.onset);
}

namespace {

Stroke label_from_annotation(const std::string& raw,
                             const std::map<std::string, std::string>& bol_map,
                             const std::string& context) {
  std::string name = raw;
  if (auto it = bol_map.find(raw); it != bol_map.end()) name = it->second;
  const auto label = parse_stroke(name);
  if (!label)
    throw Error(context + ": label '" + raw + "' is not a stroke category" +
                (bol_map.empty() ? " (D, RT, RB, B); pass a bol map for bol-level annotations"
                                 : " and has no bol map entry"));
  return *label;
}

std::vector<StrokeRow> rows_for_entry(const ManifestEntry& entry, const PipelineConfig& cfg,
                                      const std::map<std::string, std::string>& bol_map,
                                      bool require_labels) {
  AudioClip clip = load_wav(entry.audio_path);
  if (clip.sample_rate != cfg.features.sample_rate)
    clip = resample(clip, cfg.features.sample_rate);

  OnsetList onsets;
  std::vector<std::string> raw_labels;
  if (entry.annotation_path) {
    const Annotations ann = read_annotations(*entry.annotation_path);
    onsets = ann.times;
    raw_labels = ann.labels;
  } else {
    if (require_labels)
      throw Error("entry '" + entry.audio_path.string() +
                  "': annotations are required for labeled feature extraction");
    onsets = detect_onsets(clip, cfg);
  }
  if (require_labels && raw_labels.size() != onsets.size())
    throw Error("entry '" + entry.audio_path.string() + "': " +
                std::to_string(onsets.size()) + " onsets but " +
                std::to_string(raw_labels.size()) + " labels");

  std::vector<StrokeSegment> segments =
      segment_strokes(onsets, clip, cfg.features.last_segment_cap_s);
  for (std::size_t i = 0; i < segments.size(); ++i)
    if (i < raw_labels.size() && !raw_labels[i].empty())
      segments[i].label =
          label_from_annotation(raw_labels[i], bol_map, entry.audio_path.string());

  const std::vector<FeatureVector> features = extract_track_features(segments, cfg.features);

  std::vector<StrokeRow> rows;
  rows.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    StrokeRow row;
    row.features = features[i];
    if (segments[i].label) {
      row.label = *segments[i].label;
    } else if (require_labels) {
      throw Error("entry '" + entry.audio_path.string() + "': stroke " + std::to_string(i) +
                  " has no label");
    }
    row.tabla_set = entry.tabla_set;
    row.track = entry.audio_path.stem().string();
    row.stroke_index = static_cast<int>(i);
    row.audio = std::make_shared<AudioClip>(std::move(segments[i].clip));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

StrokeDataset build_dataset(const Manifest& manifest, const std::string& split,
                            const PipelineConfig& cfg,
                            const std::map<std::string, std::string>& bol_map,
                            bool require_labels) {
  std::vector<const ManifestEntry*> selected;
  for (const auto& entry : manifest.entries)
    if (entry.split == split) selected.push_back(&entry);
  if (selected.empty()) throw Error("manifest has no entries with split '" + split + "'");

  std::vector<std::vector<StrokeRow>> per_entry(selected.size());
  std::string first_error;
  const auto n = static_cast<long>(selected.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      per_entry[static_cast<std::size_t>(i)] =
          rows_for_entry(*selected[static_cast<std::size_t>(i)], cfg, bol_map, require_labels);
    } catch (const std::exception& e) {
#pragma omp critical
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty()) throw Error(first_error);

  StrokeDataset ds;
  for (auto& rows : per_entry)
    for (auto& row : rows) ds.rows.push_back(std::move(row));
  return ds;
}

StrokeDataset dataset_from_tracks(const std::vector<synth::Track>& tracks,
                                  const FeatureConfig& fcfg) {
  std::vector<std::vector<StrokeRow>> per_track(tracks.size());
  const auto n = static_cast<long>(tracks.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto& track = tracks[static_cast<std::size_t>(i)];
    std::vector<StrokeSegment> segments =
        segment_strokes(track.onsets, track.clip, fcfg.last_segment_cap_s);
    const std::vector<FeatureVector> features = extract_track_features(segments, fcfg);
    auto& rows = per_track[static_cast<std::size_t>(i)];
    rows.reserve(segments.size());
    for (std::size_t j = 0; j < segments.size(); ++j) {
      StrokeRow row;
      row.features = features[j];
      row.label = track.labels[j];
      row.tabla_set = track.tabla_set;
      row.track = track.name;
      row.stroke_index = static_cast<int>(j);
      row.audio = std::make_shared<AudioClip>(std::move(segments[j].clip));
      rows.push_back(std::move(row));
    }
  }
  StrokeDataset ds;
  for (auto& rows : per_track)
    for (auto& row : rows) ds.rows.push_back(std::move(row));
  return ds;
}

std::vector<TranscriptionRow> transcribe_clip(const AudioClip& clip, const TrainedModel& model,
                                              const OnsetList* forced_onsets) {
  AudioClip working = clip;
  if (clip.sample_rate != model.pipeline.features.sample_rate)
    working = resample(clip, model.pipeline.features.sample_rate);

  const OnsetList onsets =
      forced_onsets ? *forced_onsets : detect_onsets(working, model.pipeline);
  const std::vector<StrokeSegment> segments =
      segment_strokes(onsets, working, model.pipeline.features.last_segment_cap_s);
  const std::vector<FeatureVector> features =
      extract_track_features(segments, model.pipeline.features);

  std::vector<int> cols;
  for (const auto& name : model.forest.feature_names) {
    const int idx = feature_index(name);
    if (idx < 0)
      throw Error("transcribe: model feature '" + name +
                  "' is not produced by this extractor version");
    cols.push_back(idx);
  }

  std::vector<TranscriptionRow> out;
  std::vector<double> x(cols.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j)
      x[j] = features[i][static_cast<std::size_t>(cols[j])];
    const forest::Prediction p = forest::predict(model.forest, x);
    TranscriptionRow row;
    row.onset_s = onsets[i];
    row.label = static_cast<Stroke>(p.label);
    row.votes = p.vote_share;
    out.push_back(std::move(row));
  }
  return out;
}

void write_dataset_csv(const StrokeDataset& ds, const fs::path& path) {
  std::string out;
  for (const auto& name : feature_names()) {
    out += name;
    out += ',';
  }
  out += "label,tabla_set,track,stroke_index,synthetic\n";
  for (const auto& row : ds.rows) {
    for (int f = 0; f < kNumFeatures; ++f) {
      out += format_double(row.features[static_cast<std::size_t>(f)]);
      out += ',';
    }
    out += to_string(row.label) + "," + row.tabla_set + "," + row.track + "," +
           std::to_string(row.stroke_index) + "," + (row.synthetic ? "1" : "0") + "\n";
  }
  write_file_atomic(path, out);
}

StrokeDataset read_dataset_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error("dataset '" + path.string() + "': empty file");

  StrokeDataset ds;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    StrokeRow row;
    for (int f = 0; f < kNumFeatures; ++f) {
      if (!std::getline(ss, field, ','))
        throw Error("dataset '" + path.string() + "': short row");
      row.features[static_cast<std::size_t>(f)] = std::strtod(field.c_str(), nullptr);
    }
    std::getline(ss, field, ',');
    row.label = parse_stroke_or_throw(field);
    std::getline(ss, row.tabla_set, ',');
    std::getline(ss, row.track, ',');
    std::getline(ss, field, ',');
    row.stroke_index = std::atoi(field.c_str());
    std::getline(ss, field, ',');
    row.synthetic = field == "1";
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

std::string eval_report_to_json(const EvalReport& report) {
  JsonWriter w;
  w.begin_object();
  w.key("n");
  w.value(report.n);
  w.key("accuracy");
  w.value(report.accuracy);
  w.key("macro_f");
  w.value(report.macro_f);
  w.key("balanced_accuracy");
  w.value(report.balanced_accuracy);
  w.key("per_class");
  w.begin_array();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cs = static_cast<std::size_t>(c);
    w.begin_object();
    w.key("label");
    w.value(stroke_names()[cs]);
    w.key("precision");
    w.value(report.precision[cs]);
    w.key("recall");
    w.value(report.recall[cs]);
    w.key("f");
    w.value(report.f1[cs]);
    w.end_object();
  }
  w.end_array();
  w.key("confusion");
  w.begin_array();
  for (int t = 0; t < kNumClasses; ++t) {
    w.begin_array();
    for (int p = 0; p < kNumClasses; ++p)
      w.value(report.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
    w.end_array();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

std::string confusion_to_csv(const EvalReport& report) {
  std::string out = "truth\\pred";
  for (const auto& name : stroke_names()) out += "," + name;
  out += '\n';
  for (int t = 0; t < kNumClasses; ++t) {
    out += stroke_names()[static_cast<std::size_t>(t)];
    for (int p = 0; p < kNumClasses; ++p)
      out += ',' + std::to_string(
                       report.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
    out += '\n';
  }
  return out;
}

}  // namespace tabla
