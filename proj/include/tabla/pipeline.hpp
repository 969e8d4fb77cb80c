#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tabla/augment.hpp"
#include "tabla/evaluate.hpp"
#include "tabla/features.hpp"
#include "tabla/forest.hpp"
#include "tabla/manifest.hpp"
#include "tabla/onset.hpp"
#include "tabla/synth.hpp"

namespace tabla {

// Analysis settings persisted inside the model file so transcription is
// self-contained.
struct PipelineConfig {
  FeatureConfig features;
  OnsetConfig onset;
};

std::string pipeline_config_to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const std::string& text);

struct TrainedModel {
  forest::ForestModel forest;
  PipelineConfig pipeline;
};

void save_trained_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_trained_model(const std::filesystem::path& path);

// Feature rows for one split of a manifest. Labels come from the
// annotation files (through the optional bol map); require_labels makes
// missing annotations or labels an error. Entries process in parallel,
// row order follows the manifest.
StrokeDataset build_dataset(const Manifest& manifest, const std::string& split,
                            const PipelineConfig& cfg,
                            const std::map<std::string, std::string>& bol_map = {},
                            bool require_labels = true);

// In-memory equivalent for synthetic corpora.
StrokeDataset dataset_from_tracks(const std::vector<synth::Track>& tracks,
                                  const FeatureConfig& fcfg);

OnsetList detect_onsets(const AudioClip& clip, const PipelineConfig& cfg);

struct TranscriptionRow {
  double onset_s = 0.0;
  Stroke label = Stroke::D;
  std::vector<double> votes;  // per class, sums to 1
};

// Detect (or take) onsets, segment, extract with sequential deltas,
// classify. The clip is resampled to the model's working rate first.
std::vector<TranscriptionRow> transcribe_clip(const AudioClip& clip, const TrainedModel& model,
                                              const OnsetList* forced_onsets = nullptr);

// Dataset CSV: 49 canonical feature columns + label,tabla_set,track,
// stroke_index,synthetic. Round-trips through read_dataset_csv.
void write_dataset_csv(const StrokeDataset& ds, const std::filesystem::path& path);
StrokeDataset read_dataset_csv(const std::filesystem::path& path);

// EvalReport serialization used by the CLI report directory.
std::string eval_report_to_json(const EvalReport& report);
std::string confusion_to_csv(const EvalReport& report);

}  // namespace tabla
