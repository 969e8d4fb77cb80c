#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tabla {

struct ManifestEntry {
  std::filesystem::path audio_path;
  std::optional<std::filesystem::path> annotation_path;
  std::string tabla_set;
  std::string split;  // "train" or "test"
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

// JSON manifest; relative paths resolve against the manifest's directory
// and every referenced file must exist.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Onset annotation CSV: time_sec,label per row; the label column is
// optional. A `time_sec` header row is tolerated.
struct Annotations {
  std::vector<double> times;
  std::vector<std::string> labels;  // empty when the file has no labels
};

Annotations read_annotations(const std::filesystem::path& path);
void write_annotations(const Annotations& ann, const std::filesystem::path& path);

// Optional bol -> category mapping (CSV `bol,category`) for datasets
// annotated at bol level.
std::map<std::string, std::string> read_bol_map(const std::filesystem::path& path);

}  // namespace tabla
