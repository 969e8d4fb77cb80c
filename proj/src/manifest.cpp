#include "tabla/manifest.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tabla/error.hpp"
#include "tabla/fsutil.hpp"
#include "tabla/jsonw.hpp"

namespace fs = std::filesystem;

namespace tabla {

Manifest load_manifest(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest '" + path.string() + "': malformed JSON: " + e.what());
  }

  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    if (fp.is_relative()) fp = base / fp;
    if (!fs::exists(fp))
      throw Error("manifest '" + path.string() + "': referenced file '" + p + "' does not exist");
    return fp;
  };

  Manifest m;
  try {
    for (const auto& je : doc.at("entries")) {
      ManifestEntry e;
      e.audio_path = resolve(je.at("audio_path").get<std::string>());
      if (je.contains("annotation_path") && !je.at("annotation_path").is_null())
        e.annotation_path = resolve(je.at("annotation_path").get<std::string>());
      e.tabla_set = je.at("tabla_set").get<std::string>();
      if (e.tabla_set.empty())
        throw Error("manifest '" + path.string() + "': empty tabla_set");
      e.split = je.value("split", std::string("train"));
      if (e.split != "train" && e.split != "test")
        throw Error("manifest '" + path.string() + "': split must be train or test, got '" +
                    e.split + "'");
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest '" + path.string() + "': invalid structure: " + e.what());
  }
  return m;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  JsonWriter w;
  w.begin_object();
  w.key("entries");
  w.begin_array();
  for (const auto& e : manifest.entries) {
    w.begin_object();
    w.key("audio_path");
    w.value(e.audio_path.string());
    if (e.annotation_path) {
      w.key("annotation_path");
      w.value(e.annotation_path->string());
    }
    w.key("tabla_set");
    w.value(e.tabla_set);
    w.key("split");
    w.value(e.split);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  write_file_atomic(path, w.str() + "\n");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

Annotations read_annotations(const fs::path& path) {
  std::istringstream in(read_file(path));
  Annotations ann;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    char* end = nullptr;
    const double t = std::strtod(fields[0].c_str(), &end);
    if (end == fields[0].c_str() || *end != '\0') {
      if (first) {  // header row
        first = false;
        continue;
      }
      throw Error("annotations '" + path.string() + "': bad time value '" + fields[0] + "'");
    }
    first = false;
    ann.times.push_back(t);
    if (fields.size() > 1 && !fields[1].empty()) {
      ann.labels.resize(ann.times.size() - 1);  // pad earlier label-less rows
      ann.labels.push_back(fields[1]);
    }
  }
  if (!ann.labels.empty() && ann.labels.size() != ann.times.size())
    ann.labels.resize(ann.times.size());
  if (!std::is_sorted(ann.times.begin(), ann.times.end()))
    throw Error("annotations '" + path.string() + "': onset times are not sorted");
  return ann;
}

void write_annotations(const Annotations& ann, const fs::path& path) {
  std::string out = "time_sec,label\n";
  for (std::size_t i = 0; i < ann.times.size(); ++i) {
    out += format_double(ann.times[i]);
    out += ',';
    if (i < ann.labels.size()) out += ann.labels[i];
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::map<std::string, std::string> read_bol_map(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::map<std::string, std::string> map;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < 2)
      throw Error("bol map '" + path.string() + "': expected `bol,category` rows");
    if (fields[0] == "bol") continue;  // header
    map[fields[0]] = fields[1];
  }
  return map;
}

}  // namespace tabla
