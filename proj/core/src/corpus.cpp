#include "ttc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ttc/error.hpp"

namespace ttc {
namespace {

using nlohmann::json;

struct ManifestRow {
  std::map<std::string, std::string> fields;
  std::size_t line = 0;

  std::string get(const std::string& key) const {
    auto it = fields.find(key);
    return it == fields.end() ? std::string{} : it->second;
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    auto b = f.find_first_not_of(" \t");
    auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return out;
}

std::vector<ManifestRow> read_csv_manifest(std::istream& in, const std::string& origin) {
  std::string line;
  std::vector<std::string> header;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (std::find(header.begin(), header.end(), "path") == header.end() ||
      std::find(header.begin(), header.end(), "kind") == header.end()) {
    throw ConfigError("manifest '" + origin + "': header must name 'path' and 'kind' columns");
  }
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (cells.size() > header.size()) {
      throw ConfigError("manifest '" + origin + "' line " + std::to_string(lineno) + ": too many columns");
    }
    ManifestRow row;
    row.line = lineno;
    for (std::size_t i = 0; i < cells.size(); ++i) row.fields[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ManifestRow> read_json_manifest(std::istream& in, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("manifest '" + origin + "': " + e.what());
  }
  const json& list = doc.is_object() ? doc.at("clips") : doc;
  if (!list.is_array()) throw ConfigError("manifest '" + origin + "': expected an array of clips");
  std::vector<ManifestRow> rows;
  std::size_t index = 0;
  for (const auto& item : list) {
    ManifestRow row;
    row.line = ++index;
    for (auto it = item.begin(); it != item.end(); ++it) {
      row.fields[it.key()] = it->is_string() ? it->get<std::string>() : it->dump();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string_view to_string(ClipKind kind) noexcept {
  switch (kind) {
    case ClipKind::Event: return "event";
    case ClipKind::Digit: return "digit";
    case ClipKind::Noise: return "noise";
  }
  return "?";
}

ClipKind parse_clip_kind(std::string_view text) {
  if (text == "event") return ClipKind::Event;
  if (text == "digit") return ClipKind::Digit;
  if (text == "noise") return ClipKind::Noise;
  throw ConfigError("unknown clip kind '" + std::string(text) + "'");
}

std::vector<const Clip*> Corpus::of_kind(ClipKind kind) const {
  std::vector<const Clip*> out;
  for (const auto& c : clips) {
    if (c.kind == kind) out.push_back(&c);
  }
  return out;
}

std::vector<const Clip*> Corpus::digit_clips(int digit, Gender gender) const {
  std::vector<const Clip*> out;
  for (const auto& c : clips) {
    if (c.kind == ClipKind::Digit && c.digit == digit && c.gender == gender) out.push_back(&c);
  }
  return out;
}

std::vector<std::string> Corpus::event_labels() const {
  std::vector<std::string> out;
  for (const auto& c : clips) {
    if (c.kind == ClipKind::Event && std::find(out.begin(), out.end(), c.label) == out.end()) {
      out.push_back(c.label);
    }
  }
  return out;
}

const Clip* Corpus::find_event(const std::string& label) const {
  for (const auto& c : clips) {
    if (c.kind == ClipKind::Event && c.label == label) return &c;
  }
  return nullptr;
}

Corpus load_corpus(const std::filesystem::path& manifest_path, const CorpusOptions& options) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open corpus manifest '" + manifest_path.string() + "'");
  const auto origin = manifest_path.string();
  const auto rows = manifest_path.extension() == ".json" ? read_json_manifest(in, origin)
                                                         : read_csv_manifest(in, origin);
  const auto base = manifest_path.parent_path();

  Corpus corpus;
  corpus.sample_rate = options.session_rate;
  std::set<std::string> ids;
  for (const auto& row : rows) {
    auto where = [&] { return "manifest '" + origin + "' entry " + std::to_string(row.line); };
    Clip clip;
    const auto path_text = row.get("path");
    if (path_text.empty()) throw ConfigError(where() + ": empty path");
    clip.source = path_text;
    if (clip.source.is_relative()) clip.source = base / clip.source;
    if (!std::filesystem::exists(clip.source)) {
      throw IoError(where() + ": audio file not found: " + clip.source.string());
    }
    clip.kind = parse_clip_kind(row.get("kind"));
    clip.id = row.get("id");
    if (clip.id.empty()) clip.id = clip.source.stem().string();
    if (!ids.insert(clip.id).second) throw ConfigError(where() + ": duplicate clip id '" + clip.id + "'");
    clip.label = row.get("label");
    if (auto cat = row.get("category"); !cat.empty()) clip.category = cat;

    switch (clip.kind) {
      case ClipKind::Digit: {
        const auto digit = row.get("digit").empty() ? clip.label : row.get("digit");
        try {
          std::size_t used = 0;
          clip.digit = std::stoi(digit, &used);
          if (used != digit.size()) throw std::invalid_argument(digit);
        } catch (const std::exception&) {
          throw ConfigError(where() + ": digit clip needs a digit 0-9 (got '" + digit + "')");
        }
        if (clip.digit < 0 || clip.digit > 9) {
          throw ConfigError(where() + ": digit out of range 0-9 (got " + digit + ")");
        }
        clip.gender = parse_gender(row.get("gender"));
        if (clip.label.empty()) clip.label = std::to_string(clip.digit);
        break;
      }
      case ClipKind::Event:
      case ClipKind::Noise:
        if (clip.label.empty()) throw ConfigError(where() + ": " + std::string(to_string(clip.kind)) + " clip needs a label");
        break;
    }

    clip.wave = resample(read_wav(clip.source), options.session_rate);
    if (clip.wave.empty()) throw IoError(where() + ": audio file is empty: " + clip.source.string());
    peak_normalize(clip.wave, options.headroom_dbfs);
    corpus.clips.push_back(std::move(clip));
  }

  check_coverage(corpus, options.required_tasks);
  return corpus;
}

void check_coverage(const Corpus& corpus, std::span<const TaskKind> tasks) {
  std::vector<std::string> problems;
  const bool digits = std::any_of(tasks.begin(), tasks.end(), [](TaskKind t) { return t != TaskKind::Task1Event; });
  const bool events = std::find(tasks.begin(), tasks.end(), TaskKind::Task1Event) != tasks.end();
  if (digits) {
    std::vector<std::string> missing;
    for (auto g : {Gender::Male, Gender::Female}) {
      for (int d = 0; d <= 9; ++d) {
        if (corpus.digit_clips(d, g).empty()) {
          missing.push_back("(" + std::to_string(d) + ", " + std::string(to_string(g)) + ")");
        }
      }
    }
    if (!missing.empty()) {
      std::string list;
      for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
      problems.push_back("missing (digit, gender) pairs: " + list);
    }
  }
  if (events && corpus.event_labels().size() < 2) {
    problems.push_back("event tasks need at least two distinct event labels");
  }
  if (!problems.empty()) {
    std::string msg = "corpus coverage: ";
    for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
    throw CoverageError(msg);
  }
}

}  // namespace ttc
