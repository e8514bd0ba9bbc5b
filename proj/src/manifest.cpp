#include "vqa/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "vqa/errors.hpp"

namespace vqa {

namespace {

constexpr const char* kHeaderRow = "video_id,source_path,bitrate_kbps,bitrate_tier,label";

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(strip(item));
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

int parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("manifest", where + ": not an integer: '" + s + "'");
  }
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("manifest", where + ": not a number: '" + s + "'");
  }
}

}  // namespace

int Manifest::tier_of(int bitrate_kbps) const {
  if (tier_bounds.empty()) throw ValidationError("manifest", "no tier boundaries declared");
  if (bitrate_kbps < tier_bounds.front()) {
    throw ValidationError("manifest", "bitrate " + std::to_string(bitrate_kbps) +
                                          " kbps falls below the first tier bound");
  }
  int tier = 0;
  for (std::size_t i = 1; i < tier_bounds.size(); ++i) {
    if (bitrate_kbps >= tier_bounds[i]) tier = static_cast<int>(i);
  }
  return tier;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest", "cannot open " + path.string());

  Manifest m;
  bool have_scale = false, have_tiers = false, have_header = false;
  std::unordered_set<std::string> seen_ids;
  const std::filesystem::path base = path.parent_path();

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = strip(line);
    if (t.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);

    if (t[0] == '#') {
      const auto colon = t.find(':');
      if (colon == std::string::npos) continue;  // plain comment
      const std::string key = strip(t.substr(1, colon - 1));
      const std::string value = strip(t.substr(colon + 1));
      if (key == "scale") {
        if (value == "vmaf") {
          m.scale = LabelScale::vmaf();
        } else if (value == "mos") {
          m.scale = LabelScale::mos();
        } else {
          throw ParseError("manifest", where + ": unknown scale '" + value + "' (vmaf or mos)");
        }
        have_scale = true;
      } else if (key == "tiers") {
        for (const auto& b : split(value, ',')) m.tier_bounds.push_back(parse_int(b, where));
        if (m.tier_bounds.empty() || !std::is_sorted(m.tier_bounds.begin(), m.tier_bounds.end()) ||
            std::adjacent_find(m.tier_bounds.begin(), m.tier_bounds.end()) != m.tier_bounds.end()) {
          throw ParseError("manifest", where + ": tier bounds must be strictly ascending");
        }
        have_tiers = true;
      }
      continue;
    }

    if (!have_header) {
      if (t != kHeaderRow) {
        throw ParseError("manifest", where + ": expected header row '" + kHeaderRow + "'");
      }
      if (!have_scale) throw ParseError("manifest", "missing '#scale:' directive");
      if (!have_tiers) throw ParseError("manifest", "missing '#tiers:' directive");
      have_header = true;
      continue;
    }

    const auto fields = split(t, ',');
    if (fields.size() != 5) {
      throw ParseError("manifest", where + ": expected 5 fields, got " + std::to_string(fields.size()));
    }

    VideoRecord rec;
    rec.video_id = fields[0];
    if (rec.video_id.empty()) throw ParseError("manifest", where + ": empty video_id");
    if (!seen_ids.insert(rec.video_id).second) {
      throw ValidationError("manifest", where + ": duplicate video_id '" + rec.video_id + "'");
    }
    std::filesystem::path src(fields[1]);
    rec.source_path = (src.is_absolute() ? src : base / src).string();
    rec.bitrate_kbps = parse_int(fields[2], where);
    if (rec.bitrate_kbps <= 0) throw ValidationError("manifest", where + ": bitrate_kbps must be positive");
    rec.bitrate_tier = parse_int(fields[3], where);
    const int expected_tier = m.tier_of(rec.bitrate_kbps);
    if (rec.bitrate_tier != expected_tier) {
      throw ValidationError("manifest", where + ": tier " + std::to_string(rec.bitrate_tier) +
                                            " does not match bitrate " + std::to_string(rec.bitrate_kbps) +
                                            " kbps (expected tier " + std::to_string(expected_tier) + ")");
    }
    if (!fields[4].empty()) {
      const double label = parse_double(fields[4], where);
      if (!std::isfinite(label) || !m.scale.contains(label)) {
        throw ValidationError("manifest", where + ": label " + fields[4] + " outside the " +
                                              m.scale.name() + " scale [" + std::to_string(m.scale.lo) +
                                              ", " + std::to_string(m.scale.hi) + "]");
      }
      rec.label = label;
    }
    rec.label_kind = m.scale.kind;
    m.records.push_back(std::move(rec));
  }

  if (!have_header) throw ParseError("manifest", "missing header row");
  return m;
}

IngestReport ingest_vmaf_scores(const std::filesystem::path& scores_path,
                                std::vector<VideoRecord>& records, const LabelScale& scale) {
  std::ifstream in(scores_path);
  if (!in) throw IoError("vmaf-scores", "cannot open " + scores_path.string());

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("vmaf-scores", scores_path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("vmaf-scores", "expected an object mapping video_id to score");

  std::unordered_map<std::string, double> scores;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_number()) {
      throw ParseError("vmaf-scores", "score for '" + key + "' is not numeric");
    }
    scores[key] = value.get<double>();
  }

  IngestReport report;
  std::unordered_set<std::string> matched;
  for (auto& rec : records) {
    const auto it = scores.find(rec.video_id);
    if (it == scores.end()) {
      report.unlabeled_video_ids.push_back(rec.video_id);
      continue;
    }
    if (!std::isfinite(it->second) || !scale.contains(it->second)) {
      throw ValidationError("vmaf-scores", "score " + std::to_string(it->second) + " for '" +
                                               rec.video_id + "' outside the " + scale.name() + " scale");
    }
    rec.label = it->second;
    rec.label_kind = scale.kind;
    matched.insert(rec.video_id);
  }
  for (const auto& [id, score] : scores) {
    (void)score;
    if (!matched.count(id)) report.unmatched_score_ids.push_back(id);
  }
  std::sort(report.unmatched_score_ids.begin(), report.unmatched_score_ids.end());
  return report;
}

}  // namespace vqa
