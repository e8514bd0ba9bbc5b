#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vqa {

enum class LabelKind { vmaf_pseudo, mos };

struct LabelScale {
  LabelKind kind = LabelKind::vmaf_pseudo;
  double lo = 0.0;
  double hi = 100.0;

  static LabelScale vmaf() { return {LabelKind::vmaf_pseudo, 0.0, 100.0}; }
  static LabelScale mos() { return {LabelKind::mos, 1.0, 5.0}; }

  double range() const { return hi - lo; }
  const char* name() const { return kind == LabelKind::vmaf_pseudo ? "vmaf" : "mos"; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct VideoRecord {
  std::string video_id;
  std::string source_path;  // resolved against the manifest directory
  int bitrate_kbps = 0;
  int bitrate_tier = 0;
  std::optional<double> label;
  LabelKind label_kind = LabelKind::vmaf_pseudo;
};

// A dataset manifest: delimited text with directive lines, a fixed column
// header, then one row per video.
//
//   #scale: vmaf
//   #tiers: 200,1500,4000
//   video_id,source_path,bitrate_kbps,bitrate_tier,label
//   clip01,clips/clip01.y4m,650,1,37.4
//
// Tier boundaries are ascending lower bounds in kbps; a row's tier must equal
// the tier its bitrate falls in. The label column may be left empty until
// pseudo-labels are ingested.
struct Manifest {
  LabelScale scale;
  std::vector<int> tier_bounds;
  std::vector<VideoRecord> records;

  int tier_of(int bitrate_kbps) const;  // throws ValidationError below the first bound
};

Manifest load_manifest(const std::filesystem::path& path);

struct IngestReport {
  std::vector<std::string> unmatched_score_ids;  // in the scores file, not in the records
  std::vector<std::string> unlabeled_video_ids;  // records still missing a label
};

// Applies a VMAF scores file ({"video_id": score, ...}) to the records.
// Never adds or drops records; only labels and label kinds change.
IngestReport ingest_vmaf_scores(const std::filesystem::path& scores_path,
                                std::vector<VideoRecord>& records,
                                const LabelScale& scale = LabelScale::vmaf());

}  // namespace vqa
