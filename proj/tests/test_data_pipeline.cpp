#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "support/tempdir.hpp"
#include "vqa/batch.hpp"
#include "vqa/errors.hpp"
#include "vqa/frames.hpp"
#include "vqa/manifest.hpp"
#include "vqa/rng.hpp"
#include "vqa/y4m.hpp"

using vqa::testsupport::TempDir;

namespace {

const char* kManifestHeader =
    "#scale: vmaf\n"
    "#tiers: 200,1500,4000\n"
    "video_id,source_path,bitrate_kbps,bitrate_tier,label\n";

vqa::FrameTensor gradient_frame(int size, int index) {
  vqa::FrameTensor f;
  f.height = f.width = size;
  f.rgb.resize(static_cast<std::size_t>(size) * size * 3);
  f.frame_index = index;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      f.at(y, x, 0) = static_cast<float>(x) / size;
      f.at(y, x, 1) = static_cast<float>(y) / size;
      f.at(y, x, 2) = static_cast<float>((x + y + index * 3) % size) / size;
    }
  }
  return f;
}

std::vector<vqa::VideoRecord> tiered_records(const std::vector<int>& tier_sizes) {
  std::vector<vqa::VideoRecord> recs;
  int id = 0;
  for (std::size_t tier = 0; tier < tier_sizes.size(); ++tier) {
    for (int i = 0; i < tier_sizes[tier]; ++i) {
      vqa::VideoRecord r;
      r.video_id = "v" + std::to_string(id++);
      r.source_path = r.video_id + ".y4m";
      r.bitrate_tier = static_cast<int>(tier);
      r.bitrate_kbps = 300 * (static_cast<int>(tier) + 1);
      r.label = 10.0 * static_cast<double>(tier) + i;
      recs.push_back(r);
    }
  }
  return recs;
}

}  // namespace

TEST_CASE("manifest loads valid rows and resolves paths") {
  TempDir dir("manifest");
  const auto p = dir.write("train.csv", std::string(kManifestHeader) +
                                            "clip01,videos/a.y4m,650,0,37.4\n"
                                            "clip02,videos/b.y4m,1600,1,\n"
                                            "clip03,/abs/c.y4m,4200,2,91.25\n");
  const auto m = vqa::load_manifest(p);
  REQUIRE(m.records.size() == 3);
  CHECK(m.scale.kind == vqa::LabelKind::vmaf_pseudo);
  CHECK(m.tier_bounds == std::vector<int>{200, 1500, 4000});
  CHECK(m.records[0].video_id == "clip01");
  CHECK(m.records[0].source_path == (dir.path / "videos/a.y4m").string());
  CHECK(m.records[2].source_path == "/abs/c.y4m");
  CHECK(m.records[0].label.value() == doctest::Approx(37.4));
  CHECK(!m.records[1].label.has_value());
  CHECK(m.records[2].bitrate_tier == 2);
  CHECK(m.records[0].label_kind == vqa::LabelKind::vmaf_pseudo);
}

TEST_CASE("manifest edge and error cases") {
  TempDir dir("manifest_err");

  // header only -> empty list
  CHECK(vqa::load_manifest(dir.write("empty.csv", kManifestHeader)).records.empty());

  CHECK_THROWS_AS(vqa::load_manifest(dir.path / "missing.csv"), vqa::IoError);

  // label outside the declared vmaf scale
  CHECK_THROWS_AS(
      vqa::load_manifest(dir.write("badlabel.csv", std::string(kManifestHeader) + "c,x.y4m,650,0,120\n")),
      vqa::ValidationError);

  // malformed row names its line
  try {
    vqa::load_manifest(dir.write("short.csv", std::string(kManifestHeader) + "c,x.y4m,650,0,20\nbad,row\n"));
    FAIL("expected ParseError");
  } catch (const vqa::ParseError& e) {
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }

  CHECK_THROWS_AS(vqa::load_manifest(dir.write("dup.csv", std::string(kManifestHeader) +
                                                              "c,x.y4m,650,0,20\nc,y.y4m,700,0,30\n")),
                  vqa::ValidationError);

  // declared tier contradicts the boundaries
  CHECK_THROWS_AS(
      vqa::load_manifest(dir.write("tier.csv", std::string(kManifestHeader) + "c,x.y4m,650,2,20\n")),
      vqa::ValidationError);

  // bitrate below the lowest bound
  CHECK_THROWS_AS(
      vqa::load_manifest(dir.write("low.csv", std::string(kManifestHeader) + "c,x.y4m,50,0,20\n")),
      vqa::ValidationError);

  // a mos manifest enforces [1, 5]
  const std::string mos_header =
      "#scale: mos\n#tiers: 100\nvideo_id,source_path,bitrate_kbps,bitrate_tier,label\n";
  CHECK(vqa::load_manifest(dir.write("mos.csv", mos_header + "c,x.y4m,650,0,4.5\n")).records.size() == 1);
  CHECK_THROWS_AS(vqa::load_manifest(dir.write("mosbad.csv", mos_header + "c,x.y4m,650,0,0.5\n")),
                  vqa::ValidationError);

  CHECK_THROWS_AS(vqa::load_manifest(dir.write("nodir.csv",
                                               "video_id,source_path,bitrate_kbps,bitrate_tier,label\n")),
                  vqa::ParseError);
}

TEST_CASE("vmaf score ingestion") {
  TempDir dir("scores");
  auto records = tiered_records({2});
  records[0].label.reset();
  records[1].label.reset();

  SUBCASE("direct mapping") {
    const auto p = dir.write("s.json", R"({"v0": 93.2, "v1": 41.0})");
    const auto report = vqa::ingest_vmaf_scores(p, records);
    REQUIRE(records.size() == 2);
    CHECK(records[0].label.value() == doctest::Approx(93.2));
    CHECK(records[1].label.value() == doctest::Approx(41.0));
    CHECK(records[0].label_kind == vqa::LabelKind::vmaf_pseudo);
    CHECK(report.unlabeled_video_ids.empty());
    CHECK(report.unmatched_score_ids.empty());
  }

  SUBCASE("missing key is reported, not dropped") {
    const auto p = dir.write("s.json", R"({"v0": 93.2, "stranger": 10.0})");
    const auto report = vqa::ingest_vmaf_scores(p, records);
    REQUIRE(records.size() == 2);
    CHECK(records[0].label.has_value());
    CHECK(!records[1].label.has_value());
    CHECK(report.unlabeled_video_ids == std::vector<std::string>{"v1"});
    CHECK(report.unmatched_score_ids == std::vector<std::string>{"stranger"});
  }

  SUBCASE("non-numeric scores are rejected") {
    CHECK_THROWS_AS(vqa::ingest_vmaf_scores(dir.write("s.json", R"({"v0": "NaN"})"), records),
                    vqa::ParseError);
    CHECK_THROWS_AS(vqa::ingest_vmaf_scores(dir.write("s2.json", R"({"v0": NaN})"), records),
                    vqa::ParseError);
    CHECK_THROWS_AS(vqa::ingest_vmaf_scores(dir.write("s3.json", R"([1, 2])"), records), vqa::ParseError);
    CHECK_THROWS_AS(vqa::ingest_vmaf_scores(dir.path / "missing.json", records), vqa::IoError);
    CHECK_THROWS_AS(vqa::ingest_vmaf_scores(dir.write("s4.json", R"({"v0": 130.0})"), records),
                    vqa::ValidationError);
  }
}

TEST_CASE("uniform frame indices") {
  CHECK(vqa::uniform_frame_indices(100, 10) ==
        std::vector<int>{0, 11, 22, 33, 44, 55, 66, 77, 88, 99});
  CHECK(vqa::uniform_frame_indices(5, 5) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(vqa::uniform_frame_indices(1, 4) == std::vector<int>{0});
  CHECK(vqa::uniform_frame_indices(7, 1) == std::vector<int>{0});

  vqa::Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int total = 1 + static_cast<int>(rng.bounded(200));
    const int count = 1 + static_cast<int>(rng.bounded(32));
    const auto idx = vqa::uniform_frame_indices(total, count);
    CHECK(idx.size() == static_cast<std::size_t>(std::min(total, count)));
    CHECK(idx.front() == 0);
    for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] >= idx[i - 1]);
    CHECK(idx.back() <= total - 1);
    if (count > 1 && total >= count) CHECK(idx.back() == total - 1);
  }
  CHECK_THROWS_AS(vqa::uniform_frame_indices(0, 3), vqa::DecodeError);
  CHECK_THROWS_AS(vqa::uniform_frame_indices(3, 0), vqa::ConfigError);
}

TEST_CASE("y4m write/read round trip") {
  TempDir dir("y4m");
  std::vector<vqa::FrameTensor> frames;
  for (int i = 0; i < 5; ++i) frames.push_back(gradient_frame(32, i));
  const auto p = dir.path / "clip.y4m";
  vqa::y4m::write_video(p, frames, 25.0);

  const vqa::y4m::Reader reader(p);
  CHECK(reader.info().width == 32);
  CHECK(reader.info().height == 32);
  CHECK(reader.info().frame_count == 5);
  CHECK(reader.info().fps == doctest::Approx(25.0));

  // color conversion round trip stays within quantization error
  const auto back = reader.decode(2);
  double max_err = 0;
  for (std::size_t i = 0; i < back.rgb.size(); ++i) {
    max_err = std::max(max_err, static_cast<double>(std::abs(back.rgb[i] - frames[2].rgb[i])));
  }
  CHECK(max_err < 0.02);
  CHECK(back.frame_index == 2);
  CHECK(back.timestamp_s == doctest::Approx(2.0 / 25.0));

  // decoding is deterministic
  const auto again = reader.decode(2);
  CHECK(back.rgb == again.rgb);

  CHECK_THROWS_AS(reader.decode(5), vqa::DecodeError);
}

TEST_CASE("y4m rejects broken streams") {
  TempDir dir("y4m_bad");
  CHECK_THROWS_AS(vqa::y4m::Reader(dir.path / "none.y4m"), vqa::IoError);
  CHECK_THROWS_AS(vqa::y4m::Reader(dir.write("bad.y4m", "RIFFdata")), vqa::DecodeError);
  CHECK_THROWS_AS(vqa::y4m::Reader(dir.write("empty.y4m", "YUV4MPEG2 W4 H4 F30:1 C444\n")),
                  vqa::DecodeError);

  // truncated frame payload
  std::string stream = "YUV4MPEG2 W4 H4 F30:1 C444\nFRAME\n";
  stream += std::string(10, '\0');  // needs 48 bytes
  CHECK_THROWS_AS(vqa::y4m::Reader(dir.write("trunc.y4m", stream)), vqa::DecodeError);
}

TEST_CASE("sample_frames contract") {
  TempDir dir("sample");
  std::vector<vqa::FrameTensor> frames;
  for (int i = 0; i < 24; ++i) frames.push_back(gradient_frame(48, i));
  vqa::y4m::write_video(dir.path / "clip.y4m", frames, 24.0);

  vqa::VideoRecord rec;
  rec.video_id = "clip";
  rec.source_path = (dir.path / "clip.y4m").string();

  const auto sampled = vqa::sample_frames(rec, 8, 32);
  REQUIRE(sampled.frames.size() == 8);
  CHECK(!sampled.padded);
  for (const auto& f : sampled.frames) {
    CHECK(f.height == 32);
    CHECK(f.width == 32);
    for (float v : f.rgb) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
  // indices follow the inclusive uniform rule
  CHECK(sampled.frames.front().frame_index == 0);
  CHECK(sampled.frames.back().frame_index == 23);

  // single-frame video pads by repetition
  vqa::y4m::write_video(dir.path / "one.y4m", {gradient_frame(16, 0)}, 30.0);
  rec.source_path = (dir.path / "one.y4m").string();
  const auto padded = vqa::sample_frames(rec, 4, 16);
  REQUIRE(padded.frames.size() == 4);
  CHECK(padded.padded);
  for (int i = 1; i < 4; ++i) CHECK(padded.frames[i].rgb == padded.frames[0].rgb);

  // frame_count equal to length: all frames in order
  rec.source_path = (dir.path / "clip.y4m").string();
  const auto all = vqa::sample_frames(rec, 24, 48);
  CHECK(!all.padded);
  for (int i = 0; i < 24; ++i) CHECK(all.frames[i].frame_index == i);

  rec.source_path = (dir.path / "nothere.y4m").string();
  CHECK_THROWS_AS(vqa::sample_frames(rec, 4, 16), vqa::IoError);
}

TEST_CASE("contrastive batch composition") {
  const auto records = tiered_records({10, 10});

  const auto batch = vqa::build_contrastive_batch(records, 8, 0.5, 7);
  REQUIRE(batch.samples.size() == 8);
  CHECK(batch.n == 8);
  CHECK(batch.group_a_count() == 4);
  CHECK(batch.group_a_tier == 0);
  CHECK(batch.group_b_tier == 1);
  for (int i = 0; i < 4; ++i) CHECK(batch.samples[i].record.bitrate_tier == 0);
  for (int i = 4; i < 8; ++i) CHECK(batch.samples[i].record.bitrate_tier == 1);

  // no duplicate members
  std::set<std::string> ids;
  for (const auto& s : batch.samples) ids.insert(s.record.video_id);
  CHECK(ids.size() == 8);

  // determinism
  const auto batch2 = vqa::build_contrastive_batch(records, 8, 0.5, 7);
  for (int i = 0; i < 8; ++i) CHECK(batch.samples[i].record.video_id == batch2.samples[i].record.video_id);

  // a different seed eventually picks different members
  bool differs = false;
  for (std::uint64_t s = 8; s < 20 && !differs; ++s) {
    const auto other = vqa::build_contrastive_batch(records, 8, 0.5, s);
    for (int i = 0; i < 8; ++i) {
      if (other.samples[i].record.video_id != batch.samples[i].record.video_id) differs = true;
    }
  }
  CHECK(differs);
}

TEST_CASE("contrastive batch error paths") {
  CHECK_THROWS_AS(vqa::build_contrastive_batch(tiered_records({10}), 4, 0.5, 1), vqa::CompositionError);
  CHECK_THROWS_AS(vqa::build_contrastive_batch(tiered_records({10, 1}), 4, 0.5, 1),
                  vqa::CompositionError);
  CHECK_THROWS_AS(vqa::build_contrastive_batch(tiered_records({10, 10}), 5, 0.5, 1), vqa::ConfigError);
  CHECK_THROWS_AS(vqa::build_contrastive_batch(tiered_records({10, 10}), 4, 1.5, 1), vqa::ConfigError);

  try {
    vqa::build_contrastive_batch(tiered_records({3, 1}), 8, 0.5, 1);
    FAIL("expected CompositionError");
  } catch (const vqa::CompositionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("4+4") != std::string::npos);  // names the deficit
    CHECK(msg.find("tier0=3") != std::string::npos);
  }
}

TEST_CASE("batch invariants hold across random manifests and seeds") {
  vqa::Rng rng(77);
  int built = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int tiers = 2 + static_cast<int>(rng.bounded(3));
    std::vector<int> sizes;
    for (int t = 0; t < tiers; ++t) sizes.push_back(1 + static_cast<int>(rng.bounded(8)));
    const auto records = tiered_records(sizes);
    const int n = 2 * (1 + static_cast<int>(rng.bounded(3)));  // 2, 4, 6
    const std::uint64_t seed = rng.next_u64();

    try {
      const auto batch = vqa::build_contrastive_batch(records, n, 0.5, seed);
      ++built;
      const int a = batch.group_a_count();
      REQUIRE(static_cast<int>(batch.samples.size()) == n);
      CHECK(batch.group_a_tier != batch.group_b_tier);
      CHECK(batch.group_a_tier < batch.group_b_tier);
      for (int i = 0; i < n; ++i) {
        CHECK(batch.samples[i].record.bitrate_tier ==
              (i < a ? batch.group_a_tier : batch.group_b_tier));
      }
    } catch (const vqa::CompositionError&) {
      // legitimate only when no tier pair can fill both halves
      const int need = n / 2;
      int rich = 0;
      for (int s : sizes) rich += (s >= need);
      CHECK(rich < 2);
    }
  }
  CHECK(built > 50);
}
