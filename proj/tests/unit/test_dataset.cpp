#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "generators.hpp"
#include "scene_cluster/dataset.hpp"
#include "scene_cluster/error.hpp"

using namespace scene_cluster;

namespace {

std::string manifest(const std::vector<std::string>& rows) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : rows) out += r + "\n";
  return out;
}

void write_pair(const std::filesystem::path& dir, const std::string& name, int iw, int ih, int mw, int mh) {
  write_file_atomic(dir / (name + ".png"),
                    encode_png(Image(iw, ih, std::vector<std::uint8_t>(static_cast<std::size_t>(iw) * ih * 3, 90))));
  write_file_atomic(dir / (name + ".mask.png"), encode_png(BinarySaliencyMask(mw, mh)));
}

}  // namespace

TEST(Manifest, CountsRecordsAndParticipants) {
  const auto d = parse_manifest(manifest({"p1,a,a.png,a_m.png,home", "p1,b,b.png,b_m.png,", "p2,c,c.png,c_m.png,desk"}));
  EXPECT_EQ(d.size(), 3u);
  ASSERT_EQ(d.participants().size(), 2u);
  EXPECT_EQ(d.participants()[0], "p1");
  EXPECT_EQ(d.participant_records("p1").size(), 2u);
  EXPECT_EQ(d.records()[0].env_label, "home");
  EXPECT_FALSE(d.records()[1].env_label.has_value());
}

TEST(Manifest, EmptyIsAnError) {
  try {
    parse_manifest(manifest({}));
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_STREQ(e.what(), "no records");
  }
}

TEST(Manifest, DuplicateKeyIsNamed) {
  try {
    parse_manifest(manifest({"p1,img7,a.png,a_m.png,", "p1,img7,b.png,b_m.png,"}));
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("(p1, img7)"), std::string::npos) << e.what();
  }
}

TEST(Manifest, MalformedRowReportsRowNumber) {
  try {
    parse_manifest(manifest({"p1,a,a.png,a_m.png,", "p1,b,b.png"}));
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_manifest("participant,image\np,i\n"), InvalidArgument);
  EXPECT_THROW(parse_manifest(manifest({"p1,\"a,a.png,a_m.png,"})), InvalidArgument);
}

TEST(Manifest, AcceptsBomCrlfAndQuotedFields) {
  const std::string text = "\xEF\xBB\xBF" + std::string(kManifestHeader) +
                           "\r\np1,a,\"dir, with comma/a.png\",\"say \"\"hi\"\".png\",kitchen\r\n";
  const auto d = parse_manifest(text);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.records()[0].image_path, "dir, with comma/a.png");
  EXPECT_EQ(d.records()[0].mask_path, "say \"hi\".png");
}

TEST(Manifest, RoundTripPreservesRecords) {
  sc_test::Gen gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EatingOccasionRecord> records;
    const int n = gen.uniform_int(1, 20);
    const std::string specials = "ab,\"x ";
    for (int i = 0; i < n; ++i) {
      std::string path = "img";
      for (int k = 0; k < 4; ++k) path += specials[static_cast<std::size_t>(gen.uniform_int(0, 5))];
      EatingOccasionRecord r{"p" + std::to_string(gen.uniform_int(0, 4)), "i" + std::to_string(i), path, path + "m",
                             std::nullopt};
      if (gen.coin()) r.env_label = "env" + std::to_string(gen.uniform_int(0, 3));
      records.push_back(r);
    }
    const Dataset d(records);
    const auto back = parse_manifest(format_manifest(d));
    EXPECT_EQ(back.records(), d.records());
  }
}

TEST(Manifest, LoadResolvesPathsAgainstManifestDirectory) {
  sc_test::TempDir dir("manifest");
  std::filesystem::create_directories(dir / "sub");
  write_file_atomic(dir / "sub" / "m.csv", std::string_view(manifest({"p,a,a.png,a.mask.png,"})));
  const auto d = load_manifest(dir / "sub" / "m.csv");
  EXPECT_EQ(d.resolve("a.png"), dir / "sub" / "a.png");
  EXPECT_EQ(d.resolve("/abs/a.png"), std::filesystem::path("/abs/a.png"));
}

TEST(Validate, ConsistentDatasetHasNoViolations) {
  sc_test::TempDir dir("valid");
  write_pair(dir.path(), "a", 40, 40, 40, 40);
  write_pair(dir.path(), "b", 40, 40, 40, 40);
  const Dataset d({{"p", "a", "a.png", "a.mask.png", {}}, {"p", "b", "b.png", "b.mask.png", {}}}, dir.path());
  EXPECT_TRUE(validate_dataset(d).empty());
}

TEST(Validate, DimensionMismatchAndSmallParticipants) {
  sc_test::TempDir dir("invalid");
  write_pair(dir.path(), "a", 120, 80, 100, 80);
  write_pair(dir.path(), "b", 40, 40, 40, 40);
  write_pair(dir.path(), "c", 40, 40, 40, 40);
  const Dataset d({{"p", "a", "a.png", "a.mask.png", {}},
                   {"p", "b", "b.png", "b.mask.png", {}},
                   {"q", "c", "c.png", "c.mask.png", {}},
                   {"p", "z", "missing.png", "b.mask.png", {}}},
                  dir.path());
  const auto v = validate_dataset(d);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].kind, ViolationKind::dimension_mismatch);
  EXPECT_NE(v[0].message.find("dimension mismatch"), std::string::npos);
  EXPECT_EQ(v[1].kind, ViolationKind::unreadable_image);
  EXPECT_EQ(v[2].kind, ViolationKind::participant_too_small);
  EXPECT_NE(v[2].message.find("participant too small"), std::string::npos);
  EXPECT_EQ(validate_dataset(d), v);
}

TEST(Split, PartitionsRecordsByParticipant) {
  sc_test::Gen gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EatingOccasionRecord> records;
    const int n = gen.uniform_int(1, 40);
    for (int i = 0; i < n; ++i) {
      records.push_back({"p" + std::to_string(gen.uniform_int(0, 9)), "i" + std::to_string(i), "x", "y", {}});
    }
    const Dataset d(records);
    std::set<std::string> val;
    for (const auto& p : d.participants()) {
      if (gen.coin(0.3)) val.insert(p);
    }
    const auto split = split_by_participants(d, val);
    EXPECT_EQ(split.validation.size() + split.test.size(), d.size());
    for (const auto& p : split.validation.participants()) {
      EXPECT_TRUE(val.contains(p));
      EXPECT_FALSE(split.test.has_participant(p));
    }
    for (const auto& p : split.test.participants()) EXPECT_FALSE(val.contains(p));
  }
}

TEST(Split, EdgeCases) {
  const Dataset d({{"a", "1", "x", "y", {}}, {"b", "2", "x", "y", {}}, {"a", "3", "x", "y", {}}});
  auto s = split_by_participants(d, {});
  EXPECT_TRUE(s.validation.empty());
  EXPECT_EQ(s.test.size(), 3u);
  s = split_by_participants(d, {"a", "b"});
  EXPECT_TRUE(s.test.empty());
  EXPECT_THROW(split_by_participants(d, {"zz"}), InvalidArgument);
}

TEST(Split, TenOfSixtySixParticipants) {
  std::vector<EatingOccasionRecord> records;
  std::set<std::string> val;
  for (int p = 0; p < 66; ++p) {
    for (int i = 0; i < 3; ++i) records.push_back({"p" + std::to_string(p), std::to_string(i), "x", "y", {}});
    if (p < 10) val.insert("p" + std::to_string(p));
  }
  const auto s = split_by_participants(Dataset(records), val);
  EXPECT_EQ(s.validation.participants().size(), 10u);
  EXPECT_EQ(s.test.participants().size(), 56u);
}
