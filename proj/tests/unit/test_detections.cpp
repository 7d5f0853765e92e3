#include <gtest/gtest.h>

#include <fstream>

#include "satsplat/detections.hpp"
#include "satsplat/errors.hpp"
#include "satsplat/random.hpp"
#include "../support/oracles.hpp"

using namespace satsplat;

TEST(Iou, SpecExamples) {
  const BBox a{0.5, 0.5, 0.2, 0.3};
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, BBox{0.1, 0.1, 0.05, 0.05}), 0.0);
  EXPECT_NEAR(iou(BBox{0.25, 0.25, 0.5, 0.5}, BBox{0.5, 0.5, 0.5, 0.5}), 1.0 / 7.0, 1e-15);
}

TEST(Iou, SymmetricScaleInvariantAndMatchesOracle) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const BBox a{rng.uniform(), rng.uniform(), rng.uniform(0.01, 0.5), rng.uniform(0.01, 0.5)};
    const BBox b{rng.uniform(), rng.uniform(), rng.uniform(0.01, 0.5), rng.uniform(0.01, 0.5)};
    EXPECT_EQ(iou(a, b), iou(b, a));
    EXPECT_NEAR(iou(a, b), oracle::box_iou(a, b), 1e-14);
    EXPECT_NEAR(iou(a, a), 1.0, 1e-15);
    const double k = rng.uniform(0.1, 2.0), ox = rng.uniform(-1, 1), oy = rng.uniform(-1, 1);
    const BBox sa{a.cx * k + ox, a.cy * k + oy, a.w * k, a.h * k};
    const BBox sb{b.cx * k + ox, b.cy * k + oy, b.w * k, b.h * k};
    EXPECT_NEAR(iou(sa, sb), iou(a, b), 1e-12);
  }
}

TEST(BBox, ClippingAndCorners) {
  const BBox b = BBox::from_corners(0.1, 0.2, 0.5, 0.4);
  EXPECT_NEAR(b.cx, 0.3, 1e-15);
  EXPECT_NEAR(b.h, 0.2, 1e-15);
  const BBox c = BBox{0.95, 0.5, 0.2, 0.2}.clipped();
  EXPECT_NEAR(c.x1(), 1.0, 1e-15);
  EXPECT_NEAR(c.w, 0.15, 1e-15);
  EXPECT_EQ(BBox(BBox{1.5, 0.5, 0.2, 0.2}.clipped()).area(), 0.0);
}

TEST(Parse, SpecLines) {
  const auto d = parse_detections("1 0.5 0.5 0.4 0.6 0.93\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].class_id, ClassId::kBody);
  EXPECT_EQ(d[0].bbox, (BBox{0.5, 0.5, 0.4, 0.6}));
  EXPECT_EQ(d[0].confidence, 0.93);

  const auto g = parse_detections("0 0.2 0.3 0.1 0.2");
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].class_id, ClassId::kSolar);
  EXPECT_EQ(g[0].confidence, 1.0);

  EXPECT_THROW(parse_detections("7 0.5 0.5 0.1 0.1 0.9"), RangeError);
}

TEST(Parse, CommentsBlanksAndErrors) {
  EXPECT_TRUE(parse_detections("# classes: ...\n\n   \n").empty());
  EXPECT_THROW(parse_detections("1 0.5 0.5 0.1 0.1 1.5"), RangeError);
  EXPECT_THROW(parse_detections("1 1.5 0.5 0.1 0.1 0.5"), RangeError);
  EXPECT_THROW(parse_detections("1 0.5 0.5 0 0.1 0.5"), RangeError);
  EXPECT_THROW(parse_detections("-1 0.5 0.5 0.1 0.1"), RangeError);
  try {
    parse_detections("1 0.5 0.5 0.1 0.1\n2 0.5 zero 0.1 0.1\n", "v.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.file(), "v.txt");
  }
  EXPECT_THROW(parse_detections("1 0.5 0.5 0.1"), ParseError);
  EXPECT_THROW(parse_detections("1 0.5 0.5 0.1 0.1 0.5 9"), ParseError);
  EXPECT_THROW(parse_detections("1.5 0.5 0.5 0.1 0.1"), ParseError);
}

TEST(Format, RoundTripsExactly) {
  Rng rng(8);
  std::vector<Detection> dets;
  for (int i = 0; i < 200; ++i) {
    dets.push_back({static_cast<ClassId>(rng.below(4)),
                    {rng.uniform(), rng.uniform(), rng.uniform(0.001, 1), rng.uniform(0.001, 1)},
                    rng.uniform()});
  }
  const std::string text = format_detections(dets);
  EXPECT_EQ(text.rfind(class_map_comment(), 0), 0u);
  EXPECT_EQ(parse_detections(text), dets);
}

TEST(Load, DirectoryAndManifest) {
  const auto dir = oracle::fresh_dir("dets");
  write_detection_file(dir / "a.txt", {{ClassId::kAntenna, {0.5, 0.5, 0.1, 0.1}, 0.7}});
  const std::vector<std::string> ids = {"a", "b"};
  const auto views = load_view_detections(dir, ids);
  ASSERT_EQ(views.size(), 2u);
  EXPECT_EQ(views[0].detections.size(), 1u);
  EXPECT_TRUE(views[1].detections.empty());
  EXPECT_EQ(missing_detection_files(dir, ids), std::vector<std::string>{"b"});

  {
    std::ofstream m(dir / "manifest.json");
    m << R"({"a": "a.txt", "z": "missing.txt"})";
  }
  const auto from_manifest = load_view_detections(dir / "manifest.json");
  ASSERT_EQ(from_manifest.size(), 2u);
  EXPECT_EQ(from_manifest[0].view_id, "a");
  EXPECT_EQ(from_manifest[0].detections[0].class_id, ClassId::kAntenna);
  EXPECT_TRUE(from_manifest[1].detections.empty());
}

TEST(Classes, NamesAndIds) {
  EXPECT_STREQ(class_name(ClassId::kThruster), "thruster");
  EXPECT_EQ(class_from_int(2), ClassId::kAntenna);
  EXPECT_FALSE(class_from_int(4).has_value());
}
