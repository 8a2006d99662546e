#include <algorithm>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wr/corpus.hpp"
#include "wr/error.hpp"

namespace wr::corpus {
namespace {

using test::code_of;

CorpusManifest mixed_manifest() {
  return parse_manifest(
      "image_id,path,writer_id,subset\n"
      "m1,a.png,wA,manuscripts\n"
      "c1,b.png,wB,charters\n"
      "m2,c.png,wA,manuscripts\n"
      "la1,d.png,wC,letters_a\n"
      "lb1,e.png,wD,letters_b\n"
      "la2,f.png,wC,letters_a\n");
}

TEST(Manifest, ParsesThreeEntries) {
  const auto m = parse_manifest("image_id,path,writer_id,subset\n"
                                "# a comment\n"
                                "p1,img/1.png,w1,manuscripts\n"
                                "\n"
                                "p2,img/2.png,w1,charters\n"
                                "p3,img/3.png,w2,letters_a\n",
                                "/data");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].image_id, "p1");
  EXPECT_EQ(m[0].path, std::filesystem::path("/data/img/1.png"));
  EXPECT_EQ(m[1].subset, SubsetTag::charters);
  EXPECT_EQ(m[2].writer_id, "w2");
  EXPECT_EQ(m.index_of("p3"), 2u);
}

TEST(Manifest, DuplicateIdIsRejected) {
  EXPECT_EQ(code_of([] {
              parse_manifest("image_id,path,writer_id,subset\np1,a,w1,manuscripts\np1,b,w2,charters\n");
            }),
            Errc::duplicate_id);
}

TEST(Manifest, ErrorsCarryLineNumbers) {
  try {
    parse_manifest("image_id,path,writer_id,subset\np1,a,w1,manuscripts\np2,b,w2\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] { parse_manifest("image_id,path,writer_id,subset\np1,a,w1,scrolls\n"); }), Errc::unknown_tag);
  EXPECT_EQ(code_of([] { parse_manifest("id,path,writer,subset\n"); }), Errc::parse);
  EXPECT_EQ(code_of([] { load_manifest("/nonexistent/manifest.csv"); }), Errc::io);
}

TEST(Manifest, TwentyThousandEntries) {
  std::string text = "image_id,path,writer_id,subset\n";
  for (int i = 0; i < 20000; ++i) {
    text += "img" + std::to_string(i) + ",p" + std::to_string(i) + ".jpg,w" + std::to_string(i / 2) + ",manuscripts\n";
  }
  const auto m = parse_manifest(text);
  EXPECT_EQ(m.size(), 20000u);
  EXPECT_EQ(m.index_of("img19999"), 19999u);
}

TEST(Manifest, WriteThenLoadKeepsOrder) {
  test::TempDir dir("manifest");
  const auto original = parse_manifest(
      "image_id,path,writer_id,subset\nz,z.png,w1,charters\na,a.png,w1,charters\nm,m.png,w2,letters_b\n",
      dir.path());
  write_manifest(original, dir / "m.csv");
  const auto loaded = load_manifest(dir / "m.csv");
  EXPECT_EQ(loaded, original);
}

TEST(RelevantCount, LeaveOneOut) {
  std::string text = "image_id,path,writer_id,subset\n";
  for (int i = 0; i < 5; ++i) text += "five" + std::to_string(i) + ",x,w5,manuscripts\n";
  for (int i = 0; i < 3; ++i) text += "three" + std::to_string(i) + ",x,w3,letters_a\n";
  text += "lonely,x,d1,charters\n";
  const auto m = parse_manifest(text);
  EXPECT_EQ(relevant_count(m, "five2"), 4u);
  EXPECT_EQ(relevant_count(m, "three0"), 2u);
  EXPECT_EQ(relevant_count(m, "lonely"), 0u);
  EXPECT_EQ(code_of([&] { relevant_count(m, "ghost"); }), Errc::unknown_id);
}

TEST(RelevantCount, SumMatchesPairCountOnRandomManifests) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> writers(1, 8);
    std::uniform_int_distribution<int> n_dist(1, 40);
    const int n = n_dist(rng);
    std::vector<ManifestEntry> entries;
    for (int i = 0; i < n; ++i) {
      entries.push_back({"i" + std::to_string(i), "p", "w" + std::to_string(writers(rng)), SubsetTag::synthetic});
    }
    const CorpusManifest m(entries);
    std::map<std::string, std::size_t> pages;
    for (const auto& e : entries) ++pages[e.writer_id];
    std::size_t expected = 0;
    for (const auto& [w, k] : pages) expected += k * (k - 1);
    std::size_t sum = 0;
    for (const auto& e : entries) sum += relevant_count(m, e.image_id);
    EXPECT_EQ(sum, expected);
    const auto all = relevant_counts(m);
    EXPECT_EQ(std::accumulate(all.begin(), all.end(), std::size_t{0}), expected);
  }
}

TEST(SubsetSelect, FiltersAndKeepsOrder) {
  const auto m = mixed_manifest();
  const auto mss = subset_select(m, {SubsetTag::manuscripts});
  ASSERT_EQ(mss.size(), 2u);
  EXPECT_EQ(mss[0].image_id, "m1");
  EXPECT_EQ(mss[1].image_id, "m2");
  EXPECT_EQ(subset_select(m, all_tags()), m);

  const auto mss_chars = subset_select(m, {SubsetTag::manuscripts, SubsetTag::charters});
  EXPECT_EQ(mss_chars.ids(), (std::vector<std::string>{"m1", "c1", "m2"}));
  EXPECT_EQ(mss_chars[1].writer_id, "wB");
  EXPECT_TRUE(subset_select(m, {SubsetTag::synthetic}).empty());
  EXPECT_EQ(code_of([&] { subset_select(m, {}); }), Errc::invalid_argument);
}

TEST(SubsetSelect, IdempotentAndComposesByIntersection) {
  const auto m = mixed_manifest();
  const std::vector<std::set<SubsetTag>> sets = {
      {SubsetTag::manuscripts}, {SubsetTag::manuscripts, SubsetTag::charters},
      {SubsetTag::letters_a, SubsetTag::letters_b}, {SubsetTag::charters, SubsetTag::letters_a}, all_tags()};
  for (const auto& a : sets) {
    EXPECT_EQ(subset_select(subset_select(m, a), a), subset_select(m, a));
    for (const auto& b : sets) {
      std::set<SubsetTag> both;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(both, both.begin()));
      if (both.empty()) continue;
      EXPECT_EQ(subset_select(subset_select(m, a), b), subset_select(m, both));
    }
  }
}

TEST(Synth, SmallCorpusCounts) {
  test::TempDir dir("synth");
  const auto m = synth_corpus({.num_writers = 2, .pages_per_writer = 2, .num_distractors = 0, .seed = 7}, dir.path());
  ASSERT_EQ(m.size(), 4u);
  std::set<std::string> writers;
  for (const auto& e : m.entries()) {
    writers.insert(e.writer_id);
    EXPECT_TRUE(std::filesystem::exists(e.path));
  }
  EXPECT_EQ(writers.size(), 2u);
  EXPECT_EQ(load_manifest(dir / "manifest.csv"), m);
}

TEST(Synth, DeterministicBytes) {
  test::TempDir a("synth_a");
  test::TempDir b("synth_b");
  const SynthParams p{.num_writers = 2, .pages_per_writer = 2, .num_distractors = 1, .seed = 7};
  const auto ma = synth_corpus(p, a.path());
  const auto mb = synth_corpus(p, b.path(), 3);
  ASSERT_EQ(ma.size(), mb.size());
  auto slurp = [](const std::filesystem::path& f) {
    std::ifstream in(f, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  for (std::size_t i = 0; i < ma.size(); ++i) {
    EXPECT_EQ(slurp(ma[i].path), slurp(mb[i].path)) << ma[i].image_id;
  }
  EXPECT_EQ(slurp(a / "manifest.csv"), slurp(b / "manifest.csv"));
}

TEST(Synth, DistractorsAreSingletonWriters) {
  test::TempDir dir("synth_d");
  const auto m = synth_corpus({.num_writers = 3, .pages_per_writer = 2, .num_distractors = 4, .seed = 3}, dir.path());
  ASSERT_EQ(m.size(), 10u);
  const auto r = relevant_counts(m);
  EXPECT_EQ(std::count(r.begin(), r.end(), 0u), 4);
  EXPECT_EQ(std::count(r.begin(), r.end(), 1u), 6);
}

TEST(Synth, RejectsBadCountsAndUnwritableDir) {
  EXPECT_EQ(code_of([] { synth_corpus({.num_writers = 0}, "/tmp/wr_never"); }), Errc::invalid_argument);
  EXPECT_EQ(code_of([] { synth_corpus({}, "/proc/wr_cannot_write_here"); }), Errc::io);
}

}  // namespace
}  // namespace wr::corpus
