#include <doctest.h>

#include <fstream>
#include <set>

#include "demographics_table.hpp"
#include "sprobe/dataset/manifest.hpp"
#include "sprobe/error.hpp"
#include "sprobe/image_io.hpp"
#include "support.hpp"

using namespace sprobe;
using namespace sprobe::dataset;
using sprobe::testing::CountTable;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

Record rec(std::string id, int age, Gender g, std::optional<std::string> identity = std::nullopt) {
  Record r;
  r.id = std::move(id);
  r.path = r.id + ".png";
  r.age = age;
  r.gender = g;
  r.identity = std::move(identity);
  r.source = "test";
  return r;
}

std::set<std::string> ids(const Manifest& m) {
  std::set<std::string> out;
  for (const auto& r : m.records()) out.insert(r.id);
  return out;
}

// Surplus source: every cell has reference + extra records.
CountTable plus(const CountTable& t, std::uint64_t extra) {
  CountTable out = t;
  for (auto& row : out)
    for (auto& c : row) c += extra;
  return out;
}

}  // namespace

TEST_CASE("age bins") {
  CHECK(age_bin_label(assign_age_bin(2)) == "0-2");
  CHECK(age_bin_label(assign_age_bin(21)) == "21-32");
  CHECK(age_bin_label(assign_age_bin(33)) == "33-43");
  CHECK(age_bin_label(assign_age_bin(32)) == "21-32");
  CHECK(age_bin_label(assign_age_bin(0)) == "0-2");
  CHECK(age_bin_label(assign_age_bin(100)) == "54-100");
  CHECK(code_of([] { assign_age_bin(101); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { assign_age_bin(-1); }) == ErrorCode::OutOfRange);
  // Bins tile 0..100 with no gaps or overlaps.
  for (int age = 0; age <= 100; ++age) {
    int hits = 0;
    for (const auto& b : kAgeBins) hits += (age >= b.lo && age <= b.hi) ? 1 : 0;
    CHECK(hits == 1);
    const auto& b = kAgeBins[static_cast<std::size_t>(assign_age_bin(age))];
    CHECK(age >= b.lo);
    CHECK(age <= b.hi);
  }
  for (int b = 0; b < 8; ++b) CHECK(parse_age_bin(age_bin_label(b)) == b);
}

TEST_CASE("manifest validation") {
  CHECK(code_of([] { Manifest({rec("a", 3, Gender::male), rec("a", 4, Gender::male)}); }) ==
        ErrorCode::InvalidManifest);
  CHECK(code_of([] { Manifest({rec("", 3, Gender::male)}); }) == ErrorCode::InvalidManifest);
  CHECK(code_of([] { Manifest({rec("a", 121, Gender::male)}); }) == ErrorCode::InvalidManifest);
  CHECK(code_of([] { Manifest({rec("a", -1, Gender::male)}); }) == ErrorCode::InvalidManifest);
  CHECK_NOTHROW(Manifest({rec("a", 120, Gender::male)}));
}

TEST_CASE("manifest JSONL round trip") {
  Record full = rec("img 1", 40, Gender::female, "Zoë Saldaña");
  full.known = true;
  Record bare;
  bare.id = "b";
  bare.path = "/abs/b.jpg";
  bare.source = "s";
  const Manifest m({full, bare, rec("c", 7, Gender::unknown)});
  const std::string text = to_jsonl(m);
  CHECK(text.rfind(R"({"schema":"sprobe.manifest","version":1})", 0) == 0);
  const Manifest back = from_jsonl(text);
  CHECK(back.records() == m.records());
  CHECK(to_jsonl(back) == text);

  testing::TempDir dir;
  write_manifest(m, dir.path() / "m.jsonl");
  const Manifest loaded = read_manifest(dir.path() / "m.jsonl");
  CHECK(loaded.records() == m.records());
  CHECK(loaded.resolve(*loaded.find("img 1")) == dir.path() / "img 1.png");
  CHECK(loaded.resolve(*loaded.find("b")) == "/abs/b.jpg");
  CHECK(loaded.find("zzz") == nullptr);
}

TEST_CASE("malformed manifests are rejected") {
  CHECK(code_of([] { from_jsonl("{\"schema\":\"other\",\"version\":1}\n"); }) == ErrorCode::InvalidManifest);
  CHECK(code_of([] { from_jsonl("{\"schema\":\"sprobe.manifest\",\"version\":9}\n"); }) == ErrorCode::InvalidManifest);
  CHECK(code_of([] { from_jsonl("{\"schema\":\"sprobe.manifest\",\"version\":1}\nnot json\n"); }) ==
        ErrorCode::InvalidManifest);
  CHECK(code_of([] { from_jsonl("{\"schema\":\"sprobe.manifest\",\"version\":1}\n{\"path\":\"x\"}\n"); }) ==
        ErrorCode::InvalidManifest);
  CHECK(code_of([] { read_manifest("/nonexistent/m.jsonl"); }) == ErrorCode::IoError);
}

TEST_CASE("measure demographics") {
  CHECK(measure_demographics(Manifest{}).total() == 0);
  const Demographics one = measure_demographics(Manifest({rec("a", 25, Gender::male)}));
  CHECK(one.total() == 1);
  CHECK(one.at(Gender::male, parse_age_bin("21-32")) == 1);

  const Manifest reference = testing::manifest_from_counts(testing::kVideoScrapeCounts, "vs");
  const Demographics d = measure_demographics(reference);
  CHECK(d.at(Gender::male, parse_age_bin("33-43")) == 55);
  CHECK(d.total() == reference.size());
  CHECK(d.counts == testing::kVideoScrapeCounts);

  Record missing;
  missing.id = "x";
  missing.path = "x";
  missing.gender = Gender::male;
  CHECK(code_of([&] { measure_demographics(Manifest({missing})); }) == ErrorCode::MissingLabel);
  // Unknown gender is kept in manifests but not counted.
  CHECK(measure_demographics(Manifest({rec("u", 30, Gender::unknown)})).total() == 0);
}

TEST_CASE("demographics JSON uses the canonical bin keys") {
  const Demographics d = testing::demographics_of(testing::kFgNetCounts);
  const auto j = d.to_json();
  CHECK(j["male"]["33-43"] == 38);
  CHECK(j["female"]["0-2"] == 0);
  CHECK(j["male"].size() == 8);
  CHECK(Demographics::from_json(nlohmann::json::parse(j.dump())) == d);
}

TEST_CASE("subsample examples") {
  const Manifest source = testing::manifest_from_counts(plus(testing::kVideoScrapeCounts, 7), "src");
  CHECK(subsample_to_target(source, Demographics{}, 1).empty());

  // Target equal to source: every record selected.
  const Manifest exact = testing::manifest_from_counts(testing::kVideoScrapeCounts, "vs");
  const Manifest all = subsample_to_target(exact, measure_demographics(exact), 99);
  CHECK(ids(all) == ids(exact));

  // Surplus everywhere: output matches the target exactly.
  const Demographics target = testing::demographics_of(testing::kVideoScrapeCounts);
  const Manifest agedb = subsample_to_target(source, target, 5);
  CHECK(measure_demographics(agedb).counts == testing::kAgeDbCounts);

  // Shortfall source: 38 male 33-43 available against a target of 55.
  CountTable fg_supply = plus(testing::kVideoScrapeCounts, 3);
  fg_supply[0][5] = 38;
  fg_supply[0][6] = 19;
  fg_supply[0][7] = 10;
  const Manifest fg = testing::manifest_from_counts(fg_supply, "fg");
  const Manifest picked = subsample_to_target(fg, target, 5);
  const Demographics got = measure_demographics(picked);
  CHECK(got.at(Gender::male, parse_age_bin("33-43")) == 38);
  CHECK(got.counts == testing::kFgNetCounts);
}

TEST_CASE("subsample properties") {
  const Demographics target = testing::demographics_of(testing::kVideoScrapeCounts);
  for (std::uint64_t extra : {0, 2, 11}) {
    CountTable supply = plus(testing::kVideoScrapeCounts, extra);
    supply[1][4] = 4;  // one shortfall cell
    Manifest m = testing::manifest_from_counts(supply, "s");
    std::vector<Record> recs = m.records();
    recs.push_back(rec("unk", 30, Gender::unknown));
    m = Manifest(recs);
    for (std::uint64_t seed : {0ULL, 1ULL, 0xDEADBEEFULL}) {
      const Manifest a = subsample_to_target(m, target, seed);
      const Manifest b = subsample_to_target(m, target, seed);
      CHECK(ids(a) == ids(b));
      CHECK(measure_demographics(a).within(target));
      CHECK(a.find("unk") != nullptr);
      const auto in = ids(m);
      for (const auto& r : a.records()) CHECK(in.count(r.id) == 1);
      CHECK(ids(a).size() == a.size());
      for (int g = 0; g < 2; ++g)
        for (int bin = 0; bin < 8; ++bin)
          CHECK(measure_demographics(a).counts[g][bin] == std::min(target.counts[g][bin], supply[g][bin]));
    }
  }
}

TEST_CASE("subsample is independent of record order") {
  const Manifest m = testing::manifest_from_counts(plus(testing::kVideoScrapeCounts, 9), "s");
  std::vector<Record> reversed(m.records().rbegin(), m.records().rend());
  const Demographics target = testing::demographics_of(testing::kVideoScrapeCounts);
  CHECK(ids(subsample_to_target(m, target, 17)) == ids(subsample_to_target(Manifest(reversed), target, 17)));
  CHECK(ids(subsample_to_target(m, target, 17)) != ids(subsample_to_target(m, target, 18)));
}

TEST_CASE("known/unknown split") {
  Record noisy = rec("c", 30, Gender::male);
  const Manifest m({rec("a", 50, Gender::male, "Will Smith"), rec("b", 40, Gender::female, "Zoë Saldaña"), noisy,
                    rec("d", 20, Gender::female), rec("e", 60, Gender::male, "Brad Pitt")});
  std::map<std::string, IdentityResult> results;
  results["a"] = {std::string("Will Smith"), std::nullopt};
  results["b"] = {std::nullopt, std::nullopt};
  results["c"] = {std::string("Someone"), false};
  results["d"] = {std::string("Someone"), true};
  results["e"] = {std::string("Will Smith"), std::nullopt};
  const Manifest split = split_known_unknown(m, results);
  CHECK(split.find("a")->known == true);
  CHECK(split.find("b")->known == false);
  CHECK(split.find("c")->known == false);
  CHECK(split.find("d")->known == true);
  CHECK(split.find("e")->known == false);
  const auto k = split.filter_known(true), u = split.filter_known(false);
  CHECK(k.size() + u.size() == split.size());
  for (const auto& r : k.records()) CHECK(u.find(r.id) == nullptr);

  results.erase("e");
  CHECK(code_of([&] { split_known_unknown(m, results); }) == ErrorCode::IncompleteResults);
  results["e"] = {std::string("Brad Pit"), std::nullopt};
  CHECK(split_known_unknown(m, results).find("e")->known == true);
  CHECK(results_from_json(nlohmann::json::parse(results_to_json(results).dump())).size() == results.size());
}

TEST_CASE("build manifest from a directory and labels CSV") {
  testing::TempDir dir;
  const auto images = dir.path() / "imgs";
  std::filesystem::create_directories(images);
  io::write_png(testing::constant_image(8, 8, 0.5f), images / "b.png");
  io::write_png(testing::constant_image(8, 8, 0.5f), images / "a.png");
  std::ofstream(images / "notes.txt") << "x";
  {
    std::ofstream csv(dir.path() / "labels.csv");
    csv << "file,age,gender,identity\n"
        << "a.png,34,m,Will Smith\n"
        << "b.png,5,female,\n";
  }
  const Manifest m = build_manifest(images, dir.path() / "labels.csv", "local");
  REQUIRE(m.size() == 2);
  CHECK(m.records()[0].id == "a");
  CHECK(m.records()[0].age == 34);
  CHECK(m.records()[0].gender == Gender::male);
  CHECK(m.records()[0].identity == "Will Smith");
  CHECK(m.records()[1].gender == Gender::female);
  CHECK_FALSE(m.records()[1].identity);
  CHECK(m.records()[1].source == "local");
  CHECK_FALSE(m.records()[1].known);

  // Written one directory up, paths are re-based so they still resolve.
  write_manifest(m, dir.path() / "m.jsonl");
  const Manifest moved = read_manifest(dir.path() / "m.jsonl");
  CHECK(moved.records()[0].path == "imgs/a.png");
  CHECK(std::filesystem::exists(moved.resolve(moved.records()[0])));
  std::filesystem::create_directories(dir.path() / "sub");
  write_manifest(moved, dir.path() / "sub" / "m.jsonl");
  const Manifest again = read_manifest(dir.path() / "sub" / "m.jsonl");
  CHECK(again.records()[0].path == "../imgs/a.png");
  CHECK(std::filesystem::exists(again.resolve(again.records()[0])));

  const Manifest unlabeled = build_manifest(images, std::nullopt, "local");
  CHECK(unlabeled.size() == 2);
  CHECK_FALSE(unlabeled.records()[0].age);
}
