#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "spamhmm/datamodel.hpp"
#include "spamhmm/error.hpp"
#include "spamhmm/rng.hpp"

using namespace spamhmm;

namespace {

Dataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  return read_reviews_csv(in);
}

std::string dump(const Dataset& ds) {
  std::ostringstream out;
  write_reviews_csv(out, ds);
  return out.str();
}

const char* kThree =
    "review_id,user_id,restaurant_id,timestamp,label\n"
    "r1,alice,s1,100,spam\n"
    "r2,bob,s1,50,genuine\n"
    "r3,alice,s2,40,\n";

}  // namespace

TEST_CASE("ingest counts reviews and users") {
  const Dataset ds = parse_csv(kThree);
  CHECK(ds.size() == 3);
  CHECK(ds.by_user().size() == 2);
  CHECK(ds.by_restaurant().size() == 2);
  const auto& alice = ds.by_user().at("alice");
  REQUIRE(alice.size() == 2);
  CHECK(ds[alice[0]].timestamp == 40);
  CHECK(ds[alice[1]].timestamp == 100);
  CHECK_FALSE(ds[alice[0]].label.has_value());
}

TEST_CASE("duplicate review id is rejected with its name") {
  const std::string text = "review_id,user_id,restaurant_id,timestamp,label\nr1,a,s,1,\nr1,b,s,2,\n";
  try {
    parse_csv(text);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("'r1'") != std::string::npos);
  }
}

TEST_CASE("negative timestamp is a validation error") {
  CHECK_THROWS_AS(parse_csv("review_id,user_id,restaurant_id,timestamp,label\nr1,a,s,-5,\n"), ValidationError);
}

TEST_CASE("malformed records report their line number") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_csv(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("review_id,user_id,restaurant_id,timestamp,label\nr1,a,s,1,\nr2,a,s,xx,\n") == 3);
  CHECK(line_of("review_id,user_id,restaurant_id,timestamp,label\nr1,a,s,1,maybe\n") == 2);
  CHECK(line_of("review_id,user_id,restaurant_id,timestamp,label\nr1,a\n") == 2);
  CHECK(line_of("review_id,user_id,timestamp\n") == 1);
}

TEST_CASE("record order does not change the dataset") {
  std::vector<std::string> rows = {"r1,alice,s1,100,spam", "r2,bob,s1,50,genuine", "r3,alice,s2,40,",
                                   "r4,carol,s3,100,spam", "r5,bob,s2,100,", "r6,alice,s1,100,genuine"};
  const std::string header = "review_id,user_id,restaurant_id,timestamp,label\n";
  auto join = [&](const std::vector<std::string>& r) {
    std::string s = header;
    for (const auto& x : r) s += x + "\n";
    return s;
  };
  const std::string reference = dump(parse_csv(join(rows)));
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(rows);
    CHECK(dump(parse_csv(join(rows))) == reference);
  }
}

TEST_CASE("equal timestamps are ordered by review id") {
  const Dataset ds = parse_csv("review_id,user_id,restaurant_id,timestamp,label\nb,u,s,5,\na,u,s,5,\n");
  CHECK(ds[0].review_id == "a");
  CHECK(ds.by_user().at("u") == std::vector<std::size_t>{0, 1});
}

TEST_CASE("csv and jsonl round trip") {
  const std::string text =
      "review_id,user_id,restaurant_id,timestamp,label\n"
      "\"r,1\",\"user \"\"x\"\"\",s1,10,spam\n"
      "r2,user2,s2,20,\n";
  const Dataset ds = parse_csv(text);
  CHECK(ds[0].review_id == "r,1");
  CHECK(ds[0].user_id == "user \"x\"");
  CHECK(parse_csv(dump(ds)) == ds);

  std::ostringstream jl;
  write_reviews_jsonl(jl, ds);
  std::istringstream jin(jl.str());
  CHECK(read_reviews_jsonl(jin) == ds);
}

TEST_CASE("jsonl errors carry line numbers") {
  std::istringstream in("{\"review_id\":\"r1\",\"user_id\":\"u\",\"restaurant_id\":\"s\",\"timestamp\":1}\n{oops}\n");
  CHECK_THROWS_AS(read_reviews_jsonl(in), ParseError);
  std::istringstream missing("{\"review_id\":\"r1\",\"user_id\":\"u\",\"timestamp\":1}\n");
  CHECK_THROWS_AS(read_reviews_jsonl(missing), ParseError);
}

TEST_CASE("user sequences: deltas, single review, clamping") {
  const Dataset ds = parse_csv(
      "review_id,user_id,restaurant_id,timestamp,label\n"
      "a1,a,s,0,\na2,a,s,720,\na3,a,s,1440,\n"
      "b1,b,s,99,\n"
      "c1,c,s,100,\nc2,c,t,100,\n");
  const auto seqs = build_user_sequences(ds);
  REQUIRE(seqs.size() == 3);
  CHECK(seqs[0].deltas == std::vector<double>{720.0, 720.0});
  CHECK(seqs[1].deltas.empty());
  CHECK(seqs[2].deltas == std::vector<double>{kMinDeltaSeconds});
  CHECK(kMinDeltaSeconds == 1.0);
}

TEST_CASE("user label is the majority, ties to spam") {
  const Dataset ds = parse_csv(
      "review_id,user_id,restaurant_id,timestamp,label\n"
      "a1,a,s,1,spam\na2,a,s,2,genuine\n"
      "b1,b,s,1,genuine\nb2,b,s,2,genuine\nb3,b,s,3,spam\n"
      "c1,c,s,1,\n");
  const auto seqs = build_user_sequences(ds);
  CHECK(seqs[0].label == Label::Spam);
  CHECK(seqs[1].label == Label::Genuine);
  CHECK_FALSE(seqs[2].label.has_value());
}

TEST_CASE("property: sequence lengths and delta sums") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Review> reviews;
    const std::size_t n = 1 + rng.below(60);
    for (std::size_t i = 0; i < n; ++i)
      reviews.push_back({"r" + std::to_string(i), "u" + std::to_string(rng.below(6)), "s" + std::to_string(rng.below(4)),
                         static_cast<std::int64_t>(rng.below(100000)), std::nullopt});
    const Dataset ds(reviews);
    const auto seqs = build_user_sequences(ds);
    std::size_t total = 0;
    for (const auto& s : seqs) {
      total += s.timestamps.size();
      CHECK(s.deltas.size() + 1 == s.timestamps.size());
      const bool clamped = std::adjacent_find(s.timestamps.begin(), s.timestamps.end()) != s.timestamps.end();
      if (!clamped)
        CHECK(std::accumulate(s.deltas.begin(), s.deltas.end(), 0.0) ==
              static_cast<double>(s.timestamps.back() - s.timestamps.front()));
      for (double d : s.deltas) CHECK(d >= kMinDeltaSeconds);
    }
    CHECK(total == ds.size());
    std::size_t indexed = 0;
    for (const auto& [r, idx] : ds.by_restaurant()) indexed += idx.size();
    CHECK(indexed == ds.size());
    CHECK(parse_csv(dump(ds)) == ds);
  }
}
