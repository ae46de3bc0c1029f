#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "acela/csv.hpp"
#include "acela/domain.hpp"
#include "acela/error.hpp"
#include "test_util.hpp"

using namespace acela;
using acela::testing::make_record;

namespace {

std::set<std::string> ids_of(const Dataset& d) {
  std::set<std::string> out;
  for (const auto& r : d.records()) out.insert(r.job_id);
  return out;
}

std::vector<std::string> id_list(const Dataset& d) {
  std::vector<std::string> out;
  for (const auto& r : d.records()) out.push_back(r.job_id);
  return out;
}

}  // namespace

TEST_CASE("dataset sorts by visit time and rejects duplicates") {
  Dataset d({make_record("b", 5), make_record("a", 1), make_record("c", 3)});
  CHECK(id_list(d) == std::vector<std::string>{"a", "c", "b"});
  CHECK_THROWS_AS(Dataset({make_record("a", 1), make_record("a", 2)}), Error);

  auto bad = make_record("x", 1, -1.0);
  CHECK_THROWS_AS(Dataset({bad}), Error);
}

TEST_CASE("split_by_time: thirty days, seven day window") {
  std::vector<JobRecord> recs;
  for (int day = 1; day <= 30; ++day) recs.push_back(make_record("d" + std::to_string(day), day));
  const auto split = split_by_time(Dataset(recs), 7.0, 0.1, 42);

  REQUIRE(split.test.size() == 7);
  CHECK(split.test.min_visit_time() == 24.0);
  CHECK(split.test.max_visit_time() == 30.0);
  CHECK(split.validation.size() == 2);  // round(0.1 * 23)
  CHECK(split.train.size() == 21);
}

TEST_CASE("split_by_time errors") {
  CHECK_THROWS_WITH(split_by_time(Dataset{}, 7.0, 0.1, 1), "empty input");
  CHECK_THROWS_WITH(split_by_time(Dataset({make_record("only", 3)}), 7.0, 0.1, 1), "degenerate split");
}

TEST_CASE("split_by_time: 100 records before the window") {
  std::vector<JobRecord> recs;
  for (int i = 0; i < 100; ++i) recs.push_back(make_record("r" + std::to_string(i), i * 0.1));
  for (int i = 0; i < 5; ++i) recs.push_back(make_record("t" + std::to_string(i), 50.0 + i));
  const Dataset d(recs);
  const auto split = split_by_time(d, 7.0, 0.1, 42);

  CHECK(split.validation.size() == 10);
  CHECK(split.train.size() == 90);
  CHECK(split.test.size() == 5);

  const auto tr = ids_of(split.train), va = ids_of(split.validation), te = ids_of(split.test);
  std::set<std::string> all;
  for (const auto* part : {&tr, &va, &te}) {
    for (const auto& id : *part) CHECK(all.insert(id).second);
  }
  CHECK(all == ids_of(d));
}

TEST_CASE("split_by_time properties over random datasets") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = std::uniform_int_distribution<int>(20, 200)(rng);
    std::vector<JobRecord> recs;
    for (int i = 0; i < n; ++i)
      recs.push_back(make_record("j" + std::to_string(i), std::uniform_real_distribution<double>(0, 60)(rng)));
    const Dataset d(recs);
    const auto seed = rng();
    DatasetSplit a, b;
    try {
      a = split_by_time(d, 7.0, 0.1, seed);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DegenerateSplit);
      continue;
    }
    b = split_by_time(d, 7.0, 0.1, seed);
    CHECK(id_list(a.train) == id_list(b.train));
    CHECK(id_list(a.validation) == id_list(b.validation));

    CHECK(a.train.size() + a.validation.size() + a.test.size() == d.size());
    std::set<std::string> all;
    for (const auto* part : {&a.train, &a.validation, &a.test})
      for (const auto& r : part->records()) CHECK(all.insert(r.job_id).second);

    double rest_max = a.train.max_visit_time();
    if (!a.validation.empty()) rest_max = std::max(rest_max, a.validation.max_visit_time());
    CHECK(a.test.min_visit_time() > rest_max);

    const double rest = static_cast<double>(a.train.size() + a.validation.size());
    CHECK(std::abs(static_cast<double>(a.validation.size()) - std::round(0.1 * rest)) <= 1.0);
  }
}

TEST_CASE("dataset CSV round trip preserves every field") {
  std::vector<JobRecord> recs;
  for (int i = 0; i < 5; ++i) {
    auto r = make_record("j" + std::to_string(i), i * 1.25, 100.0 / 3.0 + i, kAllFirmware[i], "s" + std::to_string(i));
    r.priority = i;
    r.hardware.ram_gb = 0.1 * (i + 1);
    recs.push_back(r);
  }
  const Dataset d(recs);
  std::stringstream ss(dataset_to_csv(d));
  const auto back = read_dataset_csv(ss);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& a = d[i];
    const auto& b = back[i];
    CHECK(a.job_id == b.job_id);
    CHECK(a.firmware == b.firmware);
    CHECK(a.true_duration == b.true_duration);
    CHECK(a.visit_time == b.visit_time);
    CHECK(a.hardware.ram_gb == b.hardware.ram_gb);
    CHECK(a.priority == b.priority);
    CHECK(a.server_id == b.server_id);
  }
  CHECK(dataset_to_csv(back) == dataset_to_csv(d));
}

TEST_CASE("dataset CSV rejects a wrong header") {
  std::stringstream ss("job_id,firmware\nx,BIOS\n");
  CHECK_THROWS_AS(read_dataset_csv(ss), Error);
}
