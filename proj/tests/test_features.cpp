#include <doctest.h>

#include "acela/error.hpp"
#include "acela/features.hpp"
#include "acela/gbt.hpp"
#include "acela/workload.hpp"
#include "test_util.hpp"

using namespace acela;
using acela::testing::make_record;

TEST_CASE("build_schema assigns indices by first appearance") {
  auto a = make_record("a", 1, 10, FirmwareType::BIOS);
  auto b = make_record("b", 2, 10, FirmwareType::NIC);
  auto c = make_record("c", 3, 10, FirmwareType::BIOS);
  const auto schema = build_schema(Dataset({a, b, c}));
  const auto& fw = schema.vocabulary(0);
  CHECK(fw.tokens() == std::vector<std::string>{"BIOS", "NIC"});
  CHECK(fw.index_of("BIOS") == 1);
  CHECK(fw.index_of("NIC") == 2);
  CHECK(fw.index_of("CPLD") == 0);
  CHECK(schema.width() == 11);
  CHECK_THROWS_WITH(build_schema(Dataset{}), "empty input");
}

TEST_CASE("schema fingerprint is stable and content sensitive") {
  const auto data = generate(WorkloadSpec{.n_servers = 20, .n_jobs = 200, .seed = 3});
  CHECK(build_schema(data).fingerprint() == build_schema(data).fingerprint());

  std::vector<JobRecord> recs(data.records().begin(), data.records().end());
  recs.front().hardware.region = "R-new";
  CHECK(build_schema(Dataset(recs)).fingerprint() != build_schema(data).fingerprint());
}

TEST_CASE("encode maps unseen tokens to zero and passes numerics through") {
  const auto schema = build_schema(Dataset({make_record("a", 1)}));
  auto r = make_record("b", 2);
  r.hardware.region = "R-unseen";
  r.current_version = "v3";
  r.target_version = "v6";
  const auto fv = encode(r, schema);
  REQUIRE(fv.values.size() == schema.width());
  CHECK(fv.schema_version == schema.fingerprint());
  CHECK(fv.values[0] == 1.0);  // firmware BIOS seen
  CHECK(fv.values[1] == 0.0);  // current_version v3 unseen
  CHECK(fv.values[2] == 0.0);  // target_version v6 unseen
  CHECK(fv.values[3] == 1.0);  // server_type
  CHECK(fv.values[4] == 0.0);  // region unseen
  CHECK(fv.values[5] == 32.0);
  CHECK(fv.values[6] == 128.0);
  CHECK(fv.values[7] == 960.0);
  CHECK(fv.values[8] == 256.0);
  CHECK(fv.values[9] == 10.0);
  CHECK(fv.values[10] == 3.0);  // version gap
}

TEST_CASE("encode is deterministic and rejects non-finite numerics") {
  const auto schema = build_schema(Dataset({make_record("a", 1)}));
  const auto r = make_record("b", 2);
  CHECK(encode(r, schema).values == encode(r, schema).values);

  auto bad = r;
  bad.hardware.ram_gb = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(encode(bad, schema), Error);
}

TEST_CASE("encoding the training set leaves no unseen-token slots") {
  const auto data = generate(WorkloadSpec{.n_servers = 30, .n_jobs = 500, .seed = 11});
  const auto schema = build_schema(data);
  const auto m = encode_all(data.records(), schema);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t f = 0; f < FeatureSchema::kNumCategorical; ++f) zeros += m.at(i, f) == 0.0;
  CHECK(zeros == 0);
}

TEST_CASE("vocabulary order does not break the fitting pipeline") {
  const auto data = generate(WorkloadSpec{.n_servers = 30, .n_jobs = 600, .seed = 5});
  std::vector<JobRecord> reversed(data.records().rbegin(), data.records().rend());
  const auto schema_fwd = build_schema(data.records());
  const auto schema_rev = build_schema(std::span<const JobRecord>(reversed));
  CHECK(schema_fwd.vocabulary(3).tokens() != schema_rev.vocabulary(3).tokens());
  std::vector<double> y;
  for (const auto& r : data.records()) y.push_back(r.true_duration);
  for (const auto* schema : {&schema_fwd, &schema_rev}) {
    const auto x = encode_all(data.records(), *schema);
    const auto model = fit(x, y, Loss::pinball(0.9), Hyperparams{.num_rounds = 20});
    for (std::size_t i = 0; i < x.rows; ++i) CHECK(std::isfinite(predict(model, x.row(i))));
  }
}

TEST_CASE("version gap parses v<N> tokens") {
  CHECK(version_gap("v3", "v5") == 2.0);
  CHECK(version_gap("v3", "beta") == 0.0);
  CHECK(version_gap("", "v1") == 0.0);
}
