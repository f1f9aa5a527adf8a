#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "hgs/errors.hpp"
#include "hgs/instance.hpp"
#include "support.hpp"

using namespace hgs;

TEST_CASE("generator: 10x6x6 seed 42 has job lengths 5..7 and means in [1, 30]") {
  const auto g = generate_instance_detailed(10, 6, 6, 42);
  CHECK(g.instance.num_jobs == 10);
  CHECK(g.instance.num_machines == 6);
  CHECK(g.instance.num_vehicles == 6);
  for (const auto& job : g.instance.jobs) {
    CHECK(job.size() >= 5);
    CHECK(job.size() <= 7);
  }
  for (const auto& means : g.processing_means)
    for (int mean : means) {
      CHECK(mean >= 1);
      CHECK(mean <= 30);
    }
}

TEST_CASE("generator: 1x1x1 only uses machine 1") {
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const auto inst = generate_instance(1, 1, 1, seed);
    CHECK(inst.num_jobs == 1);
    for (const auto& op : inst.jobs[0]) {
      REQUIRE(op.options.size() == 1);
      CHECK(op.options[0].machine == 0);
    }
  }
}

TEST_CASE("generator: same seed gives byte-identical output") {
  const auto a = generate_instance(5, 3, 3, 7);
  const auto b = generate_instance(5, 3, 3, 7);
  CHECK(a == b);
  CHECK(serialize_instance(a) == serialize_instance(b));
  CHECK_FALSE(a == generate_instance(5, 3, 3, 8));
}

TEST_CASE("generator: rejects zero sizes") {
  CHECK_THROWS_AS(generate_instance(0, 3, 3, 1), InstanceError);
  CHECK_THROWS_AS(generate_instance(3, 0, 3, 1), InstanceError);
  CHECK_THROWS_AS(generate_instance(3, 3, 0, 1), InstanceError);
}

TEST_CASE("generator: invariants hold for 1000 seeds") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const int n = 1 + static_cast<int>(seed % 7);
    const int m = 1 + static_cast<int>((seed / 7) % 5);
    const int v = 1 + static_cast<int>((seed / 35) % 4);
    const auto inst = generate_instance(n, m, v, seed);
    CHECK_NOTHROW(validate(inst));
    for (const auto& job : inst.jobs) {
      const long lo = std::max(1L, std::lround(0.8 * m));
      const long hi = std::max(1L, std::lround(1.2 * m));
      CHECK(static_cast<long>(job.size()) >= lo);
      CHECK(static_cast<long>(job.size()) <= hi);
    }
  }
}

TEST_CASE("generator: sampled means cover their full ranges") {
  int p_min = 1000, p_max = 0, t_min = 1000, t_max = 0;
  std::size_t ops = 0;
  for (std::uint64_t seed = 0; ops < 10000; ++seed) {
    const auto g = generate_instance_detailed(10, 6, 6, seed);
    for (const auto& job : g.processing_means)
      for (int mean : job) {
        p_min = std::min(p_min, mean);
        p_max = std::max(p_max, mean);
        ++ops;
      }
    for (int mean : g.travel_means) {
      t_min = std::min(t_min, mean);
      t_max = std::max(t_max, mean);
    }
  }
  CHECK(p_min == 1);
  CHECK(p_max == 30);
  CHECK(t_min == 1);
  CHECK(t_max == 20);
}

TEST_CASE("generator: times lie within the jittered interval of their mean") {
  const auto g = generate_instance_detailed(10, 6, 6, 3);
  for (std::size_t i = 0; i < g.instance.jobs.size(); ++i)
    for (std::size_t j = 0; j < g.instance.jobs[i].size(); ++j) {
      const double mean = g.processing_means[i][j];
      for (const auto& opt : g.instance.jobs[i][j].options) {
        CHECK(opt.processing_time >= std::max(1L, std::lround(0.8 * mean)));
        CHECK(opt.processing_time <= std::max(1L, std::lround(1.2 * mean)));
      }
    }
  const auto& t = g.instance.travel;
  for (std::size_t a = 0; a < t.size(); ++a) {
    CHECK(t[a][a] == 0);
    for (std::size_t b = 0; b < t.size(); ++b) CHECK(t[a][b] == t[b][a]);
  }
}

TEST_CASE("parse: minimal 1x1x1 fixture") {
  const auto inst = parse_instance(
      R"({"name": "one", "n": 1, "m": 1, "v": 1, "jobs": [[[[1, 5]]]], "travel": [[0, 3], [3, 0]]})");
  CHECK(inst.name == "one");
  CHECK(inst.num_jobs == 1);
  CHECK(inst.num_machines == 1);
  CHECK(inst.num_vehicles == 1);
  CHECK(inst.jobs[0][0].processing_time_on(0) == 5);
  CHECK(inst.travel_time(kDepot, machine_location(0)) == 3);
}

TEST_CASE("parse: empty machine set is an invariant violation") {
  try {
    parse_instance(R"({"name": "x", "n": 1, "m": 1, "v": 1, "jobs": [[[]]], "travel": [[0, 1], [1, 0]]})");
    FAIL("expected an error");
  } catch (const InstanceError& e) {
    CHECK(std::string(e.what()).find("empty compatible-machine set") != std::string::npos);
  }
}

TEST_CASE("parse: diagnostics name the field") {
  auto message = [](const std::string& text) {
    try {
      parse_instance(text);
    } catch (const InstanceError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"name": "x", "n": 1, "m": 1, "v": 1, "jobs": [[[[1, "a"]]]], "travel": [[0, 1], [1, 0]]})")
            .find("jobs[0][0][0]") != std::string::npos);
  CHECK(message(R"({"name": "x", "n": 1, "m": 1, "v": 1, "jobs": [[[[1, 2]]]], "travel": [[0, 1], [1, 0]], "extra": 1})")
            .find("extra") != std::string::npos);
  CHECK(message(R"({"name": "x", "n": 1, "m": 1, "v": 1, "jobs": [[[[2, 2]]]], "travel": [[0, 1], [1, 0]]})")
            .find("machine 2") != std::string::npos);
  CHECK(message(R"({"name": "x", "n": 1, "m": 1, "v": 1, "jobs": [[[[1, 2]]]], "travel": [[0, 1], [2, 0]]})")
            .find("symmetric") != std::string::npos);
  CHECK(message(R"({"name": "x", "n": 1, "m": 1, "v": 1, "jobs": [[[[1, 0]]]], "travel": [[0, 1], [1, 0]]})")
            .find("non-positive") != std::string::npos);
  CHECK(message("{not json").find("parse error") != std::string::npos);
}

TEST_CASE("write/load round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "hgs_test_instance";
  std::filesystem::create_directories(dir);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_instance(5, 3, 3, seed);
    const auto path = dir / (inst.name + ".json");
    write_instance(inst, path);
    CHECK(load_instance(path) == inst);
  }
  // Zero travel still writes the depot row and column.
  const auto flat = test::make_instance(1, 1, {{{{1, 4}}}}, test::zero_travel(1));
  write_instance(flat, dir / "flat.json");
  const auto back = load_instance(dir / "flat.json");
  CHECK(back == flat);
  CHECK(back.travel.size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("operation helpers") {
  const auto inst = test::make_instance(3, 1, {{{{1, 4}, {3, 8}}}}, test::zero_travel(3));
  const auto& op = inst.jobs[0][0];
  CHECK(op.processing_time_on(0) == 4);
  CHECK(op.processing_time_on(1) == -1);
  CHECK(op.compatible(2));
  CHECK(op.mean_processing_time() == doctest::Approx(6.0));
  CHECK(op.min_processing_time() == 4);
  CHECK(op.max_processing_time() == 8);
  CHECK(inst.time_scale() == 8);
}
