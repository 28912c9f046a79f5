#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "ssce/error.hpp"
#include "ssce/rng.hpp"
#include "ssce/text_io.hpp"

using namespace ssce;

TEST_CASE("format_double round trips") {
  Rng rng(1);
  for (int t = 0; t < 2000; ++t) {
    const double x = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.below(200)) - 100);
    CHECK(*parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(*parse_double(format_double(std::numeric_limits<double>::denorm_min())) ==
        std::numeric_limits<double>::denorm_min());
}

TEST_CASE("strict number parsing") {
  CHECK(*parse_double(" 1.5 ") == 1.5);
  CHECK_FALSE(parse_double("1.5x").has_value());
  CHECK_FALSE(parse_double("").has_value());
  CHECK(*parse_int("-7") == -7);
  CHECK_FALSE(parse_int("7.0").has_value());
  CHECK(*parse_u64("18446744073709551615") == 18446744073709551615ull);
  CHECK_FALSE(parse_u64("-1").has_value());
}

TEST_CASE("split_view and trim") {
  const auto cells = split_view("a,,b", ',');
  REQUIRE(cells.size() == 3);
  CHECK(cells[1].empty());
  CHECK(trim("  x y\t") == "x y");
}

TEST_CASE("rng") {
  Rng a(5), b(5);
  for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());

  Rng s = Rng::deserialize(a.serialize());
  CHECK(s == a);
  CHECK(s.normal() == a.normal());

  CHECK_FALSE(Rng::stream(1, 0) == Rng::stream(1, 1));
  CHECK_FALSE(Rng::stream(1, 0) == Rng::stream(2, 0));

  Rng r(9);
  std::vector<int> counts(5, 0);
  for (int k = 0; k < 50000; ++k) {
    const auto v = r.below(5);
    REQUIRE(v < 5);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);

  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < 50000; ++k) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double n = r.normal();
    sum += n;
    sq += n * n;
  }
  CHECK(std::abs(sum / 50000) < 0.02);
  CHECK(std::abs(sq / 50000 - 1.0) < 0.03);
  CHECK_THROWS_AS(Rng::deserialize("garbage"), Error);
}

TEST_CASE("file helpers") {
  const auto path = std::filesystem::temp_directory_path() / "ssce_test_file.txt";
  write_file_atomic(path, "hello\n");
  CHECK(read_file(path) == "hello\n");
  std::filesystem::remove(path);
  try {
    read_file(path);
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
  CHECK_THROWS_AS(write_file_atomic("/nonexistent-dir/x.txt", "x"), Error);
}
