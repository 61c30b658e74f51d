#include <doctest.h>

#include "qfc/csv.hpp"
#include "qfc/errors.hpp"
#include "qfc/keyvalue.hpp"

using namespace qfc;

TEST_CASE("csv: comments, quotes, case-insensitive columns") {
  const auto t = io::parse_csv("# a comment\nLabel, Value\n\"a, b\",1.5\n\nplain,2\n", "t.csv");
  CHECK(t.rows.size() == 2);
  CHECK(t.column("label") == 0);
  CHECK(t.column(" VALUE ") == 1);
  CHECK(t.column("missing") == -1);
  CHECK(t.rows[0][0] == "a, b");
  CHECK(t.number(1, 1) == 2.0);
  CHECK(t.line_numbers[1] == 5);
}

TEST_CASE("csv: malformed input raises ParseError with location") {
  CHECK_THROWS_AS(io::parse_csv("a,b\n1\n"), ParseError);
  CHECK_THROWS_WITH(io::parse_csv("a,b\n1,2,3\n", "x.csv"), doctest::Contains("x.csv:2"));
  CHECK_THROWS_AS(io::parse_csv("a\n\"open\n"), ParseError);
  CHECK_THROWS_AS(io::parse_csv(""), ParseError);
  const auto t = io::parse_csv("a\nnot-a-number\n");
  CHECK_THROWS_AS(t.number(0, 0), ParseError);
  CHECK_THROWS_AS(t.require_column("b"), ParseError);
}

TEST_CASE("strict numbers") {
  CHECK(io::parse_number("1e-3", "x") == 1e-3);
  CHECK(io::parse_number(" 2.5 ", "x") == 2.5);
  CHECK_THROWS_AS(io::parse_number("2.5x", "x"), ParseError);
  CHECK_THROWS_AS(io::parse_number("", "x"), ParseError);
}

TEST_CASE("key-value documents") {
  const auto d = io::KeyValueDoc::parse("# header\nname = test\nvalue = 3.25  # trailing\n");
  CHECK(d.require("name") == "test");
  CHECK(d.number("value") == 3.25);
  CHECK_FALSE(d.get("absent").has_value());
  CHECK_THROWS_AS(d.require("absent"), ParseError);
  CHECK_THROWS_AS(io::KeyValueDoc::parse("a = 1\na = 2\n"), ParseError);
  CHECK_THROWS_AS(io::KeyValueDoc::parse("no equals sign\n"), ParseError);
  const auto round = io::KeyValueDoc::parse(d.to_string());
  CHECK(round.entries() == d.entries());
}

TEST_CASE("missing files") {
  CHECK_THROWS_AS(io::read_text_file("/nonexistent/file.csv"), ParseError);
}
