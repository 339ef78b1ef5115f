#include "mnri/csv.hpp"
#include "mnri/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace mnri;

namespace {

csv::Table parse(const std::string& text) {
  std::istringstream in(text);
  return csv::read(in);
}

}  // namespace

TEST(Csv, HeaderCommentsAndRows) {
  const auto t = parse("# knots a 1 2 3\n#second\ny,a\n1,2.5\n0,-3\n");
  ASSERT_EQ(t.comments.size(), 2u);
  EXPECT_EQ(t.comments[0], " knots a 1 2 3");
  EXPECT_EQ(t.header, (std::vector<std::string>{"y", "a"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.numeric_column("a"), (std::vector<double>{2.5, -3.0}));
}

TEST(Csv, QuotedFieldsAndLineEndings) {
  const auto t = parse("name,v\r\n\"a, b\",1\r\n\"say \"\"hi\"\"\",2\r\n\"multi\nline\",3");
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0][0], "a, b");
  EXPECT_EQ(t.rows[1][0], "say \"hi\"");
  EXPECT_EQ(t.rows[2][0], "multi\nline");
  EXPECT_EQ(t.numeric_column("v")[2], 3.0);
}

TEST(Csv, Errors) {
  auto code = [](const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code([] { parse(""); }), ErrorCode::DataError);
  EXPECT_EQ(code([] { parse("a,b\n1\n"); }), ErrorCode::DataError);
  EXPECT_EQ(code([] { parse("a\n\"open\n"); }), ErrorCode::DataError);
  const auto t = parse("a,b\n1,\n2,NA\n3,x\n");
  EXPECT_EQ(code([&] { t.numeric_column("b"); }), ErrorCode::DataError);
  EXPECT_EQ(code([&] { t.numeric_column("c"); }), ErrorCode::DataError);
  EXPECT_EQ(code([] { csv::read_file("/nonexistent/file.csv"); }), ErrorCode::DataError);
}

TEST(Csv, WriteRowQuotesWhenNeeded) {
  std::ostringstream out;
  csv::write_row(out, {"plain", "a,b", "q\"t"});
  EXPECT_EQ(out.str(), "plain,\"a,b\",\"q\"\"t\"\n");
  const auto back = parse("h1,h2,h3\n" + out.str());
  EXPECT_EQ(back.rows[0], (std::vector<std::string>{"plain", "a,b", "q\"t"}));
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9012345, std::numeric_limits<double>::max(), 0.0}) {
    const auto s = csv::format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
}
