#include "doctest.h"

#include <cmath>

#include "expect_error.hpp"
#include "fedconf/error.hpp"
#include "fedconf/score_matrix.hpp"

using namespace fedconf;

using fedconf::testing::kind_of;

TEST_CASE("validate_row enforces the simplex") {
  const std::vector<double> ok{0.25, 0.75};
  CHECK_NOTHROW(validate_row(ok));
  const std::vector<double> near{0.5, 0.5 + 5e-7};
  CHECK_NOTHROW(validate_row(near));

  const std::vector<double> heavy{0.5, 0.6};
  CHECK(kind_of([&] { validate_row(heavy); }) == ErrorKind::InvalidRow);
  const std::vector<double> negative{-0.1, 1.1};
  CHECK(kind_of([&] { validate_row(negative); }) == ErrorKind::InvalidRow);
  const std::vector<double> single{1.0};
  CHECK(kind_of([&] { validate_row(single); }) == ErrorKind::InvalidRow);
  const std::vector<double> nan{std::nan(""), 1.0};
  CHECK(kind_of([&] { validate_row(nan); }) == ErrorKind::InvalidRow);
}

TEST_CASE("ScoreMatrix construction and accessors") {
  const auto m = ScoreMatrix::from_rows({{0.3, 0.7}, {0.9, 0.1}, {0.5, 0.5}},
                                        std::vector<ClassIndex>{1, 0, 1});
  CHECK(m.rows() == 3);
  CHECK(m.classes() == 2);
  CHECK(m.row(1)[0] == 0.9);
  CHECK(m.labels() == std::vector<ClassIndex>{1, 0, 1});

  SUBCASE("labels are range checked") {
    CHECK(kind_of([&] { (void)m.with_labels({0, 2, 1}); }) == ErrorKind::LabelOutOfRange);
    CHECK(kind_of([&] { (void)m.with_labels({0, 1}); }) == ErrorKind::LengthMismatch);
  }
  SUBCASE("unlabeled access throws MissingLabels") {
    const auto u = m.without_labels();
    CHECK_FALSE(u.has_labels());
    CHECK(kind_of([&] { (void)u.labels(); }) == ErrorKind::MissingLabels);
  }
  SUBCASE("select keeps rows and labels aligned") {
    const std::vector<std::size_t> idx{2, 0};
    const auto s = m.select(idx);
    CHECK(s.rows() == 2);
    CHECK(s.row(0)[0] == 0.5);
    CHECK(s.labels() == std::vector<ClassIndex>{1, 1});
  }
  SUBCASE("concat stacks rows") {
    const std::vector<ScoreMatrix> parts{m, m};
    const auto c = ScoreMatrix::concat(parts);
    CHECK(c.rows() == 6);
    CHECK(c.labels().size() == 6);
  }
  SUBCASE("concat rejects differing class counts") {
    const auto three = ScoreMatrix::from_rows({{0.2, 0.3, 0.5}});
    const std::vector<ScoreMatrix> parts{m, three};
    CHECK(kind_of([&] { (void)ScoreMatrix::concat(parts); }) ==
          ErrorKind::ClassCountMismatch);
  }
}

TEST_CASE("ScoreMatrix rejects rows off the simplex without renormalizing") {
  CHECK(kind_of([] { (void)ScoreMatrix::from_rows({{0.5, 0.6}}); }) == ErrorKind::InvalidRow);
  CHECK(kind_of([] { (void)ScoreMatrix(1, {1.0}); }) == ErrorKind::InvalidRow);
}

TEST_CASE("Alpha lives in the open unit interval") {
  CHECK(Alpha(0.1).value() == 0.1);
  CHECK(kind_of([] { (void)Alpha(0.0); }) == ErrorKind::InvalidAlpha);
  CHECK(kind_of([] { (void)Alpha(1.0); }) == ErrorKind::InvalidAlpha);
  CHECK(kind_of([] { (void)Alpha(-0.5); }) == ErrorKind::InvalidAlpha);
}
