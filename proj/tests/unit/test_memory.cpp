#include <cmath>
#include <deque>

#include "doctest.h"
#include "mlcld/errors.hpp"
#include "mlcld/memory.hpp"
#include "support.hpp"

using namespace mlcld;
using memory::QueueSet;

namespace {

// One-row batch whose z, y and d all encode `tag` so alignment is checkable.
struct Row {
  Matrix z, y, d;
};

Row tagged(int tag) {
  const double a = 0.1 * tag;
  Row r{Matrix{{std::cos(a), std::sin(a)}}, Matrix{{double(tag % 2), double((tag / 2) % 2)}},
        Matrix{{1.0 / (tag + 2), 1.0 - 1.0 / (tag + 2)}}};
  return r;
}

int tag_of_d(std::span<const double> d) { return static_cast<int>(std::lround(1.0 / d[0])) - 2; }

}  // namespace

TEST_CASE("fifo eviction") {
  QueueSet q(4, 2, 2);
  for (int t = 1; t <= 5; ++t) {
    const auto r = tagged(t);
    q.enqueue_batch(r.z, r.y, r.d);
  }
  CHECK(q.size() == 4);
  const auto s = q.snapshot();
  for (std::size_t i = 0; i < 4; ++i) {
    const int tag = tag_of_d(s.d.row(i));
    CHECK(tag == static_cast<int>(i) + 2);
    CHECK(s.z.row(i)[0] == tagged(tag).z(0, 0));
    CHECK(s.y.row(i)[0] == tagged(tag).y(0, 0));
  }
}

TEST_CASE("fill, empty snapshot, order and isolation") {
  QueueSet q(3, 2, 2);
  const auto empty = q.snapshot();
  CHECK(empty.size() == 0);
  CHECK(empty.z.cols() == 2);

  const auto a = tagged(1), b = tagged(2);
  q.enqueue_batch(a.z, a.y, a.d);
  q.enqueue_batch(b.z, b.y, b.d);
  const auto snap = q.snapshot();
  CHECK(tag_of_d(snap.d.row(0)) == 1);
  CHECK(tag_of_d(snap.d.row(1)) == 2);
  const auto c = tagged(3);
  q.enqueue_batch(c.z, c.y, c.d);
  CHECK(snap.size() == 2);
  CHECK(tag_of_d(snap.d.row(1)) == 2);

  QueueSet full(3, 2, 2);
  Matrix z(3, 2), y(3, 2), d(3, 2, 0.5);
  for (std::size_t i = 0; i < 3; ++i) z(i, 0) = 1.0;
  full.enqueue_batch(z, y, d);
  CHECK(full.size() == 3);
  CHECK_THROWS_AS(full.enqueue_batch(Matrix(4, 2, 0.0), Matrix(4, 2), Matrix(4, 2, 0.5)),
                  QueueRejectError);
}

TEST_CASE("row guards") {
  QueueSet q(4, 2, 2);
  const Matrix z{{1, 0}}, y{{1, 0}};
  CHECK_THROWS_AS(q.enqueue_batch(z, y, Matrix{{0.4, 0.4}}), QueueRejectError);  // sums to 0.8
  CHECK_THROWS_AS(q.enqueue_batch(z, y, Matrix{{1.2, -0.2}}), QueueRejectError);
  CHECK_THROWS_AS(q.enqueue_batch(Matrix{{2, 0}}, y, Matrix{{0.5, 0.5}}), QueueRejectError);
  CHECK_THROWS_AS(q.enqueue_batch(z, Matrix{{0.5, 0}}, Matrix{{0.5, 0.5}}), QueueRejectError);
  // a bad row anywhere leaves the queue untouched
  CHECK_THROWS_AS(q.enqueue_batch(Matrix{{1, 0}, {0, 1}}, Matrix{{1, 0}, {0, 1}},
                                  Matrix{{0.5, 0.5}, {0.9, 0.0}}),
                  QueueRejectError);
  CHECK(q.empty());
  CHECK_THROWS_AS(q.enqueue_batch(Matrix{{1, 0, 0}}, y, Matrix{{0.5, 0.5}}), DimensionError);
}

TEST_CASE("matches a list-based reference") {
  Rng rng(31);
  QueueSet q(7, 3, 2);
  std::deque<std::vector<double>> ref;  // z, y, d flattened per row
  for (int step = 0; step < 40; ++step) {
    const std::size_t b = 1 + rng.below(7);
    const Matrix z = test::random_unit_rows(rng, b, 3);
    const Matrix y = test::random_binary(rng, b, 2);
    const Matrix d = test::random_simplex(rng, b, 2);
    q.enqueue_batch(z, y, d);
    for (std::size_t i = 0; i < b; ++i) {
      std::vector<double> row(z.row(i).begin(), z.row(i).end());
      row.insert(row.end(), y.row(i).begin(), y.row(i).end());
      row.insert(row.end(), d.row(i).begin(), d.row(i).end());
      ref.push_back(row);
      if (ref.size() > 7) ref.pop_front();
    }
    const auto s = q.snapshot();
    REQUIRE(s.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      std::vector<double> got(s.z.row(i).begin(), s.z.row(i).end());
      got.insert(got.end(), s.y.row(i).begin(), s.y.row(i).end());
      got.insert(got.end(), s.d.row(i).begin(), s.d.row(i).end());
      CHECK(got == ref[i]);
    }
  }
}
