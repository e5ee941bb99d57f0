#include <cmath>

#include "doctest.h"
#include "percog/nas/cell.hpp"
#include "test_helpers.hpp"

using namespace percog;
using namespace percog::nas;
using percog::testing::random_tensor;

namespace {

Cell small_cell(CellKind kind, int n_nodes, int channels, Rng& rng) {
  ValidityTable validity;
  return make_cell(kind, n_nodes, channels, validity, rng);
}

void one_hot_identity(MixedEdge& e) {
  // keep only the identity op admissible; softmax over a singleton is 1
  e.valid.fill(0);
  e.valid[static_cast<std::size_t>(OpKind::Identity)] = 1;
}

std::vector<double> softmax_over_valid(const MixedEdge& e) {
  std::vector<double> w(kNumOps, 0.0);
  double mx = -1e300, z = 0.0;
  for (int k = 0; k < kNumOps; ++k)
    if (e.valid[static_cast<std::size_t>(k)]) mx = std::max(mx, e.alphas->val[k]);
  for (int k = 0; k < kNumOps; ++k)
    if (e.valid[static_cast<std::size_t>(k)]) {
      w[static_cast<std::size_t>(k)] = std::exp(e.alphas->val[k] - mx);
      z += w[static_cast<std::size_t>(k)];
    }
  for (auto& x : w) x /= z;
  return w;
}

}  // namespace

TEST_CASE("mixed edge: alpha one-hot on identity returns the input unchanged") {
  Rng rng(21);
  Cell cell = small_cell(CellKind::Regular, 1, 3, rng);
  MixedEdge& e = cell.edges[0];
  one_hot_identity(e);
  Var x = make_const(random_tensor({3, 10}, rng));
  Var y = e.forward(x);
  for (int i = 0; i < x->val.numel(); ++i)
    CHECK(y->val[i] == doctest::Approx(x->val[i]).epsilon(1e-12));
}

TEST_CASE("mixed edge: masking everything out is a configuration error") {
  Rng rng(22);
  Cell cell = small_cell(CellKind::Regular, 1, 3, rng);
  cell.edges[0].valid.fill(0);
  Var x = make_const(random_tensor({3, 10}, rng));
  CHECK_THROWS(cell.edges[0].forward(x));
}

TEST_CASE("mixed edge: two identity-equivalent ops mix to the input for any alpha") {
  Rng rng(23);
  Cell cell = small_cell(CellKind::Regular, 1, 3, rng);
  MixedEdge& e = cell.edges[0];
  e.valid.fill(0);
  e.valid[static_cast<std::size_t>(OpKind::Identity)] = 1;
  e.valid[static_cast<std::size_t>(OpKind::TConv3)] = 1;
  // transposed conv with a centred delta kernel acts as the identity
  Var& w = e.weights[static_cast<std::size_t>(OpKind::TConv3)];
  w->val.fill(0.0);
  for (int c = 0; c < 3; ++c) w->val.at3(1, c, c) = 1.0;
  for (double a : {-2.0, 0.0, 1.5}) {
    e.alphas->val[static_cast<int>(OpKind::Identity)] = a;
    e.alphas->val[static_cast<int>(OpKind::TConv3)] = -0.5 * a;
    Var x = make_const(random_tensor({3, 12}, rng));
    Var y = e.forward(x);
    for (int i = 0; i < x->val.numel(); ++i)
      CHECK(y->val[i] == doctest::Approx(x->val[i]).epsilon(1e-10));
  }
}

TEST_CASE("mixed edge forward equals the explicit per-op softmax sum") {
  Rng rng(24);
  for (auto kind : {CellKind::Regular, CellKind::Down, CellKind::Up}) {
    Cell cell = small_cell(kind, 2, 4, rng);
    for (auto& e : cell.edges) {
      for (int k = 0; k < kNumOps; ++k) e.alphas->val[k] =
          e.valid[static_cast<std::size_t>(k)] ? rng.gaussian() : 0.0;
      Var x = make_const(random_tensor({4, 16}, rng, 0.5));
      Var y = e.forward(x);
      auto mix = softmax_over_valid(e);
      Tensor expect;
      bool first = true;
      for (int k = 0; k < kNumOps; ++k) {
        if (!e.valid[static_cast<std::size_t>(k)]) continue;
        Var o = e.op_forward(static_cast<OpKind>(k), x);
        if (first) {
          expect = Tensor(o->val.shape, 0.0);
          first = false;
        }
        for (int i = 0; i < o->val.numel(); ++i)
          expect[i] += mix[static_cast<std::size_t>(k)] * o->val[i];
      }
      REQUIRE(y->val.shape == expect.shape);
      for (int i = 0; i < y->val.numel(); ++i)
        CHECK(std::abs(y->val[i] - expect[i]) < 1e-5);
    }
  }
}

TEST_CASE("mixed edge softmax weights sum to one with zeros at invalid ops") {
  Rng rng(25);
  for (auto kind : {CellKind::Regular, CellKind::Down, CellKind::Up}) {
    Cell cell = small_cell(kind, 1, 2, rng);
    for (auto& e : cell.edges) {
      for (int k = 0; k < kNumOps; ++k)
        if (e.valid[static_cast<std::size_t>(k)]) e.alphas->val[k] = rng.gaussian();
      auto mix = softmax_over_valid(e);
      double sum = 0.0;
      for (int k = 0; k < kNumOps; ++k) {
        if (!e.valid[static_cast<std::size_t>(k)])
          CHECK(mix[static_cast<std::size_t>(k)] == 0.0);
        CHECK(mix[static_cast<std::size_t>(k)] >= 0.0);
        sum += mix[static_cast<std::size_t>(k)];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("cell: one-hot identity edges make node values integer multiples of x") {
  Rng rng(26);
  Cell cell = small_cell(CellKind::Regular, 2, 3, rng);
  for (auto& e : cell.edges) one_hot_identity(e);
  Var x = make_const(random_tensor({3, 8}, rng));

  std::vector<Var> nodes{x, x};
  std::size_t ei = 0;
  for (int j = 2; j < 4; ++j) {
    Var acc;
    for (int i = 0; i < j; ++i, ++ei) {
      Var term = cell.edges[ei].forward(nodes[static_cast<std::size_t>(i)]);
      acc = acc ? add(acc, term) : term;
    }
    nodes.push_back(acc);
  }
  // node 2 = x + x; node 3 = x + x + node2 = 4x
  for (int i = 0; i < x->val.numel(); ++i) {
    CHECK(nodes[2]->val[i] == doctest::Approx(2.0 * x->val[i]).epsilon(1e-12));
    CHECK(nodes[3]->val[i] == doctest::Approx(4.0 * x->val[i]).epsilon(1e-12));
  }
}

TEST_CASE("cell: zero inputs produce zero outputs for any parameters") {
  Rng rng(27);
  for (auto kind : {CellKind::Regular, CellKind::Down, CellKind::Up}) {
    Cell cell = small_cell(kind, 2, 4, rng);
    for (auto& e : cell.edges)
      for (int k = 0; k < kNumOps; ++k)
        if (e.valid[static_cast<std::size_t>(k)]) e.alphas->val[k] = rng.gaussian();
    Var zero = make_const(Tensor({4, 16}));
    auto out = cell.forward(zero, zero);
    for (double v : out.next->val.v) CHECK(v == 0.0);
    for (double v : out.contribution->val.v) CHECK(v == 0.0);
  }
}

TEST_CASE("cell forward matches a hand-rolled DAG evaluation") {
  Rng rng(28);
  Cell cell = small_cell(CellKind::Regular, 2, 3, rng);
  for (auto& e : cell.edges)
    for (int k = 0; k < kNumOps; ++k)
      if (e.valid[static_cast<std::size_t>(k)]) e.alphas->val[k] = 0.5 * rng.gaussian();
  Var pp = make_const(random_tensor({3, 10}, rng, 0.4));
  Var p = make_const(random_tensor({3, 10}, rng, 0.4));
  auto out = cell.forward(pp, p);

  // oracle: explicit node sums, then the two projections
  auto edge_out = [&](const MixedEdge& e, const Var& x) {
    auto mix = softmax_over_valid(e);
    Tensor acc;
    bool first = true;
    for (int k = 0; k < kNumOps; ++k) {
      if (!e.valid[static_cast<std::size_t>(k)]) continue;
      Var o = const_cast<MixedEdge&>(e).op_forward(static_cast<OpKind>(k), x);
      if (first) {
        acc = Tensor(o->val.shape, 0.0);
        first = false;
      }
      for (int i = 0; i < o->val.numel(); ++i)
        acc[i] += mix[static_cast<std::size_t>(k)] * o->val[i];
    }
    return acc;
  };
  std::vector<Tensor> nodes{pp->val, p->val};
  std::size_t ei = 0;
  for (int j = 2; j < 4; ++j) {
    Tensor acc({3, 10});
    for (int i = 0; i < j; ++i, ++ei) {
      Tensor t = edge_out(cell.edges[ei], make_const(nodes[static_cast<std::size_t>(i)]));
      for (int v = 0; v < acc.numel(); ++v) acc[v] += t[v];
    }
    nodes.push_back(acc);
  }
  // concat intermediates, relu, 1x1 out_proj, then 1x1 contrib_proj
  Tensor cat({6, 10});
  std::copy(nodes[2].v.begin(), nodes[2].v.end(), cat.v.begin());
  std::copy(nodes[3].v.begin(), nodes[3].v.end(), cat.v.begin() + 30);
  Tensor next({3, 10});
  for (int t = 0; t < 10; ++t)
    for (int co = 0; co < 3; ++co) {
      double s = 0.0;
      for (int ci = 0; ci < 6; ++ci)
        s += cell.out_proj->val.at3(0, ci, co) * std::max(0.0, cat.at2(ci, t));
      next.at2(co, t) = s;
    }
  Tensor contrib({3, 10});
  for (int t = 0; t < 10; ++t)
    for (int co = 0; co < 3; ++co) {
      double s = 0.0;
      for (int ci = 0; ci < 3; ++ci)
        s += cell.contrib_proj->val.at3(0, ci, co) * next.at2(ci, t);
      contrib.at2(co, t) = s;
    }
  for (int i = 0; i < next.numel(); ++i) {
    CHECK(std::abs(out.next->val[i] - next[i]) < 1e-5);
    CHECK(std::abs(out.contribution->val[i] - contrib[i]) < 1e-5);
  }
}

TEST_CASE("cell kinds follow the temporal contract") {
  Rng rng(29);
  Var x = make_const(random_tensor({4, 16}, rng));
  auto reg = small_cell(CellKind::Regular, 2, 4, rng).forward(x, x);
  CHECK(reg.next->val.dim(1) == 16);
  auto down = small_cell(CellKind::Down, 2, 4, rng).forward(x, x);
  CHECK(down.next->val.dim(1) == 8);
  auto up = small_cell(CellKind::Up, 2, 4, rng).forward(x, x);
  CHECK(up.next->val.dim(1) == 32);
}

TEST_CASE("cell rejects mismatched input shapes") {
  Rng rng(30);
  Cell cell = small_cell(CellKind::Regular, 1, 4, rng);
  Var a = make_const(Tensor({4, 16}));
  Var b = make_const(Tensor({4, 12}));
  CHECK_THROWS_AS(cell.forward(a, b), ConfigError);
}
