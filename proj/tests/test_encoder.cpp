#include <doctest.h>

#include <cmath>
#include <random>

#include "hgs/encoder.hpp"
#include "hgs/errors.hpp"
#include "support.hpp"

using namespace hgs;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.d_h = 8;
  c.heads = 2;
  c.d_z = 4;
  c.d_ff = 16;
  c.layers = 2;
  return c;
}

Tensor2 mat(int r, int c, std::initializer_list<double> values) {
  Tensor2 t(r, c);
  auto it = values.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) t(i, j) = *it++;
  return t;
}

// Attention-block parameters for neighbor classes `classes` under prefix "t.".
ParameterStore block_store(const ModelConfig& c, const std::vector<std::string>& classes, std::uint64_t seed) {
  std::vector<ParameterShape> t{{"t.Wq", c.d_h, c.d_h, c.d_h}, {"t.Wo", c.d_h, c.d_h, c.d_h}};
  for (const auto& k : classes) {
    t.push_back({"t.Wk_" + k, c.d_h, c.d_h, c.d_h});
    t.push_back({"t.Wv_" + k, c.d_h, c.d_h, c.d_h});
    t.push_back({"t.e1_" + k, c.d_z, 2, 2});
    t.push_back({"t.e2_" + k, 1, c.d_z, c.d_z});
    t.push_back({"t.e3_" + k, 1, 1, 1});
  }
  return init_parameters(t, seed);
}

Tensor2 random_matrix(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor2 t(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) t(i, j) = u(rng);
  return t;
}

}  // namespace

TEST_CASE("hmha: hand-computed single head, d_h = 2") {
  ModelConfig c;
  c.d_h = 2;
  c.heads = 1;
  c.d_z = 2;
  auto store = block_store(c, {"A"}, 0);
  store.at("t.Wq").value = mat(2, 2, {1, 0.5, 0, 1});
  store.at("t.Wk_A").value = mat(2, 2, {2, 0, 1, -1});
  store.at("t.Wv_A").value = mat(2, 2, {0.5, 1, 1, 0});
  store.at("t.Wo").value = mat(2, 2, {1, 0, 1, 1});
  store.at("t.e1_A").value = mat(2, 2, {1, 0.5, -1, 2});
  store.at("t.e2_A").value = mat(1, 2, {1, -0.5});
  store.at("t.e3_A").value = mat(1, 1, {2});

  Tape tape(false);
  const Var x = tape.constant(mat(1, 2, {1, -0.5}));
  const Var nodes = tape.constant(mat(2, 2, {1, 2, 0, 1}));
  const Var edge = tape.constant(mat(1, 2, {0.5, -1}));
  const Mask mask = Mask::Constant(1, 2, true);
  const auto r = hmha(tape, store, c, "t.", x, {{nodes, edge, &mask, "A"}});

  // q = (0.75, -0.5); keys (2, -1), (0, -1); scores sqrt(2) and 0.5 / sqrt(2).
  // Augmented: relu(sqrt(2) + 0.25) - 0.5 relu(1 - sqrt(2)) = 0.25 + sqrt(2), and 0.
  const double aug0 = 0.25 + std::sqrt(2.0);
  const double w0 = 1.0 / (1.0 + std::exp(-aug0));
  const double w1 = 1.0 - w0;
  // values (2.5, 1), (1, 0); Wo adds the first column into the second.
  const double h0 = 2.5 * w0 + 1.0 * w1;
  const double h1 = 1.0 * w0;
  CHECK(std::abs(r.nodes.value()(0, 0) - h0) <= 1e-12);
  CHECK(std::abs(r.nodes.value()(0, 1) - (h0 + h1)) <= 1e-12);
  CHECK(std::abs(r.nodes.value()(0, 0) - 2.2612042196704456) <= 1e-12);
  CHECK(std::abs(r.nodes.value()(0, 1) - 3.1020070327840763) <= 1e-12);
  CHECK(std::abs(r.edges[0].value()(0, 0) - 2.0 * aug0) <= 1e-12);
  CHECK(r.edges[0].value()(0, 1) == 0.0);
}

TEST_CASE("hmha: a single neighbor gets weight exactly 1") {
  const auto c = tiny_config();
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto store = block_store(c, {"A"}, seed);
    Tape tape(false);
    const Var x = tape.constant(random_matrix(3, c.d_h, rng));
    const Var nodes = tape.constant(random_matrix(1, c.d_h, rng));
    const Var edge = tape.constant(random_matrix(3, 1, rng));
    const Mask mask = Mask::Constant(3, 1, true);
    const auto r = hmha(tape, store, c, "t.", x, {{nodes, edge, &mask, "A"}});
    const Tensor2 expected_row =
        nodes.value() * store.at("t.Wv_A").value.transpose() * store.at("t.Wo").value.transpose();
    for (int i = 0; i < 3; ++i) CHECK((r.nodes.value().row(i) - expected_row).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("hmha: masking a neighbor equals deleting it") {
  const auto c = tiny_config();
  auto store = block_store(c, {"A", "B"}, 9);
  std::mt19937_64 rng(1);
  const Tensor2 x = random_matrix(2, c.d_h, rng);
  const Tensor2 na = random_matrix(3, c.d_h, rng);
  const Tensor2 nb = random_matrix(2, c.d_h, rng);
  const Tensor2 ea = random_matrix(2, 3, rng);
  const Tensor2 eb = random_matrix(2, 2, rng);

  Tape tape(false);
  Mask full_a = Mask::Constant(2, 3, true);
  full_a(0, 1) = false;
  const Mask mb = Mask::Constant(2, 2, true);
  const auto masked = hmha(tape, store, c, "t.", tape.constant(x),
                           {{tape.constant(na), tape.constant(ea), &full_a, "A"},
                            {tape.constant(nb), tape.constant(eb), &mb, "B"}});

  // Row 0 with neighbor A1 physically removed.
  const std::vector<int> keep{0, 2};
  Tensor2 na2(2, c.d_h), ea2(1, 2);
  for (int i = 0; i < 2; ++i) {
    na2.row(i) = na.row(keep[i]);
    ea2(0, i) = ea(0, keep[i]);
  }
  const Mask ma2 = Mask::Constant(1, 2, true);
  const Mask mb2 = Mask::Constant(1, 2, true);
  const auto deleted = hmha(tape, store, c, "t.", tape.constant(x.topRows(1)),
                            {{tape.constant(na2), tape.constant(ea2), &ma2, "A"},
                             {tape.constant(nb), tape.constant(eb.topRows(1)), &mb2, "B"}});
  CHECK((masked.nodes.value().row(0) - deleted.nodes.value().row(0)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(masked.edges[0].value()(0, 1) == 0.0);
}

TEST_CASE("hmha: a node without neighbors passes through") {
  const auto c = tiny_config();
  auto store = block_store(c, {"A"}, 2);
  std::mt19937_64 rng(8);
  Tape tape(false);
  const Var x = tape.constant(random_matrix(2, c.d_h, rng));
  Mask mask = Mask::Constant(2, 3, true);
  mask.row(1).setConstant(false);
  const auto r = hmha(tape, store, c, "t.", x,
                      {{tape.constant(random_matrix(3, c.d_h, rng)), tape.constant(random_matrix(2, 3, rng)), &mask, "A"}});
  CHECK(r.nodes.value().row(1) == x.value().row(1));
  CHECK(r.edges[0].value().row(1).isZero());
}

TEST_CASE("feed-forward block is W2 relu(W1 h) with d_ff = 512 in the reference model") {
  const ModelConfig ref{};
  auto ref_store = init_model(ref, 0);
  CHECK(ref_store.at("enc1.O.ff1.W").value.rows() == 512);
  CHECK(ref_store.at("enc1.O.ff1.W").value.cols() == 128);
  CHECK(ref.layers == 2);

  const auto c = tiny_config();
  auto store = init_model(c, 3);
  std::mt19937_64 rng(3);
  Tape tape(false);
  const Tensor2 x = random_matrix(4, c.d_h, rng);
  const Tensor2 h = random_matrix(4, c.d_h, rng);
  const Var out = add_norm_feed_forward(tape, store, "enc1.O.", tape.constant(x), tape.constant(h));

  auto norm = [](const Tensor2& a, const Tensor2& g, const Tensor2& b) {
    Tensor2 r(a.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double mean = a.col(j).mean();
      const double var = (a.col(j).array() - mean).square().mean();
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        r(i, j) = (a(i, j) - mean) / std::sqrt(var + 1e-5) * g(0, j) + b(0, j);
    }
    return r;
  };
  const auto& P = [&](const char* n) { return store.at(std::string("enc1.O.") + n).value; };
  const Tensor2 x1 = norm(x + h, P("an1.g"), P("an1.b"));
  Tensor2 hidden = x1 * P("ff1.W").transpose();
  hidden.rowwise() += Eigen::RowVectorXd(P("ff1.b").row(0));
  hidden = hidden.cwiseMax(0.0);
  Tensor2 ff = hidden * P("ff2.W").transpose();
  ff.rowwise() += Eigen::RowVectorXd(P("ff2.b").row(0));
  const Tensor2 expected = norm(x1 + ff, P("an2.g"), P("an2.b"));
  CHECK((out.value() - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("encoder shapes on a random state") {
  const auto c = tiny_config();
  auto store = init_model(c, 1);
  const auto inst = generate_instance(4, 3, 2, 21);
  auto s = reset(inst);
  apply_action(s, feasible_actions(s).front());
  const auto f = featurize(s);
  Tape tape(false);
  const auto e = encode(tape, store, c, f);
  CHECK(e.layer == c.layers);
  CHECK(e.ops.rows() == inst.num_operations());
  CHECK(e.ops.cols() == c.d_h);
  CHECK(e.machines.rows() == 3);
  CHECK(e.machines.cols() == c.d_h);
  CHECK(e.vehicles.rows() == 2);
  CHECK(e.vehicles.cols() == c.d_h);
  CHECK(e.edge_om.rows() == inst.num_operations());
  CHECK(e.edge_om.cols() == 3);
  CHECK(e.edge_ov.cols() == 2);
  CHECK(e.edge_mm.rows() == 3);
  CHECK(e.edge_mm.cols() == 3);
  // Masked O-M edges stay zero through the encoder.
  for (Eigen::Index o = 0; o < f.mask_om.rows(); ++o)
    for (Eigen::Index k = 0; k < f.mask_om.cols(); ++k)
      if (!f.mask_om(o, k)) CHECK(e.edge_om.value()(o, k) == 0.0);
}

TEST_CASE("projection of zero features is the bias") {
  const auto c = tiny_config();
  auto store = init_model(c, 1);
  const auto inst = generate_instance(2, 2, 2, 1);
  auto f = featurize(reset(inst));
  f.op_feats.setZero();
  f.mach_feats.setZero();
  f.veh_feats.setZero();
  Tape tape(false);
  const auto e = project_inputs(tape, store, c, f);
  for (Eigen::Index r = 0; r < e.ops.rows(); ++r) CHECK(e.ops.value().row(r) == store.at("in.op.b").value);
  for (Eigen::Index r = 0; r < e.machines.rows(); ++r)
    CHECK(e.machines.value().row(r) == store.at("in.mach.b").value);
  for (Eigen::Index r = 0; r < e.vehicles.rows(); ++r)
    CHECK(e.vehicles.value().row(r) == store.at("in.veh.b").value);
}

TEST_CASE("machine embeddings after one sub-layer ignore vehicle features") {
  const auto c = tiny_config();
  auto store = init_model(c, 6);
  const auto inst = generate_instance(3, 3, 3, 4);
  auto s = reset(inst);
  apply_action(s, feasible_actions(s).back());
  auto f = featurize(s);
  Tape tape(false);
  const auto a = sub_encode_layer(tape, store, c, project_inputs(tape, store, c, f), f, 1);
  std::mt19937_64 rng(5);
  f.veh_feats = random_matrix(3, kVehicleFeatures, rng);
  const auto b = sub_encode_layer(tape, store, c, project_inputs(tape, store, c, f), f, 1);
  CHECK(a.machines.value() == b.machines.value());
  CHECK_FALSE(a.vehicles.value() == b.vehicles.value());
}

TEST_CASE("operation embeddings are equivariant to job relabeling") {
  const auto c = tiny_config();
  auto store = init_model(c, 2);
  const auto inst = test::make_instance(2, 2, {{{{1, 3}, {2, 5}}, {{2, 4}}}, {{{1, 6}}, {{1, 2}, {2, 7}}}},
                                        {{0, 2, 3}, {2, 0, 4}, {3, 4, 0}});
  Instance swapped = inst;
  std::swap(swapped.jobs[0], swapped.jobs[1]);
  Tape tape(false);
  const auto a = encode(tape, store, c, featurize(reset(inst)));
  const auto b = encode(tape, store, c, featurize(reset(swapped)));
  // Both jobs have two operations, so the flat blocks simply trade places.
  const Tensor2& ea = a.ops.value();
  const Tensor2& eb = b.ops.value();
  CHECK((ea.topRows(2) - eb.bottomRows(2)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((ea.bottomRows(2) - eb.topRows(2)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a.machines.value() - b.machines.value()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("encoder gradient matches finite differences on the tiny config") {
  ModelConfig c = tiny_config();
  c.d_h = 4;
  c.d_ff = 8;
  auto store = init_model(c, 12);
  const auto inst = generate_instance(2, 2, 1, 3);
  auto s = reset(inst);
  apply_action(s, feasible_actions(s).front());
  const auto f = featurize(s);
  std::mt19937_64 rng(6);
  Tensor2 wo, wm, wv, we;
  auto loss = [&](Tape& tape) {
    const auto e = encode(tape, store, c, f);
    if (wo.size() == 0) {
      wo = random_matrix(static_cast<int>(e.ops.rows()), c.d_h, rng);
      wm = random_matrix(static_cast<int>(e.machines.rows()), c.d_h, rng);
      wv = random_matrix(static_cast<int>(e.vehicles.rows()), c.d_h, rng);
      we = random_matrix(static_cast<int>(e.edge_om.rows()), static_cast<int>(e.edge_om.cols()), rng);
    }
    return add(add(sum_all(mul_const(e.ops, wo)), sum_all(mul_const(e.machines, wm))),
               add(sum_all(mul_const(e.vehicles, wv)), sum_all(mul_const(e.edge_om, we))));
  };
  const auto r = test::gradient_check(store, loss);
  INFO("worst: " << r.worst << " error " << r.max_rel_error);
  CHECK(r.max_rel_error <= 1e-3);
}
