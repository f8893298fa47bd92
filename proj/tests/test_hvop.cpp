#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "hoi/geom/grid2d.hpp"
#include "hoi/hvop/infill.hpp"
#include "hoi/hvop/net.hpp"
#include "hoi/hvop/train.hpp"
#include "test_util.hpp"

using namespace hoi;

namespace {

MatX random_matrix(Rng& rng, int r, int c, double scale = 1.0) {
  MatX m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.gaussian(0, scale);
  return m;
}

// FD check of d(scalar(graph(inputs)))/d(inputs[0]) for a graph builder.
template <class Builder>
void check_op_gradient(Rng& rng, const std::vector<std::pair<int, int>>& shapes,
                       Builder&& builder, int cases = 25, double tol = 1e-4) {
  for (int cs = 0; cs < cases; ++cs) {
    std::vector<MatX> values;
    for (auto [r, c] : shapes) values.push_back(random_matrix(rng, r, c));
    auto eval = [&](const std::vector<MatX>& vals, std::vector<MatX>* grads) {
      Tape tape;
      std::vector<DT> leaves;
      for (const auto& v : vals) leaves.push_back(tape.input(v));
      DT out = builder(tape, leaves);
      DT loss = tape.mean_all(out);
      const double value = loss.value()(0, 0);
      if (grads) {
        tape.backward(loss);
        for (auto& l : leaves) grads->push_back(l.grad());
      }
      return value;
    };
    std::vector<MatX> grads;
    eval(values, &grads);
    for (size_t input = 0; input < values.size(); ++input) {
      for (int rep = 0; rep < 3; ++rep) {
        const int i = rng.uniform_int(0, static_cast<int>(values[input].rows()) - 1);
        const int j = rng.uniform_int(0, static_cast<int>(values[input].cols()) - 1);
        const double h = 1e-6;
        std::vector<MatX> hi = values, lo = values;
        hi[input](i, j) += h;
        lo[input](i, j) -= h;
        const double fd = (eval(hi, nullptr) - eval(lo, nullptr)) / (2 * h);
        CHECK(hoi::test::rel_err(grads[input](i, j), fd, 1e-5) < tol);
      }
    }
  }
}

HvopConfig tiny_config(int window = 8) {
  HvopConfig cfg;
  cfg.window = window;
  cfg.d_hs = 24;
  cfg.d_ho = 8;
  cfg.heads_s = 2;
  cfg.heads_o = 2;
  cfg.heads_comb = 1;
  cfg.layers_s = 1;
  cfg.layers_o = 1;
  cfg.layers_comb = 2;
  cfg.out_hidden = 12;
  return cfg;
}

}  // namespace

TEST_CASE("tensor op gradients match finite differences") {
  Rng rng(11);
  check_op_gradient(rng, {{3, 4}, {4, 5}},
                    [](Tape& t, std::vector<DT>& in) { return t.matmul(in[0], in[1]); });
  check_op_gradient(rng, {{3, 4}, {3, 4}},
                    [](Tape& t, std::vector<DT>& in) { return t.add(in[0], in[1]); });
  check_op_gradient(rng, {{3, 4}, {3, 4}},
                    [](Tape& t, std::vector<DT>& in) { return t.sub(in[0], in[1]); });
  check_op_gradient(rng, {{3, 4}, {3, 4}},
                    [](Tape& t, std::vector<DT>& in) { return t.hadamard(in[0], in[1]); });
  check_op_gradient(rng, {{3, 4}},
                    [](Tape& t, std::vector<DT>& in) { return t.scale(in[0], -1.7); });
  check_op_gradient(rng, {{3, 4}},
                    [](Tape& t, std::vector<DT>& in) { return t.transpose(in[0]); });
  check_op_gradient(rng, {{3, 4}, {1, 4}},
                    [](Tape& t, std::vector<DT>& in) { return t.add_rowvec(in[0], in[1]); });
  check_op_gradient(rng, {{3, 4}, {1, 4}},
                    [](Tape& t, std::vector<DT>& in) { return t.mul_rowvec(in[0], in[1]); });
  check_op_gradient(rng, {{3, 2}, {3, 5}},
                    [](Tape& t, std::vector<DT>& in) { return t.concat_cols(in[0], in[1]); });
  check_op_gradient(rng, {{3, 6}},
                    [](Tape& t, std::vector<DT>& in) { return t.slice_cols(in[0], 1, 3); });
  check_op_gradient(rng, {{4, 5}}, [](Tape& t, std::vector<DT>& in) {
    // softmax alone has rank-deficient row gradients; compose with a square
    return t.hadamard(t.softmax_rows(in[0]), in[0]);
  });
  const std::vector<uint8_t> mask = {1, 0, 1, 1, 0};
  check_op_gradient(rng, {{4, 5}}, [&mask](Tape& t, std::vector<DT>& in) {
    return t.hadamard(t.masked_softmax_rows(in[0], mask, nullptr), in[0]);
  });
  check_op_gradient(rng, {{4, 6}},
                    [](Tape& t, std::vector<DT>& in) { return t.layer_norm_rows(in[0]); });
  check_op_gradient(rng, {{4, 5}},
                    [](Tape& t, std::vector<DT>& in) { return t.gelu(in[0]); });
  check_op_gradient(rng, {{4, 5}},
                    [](Tape& t, std::vector<DT>& in) { return t.leaky_relu(in[0], 0.01); });
  check_op_gradient(rng, {{6, 3}},
                    [](Tape& t, std::vector<DT>& in) { return t.second_diff_rows(in[0]); });
  check_op_gradient(rng, {{4, 5}, {4, 5}},
                    [](Tape& t, std::vector<DT>& in) { return t.l1_loss(in[0], in[1]); });
}

TEST_CASE("mhsa block with one token reduces to the value path") {
  Rng rng(13);
  const int d = 8;
  Tape tape;
  const MatX x = random_matrix(rng, 1, d);
  DT xin = tape.input(x);
  AttnBlockRefs p;
  p.ln_g = tape.input(MatX::Ones(1, d));
  p.ln_b = tape.input(MatX::Zero(1, d));
  p.wq = tape.input(random_matrix(rng, d, d));
  p.bq = tape.input(MatX::Zero(1, d));
  p.wk = tape.input(random_matrix(rng, d, d));
  p.bk = tape.input(MatX::Zero(1, d));
  p.wv = tape.input(random_matrix(rng, d, d));
  p.bv = tape.input(MatX::Zero(1, d));
  p.wo = tape.input(random_matrix(rng, d, d));
  p.bo = tape.input(MatX::Zero(1, d));
  bool flag = false;
  DT out = mhsa_block(tape, xin, p, 2, {1}, &flag);
  CHECK(!flag);
  // Softmax over a single key is 1, so attention passes the value through.
  MatX h = x;
  const double mu = x.row(0).mean();
  const double var = (x.row(0).array() - mu).square().mean();
  h.row(0) = (x.row(0).array() - mu) / std::sqrt(var + 1e-6);
  const MatX expect = x + (h * p.wv.value()) * p.wo.value();
  CHECK((out.value() - expect).norm() < 1e-9);
}

TEST_CASE("mhsa block ignores masked-out key frames") {
  Rng rng(17);
  const int t_len = 6, d = 8;
  const std::vector<uint8_t> mask = {1, 0, 1, 0, 1, 1};
  Tape tape;
  AttnBlockRefs p;
  p.ln_g = tape.input(MatX::Ones(1, d));
  p.ln_b = tape.input(MatX::Zero(1, d));
  p.wq = tape.input(random_matrix(rng, d, d));
  p.bq = tape.input(random_matrix(rng, 1, d));
  p.wk = tape.input(random_matrix(rng, d, d));
  p.bk = tape.input(random_matrix(rng, 1, d));
  p.wv = tape.input(random_matrix(rng, d, d));
  p.bv = tape.input(random_matrix(rng, 1, d));
  p.wo = tape.input(random_matrix(rng, d, d));
  p.bo = tape.input(random_matrix(rng, 1, d));

  const MatX x = random_matrix(rng, t_len, d);
  MatX x_perm = x;
  x_perm.row(1).swap(x_perm.row(3));  // permute masked-out frames

  Tape t2;
  AttnBlockRefs p2;
  p2.ln_g = t2.input(p.ln_g.value());
  p2.ln_b = t2.input(p.ln_b.value());
  p2.wq = t2.input(p.wq.value());
  p2.bq = t2.input(p.bq.value());
  p2.wk = t2.input(p.wk.value());
  p2.bk = t2.input(p.bk.value());
  p2.wv = t2.input(p.wv.value());
  p2.bv = t2.input(p.bv.value());
  p2.wo = t2.input(p.wo.value());
  p2.bo = t2.input(p.bo.value());

  DT a = mhsa_block(tape, tape.input(x), p, 2, mask, nullptr);
  DT b = mhsa_block(t2, t2.input(x_perm), p2, 2, mask, nullptr);
  for (int i = 0; i < t_len; ++i) {
    if (mask[i]) CHECK((a.value().row(i) - b.value().row(i)).norm() < 1e-12);
  }

  // All keys masked: flagged, attention contributes zero.
  Tape t3;
  AttnBlockRefs p3;
  p3.ln_g = t3.input(p.ln_g.value());
  p3.ln_b = t3.input(p.ln_b.value());
  p3.wq = t3.input(p.wq.value());
  p3.bq = t3.input(p.bq.value());
  p3.wk = t3.input(p.wk.value());
  p3.bk = t3.input(p.bk.value());
  p3.wv = t3.input(p.wv.value());
  p3.bv = t3.input(p.bv.value());
  p3.wo = t3.input(p.wo.value());
  p3.bo = t3.input(p.bo.value());
  bool all_masked = false;
  DT c = mhsa_block(t3, t3.input(x), p3, 2, std::vector<uint8_t>(t_len, 0), &all_masked);
  CHECK(all_masked);
  MatX zero_attn(t_len, d);
  for (int i = 0; i < t_len; ++i) zero_attn.row(i) = x.row(i) + p.bo.value().row(0);
  CHECK((c.value() - zero_attn).norm() < 1e-12);
}

TEST_CASE("hvop forward shape contract and masked-frame invariance") {
  const HvopConfig cfg = tiny_config();
  const HvopNet net(cfg, 42);
  Rng rng(19);
  for (int t_len : {3, 5, 8}) {
    const MatX body = random_matrix(rng, t_len, cfg.body_dim, 0.3);
    const MatX obj = random_matrix(rng, t_len, 6, 0.3);
    std::vector<uint8_t> mask(t_len, 1);
    mask[t_len / 2] = 0;
    const MatX out = net.forward(body, obj, mask);
    CHECK(out.rows() == t_len);
    CHECK(out.cols() == 6);

    // Values stored at masked frames are irrelevant.
    MatX obj2 = obj;
    obj2.row(t_len / 2).setConstant(123.0);
    const MatX out2 = net.forward(body, obj2, mask);
    CHECK((out - out2).norm() == 0.0);
  }
}

TEST_CASE("hvop loss gradient matches finite differences on parameter slices") {
  const HvopConfig cfg = tiny_config(6);
  HvopNet net(cfg, 7);
  Rng rng(23);
  const MatX body = random_matrix(rng, 6, cfg.body_dim, 0.3);
  const MatX target = random_matrix(rng, 6, 6, 0.5);
  MatX obj = target;
  std::vector<uint8_t> mask = {1, 1, 0, 0, 1, 1};

  std::map<std::string, MatX> grads;
  const double loss0 = net.loss_and_grad(body, obj, mask, target, &grads);
  CHECK(std::isfinite(loss0));

  std::vector<std::string> names;
  for (const auto& [n, p] : net.params().all()) names.push_back(n);
  for (int rep = 0; rep < 30; ++rep) {
    const auto& name = names[rng.uniform_int(0, static_cast<int>(names.size()) - 1)];
    MatX& p = net.params().at(name);
    const int i = rng.uniform_int(0, static_cast<int>(p.rows()) - 1);
    const int j = rng.uniform_int(0, static_cast<int>(p.cols()) - 1);
    const double h = 1e-6;
    const double saved = p(i, j);
    p(i, j) = saved + h;
    const double hi = net.loss_and_grad(body, obj, mask, target, nullptr);
    p(i, j) = saved - h;
    const double lo = net.loss_and_grad(body, obj, mask, target, nullptr);
    p(i, j) = saved;
    const double fd = (hi - lo) / (2 * h);
    CHECK(hoi::test::rel_err(grads.at(name)(i, j), fd, 1e-5) < 1e-3);
  }
}

TEST_CASE("training memorizes a constant-pose window with zero accel weight") {
  HvopConfig cfg = tiny_config();
  cfg.lambda_accel = 0;
  HvopNet net(cfg, 3);
  TrainDataset data;
  Rng rng(29);
  MatX body = random_matrix(rng, cfg.window, cfg.body_dim, 0.2);
  const Rotation constant = random_rotation(rng);
  MatX obj(cfg.window, 6);
  for (int i = 0; i < cfg.window; ++i) obj.row(i) = constant.to_6d().transpose();
  data.body.push_back(body);
  data.obj.push_back(obj);

  TrainConfig tc;
  tc.steps = 300;
  tc.batch = 4;
  tc.input_noise_6d = 0;
  const TrainResult res = train_hvop(net, data, tc);
  MESSAGE("memorization final loss: ", res.final_loss);
  CHECK(res.final_loss < 0.02);

  // Smoothed loss curve decreases.
  const int w = 20;
  std::vector<double> smoothed;
  for (size_t i = 0; i + w <= res.loss_curve.size(); ++i) {
    double acc = 0;
    for (int k = 0; k < w; ++k) acc += res.loss_curve[i + k];
    smoothed.push_back(acc / w);
  }
  // Monotone-decreasing trend: no point regresses materially above the
  // running minimum, and the end is far below the start.
  double running_min = smoothed.front();
  int violations = 0;
  for (double v : smoothed) {
    if (v > running_min * 1.3 + 1e-3) ++violations;
    running_min = std::min(running_min, v);
  }
  CHECK(violations == 0);
  CHECK(smoothed.back() < 0.1 * smoothed.front());
}

TEST_CASE("training rejects non-finite losses") {
  HvopConfig cfg = tiny_config();
  HvopNet net(cfg, 3);
  net.params().at("out.w2")(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainDataset data;
  Rng rng(31);
  data.body.push_back(random_matrix(rng, cfg.window, cfg.body_dim));
  data.obj.push_back(random_matrix(rng, cfg.window, 6));
  TrainConfig tc;
  tc.steps = 2;
  CHECK_THROWS_AS(train_hvop(net, data, tc), NonFiniteLoss);
}

TEST_CASE("slerp infill") {
  const int t_count = 7;
  std::vector<Rotation> rots(t_count, Rotation::identity());
  std::vector<uint8_t> vis(t_count, 1);
  // No occluded frames: identity.
  const auto same = slerp_infill(rots, vis);
  for (int i = 0; i < t_count; ++i) CHECK((same[i].matrix() - rots[i].matrix()).norm() == 0.0);

  // Gap between z-rotations: geodesic midpoint.
  rots[0] = Rotation::identity();
  rots[6] = Rotation::about_z(kPi / 2);
  std::vector<uint8_t> gap = {1, 0, 0, 0, 0, 0, 1};
  const auto filled = slerp_infill(rots, gap);
  CHECK((filled[3].matrix() - Rotation::about_z(kPi / 4).matrix()).norm() < 1e-9);

  // Leading/trailing gaps hold the nearest visible pose.
  std::vector<uint8_t> middle = {0, 0, 1, 1, 0, 0, 0};
  const auto held = slerp_infill(rots, middle);
  CHECK((held[0].matrix() - rots[2].matrix()).norm() == 0.0);
  CHECK((held[6].matrix() - rots[3].matrix()).norm() == 0.0);

  CHECK_THROWS_AS(slerp_infill(rots, std::vector<uint8_t>(t_count, 0)), NoVisibleFrames);
}

TEST_CASE("rotation smoothing reduces acceleration energy") {
  Rng rng(37);
  // Constant input unchanged; window=1 identity.
  std::vector<Rotation> constant(9, random_rotation(rng));
  const auto sm = smooth_object_rotations(constant, 5);
  for (const auto& r : sm) CHECK((r.matrix() - constant[0].matrix()).norm() < 1e-12);
  const auto id = smooth_object_rotations(constant, 1);
  CHECK((id[3].matrix() - constant[3].matrix()).norm() == 0.0);
  CHECK_THROWS_AS(smooth_object_rotations(constant, 4), DegenerateInput);

  auto accel_energy = [](const std::vector<Rotation>& rots) {
    std::vector<VecX> series;
    for (const auto& r : rots) series.push_back(r.to_6d());
    return accel_loss(series);
  };
  for (int seed = 0; seed < 100; ++seed) {
    Rng r2(500 + seed);
    std::vector<Rotation> track;
    Rotation base = random_rotation(r2);
    for (int i = 0; i < 30; ++i) {
      track.push_back(Rotation::exp(r2.unit_vector() * r2.uniform(0, 0.15)) * base);
    }
    const auto smoothed = smooth_object_rotations(track, 5);
    CHECK(accel_energy(smoothed) <= accel_energy(track) + 1e-12);
    for (const auto& r : smoothed) CHECK(r.is_valid(1e-8));
  }
}

TEST_CASE("infill sequence: passthrough, short sequences, missing context") {
  const HvopConfig cfg = tiny_config();
  const HvopNet net(cfg, 5);
  Rng rng(41);
  const int t_count = 12;
  std::vector<VecX> body(t_count);
  std::vector<Rotation> rots(t_count);
  std::vector<double> vis(t_count, 1.0);
  for (int i = 0; i < t_count; ++i) {
    body[i] = VecX::Zero(BodyModel::kThetaDim);
    rots[i] = random_rotation(rng);
  }
  // All frames visible: exact passthrough.
  const auto out = infill_sequence(net, body, rots, vis);
  for (int i = 0; i < t_count; ++i) CHECK((out[i].matrix() - rots[i].matrix()).norm() == 0.0);

  // Sequence shorter than the window: single-window path, occluded frames
  // still produce valid rotations.
  std::vector<VecX> body_s(body.begin(), body.begin() + 5);
  std::vector<Rotation> rots_s(rots.begin(), rots.begin() + 5);
  std::vector<double> vis_s = {1.0, 1.0, 0.1, 1.0, 1.0};
  const auto short_out = infill_sequence(net, body_s, rots_s, vis_s);
  CHECK(short_out.size() == 5);
  CHECK(short_out[2].is_valid(1e-8));
  CHECK((short_out[1].matrix() - rots_s[1].matrix()).norm() == 0.0);

  CHECK_THROWS_AS(infill_sequence(net, body, rots, std::vector<double>(t_count, 0.0)),
                  NoVisibleContext);
}

TEST_CASE("checkpoint round trip") {
  const HvopConfig cfg = tiny_config();
  HvopNet net(cfg, 9);
  const std::string path = "/tmp/hoi_test_ckpt.bin";
  net.save(path);
  const HvopNet back = HvopNet::load(path);
  for (const auto& [name, p] : net.params().all()) {
    CHECK(back.params().at(name) == p);
  }
  // Corruption and version checks.
  std::string buf = read_file(path);
  write_file(path, buf.substr(0, buf.size() - 11));
  CHECK_THROWS_AS(ParamStore::load(path), CorruptFile);
  buf[8] = 9;
  write_file(path, buf);
  CHECK_THROWS_AS(ParamStore::load(path), VersionMismatch);
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}
