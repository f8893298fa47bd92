#include "hoi/hvop/net.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "hoi/io/container.hpp"

namespace hoi {

using json = nlohmann::json;

void HvopConfig::validate() const {
  if (d_hs % heads_s != 0 || d_ho % heads_o != 0 || (d_hs + d_ho) % heads_comb != 0) {
    throw DegenerateInput("hvop config: hidden sizes must be divisible by head counts");
  }
  if (window < 3) throw DegenerateInput("hvop config: window must be >= 3");
  if (delta < 0 || delta > 1) throw DegenerateInput("hvop config: delta outside [0, 1]");
}

std::string HvopConfig::to_json() const {
  json j;
  j["window"] = window;
  j["d_hs"] = d_hs;
  j["d_ho"] = d_ho;
  j["heads_s"] = heads_s;
  j["heads_o"] = heads_o;
  j["heads_comb"] = heads_comb;
  j["layers_s"] = layers_s;
  j["layers_o"] = layers_o;
  j["layers_comb"] = layers_comb;
  j["out_hidden"] = out_hidden;
  j["ffn_mult"] = ffn_mult;
  j["leaky_slope"] = leaky_slope;
  j["lambda_pose"] = lambda_pose;
  j["lambda_accel"] = lambda_accel;
  j["delta"] = delta;
  return j.dump(1);
}

HvopConfig HvopConfig::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CorruptFile("hvop config: invalid JSON");
  HvopConfig c;
  c.window = j.value("window", c.window);
  c.d_hs = j.value("d_hs", c.d_hs);
  c.d_ho = j.value("d_ho", c.d_ho);
  c.heads_s = j.value("heads_s", c.heads_s);
  c.heads_o = j.value("heads_o", c.heads_o);
  c.heads_comb = j.value("heads_comb", c.heads_comb);
  c.layers_s = j.value("layers_s", c.layers_s);
  c.layers_o = j.value("layers_o", c.layers_o);
  c.layers_comb = j.value("layers_comb", c.layers_comb);
  c.out_hidden = j.value("out_hidden", c.out_hidden);
  c.ffn_mult = j.value("ffn_mult", c.ffn_mult);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.lambda_pose = j.value("lambda_pose", c.lambda_pose);
  c.lambda_accel = j.value("lambda_accel", c.lambda_accel);
  c.delta = j.value("delta", c.delta);
  c.validate();
  return c;
}

MatX& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw DegenerateInput("param store: unknown parameter " + name);
  return it->second;
}

const MatX& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw DegenerateInput("param store: unknown parameter " + name);
  return it->second;
}

MatX& ParamStore::create(const std::string& name, int rows, int cols) {
  return params_[name] = MatX::Zero(rows, cols);
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& [k, v] : params_) n += static_cast<size_t>(v.size());
  return n;
}

namespace {
constexpr char kCkptMagic[8] = {'H', 'O', 'I', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kCkptVersion = 1;
}  // namespace

void ParamStore::save(const std::string& path) const {
  BinWriter w;
  w.u64(params_.size());
  for (const auto& [name, m] : params_) {
    w.str(name);
    w.u32(static_cast<uint32_t>(m.rows()));
    w.u32(static_cast<uint32_t>(m.cols()));
    w.doubles(m.data(), static_cast<size_t>(m.size()));
  }
  std::string out(kCkptMagic, sizeof kCkptMagic);
  uint32_t version = kCkptVersion;
  out.append(reinterpret_cast<const char*>(&version), sizeof version);
  out += w.buffer();
  write_file(path, out);
}

ParamStore ParamStore::load(const std::string& path) {
  const std::string buf = read_file(path);
  if (buf.size() < sizeof(kCkptMagic) + 4) throw CorruptFile("checkpoint: file too short");
  if (std::memcmp(buf.data(), kCkptMagic, sizeof kCkptMagic) != 0) {
    throw CorruptFile("checkpoint: bad magic");
  }
  uint32_t version;
  std::memcpy(&version, buf.data() + sizeof kCkptMagic, sizeof version);
  if (version != kCkptVersion) throw VersionMismatch("checkpoint: unsupported version");
  const std::string body = buf.substr(sizeof(kCkptMagic) + 4);
  BinReader r(body);
  ParamStore store;
  const uint64_t count = r.u64();
  for (uint64_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    const auto data = r.doubles();
    if (static_cast<int>(data.size()) != rows * cols) throw CorruptFile("checkpoint: bad array size");
    store.params_[name] = Eigen::Map<const MatX>(data.data(), rows, cols);
  }
  return store;
}

MatX sinusoidal_positional_encoding(int length, int dim) {
  MatX pe(length, dim);
  for (int t = 0; t < length; ++t) {
    for (int i = 0; i < dim; i += 2) {
      const double rate = std::pow(10000.0, -double(i) / dim);
      pe(t, i) = std::sin(t * rate);
      if (i + 1 < dim) pe(t, i + 1) = std::cos(t * rate);
    }
  }
  return pe;
}

DT mhsa_block(Tape& tape, DT x, const AttnBlockRefs& p, int heads,
              const std::vector<uint8_t>& key_mask, bool* all_masked) {
  const int d = x.cols();
  if (d % heads != 0) throw DegenerateInput("mhsa_block: width not divisible by heads");
  const int dh = d / heads;

  DT h = tape.layer_norm_rows(x);
  h = tape.add_rowvec(tape.mul_rowvec(h, p.ln_g), p.ln_b);
  DT q = tape.add_rowvec(tape.matmul(h, p.wq), p.bq);
  DT k = tape.add_rowvec(tape.matmul(h, p.wk), p.bk);
  DT v = tape.add_rowvec(tape.matmul(h, p.wv), p.bv);

  DT heads_out;
  for (int hd = 0; hd < heads; ++hd) {
    DT qh = tape.slice_cols(q, hd * dh, dh);
    DT kh = tape.slice_cols(k, hd * dh, dh);
    DT vh = tape.slice_cols(v, hd * dh, dh);
    DT scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), 1.0 / std::sqrt(double(dh)));
    DT attn = tape.masked_softmax_rows(scores, key_mask, all_masked);
    DT oh = tape.matmul(attn, vh);
    heads_out = hd == 0 ? oh : tape.concat_cols(heads_out, oh);
  }
  DT projected = tape.add_rowvec(tape.matmul(heads_out, p.wo), p.bo);
  return tape.add(x, projected);
}

DT ffn_block(Tape& tape, DT x, const FfnBlockRefs& p) {
  DT h = tape.layer_norm_rows(x);
  h = tape.add_rowvec(tape.mul_rowvec(h, p.ln_g), p.ln_b);
  h = tape.gelu(tape.add_rowvec(tape.matmul(h, p.w1), p.b1));
  h = tape.add_rowvec(tape.matmul(h, p.w2), p.b2);
  return tape.add(x, h);
}

namespace {

// Parameter construction -------------------------------------------------

void init_matrix(MatX& m, Rng& rng) {
  // Scaled uniform fan-in.
  const double bound = std::sqrt(1.0 / std::max<int>(1, static_cast<int>(m.rows())));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-bound, bound);
}

void make_block_params(ParamStore& s, const std::string& prefix, int d, int ffn_mult, Rng& rng) {
  init_matrix(s.create(prefix + ".attn.wq", d, d), rng);
  s.create(prefix + ".attn.bq", 1, d);
  init_matrix(s.create(prefix + ".attn.wk", d, d), rng);
  s.create(prefix + ".attn.bk", 1, d);
  init_matrix(s.create(prefix + ".attn.wv", d, d), rng);
  s.create(prefix + ".attn.bv", 1, d);
  init_matrix(s.create(prefix + ".attn.wo", d, d), rng);
  s.create(prefix + ".attn.bo", 1, d);
  s.create(prefix + ".attn.ln_g", 1, d).setOnes();
  s.create(prefix + ".attn.ln_b", 1, d);
  const int m = d * ffn_mult;
  init_matrix(s.create(prefix + ".ffn.w1", d, m), rng);
  s.create(prefix + ".ffn.b1", 1, m);
  init_matrix(s.create(prefix + ".ffn.w2", m, d), rng);
  s.create(prefix + ".ffn.b2", 1, d);
  s.create(prefix + ".ffn.ln_g", 1, d).setOnes();
  s.create(prefix + ".ffn.ln_b", 1, d);
}

using LeafFn = std::function<DT(const std::string&)>;

AttnBlockRefs attn_refs(const LeafFn& leaf, const std::string& prefix) {
  AttnBlockRefs r;
  r.ln_g = leaf(prefix + ".attn.ln_g");
  r.ln_b = leaf(prefix + ".attn.ln_b");
  r.wq = leaf(prefix + ".attn.wq");
  r.bq = leaf(prefix + ".attn.bq");
  r.wk = leaf(prefix + ".attn.wk");
  r.bk = leaf(prefix + ".attn.bk");
  r.wv = leaf(prefix + ".attn.wv");
  r.bv = leaf(prefix + ".attn.bv");
  r.wo = leaf(prefix + ".attn.wo");
  r.bo = leaf(prefix + ".attn.bo");
  return r;
}

FfnBlockRefs ffn_refs(const LeafFn& leaf, const std::string& prefix) {
  FfnBlockRefs r;
  r.ln_g = leaf(prefix + ".ffn.ln_g");
  r.ln_b = leaf(prefix + ".ffn.ln_b");
  r.w1 = leaf(prefix + ".ffn.w1");
  r.b1 = leaf(prefix + ".ffn.b1");
  r.w2 = leaf(prefix + ".ffn.w2");
  r.b2 = leaf(prefix + ".ffn.b2");
  return r;
}

}  // namespace

HvopNet::HvopNet(const HvopConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(hash_combine(init_seed, 0x68766f70ull));
  init_matrix(params_.create("body.in.w", cfg.body_dim, cfg.d_hs), rng);
  params_.create("body.in.b", 1, cfg.d_hs);
  init_matrix(params_.create("obj.in.w", cfg.obj_dim, cfg.d_ho), rng);
  params_.create("obj.in.b", 1, cfg.d_ho);
  for (int l = 0; l < cfg.layers_s; ++l) {
    make_block_params(params_, "body.block" + std::to_string(l), cfg.d_hs, cfg.ffn_mult, rng);
  }
  for (int l = 0; l < cfg.layers_o; ++l) {
    make_block_params(params_, "obj.block" + std::to_string(l), cfg.d_ho, cfg.ffn_mult, rng);
  }
  const int d_comb = cfg.d_hs + cfg.d_ho;
  for (int l = 0; l < cfg.layers_comb; ++l) {
    make_block_params(params_, "comb.block" + std::to_string(l), d_comb, cfg.ffn_mult, rng);
  }
  init_matrix(params_.create("out.w1", d_comb, cfg.out_hidden), rng);
  params_.create("out.b1", 1, cfg.out_hidden);
  init_matrix(params_.create("out.w2", cfg.out_hidden, cfg.obj_dim), rng);
  params_.create("out.b2", 1, cfg.obj_dim);
}

HvopNet::HvopNet(const HvopConfig& cfg, ParamStore params) : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
}

DT HvopNet::build(Tape& tape, const MatX& body, const MatX& obj,
                  const std::vector<uint8_t>& vis_mask, std::map<std::string, DT>* out_leaves,
                  bool* all_masked) const {
  const int t_len = static_cast<int>(body.rows());
  if (body.cols() != cfg_.body_dim) throw LengthMismatch("hvop: bad body input width");
  if (obj.cols() != cfg_.obj_dim || obj.rows() != t_len) {
    throw LengthMismatch("hvop: bad object input shape");
  }
  if (static_cast<int>(vis_mask.size()) != t_len) {
    throw LengthMismatch("hvop: bad visibility mask length");
  }
  std::map<std::string, DT> local;
  std::map<std::string, DT>& leaves = out_leaves ? *out_leaves : local;
  LeafFn leaf = [&](const std::string& name) {
    auto it = leaves.find(name);
    if (it == leaves.end()) it = leaves.emplace(name, tape.input(params_.at(name))).first;
    return it->second;
  };
  const std::vector<uint8_t> full_mask(t_len, 1);

  // Body path: attends to all frames.
  DT hb = tape.add_rowvec(tape.matmul(tape.input(body), leaf("body.in.w")), leaf("body.in.b"));
  hb = tape.add_const(hb, sinusoidal_positional_encoding(t_len, cfg_.d_hs));
  for (int l = 0; l < cfg_.layers_s; ++l) {
    const std::string prefix = "body.block" + std::to_string(l);
    hb = mhsa_block(tape, hb, attn_refs(leaf, prefix), cfg_.heads_s, full_mask, nullptr);
    hb = ffn_block(tape, hb, ffn_refs(leaf, prefix));
  }

  // Object path: occluded rows are zeroed (their stored values must not
  // influence anything) and excluded from the attention keys.
  MatX obj_in = obj;
  for (int i = 0; i < t_len; ++i) {
    if (!vis_mask[i]) obj_in.row(i).setZero();
  }
  DT ho = tape.add_rowvec(tape.matmul(tape.input(obj_in), leaf("obj.in.w")), leaf("obj.in.b"));
  ho = tape.add_const(ho, sinusoidal_positional_encoding(t_len, cfg_.d_ho));
  for (int l = 0; l < cfg_.layers_o; ++l) {
    const std::string prefix = "obj.block" + std::to_string(l);
    ho = mhsa_block(tape, ho, attn_refs(leaf, prefix), cfg_.heads_o, vis_mask, all_masked);
    ho = ffn_block(tape, ho, ffn_refs(leaf, prefix));
  }

  // Joint path over the concatenated features, attending to all frames.
  DT hc = tape.concat_cols(hb, ho);
  for (int l = 0; l < cfg_.layers_comb; ++l) {
    const std::string prefix = "comb.block" + std::to_string(l);
    hc = mhsa_block(tape, hc, attn_refs(leaf, prefix), cfg_.heads_comb, full_mask, nullptr);
    hc = ffn_block(tape, hc, ffn_refs(leaf, prefix));
  }

  DT o = tape.leaky_relu(tape.add_rowvec(tape.matmul(hc, leaf("out.w1")), leaf("out.b1")),
                         cfg_.leaky_slope);
  return tape.add_rowvec(tape.matmul(o, leaf("out.w2")), leaf("out.b2"));
}

MatX HvopNet::forward(const MatX& body, const MatX& obj, const std::vector<uint8_t>& vis_mask,
                      bool* all_masked) const {
  Tape tape;
  DT out = build(tape, body, obj, vis_mask, nullptr, all_masked);
  return out.value();
}

double HvopNet::loss_and_grad(const MatX& body, const MatX& obj,
                              const std::vector<uint8_t>& vis_mask, const MatX& target,
                              std::map<std::string, MatX>* grads) const {
  Tape tape;
  std::map<std::string, DT> leaves;
  DT pred = build(tape, body, obj, vis_mask, &leaves, nullptr);
  DT tgt = tape.input(target);
  DT pose_loss = tape.l1_loss(pred, tgt);
  DT accel_loss = tape.l1_loss(tape.second_diff_rows(pred), tape.second_diff_rows(tgt));
  DT loss = tape.add(tape.scale(pose_loss, cfg_.lambda_pose),
                     tape.scale(accel_loss, cfg_.lambda_accel));
  const double value = loss.value()(0, 0);
  if (grads) {
    tape.backward(loss);
    for (const auto& [name, leaf] : leaves) {
      auto it = grads->find(name);
      if (it == grads->end()) {
        (*grads)[name] = leaf.grad();
      } else {
        it->second += leaf.grad();
      }
    }
  }
  return value;
}

void HvopNet::save(const std::string& path) const {
  params_.save(path);
  write_file(path + ".json", cfg_.to_json());
}

HvopNet HvopNet::load(const std::string& path) {
  const HvopConfig cfg = HvopConfig::from_json(read_file(path + ".json"));
  return HvopNet(cfg, ParamStore::load(path));
}

}  // namespace hoi
