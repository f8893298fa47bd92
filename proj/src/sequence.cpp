#include "hoi/sim/sequence.hpp"

#include <nlohmann/json.hpp>

#include "hoi/io/container.hpp"

namespace hoi {

using json = nlohmann::json;

namespace {
constexpr char kMagic[8] = {'H', 'O', 'I', 'S', 'E', 'Q', '\n', '\0'};
constexpr uint32_t kVersion = 1;
}  // namespace

void Sequence::validate() const {
  const size_t t = gt_body.size();
  if (gt_object.size() != t || gt_vis.size() != t || obs.size() != t ||
      unoccluded_object.size() != t) {
    throw LengthMismatch("sequence: per-frame array lengths differ");
  }
  if (!init_body.empty() && init_body.size() != t) {
    throw LengthMismatch("sequence: init_body length differs");
  }
  for (const auto& o : obs) {
    if (o.human_mask.width != camera.width || o.human_mask.height != camera.height ||
        !o.human_mask.same_size(o.object_mask)) {
      throw LengthMismatch("sequence: mask dimensions disagree with camera");
    }
  }
}

bool Sequence::equals(const Sequence& o) const {
  if (fps != o.fps || template_id != o.template_id || program != o.program || seed != o.seed ||
      frames() != o.frames()) {
    return false;
  }
  for (int i = 0; i < frames(); ++i) {
    if (gt_body[i].pose6d != o.gt_body[i].pose6d ||
        gt_body[i].translation != o.gt_body[i].translation || gt_body[i].beta != o.gt_body[i].beta)
      return false;
    if (gt_object[i].rot.matrix() != o.gt_object[i].rot.matrix() ||
        gt_object[i].trans != o.gt_object[i].trans)
      return false;
    if (gt_vis[i] != o.gt_vis[i]) return false;
    if (obs[i].keypoints != o.obs[i].keypoints || obs[i].confidence != o.obs[i].confidence)
      return false;
    if (!(obs[i].human_mask == o.obs[i].human_mask) ||
        !(obs[i].object_mask == o.obs[i].object_mask) ||
        !(unoccluded_object[i] == o.unoccluded_object[i]))
      return false;
    if (!init_body.empty() && (init_body[i].pose6d != o.init_body[i].pose6d ||
                               init_body[i].beta != o.init_body[i].beta))
      return false;
  }
  return true;
}

Sequence Sequence::reversed() const {
  Sequence r = *this;
  std::reverse(r.gt_body.begin(), r.gt_body.end());
  std::reverse(r.gt_object.begin(), r.gt_object.end());
  std::reverse(r.gt_vis.begin(), r.gt_vis.end());
  std::reverse(r.unoccluded_object.begin(), r.unoccluded_object.end());
  std::reverse(r.obs.begin(), r.obs.end());
  std::reverse(r.init_body.begin(), r.init_body.end());
  const int t = frames();
  for (auto& c : r.contacts) {
    const int s = c.start_frame, e = c.end_frame;
    c.start_frame = t - e;
    c.end_frame = t - s;
  }
  return r;
}

namespace {

void write_body_state(BinWriter& w, const BodyState& s) {
  w.vecx(s.pose6d);
  w.f64(s.translation.x());
  w.f64(s.translation.y());
  w.f64(s.translation.z());
  w.vecx(s.beta);
}

Vec3 read_vec3(BinReader& r) {
  Vec3 v;
  for (int k = 0; k < 3; ++k) v[k] = r.f64();
  return v;
}

BodyState read_body_state(BinReader& r) {
  BodyState s;
  s.pose6d = r.vecx();
  s.translation = read_vec3(r);
  s.beta = r.vecx();
  return s;
}

void write_mask(BinWriter& w, const Mask& m) {
  w.u32(static_cast<uint32_t>(m.height));
  w.u32(static_cast<uint32_t>(m.width));
  w.u32s(rle_encode(m));
}

Mask read_mask(BinReader& r) {
  const int h = static_cast<int>(r.u32());
  const int w = static_cast<int>(r.u32());
  return rle_decode(h, w, r.u32s());
}

}  // namespace

void save_sequence(const Sequence& seq, const std::string& path) {
  seq.validate();
  BinWriter w;
  w.u64(0);  // placeholder to keep magic at a fixed offset
  json header;
  header["fps"] = seq.fps;
  header["frames"] = seq.frames();
  header["width"] = seq.camera.width;
  header["height"] = seq.camera.height;
  header["template"] = seq.template_id;
  header["program"] = seq.program;
  header["seed"] = seq.seed;
  header["camera"] = {{"fx", seq.camera.fx}, {"fy", seq.camera.fy}, {"cx", seq.camera.cx},
                      {"cy", seq.camera.cy}, {"width", seq.camera.width}, {"height", seq.camera.height}};
  json contacts = json::array();
  for (const auto& c : seq.contacts) {
    contacts.push_back({{"start", c.start_frame}, {"end", c.end_frame}, {"part", c.part_id}});
  }
  header["contacts"] = contacts;
  header["has_init"] = !seq.init_body.empty();
  w.str(header.dump());

  for (int i = 0; i < seq.frames(); ++i) {
    write_body_state(w, seq.gt_body[i]);
    const Mat3& rm = seq.gt_object[i].rot.matrix();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) w.f64(rm(a, b));
    for (int k = 0; k < 3; ++k) w.f64(seq.gt_object[i].trans[k]);
    w.f64(seq.gt_vis[i]);
    w.doubles(seq.obs[i].keypoints.data(),
              static_cast<size_t>(seq.obs[i].keypoints.size()));
    w.vecx(seq.obs[i].confidence);
    write_mask(w, seq.obs[i].human_mask);
    write_mask(w, seq.obs[i].object_mask);
    write_mask(w, seq.unoccluded_object[i]);
    if (!seq.init_body.empty()) write_body_state(w, seq.init_body[i]);
  }

  std::string out(kMagic, sizeof kMagic);
  uint32_t version = kVersion;
  out.append(reinterpret_cast<const char*>(&version), sizeof version);
  out += w.buffer();
  write_file(path, out);
}

Sequence load_sequence(const std::string& path) {
  const std::string buf = read_file(path);
  if (buf.size() < sizeof(kMagic) + sizeof(uint32_t)) throw CorruptFile("sequence: file too short");
  if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw CorruptFile("sequence: bad magic");
  }
  uint32_t version;
  std::memcpy(&version, buf.data() + sizeof kMagic, sizeof version);
  if (version != kVersion) throw VersionMismatch("sequence: unsupported version");

  const std::string body = buf.substr(sizeof(kMagic) + sizeof(uint32_t));
  BinReader r(body);
  r.u64();  // placeholder
  json header = json::parse(r.str(), nullptr, false);
  if (header.is_discarded()) throw CorruptFile("sequence: invalid header");

  Sequence seq;
  seq.fps = header.at("fps").get<double>();
  seq.template_id = header.at("template").get<std::string>();
  seq.program = header.at("program").get<std::string>();
  seq.seed = header.at("seed").get<uint64_t>();
  const auto& cam = header.at("camera");
  seq.camera.fx = cam.at("fx").get<double>();
  seq.camera.fy = cam.at("fy").get<double>();
  seq.camera.cx = cam.at("cx").get<double>();
  seq.camera.cy = cam.at("cy").get<double>();
  seq.camera.width = cam.at("width").get<int>();
  seq.camera.height = cam.at("height").get<int>();
  for (const auto& c : header.value("contacts", json::array())) {
    seq.contacts.push_back({c.at("start").get<int>(), c.at("end").get<int>(), c.at("part").get<int>()});
  }
  const int frames = header.at("frames").get<int>();
  const bool has_init = header.value("has_init", false);

  for (int i = 0; i < frames; ++i) {
    seq.gt_body.push_back(read_body_state(r));
    Mat3 rm;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) rm(a, b) = r.f64();
    ObjectPose pose;
    pose.rot = Rotation::from_matrix_trusted(rm);
    pose.trans = read_vec3(r);
    seq.gt_object.push_back(pose);
    seq.gt_vis.push_back(r.f64());
    FrameObservation o;
    const auto kp = r.doubles();
    o.keypoints = Eigen::Map<const MatX>(kp.data(), BodyModel::kJoints, 2);
    o.confidence = r.vecx();
    o.human_mask = read_mask(r);
    o.object_mask = read_mask(r);
    seq.unoccluded_object.push_back(read_mask(r));
    seq.obs.push_back(std::move(o));
    if (has_init) seq.init_body.push_back(read_body_state(r));
  }
  if (!r.at_end()) throw CorruptFile("sequence: trailing bytes");
  seq.validate();
  return seq;
}

}  // namespace hoi
