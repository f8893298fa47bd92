#include "hoi/sim/script.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "hoi/sim/objects.hpp"

namespace hoi {

using json = nlohmann::json;

std::vector<std::string> program_names() {
  return {"carry_box", "swing_rod", "set_down", "orbit_board", "linear_drift"};
}

void InteractionScript::validate() const {
  if (fps <= 0) throw DegenerateInput("script: fps must be > 0");
  if (duration_s <= 0) throw DegenerateInput("script: duration must be > 0");
  const auto progs = program_names();
  if (std::find(progs.begin(), progs.end(), program) == progs.end()) {
    throw UnknownProgram("script: unknown program " + program);
  }
  const auto templates = object_template_ids();
  if (std::find(templates.begin(), templates.end(), template_id) == templates.end()) {
    throw UnknownTemplate("script: unknown template " + template_id);
  }
  for (const auto& o : occlusions) {
    if (o.start_s < 0 || o.end_s > duration_s || o.end_s <= o.start_s) {
      throw DegenerateInput("script: occlusion span outside [0, duration)");
    }
  }
  if (noise.keypoint_sigma_px < 0 || noise.confidence_dropout < 0 || noise.init_pose_sigma < 0 ||
      noise.init_beta_sigma < 0) {
    throw DegenerateInput("script: noise sigmas must be >= 0");
  }
}

std::string InteractionScript::to_json() const {
  json j;
  j["format"] = "hoi-script";
  j["version"] = 1;
  j["program"] = program;
  j["template"] = template_id;
  j["duration_s"] = duration_s;
  j["fps"] = fps;
  j["seed"] = seed;
  j["max_angular_speed_deg_s"] = max_angular_speed_deg_s;
  json occ = json::array();
  for (const auto& o : occlusions) {
    occ.push_back({{"start_s", o.start_s}, {"end_s", o.end_s}, {"ramp_s", o.ramp_s}});
  }
  j["occlusions"] = occ;
  j["noise"] = {{"keypoint_sigma_px", noise.keypoint_sigma_px},
                {"confidence_dropout", noise.confidence_dropout},
                {"init_pose_sigma", noise.init_pose_sigma},
                {"init_beta_sigma", noise.init_beta_sigma}};
  return j.dump(1);
}

InteractionScript InteractionScript::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CorruptFile("script: invalid JSON");
  if (j.value("format", "") != "hoi-script") throw CorruptFile("script: wrong format tag");
  if (j.value("version", 0) != 1) throw VersionMismatch("script: unsupported version");
  InteractionScript s;
  s.program = j.at("program").get<std::string>();
  s.template_id = j.at("template").get<std::string>();
  s.duration_s = j.at("duration_s").get<double>();
  s.fps = j.at("fps").get<double>();
  s.seed = j.at("seed").get<uint64_t>();
  s.max_angular_speed_deg_s = j.value("max_angular_speed_deg_s", 180.0);
  for (const auto& o : j.value("occlusions", json::array())) {
    s.occlusions.push_back(
        {o.at("start_s").get<double>(), o.at("end_s").get<double>(), o.value("ramp_s", 0.4)});
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    s.noise.keypoint_sigma_px = n.value("keypoint_sigma_px", 2.0);
    s.noise.confidence_dropout = n.value("confidence_dropout", 0.05);
    s.noise.init_pose_sigma = n.value("init_pose_sigma", 0.03);
    s.noise.init_beta_sigma = n.value("init_beta_sigma", 0.2);
  }
  s.validate();
  return s;
}

InteractionScript InteractionScript::load(const std::string& path) {
  return from_json(read_file(path));
}

void InteractionScript::save(const std::string& path) const { write_file(path, to_json()); }

}  // namespace hoi
