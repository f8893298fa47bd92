// Regenerates the checked-in body model asset.

#include <iostream>

#include "hoi/body/body_model.hpp"

int main(int argc, char** argv) {
  const std::string out = argc > 1 ? argv[1] : "assets/body_default.json";
  const hoi::BodyModel model = hoi::BodyModel::make_default();
  model.validate();
  hoi::write_file(out, model.to_json());
  std::cout << "wrote " << out << " (" << model.vertex_count() << " vertices, "
            << model.triangles.size() << " triangles)\n";
  return 0;
}
