#include "bpa/corr_io.hpp"

#include <fstream>
#include <sstream>

#include "bpa/errors.hpp"

namespace bpa {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw InvalidInputError("line " + std::to_string(line) + ": " + what);
}

BinghamDist noise_from_lambdas(const Eigen::Vector3d& lambdas, int line) {
  BinghamDist::Dirs dirs = BinghamDist::Dirs::Zero();
  dirs(2, 0) = 1.0;
  dirs(3, 1) = 1.0;
  dirs(1, 2) = 1.0;
  try {
    return BinghamDist::make(lambdas, dirs);
  } catch (const InvalidInputError& e) {
    fail(line, e.what());
  }
}

UnitQuaternion quat_from(const double* v, int line) {
  try {
    return UnitQuaternion::from_components(v[0], v[1], v[2], v[3]);
  } catch (const InvalidInputError& e) {
    fail(line, e.what());
  }
}

}  // namespace

std::vector<Correspondence> parse_correspondences(std::istream& in) {
  std::vector<Correspondence> out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);

    std::istringstream ss(raw);
    std::vector<double> tok;
    double v = 0.0;
    while (ss >> v) tok.push_back(v);
    if (!ss.eof()) fail(line, "unparseable token");
    if (tok.empty()) continue;
    if (tok.size() != 7 && tok.size() != 18) {
      fail(line, "expected 7 or 18 values, got " + std::to_string(tok.size()));
    }

    Correspondence c;
    c.model_point = Vec3(tok[0], tok[1], tok[2]);
    c.scene_point = Vec3(tok[3], tok[4], tok[5]);
    c.sigma = tok[6];
    if (!(c.sigma > 0.0)) fail(line, "sigma must be positive");
    if (tok.size() == 18) {
      OrientationMeasurement m;
      m.model_frame = quat_from(&tok[7], line);
      m.scene_frame = quat_from(&tok[11], line);
      m.noise = noise_from_lambdas(Eigen::Vector3d(tok[15], tok[16], tok[17]), line);
      c.orientation = std::move(m);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Correspondence> load_correspondence_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw InvalidInputError("cannot open correspondence file: " + path);
  }
  return parse_correspondences(f);
}

}  // namespace bpa
