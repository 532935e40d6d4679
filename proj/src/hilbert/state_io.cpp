#include "superwit/state_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>

namespace superwit {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& msg) {
  throw StateFormatError(fmt::format("state file {}: {}", pointer.empty() ? "/" : pointer, msg));
}

const json& member(const json& obj, const std::string& parent, const char* key) {
  if (!obj.is_object()) fail(parent, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(parent + "/" + key, "missing required key");
  return *it;
}

int int_member(const json& obj, const std::string& parent, const char* key) {
  const json& v = member(obj, parent, key);
  if (!v.is_number_integer()) fail(parent + "/" + key, "expected an integer");
  return v.get<int>();
}

std::vector<double> number_array(const json& obj, const char* key) {
  const json& v = member(obj, "", key);
  const std::string ptr = std::string("/") + key;
  if (!v.is_array()) fail(ptr, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(fmt::format("{}/{}", ptr, i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

}  // namespace

json state_to_json(const CollectiveState& state) {
  const auto& sp = state.space();
  json space{{"type", to_string(sp.type)}};
  if (sp.type != SpaceType::fock) space["N"] = sp.n_particles;
  if (sp.has_field()) space["n_max"] = sp.n_max;
  json re = json::array(), im = json::array();
  if (state.is_pure()) {
    for (const auto& c : state.vector()) {
      re.push_back(c.real());
      im.push_back(c.imag());
    }
  } else {
    const CMatrix& r = state.matrix();
    for (Eigen::Index i = 0; i < r.rows(); ++i)
      for (Eigen::Index k = 0; k < r.cols(); ++k) {
        re.push_back(r(i, k).real());
        im.push_back(r(i, k).imag());
      }
  }
  return json{{"space", space},
              {"kind", state.is_pure() ? "pure" : "dm"},
              {"re", re},
              {"im", im},
              {"ordering", kOrderingTag}};
}

CollectiveState state_from_json(const json& j) {
  if (!j.is_object()) fail("", "expected a JSON object at top level");
  const json& space_j = member(j, "", "space");
  const json& type_j = member(space_j, "/space", "type");
  if (!type_j.is_string()) fail("/space/type", "expected a string");
  const auto type = space_type_from_string(type_j.get<std::string>());
  if (!type) fail("/space/type", fmt::format("unknown space type '{}'", type_j.get<std::string>()));

  SpaceDescriptor sp;
  sp.type = *type;
  if (*type != SpaceType::fock) {
    sp.n_particles = int_member(space_j, "/space", "N");
    if (sp.n_particles < 1) fail("/space/N", "must be >= 1");
  }
  if (sp.has_field()) {
    sp.n_max = int_member(space_j, "/space", "n_max");
    if (sp.n_max < 0) fail("/space/n_max", "must be >= 0");
  }
  if (auto it = j.find("ordering"); it != j.end()) {
    if (!it->is_string() || it->get<std::string>() != kOrderingTag)
      fail("/ordering", fmt::format("unsupported basis ordering (expected '{}')", kOrderingTag));
  }
  const json& kind_j = member(j, "", "kind");
  if (!kind_j.is_string()) fail("/kind", "expected a string");
  const std::string kind = kind_j.get<std::string>();
  if (kind != "pure" && kind != "dm") fail("/kind", "must be 'pure' or 'dm'");

  int dim = 0;
  try {
    dim = sp.dim();
  } catch (const std::exception& e) {
    fail("/space", e.what());
  }
  const auto re = number_array(j, "re");
  const auto im = number_array(j, "im");
  const std::size_t expected = kind == "pure" ? static_cast<std::size_t>(dim)
                                              : static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim);
  if (re.size() != expected) fail("/re", fmt::format("expected {} entries, found {}", expected, re.size()));
  if (im.size() != expected) fail("/im", fmt::format("expected {} entries, found {}", expected, im.size()));

  try {
    if (kind == "pure") {
      CVector v(dim);
      for (int i = 0; i < dim; ++i) v[i] = cplx(re[i], im[i]);
      return CollectiveState::pure(sp, std::move(v), false, 1e-8);
    }
    CMatrix r(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < dim; ++k) r(i, k) = cplx(re[i * dim + k], im[i * dim + k]);
    return CollectiveState::density(sp, std::move(r), 1e-8);
  } catch (const std::invalid_argument& e) {
    fail("/re", e.what());
  }
}

CollectiveState parse_state(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw StateFormatError(fmt::format("state file: JSON syntax error at byte {}: {}", e.byte, e.what()));
  }
  return state_from_json(j);
}

CollectiveState load_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StateFormatError(fmt::format("state file: cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_state(ss.str());
}

void save_state(const CollectiveState& state, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << state_to_json(state).dump(1) << '\n';
}

}  // namespace superwit
