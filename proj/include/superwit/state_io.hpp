#pragma once

// JSON state files:
//   {"space": {"type": "dicke"|"dicke_fock"|"full"|"fock", "N": int, "n_max": int},
//    "kind": "pure"|"dm",
//    "re": [...], "im": [...],          // density matrices flattened row-major
//    "ordering": "m_asc_n_asc_spin_major"}

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "superwit/hilbert.hpp"

namespace superwit {

/// Malformed state file. what() names the JSON pointer or byte offset.
class StateFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

nlohmann::json state_to_json(const CollectiveState& state);
CollectiveState state_from_json(const nlohmann::json& j);

CollectiveState parse_state(const std::string& text);
CollectiveState load_state(const std::filesystem::path& path);
void save_state(const CollectiveState& state, const std::filesystem::path& path);

}  // namespace superwit
