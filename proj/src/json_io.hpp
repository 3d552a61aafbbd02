#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "alplab/errors.hpp"
#include "alplab/rng.hpp"

namespace alplab::detail {

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j, int indent = -1) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << j.dump(indent) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline void set_rng_state(Rng& rng, const std::string& s) {
  std::istringstream is(s);
  is >> rng;
  if (!is) throw ValidationError("corrupt random engine state in checkpoint");
}

}  // namespace alplab::detail
