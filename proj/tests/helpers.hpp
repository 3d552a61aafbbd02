#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "alplab/env.hpp"
#include "alplab/goalspace.hpp"

namespace test {

inline const alplab::Vocabulary& vocab() {
  static const alplab::Vocabulary v = alplab::Vocabulary::default_vocabulary();
  return v;
}

inline alplab::SceneSpec scene(const std::vector<std::string>& names) {
  alplab::SceneSpec s;
  for (std::size_t i = 0; i < 4; ++i) s.slots[i] = alplab::make_initial_element(vocab(), names.at(i));
  return s;
}

inline alplab::Goal goal(alplab::Verb verb, const std::string& target,
                         const std::vector<std::string>& names) {
  alplab::Goal g;
  g.instruction = alplab::make_instruction(vocab(), verb, target);
  g.scene = scene(names);
  const auto c = alplab::classify(vocab(), g.instruction, g.scene);
  g.category = c.category;
  g.feasible = c.feasible();
  return g;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("alplab-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace test
