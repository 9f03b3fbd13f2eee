#pragma once

#include <filesystem>
#include <string>

#include "simple/config.hpp"

namespace testsupport {

// Small-but-real toy run: one conv stage at 16px, enough data for an exact
// stratified split, a couple of evaluation rows. Keeps trainer tests under a
// second per run.
inline simple::TrainConfig tiny_config() {
  simple::TrainConfig cfg;
  cfg.dataset = "toy";
  cfg.toy_classes = 3;
  cfg.toy_per_class = 30;
  cfg.toy_test_per_class = 10;
  cfg.image_size = 16;
  cfg.labels_per_class = 2;
  cfg.validation_size = 12;
  cfg.conv_channels = {4};
  cfg.hidden = 8;
  cfg.batch_size = 4;
  cfg.k_weak = 2;
  cfg.k_strong = 1;
  cfg.total_steps = 6;
  cfg.eval_every = 3;
  cfg.seed = 11;
  cfg.eval_test = true;
  cfg.validate();
  return cfg;
}

// Unique fresh directory under the system tmp root.
inline std::string fresh_dir(const std::string& tag) {
  static int counter = 0;
  const std::string path = (std::filesystem::temp_directory_path() /
                            ("simple_test_" + tag + "_" +
                             std::to_string(++counter)))
                               .string();
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
  return path;
}

}  // namespace testsupport
