/*
 * Copyright 2026 The rmae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
  rmae::cli::Invocation inv;
  std::string commands;
  for (const auto& [c, name] : rmae::cli::kCommands) commands += (commands.empty() ? "" : "|") + std::string(name);

  CLI::App app{"rmae: radial masking, occupancy pre-training and LiDAR energy reports"};
  app.add_option("command", inv.command, commands)->required();
  app.add_option("--config", inv.config_path, "JSON config file");
  app.add_option("--out", inv.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", inv.seed, "global seed");
  app.add_option("overrides", inv.overrides, "dotted overrides, e.g. mask.m=0.9");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: ConfigError: " << e.what() << "\n";
    return rmae::cli::ExitCode(rmae::ErrorKind::kConfigError);
  }
  return rmae::cli::Main(inv);
}
