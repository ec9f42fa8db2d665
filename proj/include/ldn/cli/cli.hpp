/*
 * Copyright 2026 The LabelDenoise Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LDN_CLI_CLI_HPP_
#define LDN_CLI_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

#include "ldn/dataio/synthetic.hpp"
#include "ldn/models/config.hpp"
#include "ldn/training/train.hpp"

namespace ldn::cli {

struct Preset {
  std::string name;
  data::GeneratorConfig generator;
  data::NoiseConfig noise;
  models::ModelConfig model;
  train::TrainConfig train;
  std::uint64_t budget_bytes = 0;
};

// "desk" or "paperlike"; anything else is an InputError.
Preset preset(const std::string& name);

struct NamedConfig {
  std::string name;
  models::ModelConfig config;
};

// First-level ensemble of a preset: both modalities, audio only, video only
// and both with frame statistics.
std::vector<NamedConfig> ensemble_members(const Preset& p);

// Small configs of every architecture, as run by `gradcheck`.
std::vector<NamedConfig> gradcheck_suite();

// args excludes the program name. Result JSON goes to out, diagnostics to
// err. Exit codes: 0 ok, 2 input or usage error, 3 format error, 1 numeric
// or internal error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ldn::cli

#endif  // LDN_CLI_CLI_HPP_
