// Copyright 2026 The sbspec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// sbspec spectrum|simulate|oracle|compare|diagnose --config <path> --out <dir>
//        [--seed <u64>] [--threads <n>]

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "sbspec/sbspec.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInternal = 1;

struct Args {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
};

int run(const std::string& command, const Args& args, bool has_seed) {
  std::ifstream f(args.config, std::ios::binary);
  if (!f) {
    std::cerr << "sbspec: cannot read config '" << args.config << "'\n";
    return kExitConfig;
  }
  std::stringstream text;
  text << f.rdbuf();

  sbs_run_options opts{};
  opts.has_seed = has_seed ? 1 : 0;
  opts.seed = args.seed;
  opts.threads = args.threads;
  sbs_result* result = nullptr;
  const sbs_status st = sbs_run_command(command.c_str(), text.str().c_str(), args.out.c_str(), &opts, &result);
  if (st != SBS_OK) {
    std::cerr << "sbspec: " << sbs_status_name(st) << ": " << sbs_last_error() << "\n";
    return kExitInternal;
  }
  for (size_t i = 0; i < sbs_result_summary_count(result); ++i) std::cout << sbs_result_summary(result, i) << "\n";
  for (size_t i = 0; i < sbs_result_file_count(result); ++i)
    std::cout << "wrote " << args.out << "/" << sbs_result_file(result, i) << "\n";
  const int code = sbs_result_exit_code(result);
  if (code != 0) std::cerr << "sbspec: " << sbs_result_error(result) << "\n";
  sbs_result_free(result);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra of subblocks of structured random matrices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sbs_version()));

  Args args;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"spectrum", "subblock density from the fixed-point solver (and closed form when known)"},
      {"simulate", "Monte Carlo subblock eigenvalues, histogram and KS distance"},
      {"oracle", "moments from non-crossing partitions vs the solver series"},
      {"compare", "solver density vs closed form (L1, KS, support)"},
      {"diagnose", "S-transform non-freeness report"},
  };
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", args.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory")->required();
    sub->add_option("--seed", args.seed, "overrides mc.seed");
    sub->add_option("--threads", args.threads, "worker threads (default: SBSPEC_THREADS or all cores)")
        ->check(CLI::Range(1, 4096));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  for (auto* sub : app.get_subcommands())
    return run(sub->get_name(), args, sub->count("--seed") > 0);
  return kExitConfig;
}
