#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mscv::cli {

struct RunConfig {
  std::string command;
  std::string left, right, gt, pred, weights, out, fg, noc;
  int max_disp = 192;
  double epsilon = 3.0;
  double tau = 1.0;
  double lambda = 0.5;
  std::uint64_t seed = 0;
  int threads = 1;
  double threshold = 3.0;
  bool kitti_d1 = false;
  // synth / bench
  int width = 512;
  int height = 256;
  std::string plan = "4;16@96,48,224,176;8@300,120,460,230";
  std::string stage = "all";
  int reps = 3;
};

const std::vector<std::string>& commands();

/// Parses argv (flags > --config key=value file > defaults). Returns an exit
/// code >= 0 when parsing already finished (help, error), -1 to continue.
int parse_args(int argc, const char* const* argv, RunConfig& config, std::ostream& out, std::ostream& err);

/// Runs one command. 0 iff it completed and wrote every declared output.
int dispatch(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + dispatch.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::string describe_config(const RunConfig& config);

}  // namespace mscv::cli
