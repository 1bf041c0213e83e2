#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "mscv/costvol.hpp"
#include "mscv/disparity.hpp"
#include "mscv/error.hpp"
#include "mscv/imagekit.hpp"
#include "mscv/metrics.hpp"
#include "mscv/network.hpp"
#include "mscv/parallel.hpp"
#include "mscv/synth.hpp"
#include "mscv/weights.hpp"

namespace mscv::cli {

namespace fs = std::filesystem;

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("MSCV_LOG");
  if (!env) return LogLevel::info;
  const std::string v = env;
  if (v == "quiet" || v == "0" || v == "error") return LogLevel::quiet;
  if (v == "debug" || v == "2") return LogLevel::debug;
  return LogLevel::info;
}

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err), level_(log_level()) {}
  void info(const std::string& msg) const {
    if (level_ >= LogLevel::info) err_ << "[mscv] " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ >= LogLevel::debug) err_ << "[mscv:debug] " << msg << '\n';
  }

 private:
  std::ostream& err_;
  LogLevel level_;
};

void require_input(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string("missing required flag ") + flag);
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(flag) + ": no such file '" + path + "'");
}

void require_output(const std::string& path, const char* flag = "--out") {
  if (path.empty()) throw ConfigError(std::string("missing required flag ") + flag);
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw ConfigError(std::string(flag) + ": directory '" + parent.string() + "' does not exist");
  }
}

std::string sibling(const std::string& path, const std::string& ext) {
  return fs::path(path).replace_extension(ext).string();
}

// Disparity scaled by max_disp into an 8-bit grayscale preview; invalid pixels are black.
Image visualize(const DisparityMap& map, double max_disp) {
  Image img(map.width(), map.height(), 1);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      img.at(0, y, x) = map.valid(y, x) ? std::clamp(map.value(y, x) / max_disp, 0.0, 1.0) : 0.0;
    }
  }
  return img;
}

PixelMask read_mask(const std::string& path, const DisparityMap& like, const char* flag) {
  if (path.empty()) return {};
  require_input(path, flag);
  const Image img = read_pnm(path);
  if (img.channels() != 1 || img.width() != like.width() || img.height() != like.height()) {
    throw ConfigError(std::string(flag) + ": mask must be a single-channel PGM matching the ground truth size");
  }
  PixelMask mask(img.plane_size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = img.data()[i] > 0.5 ? 1 : 0;
  return mask;
}

void check_pair(const Image& l, const Image& r) {
  if (l.channels() != 3 || r.channels() != 3) throw ConfigError("--left/--right must be color PPM (P6) images");
  if (l.width() != r.width() || l.height() != r.height()) throw ConfigError("--left/--right differ in size");
}

void write_disparity(const DisparityMap& map, const RunConfig& c, std::ostream& out) {
  write_pfm(map, c.out);
  const std::string preview = sibling(c.out, ".pgm");
  write_pnm(visualize(map, c.max_disp), preview);
  out << "wrote " << c.out << '\n' << "wrote " << preview << '\n';
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
  require_output(c.out);
  const DisparityPlan plan = parse_plan(c.plan);
  const SyntheticPair pair = generate_synthetic_pair(c.seed, c.width, c.height, plan, c.max_disp);
  const std::string left = c.out + "_left.ppm", right = c.out + "_right.ppm", gt = c.out + "_gt.pfm";
  write_pnm(pair.left, left);
  write_pnm(pair.right, right);
  write_pfm(pair.gt, gt);
  out << "wrote " << left << '\n' << "wrote " << right << '\n' << "wrote " << gt << '\n';
  out << "valid_count=" << pair.gt.valid_count() << '\n';
  return 0;
}

int cmd_trad_match(const RunConfig& c, std::ostream& out) {
  require_input(c.left, "--left");
  require_input(c.right, "--right");
  require_output(c.out);
  const Image left = read_pnm(c.left), right = read_pnm(c.right);
  check_pair(left, right);
  write_disparity(census_wta_match(left, right, c.max_disp), c, out);
  return 0;
}

int cmd_infer(const RunConfig& c, std::ostream& out, const Log& log) {
  require_input(c.left, "--left");
  require_input(c.right, "--right");
  require_input(c.weights, "--weights");
  require_output(c.out);
  const Image left = read_pnm(c.left), right = read_pnm(c.right);
  check_pair(left, right);
  const Network net(load_weights(c.weights));
  ForwardTrace trace;
  const DisparityMap disp = net.full_forward(left, right, &trace);
  for (const auto& e : trace.entries) {
    log.debug(e.stage + " " + std::to_string(e.channels) + "x" + std::to_string(e.height) + "x" +
              std::to_string(e.width));
  }
  write_disparity(disp, c, out);
  out << "dims=" << disp.width() << "x" << disp.height() << '\n';
  return 0;
}

int cmd_mask(const RunConfig& c, std::ostream& out) {
  require_input(c.gt, "--gt");
  require_output(c.out);
  const DiscontinuityMask mask = discontinuity_mask(read_pfm(c.gt, static_cast<float>(c.max_disp)), c.epsilon);
  write_pnm(mask.to_image(), c.out);
  out << "wrote " << c.out << '\n' << "flagged=" << mask.count() << '\n';
  return 0;
}

LossParams loss_params(const RunConfig& c) {
  if (c.tau < 0.0) throw ConfigError("--tau must be >= 0");
  if (c.lambda < 0.0 || c.lambda > 1.0) throw ConfigError("--lambda must be in [0,1]");
  LossParams p;
  p.tau = c.tau;
  p.lambda = c.lambda;
  p.max_disp = c.max_disp;
  return p;
}

int cmd_loss(const RunConfig& c, std::ostream& out) {
  require_input(c.pred, "--pred");
  require_input(c.gt, "--gt");
  const LossParams p = loss_params(c);
  const float md = static_cast<float>(c.max_disp);
  const DisparityMap pred = read_pfm(c.pred, std::numeric_limits<float>::max());
  const DisparityMap gt = read_pfm(c.gt, md);
  if (pred.width() != gt.width() || pred.height() != gt.height()) throw ConfigError("--pred/--gt differ in size");
  const DiscontinuityMask mask = discontinuity_mask(gt, c.epsilon);
  const LossResult r = loss_eval(pred, gt, mask, p);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", r.mean);
  out << "loss_mean=" << buf << '\n' << "loss_count=" << r.count << '\n' << "flagged=" << mask.count() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  require_input(c.pred, "--pred");
  require_input(c.gt, "--gt");
  if (c.threshold <= 0.0) throw ConfigError("--threshold must be > 0");
  const DisparityMap pred = read_pfm(c.pred, std::numeric_limits<float>::max());
  const DisparityMap gt = read_pfm(c.gt, static_cast<float>(c.max_disp));
  if (pred.width() != gt.width() || pred.height() != gt.height()) throw ConfigError("--pred/--gt differ in size");
  const PixelMask fg = read_mask(c.fg, gt, "--fg");
  const PixelMask noc = read_mask(c.noc, gt, "--noc");
  OutlierRule rule;
  rule.threshold_px = c.threshold;
  rule.kitti = c.kitti_d1;
  const EvalReport r = evaluate(pred, gt, fg, noc, rule);
  write_report_table(out, r);
  write_report_kv(out, r);
  return 0;
}

int cmd_init_weights(const RunConfig& c, std::ostream& out) {
  require_output(c.out);
  const WeightStore store = init_weights(c.seed);
  save_weights(store, c.out);
  out << "wrote " << c.out << '\n' << "entries=" << store.size() << " parameters=" << store.parameter_count() << '\n';
  return 0;
}

int cmd_describe(std::ostream& out) {
  describe_architecture(out);
  return 0;
}

int cmd_bench(const RunConfig& c, std::ostream& out) {
  if (c.reps < 1) throw ConfigError("--reps must be >= 1");
  if (c.width < 16 || c.height < 16) throw ConfigError("bench needs --width/--height >= 16");
  const SyntheticPair pair = generate_synthetic_pair(c.seed, c.width, c.height, DisparityPlan{4, {}}, c.max_disp);
  const Padded lp = pad_reflect(pair.left, kCanvasMultiple);
  const Padded rp = pad_reflect(pair.right, kCanvasMultiple);
  const Image yl = rgb_to_yuv(mean_pool_2x(lp.image)), yr = rgb_to_yuv(mean_pool_2x(rp.image));
  const Image yl0 = yl.channel(0), yr0 = yr.channel(0);
  const CensusPlane cl = census_transform(yl0), cr = census_transform(yr0);
  const int half_d = std::max(1, c.max_disp / 2);

  // Stages that need network weights share one store.
  std::unique_ptr<Network> net;
  auto network = [&]() -> const Network& {
    if (!net) net = std::make_unique<Network>(init_weights(c.seed));
    return *net;
  };

  const std::vector<std::pair<std::string, std::function<void()>>> stages = {
      {"census", [&] { (void)census_transform(yl0); }},
      {"hamming", [&] { (void)hamming_cost_volume(cl, cr, half_d); }},
      {"ad", [&] { (void)ad_cost_volume(yl.channel(1), yr.channel(1), half_d); }},
      {"assemble",
       [&] {
         const TraditionalVolumes tv = traditional_volumes(lp.image, rp.image, kTraditionalDepth);
         (void)assemble_traditional(tv.census_y, tv.ad_u, tv.ad_v);
       }},
      {"trad-match", [&] { (void)census_wta_match(pair.left, pair.right, c.max_disp); }},
      {"mask", [&] { (void)discontinuity_mask(pair.gt, c.epsilon); }},
      {"unet", [&] { (void)network().unet_features(lp.image); }},
      {"forward", [&] { (void)network().full_forward(pair.left, pair.right); }},
  };

  bool matched = false;
  for (const auto& [name, fn] : stages) {
    if (c.stage != "all" && c.stage != name) continue;
    matched = true;
    double total = 0.0, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < c.reps; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      fn();
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      total += ms;
      best = std::min(best, ms);
    }
    char line[160];
    std::snprintf(line, sizeof line, "bench stage=%s reps=%d width=%d height=%d threads=%d mean_ms=%.3f min_ms=%.3f\n",
                  name.c_str(), c.reps, c.width, c.height, num_threads(), total / c.reps, best);
    out << line;
  }
  if (!matched) throw ConfigError("unknown bench stage '" + c.stage + "'");
  return 0;
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"synth", "trad-match", "infer", "mask", "loss",
                                                 "eval",  "bench",      "init-weights", "describe"};
  return names;
}

std::string describe_config(const RunConfig& c) {
  std::ostringstream os;
  os << "config command=" << c.command;
  auto path = [&](const char* k, const std::string& v) {
    if (!v.empty()) os << ' ' << k << '=' << v;
  };
  path("left", c.left);
  path("right", c.right);
  path("gt", c.gt);
  path("pred", c.pred);
  path("weights", c.weights);
  path("out", c.out);
  path("fg", c.fg);
  path("noc", c.noc);
  os << " max_disp=" << c.max_disp << " epsilon=" << c.epsilon << " tau=" << c.tau << " lambda=" << c.lambda
     << " seed=" << c.seed << " threads=" << c.threads << " threshold=" << c.threshold
     << " kitti_d1=" << (c.kitti_d1 ? 1 : 0);
  if (c.command == "synth" || c.command == "bench") {
    os << " width=" << c.width << " height=" << c.height;
  }
  if (c.command == "synth") os << " plan=" << c.plan;
  if (c.command == "bench") os << " stage=" << c.stage << " reps=" << c.reps;
  return os.str();
}

int parse_args(int argc, const char* const* argv, RunConfig& c, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-scale cost volume stereo matching"};
  app.name("mscv");
  app.set_config("--config", "", "key=value configuration file (flags take precedence)");
  app.require_subcommand(1, 1);
  app.fallthrough();

  app.add_option("--left", c.left, "Left image (PPM)");
  app.add_option("--right", c.right, "Right image (PPM)");
  app.add_option("--gt", c.gt, "Ground-truth disparity (PFM)");
  app.add_option("--pred", c.pred, "Predicted disparity (PFM)");
  app.add_option("--weights", c.weights, "Network weights (MSCV1)");
  app.add_option("--out", c.out, "Output path (prefix for synth)");
  app.add_option("--fg", c.fg, "Foreground mask (PGM) for D1-fg/D1-bg");
  app.add_option("--noc", c.noc, "Non-occluded mask (PGM) for Out-Noc");
  app.add_option("--max-disp", c.max_disp, "Maximum disparity in full-resolution pixels")->capture_default_str();
  app.add_option("--epsilon", c.epsilon, "Discontinuity gap threshold")->capture_default_str();
  app.add_option("--tau", c.tau, "Loss clamp floor")->capture_default_str();
  app.add_option("--lambda", c.lambda, "Loss discount for discontinuous pixels")->capture_default_str();
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads")->capture_default_str();
  app.add_option("--threshold", c.threshold, "D1 outlier threshold in pixels")->capture_default_str();
  app.add_flag("--kitti-d1", c.kitti_d1, "D1 uses the KITTI rule (> threshold and > 5% of gt)");
  app.add_option("--width", c.width, "Synthetic/bench image width")->capture_default_str();
  app.add_option("--height", c.height, "Synthetic/bench image height")->capture_default_str();
  app.add_option("--plan", c.plan, "Disparity plan 'bg;d@x0,y0,x1,y1;...'")->capture_default_str();
  app.add_option("--stage", c.stage, "Bench stage or 'all'")->capture_default_str();
  app.add_option("--reps", c.reps, "Bench repetitions")->capture_default_str();

  const std::map<std::string, std::string> help = {
      {"synth", "Generate a synthetic stereo pair with exact ground truth"},
      {"trad-match", "Census + winner-take-all disparity (traditional path)"},
      {"infer", "Full network forward pass"},
      {"mask", "Discontinuous-disparity mask of a disparity map"},
      {"loss", "Evaluate the training loss of a prediction against ground truth"},
      {"eval", "EPE / outlier / D1 metrics"},
      {"bench", "Time pipeline stages"},
      {"init-weights", "Write seeded random network weights"},
      {"describe", "Print the network architecture table"},
  };
  for (const auto& name : commands()) {
    app.add_subcommand(name, help.at(name))->callback([&c, name] { c.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  if (c.max_disp <= 0) {
    err << "error: --max-disp must be > 0\n";
    return 2;
  }
  if (c.threads < 1) {
    err << "error: --threads must be >= 1\n";
    return 2;
  }
  return -1;
}

int dispatch(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Log log(err);
  out << describe_config(c) << '\n';
  set_num_threads(c.threads);
  try {
    if (c.command == "synth") return cmd_synth(c, out);
    if (c.command == "trad-match") return cmd_trad_match(c, out);
    if (c.command == "infer") return cmd_infer(c, out, log);
    if (c.command == "mask") return cmd_mask(c, out);
    if (c.command == "loss") return cmd_loss(c, out);
    if (c.command == "eval") return cmd_eval(c, out);
    if (c.command == "bench") return cmd_bench(c, out);
    if (c.command == "init-weights") return cmd_init_weights(c, out);
    if (c.command == "describe") return cmd_describe(out);
    err << "error: unknown command '" << c.command << "'\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig config;
  const int code = parse_args(argc, argv, config, out, err);
  if (code >= 0) return code;
  return dispatch(config, out, err);
}

}  // namespace mscv::cli
