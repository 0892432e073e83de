#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "soloseg/assign.hpp"
#include "soloseg/bench.hpp"
#include "soloseg/io.hpp"
#include "soloseg/metrics.hpp"
#include "soloseg/nms.hpp"
#include "soloseg/pipeline.hpp"
#include "soloseg/synthetic.hpp"

namespace {

using namespace soloseg;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(sep, start);
    if (end == std::string::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
}

int parse_int(const std::string& item, const std::string& what) {
  std::size_t used = std::string::npos;
  int value = 0;
  try {
    value = std::stoi(item, &used);
  } catch (const std::exception&) {
  }
  if (used != item.size() || item.empty()) {
    throw std::runtime_error(what + ": expected an integer, got \"" + item + "\"");
  }
  return value;
}

double parse_real(const std::string& item, const std::string& what) {
  std::size_t used = std::string::npos;
  double value = 0.0;
  try {
    value = std::stod(item, &used);
  } catch (const std::exception&) {
  }
  if (used != item.size() || item.empty()) {
    throw std::runtime_error(what + ": expected a real number, got \"" + item + "\"");
  }
  return value;
}

std::pair<int, int> parse_size(const std::string& text) {
  const std::vector<std::string> parts = split(text, 'x');
  if (parts.size() != 2) {
    throw std::runtime_error("size: expected HxW, got \"" + text + "\"");
  }
  const int h = parse_int(parts[0], "size height");
  const int w = parse_int(parts[1], "size width");
  if (h < 1 || w < 1) {
    throw std::runtime_error("size: extents must be positive, got \"" + text + "\"");
  }
  return {h, w};
}

std::vector<double> parse_iou_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split(text, ',')) {
    out.push_back(parse_real(item, "iou list entry"));
  }
  return out;
}

// One level per comma-separated "S:stride:low:high" group; high may be inf.
GridSpec parse_grids(const std::string& text) {
  GridSpec spec;
  for (const std::string& group : split(text, ',')) {
    const std::vector<std::string> fields = split(group, ':');
    if (fields.size() != 4) {
      throw std::runtime_error("grids: expected S:stride:low:high, got \"" + group + "\"");
    }
    GridLevel level;
    level.grid_size = parse_int(fields[0], "grids size");
    level.stride = parse_int(fields[1], "grids stride");
    level.scale_range.low = parse_real(fields[2], "grids scale low");
    level.scale_range.high = parse_real(fields[3], "grids scale high");
    spec.levels.push_back(level);
  }
  return spec;
}

std::string ap_key(double threshold) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ap@%.2f", threshold);
  return buf;
}

MatteSet matte_set_from_tensor(const Tensor3& tensor) {
  MatteSet set;
  set.height = tensor.height();
  set.width = tensor.width();
  for (int c = 0; c < tensor.channels(); ++c) {
    set.mattes.push_back(SoftMask::from_values(tensor.channel(c)));
  }
  return set;
}

SoftMask single_matte(const Tensor3& tensor, const std::string& which) {
  if (tensor.channels() != 1) {
    throw std::runtime_error(which + ": expected a single-channel matte tensor, got " +
                             std::to_string(tensor.channels()) + " channels");
  }
  return SoftMask::from_values(tensor.channel(0));
}

struct NmsArgs {
  std::string method = "matrix";
  std::string decay = "gauss";
  double sigma = 0.5;
  double iou_threshold = 0.5;
  double score_floor = 0.001;
  std::string input;
  std::string output;
};

void run_nms(const NmsArgs& args) {
  const InstanceSet input = read_rle_json(args.input);
  const DecayKind decay =
      args.decay == "linear" ? DecayKind::linear() : DecayKind::gaussian(args.sigma);
  InstanceSet result;
  if (args.method == "hard") {
    result = hard_nms(input, args.iou_threshold);
  } else if (args.method == "soft") {
    result = soft_nms(input, decay, args.score_floor);
  } else if (args.method == "fast") {
    result = fast_nms(input, args.iou_threshold);
  } else {
    result = matrix_nms(input, decay);
  }
  write_rle_json(result, args.output);
}

struct BenchArgs {
  std::uint64_t seed = 0;
  int n = 500;
  std::string size = "64x64";
  int repeats = 11;
  std::string profile = "moderate";
};

void run_bench(const BenchArgs& args) {
  const auto [h, w] = parse_size(args.size);
  OverlapProfile profile = OverlapProfile::Moderate;
  if (args.profile == "disjoint") {
    profile = OverlapProfile::Disjoint;
  } else if (args.profile == "heavy") {
    profile = OverlapProfile::Heavy;
  }
  for (const BenchRow& row : bench_nms(args.seed, args.n, h, w, args.repeats, profile)) {
    std::cout << row.method << "\t" << row.n << "\t" << format_double(row.median_ms) << "\n";
  }
}

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string error = "mse";
  std::string iou_list;
  std::string region;
};

void run_eval_sofi(const EvalArgs& args) {
  const MatteSet pred = matte_set_from_tensor(read_tensor(args.pred));
  const MatteSet gt = matte_set_from_tensor(read_tensor(args.gt));
  const ErrorKind kind = args.error == "sad" ? ErrorKind::Sad : ErrorKind::Mse;
  std::cout << "pred_count=" << pred.mattes.size() << "\n";
  std::cout << "gt_count=" << gt.mattes.size() << "\n";
  std::cout << "sofi_" << args.error << "=" << format_double(sofi_error(pred, gt, kind))
            << "\n";
}

void run_eval_ap(const EvalArgs& args) {
  const InstanceSet pred = read_rle_json(args.pred);
  const InstanceSet gt = read_rle_json(args.gt);
  ApConfig config;
  if (!args.iou_list.empty()) {
    config.iou_thresholds = parse_iou_list(args.iou_list);
  }
  const ApResult result = average_precision({pred}, {gt}, config);
  for (std::size_t t = 0; t < config.iou_thresholds.size(); ++t) {
    std::cout << ap_key(config.iou_thresholds[t]) << "="
              << format_double(result.per_threshold[t]) << "\n";
  }
  std::cout << "mean_ap=" << format_double(result.mean_ap) << "\n";
}

void run_eval_matting(const EvalArgs& args) {
  const SoftMask pred = single_matte(read_tensor(args.pred), "pred");
  const SoftMask gt = single_matte(read_tensor(args.gt), "gt");
  std::optional<BinaryMask> region;
  if (!args.region.empty()) {
    const InstanceSet set = read_rle_json(args.region);
    if (set.instances.size() != 1) {
      throw std::runtime_error("region: expected exactly one instance, got " +
                               std::to_string(set.instances.size()));
    }
    region = set.instances.front().mask;
  }
  const BinaryMask* region_ptr = region ? &*region : nullptr;
  std::cout << "mse=" << format_double(matting_error(pred, gt, region_ptr, ErrorKind::Mse))
            << "\n";
  std::cout << "sad=" << format_double(matting_error(pred, gt, region_ptr, ErrorKind::Sad))
            << "\n";
}

struct AssignArgs {
  std::string gt;
  std::string grids;
  double epsilon = 0.2;
};

void run_assign(const AssignArgs& args) {
  const InstanceSet gt_set = read_rle_json(args.gt);
  std::vector<GroundTruth> gts;
  for (const Instance& inst : gt_set.instances) {
    gts.push_back(GroundTruth{inst.mask, inst.class_id});
  }
  const GridSpec spec = args.grids.empty()
                            ? GridSpec::scaled_default(gt_set.height, gt_set.width)
                            : parse_grids(args.grids);
  const AssignmentResult result = assign_labels(gts, spec, args.epsilon);
  for (const PositiveSample& sample : result.positives) {
    std::cout << sample.cell.level << "\t" << sample.cell.i << "\t" << sample.cell.j << "\t"
              << sample.gt_index << "\n";
  }
}

struct DemoArgs {
  std::uint64_t seed = 7;
  int shapes = 3;
};

void run_demo(const DemoArgs& args) {
  const DemoSetup setup = build_demo(args.seed, args.shapes);
  const PipelineConfig config;
  const InstanceSet detections =
      run_inference(setup.category_scores, setup.kernels, setup.mask_feature, config,
                    setup.scene.height, setup.scene.width);
  const ApConfig ap_config;
  const ApResult ap = average_precision({detections}, {setup.scene.ground_truth}, ap_config);
  std::cout << "seed=" << args.seed << "\n";
  std::cout << "shapes=" << args.shapes << "\n";
  std::cout << "detections=" << detections.instances.size() << "\n";
  for (std::size_t t = 0; t < ap_config.iou_thresholds.size(); ++t) {
    std::cout << ap_key(ap_config.iou_thresholds[t]) << "="
              << format_double(ap.per_threshold[t]) << "\n";
  }
  std::cout << "mean_ap=" << format_double(ap.mean_ap) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instance segmentation toolkit: mask suppression, grid label assignment, "
               "losses and evaluation metrics"};
  app.require_subcommand(1);

  NmsArgs nms_args;
  CLI::App* nms_cmd = app.add_subcommand("nms", "Suppress or rescore an RLE-JSON instance set");
  nms_cmd->add_option("--method", nms_args.method, "hard|soft|fast|matrix")
      ->check(CLI::IsMember({"hard", "soft", "fast", "matrix"}));
  nms_cmd->add_option("--decay", nms_args.decay, "linear|gauss")
      ->check(CLI::IsMember({"linear", "gauss"}));
  nms_cmd->add_option("--sigma", nms_args.sigma, "gaussian decay width");
  nms_cmd->add_option("--iou-threshold", nms_args.iou_threshold, "hard/fast suppression cut");
  nms_cmd->add_option("--score-floor", nms_args.score_floor, "soft NMS discard floor");
  nms_cmd->add_option("--input", nms_args.input, "RLE-JSON input file")->required();
  nms_cmd->add_option("--output", nms_args.output, "RLE-JSON output file")->required();
  nms_cmd->callback([&nms_args]() { run_nms(nms_args); });

  BenchArgs bench_args;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Time the four suppression kernels on one synthetic corpus");
  bench_cmd->add_option("--n", bench_args.n, "number of masks");
  bench_cmd->add_option("--size", bench_args.size, "mask extent as HxW");
  bench_cmd->add_option("--repeats", bench_args.repeats, "timed repetitions per method");
  bench_cmd->add_option("--profile", bench_args.profile, "disjoint|moderate|heavy")
      ->check(CLI::IsMember({"disjoint", "moderate", "heavy"}));
  bench_cmd->add_option("--seed", bench_args.seed, "corpus seed");
  bench_cmd->callback([&bench_args]() { run_bench(bench_args); });

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluation metrics");
  eval_cmd->require_subcommand(1);
  CLI::App* sofi_cmd =
      eval_cmd->add_subcommand("sofi", "Symmetric instance matting error between matte stacks");
  sofi_cmd->add_option("--pred", eval_args.pred, "predicted mattes, tensor file")->required();
  sofi_cmd->add_option("--gt", eval_args.gt, "ground-truth mattes, tensor file")->required();
  sofi_cmd->add_option("--error", eval_args.error, "mse|sad")
      ->check(CLI::IsMember({"mse", "sad"}));
  sofi_cmd->callback([&eval_args]() { run_eval_sofi(eval_args); });
  CLI::App* ap_cmd = eval_cmd->add_subcommand("ap", "Average precision of one instance set");
  ap_cmd->add_option("--pred", eval_args.pred, "predictions, RLE-JSON file")->required();
  ap_cmd->add_option("--gt", eval_args.gt, "ground truth, RLE-JSON file")->required();
  ap_cmd->add_option("--iou", eval_args.iou_list,
                     "comma-separated IoU thresholds (default 0.50..0.95)");
  ap_cmd->callback([&eval_args]() { run_eval_ap(eval_args); });
  CLI::App* matting_cmd =
      eval_cmd->add_subcommand("matting", "Whole-frame matting error between two mattes");
  matting_cmd->add_option("--pred", eval_args.pred, "predicted matte, tensor file")->required();
  matting_cmd->add_option("--gt", eval_args.gt, "ground-truth matte, tensor file")->required();
  matting_cmd->add_option("--region", eval_args.region,
                          "RLE-JSON file with one instance restricting the error region");
  matting_cmd->callback([&eval_args]() { run_eval_matting(eval_args); });

  AssignArgs assign_args;
  CLI::App* assign_cmd =
      app.add_subcommand("assign", "List positive grid cells for a ground-truth set");
  assign_cmd->add_option("--gt", assign_args.gt, "ground truth, RLE-JSON file")->required();
  assign_cmd->add_option("--grids", assign_args.grids,
                         "levels as S:stride:low:high,... (default: five-level setup scaled "
                         "to the image)");
  assign_cmd->add_option("--epsilon", assign_args.epsilon, "center region shrink factor");
  assign_cmd->callback([&assign_args]() { run_assign(assign_args); });

  DemoArgs demo_args;
  CLI::App* demo_cmd = app.add_subcommand(
      "demo", "Run the full pipeline on a fabricated scene and score it against itself");
  demo_cmd->add_option("--seed", demo_args.seed, "scene seed");
  demo_cmd->add_option("--shapes", demo_args.shapes, "number of shapes (1..16)");
  demo_cmd->callback([&demo_args]() { run_demo(demo_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
