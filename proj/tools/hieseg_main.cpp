// Command-line front end: preprocessing, augmentation, loss evaluation,
// gradient checking, toy optimization, distance transforms, and metric
// reports over MetaImage volumes.
//
// Exit codes: 0 success, 1 failed check, 2 I/O, 3 geometry/validation,
// 4 pairing, 5 config.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hieseg/augment.hpp"
#include "hieseg/edt.hpp"
#include "hieseg/errors.hpp"
#include "hieseg/gradcheck.hpp"
#include "hieseg/io.hpp"
#include "hieseg/losses.hpp"
#include "hieseg/metrics.hpp"
#include "hieseg/optimdemo.hpp"
#include "hieseg/preproc.hpp"
#include "hieseg/volume.hpp"

namespace {

using namespace hieseg;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;
constexpr int kExitPairing = 4;
constexpr int kExitConfig = 5;

template <std::size_t N, typename T>
std::array<T, N> parse_triple(const std::string& text, const std::string& flag) {
  std::array<T, N> out{};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t comma = text.find(',', pos);
    const bool last = i + 1 == N;
    if (last != (comma == std::string::npos)) {
      throw config_error(flag + ": expected " + std::to_string(N) + " comma-separated values");
    }
    const std::string tok = text.substr(pos, last ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      if constexpr (std::is_integral_v<T>) {
        out[i] = static_cast<T>(std::stoll(tok, &used));
      } else {
        out[i] = static_cast<T>(std::stod(tok, &used));
      }
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw config_error(flag + ": bad number '" + tok + "'");
    }
    pos = comma + 1;
  }
  return out;
}

nlohmann::json geometry_json(const Geometry& g) {
  return {{"dims", g.dims}, {"spacing", g.spacing}, {"origin", g.origin}};
}

nlohmann::json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error(path.string() + ": " + e.what());
  }
}

nlohmann::json finite_or_string(double v) {
  if (std::isinf(v)) return "Infinity";
  return v;
}

// --- preprocess -------------------------------------------------------------

struct PreprocessArgs {
  std::string adc, zadc, label, out;
  std::string dims = "192,192,32";
};

int cmd_preprocess(const PreprocessArgs& a) {
  const Dims3 dims = parse_triple<3, int>(a.dims, "--dims");
  for (int d : dims) {
    if (d < 1) throw validation_error("--dims: all axes must be >= 1");
  }
  const ScalarVolume adc = read_mha_volume(a.adc);
  const ScalarVolume zadc = read_mha_volume(a.zadc);
  const BinaryMask label = read_mha_mask(a.label);

  const PreprocessedCase done = preprocess_case(adc, zadc, label, dims);

  const fs::path out(a.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw io_error("cannot create " + out.string() + ": " + ec.message());

  write_mha(done.input.channels()[0], out / "input_ch0.mha", true);
  write_mha(done.input.channels()[1], out / "input_ch1.mha", true);
  write_mha(done.label, out / "label.mha", true);

  const nlohmann::json meta = {
      {"target_dims", dims},
      {"original",
       {{"adc", geometry_json(adc.geometry())},
        {"zadc", geometry_json(zadc.geometry())},
        {"label", geometry_json(label.geometry())}}},
  };
  std::ofstream mf(out / "meta.json", std::ios::trunc);
  if (!mf) throw io_error("cannot open " + (out / "meta.json").string() + " for writing");
  mf << meta.dump(2) << "\n";
  if (!mf) throw io_error("write to " + (out / "meta.json").string() + " failed");
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string pred, truth, out;
  double tau = 1.0;
  std::string format = "json";
  std::string label = "eval";
};

std::map<std::string, fs::path> list_mha(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw io_error(dir.string() + " is not a directory");
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".mha") {
      out.emplace(entry.path().filename().string(), entry.path());
    }
  }
  return out;
}

int cmd_eval(const EvalArgs& a) {
  if (a.format != "json" && a.format != "csv") {
    throw config_error("--format: expected json or csv, got '" + a.format + "'");
  }
  if (a.tau <= 0.0) throw config_error("--tau: must be > 0");

  const auto preds = list_mha(a.pred);
  const auto truths = list_mha(a.truth);
  std::vector<std::string> orphans;
  for (const auto& kv : preds) {
    if (!truths.contains(kv.first)) orphans.push_back(kv.first + " (prediction only)");
  }
  for (const auto& kv : truths) {
    if (!preds.contains(kv.first)) orphans.push_back(kv.first + " (truth only)");
  }
  if (!orphans.empty()) {
    std::string msg = "unpaired files:";
    for (const auto& o : orphans) msg += " " + o;
    throw pairing_error(msg);
  }
  if (preds.empty()) throw pairing_error("no .mha pairs found");

  // std::map iteration order gives the case-id sort for free.
  std::vector<MetricReport> cases;
  for (const auto& [name, path] : preds) {
    const BinaryMask pred = read_mha_mask(path);
    const BinaryMask truth = read_mha_mask(truths.at(name));
    cases.push_back(evaluate_case(pred, truth, a.tau, fs::path(name).stem().string()));
  }

  emit_report(cases, a.label, a.tau,
              a.format == "json" ? ReportFormat::kJson : ReportFormat::kCsv, a.out);
  std::cerr << "wrote " << a.out << " (" << cases.size() << " cases)\n";
  return kExitOk;
}

// --- loss -------------------------------------------------------------------

struct LossArgs {
  std::string spec, pred, truth, grad, kind;
};

int cmd_loss(const LossArgs& a) {
  LossSpec spec;
  if (!a.spec.empty()) spec = loss_spec_from_json(load_json_file(a.spec));
  if (!a.kind.empty()) {
    spec.kind = loss_kind_from_name(a.kind);
    spec.validate();
  }

  const ProbVolume pred = as_probabilities(read_mha_volume(a.pred));
  const BinaryMask truth = read_mha_mask(a.truth);
  const LossResult result = evaluate_loss(spec, pred, truth);

  nlohmann::json out = {
      {"kind", loss_kind_name(spec.kind)},
      {"value", result.value},
      {"diagnostics", result.diagnostics},
  };
  std::cout << out.dump(2) << "\n";

  if (!a.grad.empty()) {
    write_mha_field(pred.geometry(), result.gradient, a.grad, true);
  }
  return kExitOk;
}

// --- gradcheck --------------------------------------------------------------

int cmd_gradcheck(const GradCheckConfig& cfg) {
  const auto reports = run_gradcheck_suite(cfg);
  bool all_passed = true;
  for (const auto& r : reports) {
    std::printf("%-24s max_abs=%.3e max_rel=%.3e checked=%zu %s\n", r.label.c_str(),
                r.max_abs_err, r.max_rel_err, r.checked, r.passed ? "PASS" : "FAIL");
    all_passed = all_passed && r.passed;
  }
  return all_passed ? kExitOk : kExitCheckFailed;
}

// --- demo-optimize ----------------------------------------------------------

struct DemoArgs {
  DescentConfig cfg;
  std::string loss = "dice";
  std::string phantom = "sphere";
  std::string dims = "32,32,32";
  std::string spacing = "1,1,1";
  double radius = -1.0;
  std::string out;
};

int cmd_demo_optimize(const DemoArgs& a) {
  DemoArgs args = a;
  args.cfg.loss = LossSpec::defaults(loss_kind_from_name(a.loss));

  const Dims3 dims = parse_triple<3, int>(a.dims, "--dims");
  const Vec3 spacing = parse_triple<3, double>(a.spacing, "--spacing");
  const BinaryMask target =
      make_phantom(phantom_kind_from_name(a.phantom), dims, spacing, a.radius);

  const DescentResult result = run_descent(target, args.cfg);

  const fs::path out(a.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw io_error("cannot create " + out.string() + ": " + ec.message());

  const fs::path csv_path = out / "trajectory.csv";
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw io_error("cannot open " + csv_path.string() + " for writing");
  csv << trajectory_csv(result.trajectory);
  if (!csv) throw io_error("write to " + csv_path.string() + " failed");
  csv.close();

  write_mha(result.prediction, out / "final_mask.mha", true);

  const StepRecord& last = result.trajectory.back();
  const nlohmann::json summary = {
      {"loss", a.loss},
      {"phantom", a.phantom},
      {"steps", args.cfg.steps},
      {"seed", args.cfg.seed},
      {"final",
       {{"loss", last.loss},
        {"dice", last.dice},
        {"msd_mm", finite_or_string(last.msd_mm)},
        {"nsd", last.nsd}}},
  };
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// --- edt --------------------------------------------------------------------

struct EdtArgs {
  std::string mask, out;
  bool signed_field = false;
};

int cmd_edt(const EdtArgs& a) {
  const BinaryMask mask = read_mha_mask(a.mask);
  if (foreground_count(mask) == 0) {
    std::cerr << "warning: " << a.mask
              << " has no foreground; the distance field is +Inf everywhere\n";
  }
  if (a.signed_field) {
    write_mha_field(mask.geometry(), signed_edt(mask).data, a.out, true);
  } else {
    write_mha_field(mask.geometry(), edt(mask).data, a.out, true);
  }
  return kExitOk;
}

// --- augment ----------------------------------------------------------------

struct AugmentArgs {
  std::vector<std::string> images;
  std::string label, out, config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double gate_prob = -1.0;
};

int cmd_augment(const AugmentArgs& a) {
  AugmentConfig cfg;
  if (!a.config.empty()) cfg = augment_config_from_json(load_json_file(a.config));
  if (a.seed_given) cfg.seed = a.seed;
  if (a.gate_prob >= 0.0) cfg.gate_prob = a.gate_prob;
  cfg.validate();

  std::vector<ScalarVolume> channels;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    channels.push_back(read_mha_volume(a.images[i]));
    names.push_back("ch" + std::to_string(i));
  }
  const MultiChannelVolume image(std::move(channels), std::move(names));
  const BinaryMask label = read_mha_mask(a.label);

  const AugmentResult result = augment_case(image, label, cfg);

  const fs::path out(a.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw io_error("cannot create " + out.string() + ": " + ec.message());

  for (std::size_t i = 0; i < result.image.channel_count(); ++i) {
    write_mha(result.image.channels()[i], out / ("aug_ch" + std::to_string(i) + ".mha"), true);
  }
  write_mha(result.label, out / "aug_label.mha", true);

  std::ofstream lf(out / "log.json", std::ios::trunc);
  if (!lf) throw io_error("cannot open " + (out / "log.json").string() + " for writing");
  lf << applied_log_to_json(result.log).dump(2) << "\n";
  if (!lf) throw io_error("write to " + (out / "log.json").string() + " failed");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segmentation loss toolbox: preprocessing, augmentation, losses, "
               "gradient checks, metrics, and distance transforms over MHA volumes"};
  app.require_subcommand(1);
  int rc = kExitOk;

  PreprocessArgs pre;
  auto* pre_cmd = app.add_subcommand("preprocess",
                                     "Resample a case to the training grid and z-normalize");
  pre_cmd->add_option("--adc", pre.adc, "ADC map (.mha)")->required();
  pre_cmd->add_option("--zadc", pre.zadc, "Z-scored ADC map (.mha)")->required();
  pre_cmd->add_option("--label", pre.label, "Lesion mask (.mha)")->required();
  pre_cmd->add_option("--out", pre.out, "Output directory")->required();
  pre_cmd->add_option("--dims", pre.dims, "Target grid X,Y,Z (default 192,192,32)");
  pre_cmd->callback([&] { rc = cmd_preprocess(pre); });

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against reference masks");
  eval_cmd->add_option("--pred", eval.pred, "Directory of predicted masks")->required();
  eval_cmd->add_option("--truth", eval.truth, "Directory of reference masks")->required();
  eval_cmd->add_option("--tau", eval.tau, "Surface tolerance in mm (default 1.0)");
  eval_cmd->add_option("--format", eval.format, "Report format: json or csv");
  eval_cmd->add_option("--label", eval.label, "Aggregate row label");
  eval_cmd->add_option("--out", eval.out, "Report path")->required();
  eval_cmd->callback([&] { rc = cmd_eval(eval); });

  LossArgs loss;
  auto* loss_cmd = app.add_subcommand("loss", "Evaluate a loss on a prediction/truth pair");
  loss_cmd->add_option("--spec", loss.spec, "Loss spec JSON file");
  loss_cmd->add_option("--pred", loss.pred, "Predicted probabilities (.mha)")->required();
  loss_cmd->add_option("--truth", loss.truth, "Reference mask (.mha)")->required();
  loss_cmd->add_option("--grad", loss.grad, "Write the gradient here (.mha)");
  loss_cmd->add_option("--kind", loss.kind,
                       "Override the loss kind (dice, dicefocal, tversky, hausdorffdt, "
                       "dicefocal-hausdorffdt, tversky-hausdorffdt)");
  loss_cmd->callback([&] { rc = cmd_loss(loss); });

  GradCheckConfig gc;
  auto* gc_cmd = app.add_subcommand("gradcheck",
                                    "Compare analytic gradients with finite differences");
  gc_cmd->add_option("--seed", gc.seed, "Random seed");
  gc_cmd->add_option("--samples", gc.samples, "Voxels probed per loss");
  gc_cmd->add_option("--step", gc.step, "Finite-difference step");
  gc_cmd->add_option("--abs-tol", gc.abs_tol, "Absolute tolerance");
  gc_cmd->add_option("--rel-tol", gc.rel_tol, "Relative tolerance");
  gc_cmd->callback([&] { rc = cmd_gradcheck(gc); });

  DemoArgs demo;
  demo.cfg.seed = 1;
  auto* demo_cmd = app.add_subcommand("demo-optimize",
                                      "Gradient descent on a phantom, straight through the loss");
  demo_cmd->add_option("--loss", demo.loss,
                       "dice, dicefocal, tversky, hausdorffdt, dicefocal-hausdorffdt, "
                       "or tversky-hausdorffdt");
  demo_cmd->add_option("--seed", demo.cfg.seed, "Random seed (default 1)");
  demo_cmd->add_option("--steps", demo.cfg.steps, "Descent steps (default 300)");
  demo_cmd->add_option("--step-size", demo.cfg.step_size, "Step size on logits");
  demo_cmd->add_option("--clip", demo.cfg.clip_max_norm, "Gradient norm ceiling");
  demo_cmd->add_option("--log-every", demo.cfg.log_every, "Trajectory sampling stride");
  demo_cmd->add_option("--tau", demo.cfg.tau_mm, "Surface tolerance for the NSD column");
  demo_cmd->add_option("--phantom", demo.phantom,
                       "sphere, two-spheres, thin-shell, or tiny-lesion");
  demo_cmd->add_option("--dims", demo.dims, "Phantom grid X,Y,Z (default 32,32,32)");
  demo_cmd->add_option("--spacing", demo.spacing, "Voxel spacing in mm (default 1,1,1)");
  demo_cmd->add_option("--radius", demo.radius, "Phantom radius in voxels (-1 = default)");
  demo_cmd->add_option("--out", demo.out, "Output directory")->required();
  demo_cmd->callback([&] { rc = cmd_demo_optimize(demo); });

  EdtArgs edt_args;
  auto* edt_cmd = app.add_subcommand("edt", "Exact anisotropic Euclidean distance transform");
  edt_cmd->add_option("--mask", edt_args.mask, "Input mask (.mha)")->required();
  edt_cmd->add_option("--out", edt_args.out, "Distance field output (.mha)")->required();
  edt_cmd->add_flag("--signed", edt_args.signed_field,
                    "Signed distance (negative inside the mask)");
  std::uint64_t edt_seed = 0;  // deterministic transform; accepted for interface uniformity
  edt_cmd->add_option("--seed", edt_seed, "Unused; accepted for interface uniformity");
  edt_cmd->callback([&] { rc = cmd_edt(edt_args); });

  AugmentArgs aug;
  auto* aug_cmd = app.add_subcommand("augment", "Apply seeded augmentation to a case");
  aug_cmd->add_option("--image", aug.images, "Image channel (.mha), repeatable")
      ->required()
      ->take_all();
  aug_cmd->add_option("--label", aug.label, "Lesion mask (.mha)")->required();
  aug_cmd->add_option("--out", aug.out, "Output directory")->required();
  aug_cmd->add_option("--config", aug.config, "Augmentation config JSON file");
  auto* seed_opt = aug_cmd->add_option("--seed", aug.seed, "Random seed (overrides config)");
  aug_cmd->add_option("--gate-prob", aug.gate_prob,
                      "Per-transform application probability (overrides config)");
  aug_cmd->callback([&] {
    aug.seed_given = seed_opt->count() > 0;
    rc = cmd_augment(aug);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int cli_rc = app.exit(e);
    return cli_rc == 0 ? kExitOk : kExitConfig;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const geometry_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const pairing_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPairing;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return rc;
}
