// oslda command-line front end.
//
//   oslda <subcommand> [--config FILE] [flags]
//
// The config file holds `key = value` lines named after the long flags
// (optionally under a [subcommand] section); flags on the command line win.
// Exit codes: 0 success, 1 usage, 2 data, 3 numerical.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "oslda/oslda.hpp"

namespace fs = std::filesystem;
using namespace oslda;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return kExitUsage;
    case ErrorKind::Data: return kExitData;
    case ErrorKind::Numerical: return kExitNumerical;
  }
  return kExitNumerical;
}

struct Options {
  std::string config;
  std::string mode = "online";
  std::size_t learners = 25;
  double initial_frac = 0.3;
  std::string criterion = "fisher";
  std::uint64_t seed = 1;
  std::size_t repeats = 10;
  double scale_factor = 1.2;
  int step = 1;
  int min_neighbors = 2;
  bool top1 = false;
  std::string out = ".";

  std::string train, test, format = "auto";
  std::string model, data, images, truth, input, output, kind = "digits";
  std::size_t interval = 50;
  std::size_t stages = 3, negatives_per_stage = 1000, max_learners = 200;
  int pool_stride = 2;
  double min_detection = 0.99, max_fp = 0.5;
  std::size_t points = 50;
  std::vector<double> fractions{0.3, 0.5, 0.7};
  std::vector<std::size_t> sizes{500, 1000, 2000, 5000};
  std::size_t time_reps = 5;
  std::size_t positives = 500, negatives = 5000, scenes = 20;
  std::string positive_label = "3", negative_label = "5";
};

// ---- option registration ----

void add_common(CLI::App* s, Options& o) {
  s->add_option("--config", o.config, "config file (key = value per line)");
  s->add_option("--seed", o.seed, "run seed");
  s->add_option("--out", o.out, "output directory");
}

void add_learning(CLI::App* s, Options& o) {
  s->add_option("--learners", o.learners, "selected weak learners T")->check(CLI::PositiveNumber);
  s->add_option("--criterion", o.criterion,
                "threshold rule: fisher, equal-density, target-detect:p, neg-mean, asym-min[:p]");
}

void add_scan(CLI::App* s, Options& o) {
  s->add_option("--scale-factor", o.scale_factor, "window scale step (> 1)");
  s->add_option("--step", o.step, "base-scale window step in pixels")->check(CLI::PositiveNumber);
  s->add_option("--min-neighbors", o.min_neighbors, "minimum raw detections per merged box")
      ->check(CLI::NonNegativeNumber);
  s->add_flag("--top1", o.top1, "keep only the highest scoring window per image");
}

// ---- config merging ----

/// Arguments synthesized from the config file, placed before the real
/// arguments so the command line overrides them.
std::vector<std::string> config_arguments(const std::string& path, const std::string& sub) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  std::vector<std::string> args;
  for (const auto& it : items) {
    if (it.name == "++" || it.name == "--") continue;  // section markers
    if (!it.parents.empty() && !(it.parents.size() == 1 && it.parents[0] == sub)) continue;
    if (it.name == "config") throw ConfigError(path + ": config files cannot nest");
    std::string value;
    for (std::size_t i = 0; i < it.inputs.size(); ++i) value += (i ? "," : "") + it.inputs[i];
    args.push_back("--" + it.name + "=" + value);
  }
  return args;
}

std::string find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

/// Hash of the resolved options of a subcommand, output paths excluded.
std::string run_hash(const CLI::App* s) {
  std::string canon = s->get_name();
  for (const CLI::Option* o : s->get_options()) {
    const std::string name = o->get_name();
    if (name == "--config" || name == "--out" || name == "--help" || o->count() == 0) continue;
    canon += ";" + name + "=";
    for (const auto& r : o->results()) canon += r + ",";
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bench::fnv1a(canon)));
  return buf;
}

// ---- helpers ----

fs::path out_dir(const Options& o) {
  fs::path p(o.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory " + o.out + ": " + ec.message());
  return p;
}

std::string out_file(const Options& o, const std::string& name) { return (out_dir(o) / name).string(); }

Dataset load_data(const std::string& path, const std::string& format) {
  if (path.empty()) throw ConfigError("no dataset path given");
  if (!fs::exists(path)) throw ParseError("no such dataset: " + path);
  return format == "auto" ? load_dataset(path) : load_dataset(path, dataset_format_from_string(format));
}

ScanParams scan_params(const Options& o) {
  ScanParams p{o.scale_factor, o.step, o.top1};
  scan_levels(kBaseWindow, kBaseWindow, p);  // validates factor and step
  return p;
}

std::vector<fs::path> image_paths(const std::string& where) {
  if (where.empty()) throw ConfigError("no image path given");
  if (fs::is_regular_file(where)) return {fs::path(where)};
  auto files = detail::pgm_files(where);
  if (files.empty()) throw ParseError(where + ": no PGM images found");
  return files;
}

std::string image_id(const fs::path& p) { return p.stem().string(); }

/// Ground truth rows: image,x,y,w,h (header optional).
std::map<std::string, std::vector<Detection>> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::map<std::string, std::vector<Detection>> truth;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto f = detail::split_fields(line);
    double v[4];
    bool ok = f.size() == 5;
    for (int i = 0; ok && i < 4; ++i) ok = detail::parse_double(f[static_cast<std::size_t>(i + 1)], v[i]);
    if (!ok) {
      if (lineno == 1) continue;  // header
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected image,x,y,w,h");
    }
    truth[f[0]].push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                           static_cast<int>(v[3]), 0.0});
  }
  return truth;
}

FeatureSpace raw_space(const Dataset& d) { return {"raw", d.dim, kBaseWindow, 1}; }

void check_space(const FeatureSpace& fs, const Dataset& d) {
  if (fs.kind != "raw") throw ConfigError("model is not over raw columns");
  if (fs.dim != d.dim)
    throw DimensionMismatch("model expects " + std::to_string(fs.dim) + " columns, data has " +
                            std::to_string(d.dim));
}

// ---- subcommands ----

int cmd_train_batch(const Options& o, const std::string& hash) {
  const Dataset train = load_data(o.train, o.format);
  const Criterion crit = Criterion::parse(o.criterion);
  const OnlineClassifier c = bench::train_batch(train, o.learners, crit);
  save_model(out_file(o, "model.json"), c, raw_space(train));
  bench::Table t;
  t.header = {"config_hash", "seed", "mode", "learners", "criterion", "train_samples", "train_error", "test_error"};
  std::string test_err;
  if (!o.test.empty()) {
    const Dataset test = load_data(o.test, o.format);
    check_space(raw_space(train), test);
    test_err = bench::fmt(bench::error_rate(c, test));
  }
  t.rows.push_back({hash, std::to_string(o.seed), "batch", bench::fmt(o.learners), crit.to_string(),
                    bench::fmt(train.size()), bench::fmt(bench::error_rate(c, train)), test_err});
  t.write(out_file(o, "metrics.csv"));
  std::cout << t.str();
  return 0;
}

int cmd_train_online(const Options& o, const std::string& hash) {
  if (o.mode == "batch") return cmd_train_batch(o, hash);
  if (o.mode != "online") throw ConfigError("mode must be online or batch");
  const Dataset train = load_data(o.train, o.format);
  const Dataset test = o.test.empty() ? train : load_data(o.test, o.format);
  check_space(raw_space(train), test);
  const Criterion crit = Criterion::parse(o.criterion);
  const StreamSplit s = split_stream(train.size(), o.initial_frac, o.seed);
  const auto trace = bench::train_online(train, test, s.initial, s.stream, o.learners, crit, o.interval);
  save_model(out_file(o, "model.json"), trace.classifier, raw_space(train));

  bench::Table curve;
  curve.header = {"config_hash", "seed", "inserted", "seen", "error"};
  for (const auto& p : trace.curve)
    curve.rows.push_back({hash, std::to_string(o.seed), bench::fmt(p.inserted), bench::fmt(p.seen), bench::fmt(p.error)});
  curve.write(out_file(o, "curve.csv"));

  bench::Table t;
  t.header = {"config_hash", "seed",          "mode",         "learners",           "criterion",
              "initial",     "streamed",      "initial_error", "final_error",       "direct_inversions",
              "threshold_fallbacks"};
  t.rows.push_back({hash, std::to_string(o.seed), "online", bench::fmt(o.learners), crit.to_string(),
                    bench::fmt(s.initial.size()), bench::fmt(s.stream.size()), bench::fmt(trace.initial_error),
                    bench::fmt(trace.curve.back().error), bench::fmt(trace.classifier.direct_inversions()),
                    bench::fmt(trace.classifier.threshold_fallbacks())});
  t.write(out_file(o, "metrics.csv"));
  std::cout << t.str();
  return 0;
}

int cmd_train_cascade(const Options& o, const std::string& hash) {
  if (o.train.empty()) throw ConfigError("--train must name a directory with pos/ and neg/");
  const auto pos_files = detail::pgm_files(fs::path(o.train) / "pos");
  const auto neg_files = detail::pgm_files(fs::path(o.train) / "neg");
  if (pos_files.empty() || neg_files.empty()) throw ParseError(o.train + ": need PGM files under pos/ and neg/");
  std::vector<WindowSample> positives;
  for (const auto& p : pos_files) positives.push_back(patch_sample(resize_bilinear(read_pgm(p.string()), kBaseWindow, kBaseWindow)));
  std::vector<std::shared_ptr<const IntegralImage>> pool;
  for (const auto& p : neg_files) {
    const Image img = read_pgm(p.string());
    if (img.width < kBaseWindow || img.height < kBaseWindow) throw ImageTooSmall(p.string() + " is smaller than 24x24");
    pool.push_back(std::make_shared<const IntegralImage>(img));
  }

  CascadeConfig cfg;
  cfg.stages = o.stages;
  cfg.goal = {o.min_detection, o.max_fp, o.max_learners};
  cfg.negatives_per_stage = o.negatives_per_stage;
  cfg.pool_stride = o.pool_stride;
  cfg.scan = scan_params(o);
  cfg.seed = o.seed;
  const Cascade c = train_cascade(positives, pool, cfg);
  save_cascade(out_file(o, "cascade.json"), c);

  bench::Table t;
  t.header = {"config_hash", "seed", "stage", "learners", "positives", "negatives", "detection", "false_positive", "goal_met"};
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto& r = c.stages[k].report;
    t.rows.push_back({hash, std::to_string(o.seed), bench::fmt(k + 1), bench::fmt(r.learners), bench::fmt(r.positives),
                      bench::fmt(r.negatives), bench::fmt(r.detection), bench::fmt(r.false_positive),
                      r.goal_met ? "1" : "0"});
  }
  t.write(out_file(o, "stages.csv"));
  std::cout << t.str();
  if (c.size() < o.stages)
    std::cerr << "warning: negative pool exhausted after " << c.size() << " stages\n";
  for (const auto& s : c.stages) require_goal(s);
  return 0;
}

int cmd_update(const Options& o, const std::string& hash) {
  if (o.model.empty()) throw ConfigError("--model is required");
  const json doc = read_json_file(o.model);
  const std::string format = doc.is_object() && doc.contains("format") && doc["format"].is_string()
                                 ? doc["format"].get<std::string>()
                                 : "";
  const Dataset d = load_data(o.data, o.format);
  bench::Table t;
  t.header = {"config_hash", "seed", "sample", "label", "updated"};
  if (format == kCascadeFormat) {
    Cascade c = cascade_from_document(doc);
    if (!d.has_images()) throw ConfigError("cascade updates need an image dataset");
    for (std::size_t j = 0; j < d.size(); ++j) {
      const std::size_t n = online_update_cascade(c, patch_sample(d.images[j]), d.labels[j]);
      t.rows.push_back({hash, std::to_string(o.seed), bench::fmt(j), is_positive(d.labels[j]) ? "1" : "0", bench::fmt(n)});
    }
    save_cascade(out_file(o, "cascade.json"), c);
  } else {
    LoadedModel m = model_from_document(doc);
    check_space(m.space, d);
    for (std::size_t j = 0; j < d.size(); ++j) {
      m.classifier.insert_raw([&](std::size_t f) { return d.at(j, f); }, d.labels[j]);
      t.rows.push_back({hash, std::to_string(o.seed), bench::fmt(j), is_positive(d.labels[j]) ? "1" : "0", "1"});
    }
    save_model(out_file(o, "model.json"), m.classifier, m.space);
  }
  t.write(out_file(o, "update.csv"));
  std::cout << "updated with " << d.size() << " samples\n";
  return 0;
}

int cmd_detect(const Options& o, const std::string&) {
  if (o.model.empty()) throw ConfigError("--model is required");
  const Cascade c = load_cascade(o.model);
  const ScanParams p = scan_params(o);
  bench::Table t;
  t.header = {"image", "x", "y", "w", "h", "score"};
  for (const auto& path : image_paths(o.images)) {
    auto dets = scan_image(c, read_pgm(path.string()), p);
    if (!o.top1) dets = merge_detections(dets, o.min_neighbors);
    for (const auto& d : dets)
      t.rows.push_back({image_id(path), std::to_string(d.x), std::to_string(d.y), std::to_string(d.w),
                        std::to_string(d.h), bench::fmt(d.score)});
  }
  t.write(out_file(o, "detections.csv"));
  std::cout << t.rows.size() << " detections\n";
  return 0;
}

int cmd_eval_roc(const Options& o, const std::string&) {
  if (o.model.empty()) throw ConfigError("--model is required");
  const Cascade c = load_cascade(o.model);
  std::vector<RocPoint> roc;
  if (!o.truth.empty()) {
    const auto truth = load_truth(o.truth);
    std::vector<Image> imgs;
    std::vector<std::vector<Detection>> boxes;
    for (const auto& path : image_paths(o.images)) {
      imgs.push_back(read_pgm(path.string()));
      const auto it = truth.find(image_id(path));
      boxes.push_back(it == truth.end() ? std::vector<Detection>{} : it->second);
    }
    roc = roc_curve_images(c, imgs, boxes, scan_params(o), o.min_neighbors, o.points);
  } else {
    const Dataset d = load_data(o.data, "image-directory");
    std::vector<WindowSample> samples;
    for (const auto& im : d.images) samples.push_back(patch_sample(im));
    roc = roc_curve(c, samples, d.labels);
  }
  bench::Table t;
  t.header = {"false_positives", "detection_rate"};
  for (const auto& p : roc) t.rows.push_back({bench::fmt(p.false_positives), bench::fmt(p.detection_rate)});
  t.write(out_file(o, "roc.csv"));
  std::cout << t.str();
  return 0;
}

Dataset surrogate_digits(std::size_t threes, std::size_t fives, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto s = synthetic::digits(threes, fives, rng);
  return dataset_from_images(std::move(s.images), std::move(s.labels), "synthetic-digits");
}

int cmd_bench(const Options& o, const std::string&) {
  bench::BenchConfig cfg;
  cfg.max_learners = o.learners;
  cfg.initial_fraction = o.initial_frac;
  cfg.fractions = o.fractions;
  cfg.criterion = Criterion::parse(o.criterion);
  cfg.seed = o.seed;
  cfg.repeats = o.repeats;
  cfg.interval = o.interval;
  cfg.time_sizes = o.sizes;
  cfg.time_learners = o.learners;
  cfg.time_reps = o.time_reps;
  if (o.mode != "online" && o.mode != "batch") throw ConfigError("mode must be online or batch");

  Dataset train, test;
  if (o.train.empty()) {
    train = surrogate_digits(synthetic::kUspsTrainThrees, synthetic::kUspsTrainFives, o.seed);
    test = surrogate_digits(synthetic::kUspsTestThrees, synthetic::kUspsTestFives, o.seed + 1000003);
  } else {
    train = load_data(o.train, o.format);
    if (o.test.empty()) throw ConfigError("--test is required with --train");
    test = load_data(o.test, o.format);
  }
  const auto rep = bench::error_benchmark(train, test, cfg);
  // Batch mode drops the online columns.
  auto keep = [&](bench::Table t) {
    if (o.mode == "online") return t;
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < t.header.size(); ++i)
      if (t.header[i].rfind("online", 0) != 0) cols.push_back(i);
    bench::Table out;
    for (std::size_t i : cols) out.header.push_back(t.header[i]);
    for (const auto& r : t.rows) {
      out.rows.emplace_back();
      for (std::size_t i : cols) out.rows.back().push_back(r[i]);
    }
    return out;
  };
  keep(rep.error_vs_k).write(out_file(o, "error_vs_k.csv"));
  keep(rep.error_vs_fraction).write(out_file(o, "error_vs_fraction.csv"));
  if (o.mode == "online") rep.online_curve.write(out_file(o, "online_curve.csv"));
  const auto timing = bench::timing_benchmark(cfg);
  timing.write(out_file(o, "time_vs_n.csv"));
  std::cout << keep(rep.error_vs_k).str() << keep(rep.error_vs_fraction).str() << timing.str();
  return 0;
}

int cmd_convert_usps(const Options& o, const std::string&) {
  if (o.input.empty() || o.output.empty()) throw ConfigError("--input and --output are required");
  const Dataset d = convert_usps(o.input, o.positive_label, o.negative_label);
  save_vector_table(o.output, d);
  std::cout << d.count(Label::Positive) << " positive, " << d.count(Label::Negative) << " negative\n";
  return 0;
}

int cmd_make_synthetic(const Options& o, const std::string&) {
  const fs::path dir = out_dir(o);
  std::mt19937_64 rng(o.seed);
  if (o.kind == "digits") {
    save_vector_table((dir / "train.csv").string(),
                      surrogate_digits(synthetic::kUspsTrainThrees, synthetic::kUspsTrainFives, o.seed));
    save_vector_table((dir / "test.csv").string(),
                      surrogate_digits(synthetic::kUspsTestThrees, synthetic::kUspsTestFives, o.seed + 1000003));
  } else if (o.kind == "patches") {
    const auto ps = synthetic::patches(o.positives, o.negatives, rng);
    save_image_directory(dir.string(), ps.images, ps.labels);
  } else if (o.kind == "scenes") {
    fs::create_directories(dir / "images");
    bench::Table truth;
    truth.header = {"image", "x", "y", "w", "h"};
    char name[32];
    for (std::size_t i = 0; i < o.scenes; ++i) {
      const auto sc = synthetic::scene(160, 120, 3, rng);
      std::snprintf(name, sizeof name, "scene%04zu", i);
      write_pgm((dir / "images" / (std::string(name) + ".pgm")).string(), sc.image);
      for (const auto& f : sc.faces)
        truth.rows.push_back({name, std::to_string(f.x), std::to_string(f.y), std::to_string(f.w), std::to_string(f.h)});
    }
    truth.write((dir / "truth.csv").string());
  } else {
    throw ConfigError("kind must be digits, patches or scenes");
  }
  std::cout << "wrote " << o.kind << " to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Online greedy sparse LDA classifiers and cascade detectors"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto* tb = app.add_subcommand("train-batch", "greedy sparse LDA on a full training set");
  auto* to = app.add_subcommand("train-online", "train on an initial fraction, then stream the rest");
  auto* tc = app.add_subcommand("train-cascade", "train a detection cascade from pos/ and neg/ images");
  auto* up = app.add_subcommand("update", "online update of a saved model or cascade");
  auto* de = app.add_subcommand("detect", "scan images with a cascade");
  auto* er = app.add_subcommand("eval-roc", "ROC of a cascade by shifting the final stage threshold");
  auto* be = app.add_subcommand("bench", "error and timing tables, batch vs online");
  auto* cu = app.add_subcommand("convert-usps", "LIBSVM-layout USPS file to a two-class vector table");
  auto* ms = app.add_subcommand("make-synthetic", "write the packaged synthetic datasets");

  for (auto* s : {tb, to, tc, up, de, er, be, cu, ms}) add_common(s, o);
  for (auto* s : {tb, to, be}) {
    add_learning(s, o);
    s->add_option("--train", o.train, "training data (vector table or image directory)");
    s->add_option("--test", o.test, "test data");
    s->add_option("--format", o.format, "auto, vector-table or image-directory");
  }
  for (auto* s : {to, be}) {
    s->add_option("--mode", o.mode, "online or batch");
    s->add_option("--initial-frac", o.initial_frac, "initial training fraction in (0,1)");
    s->add_option("--interval", o.interval, "inserts between error samples");
  }
  be->add_option("--repeats", o.repeats, "seeded repetitions (seed, seed+1, ...)")->check(CLI::PositiveNumber);
  be->add_option("--fractions", o.fractions, "checkpoint training fractions")->delimiter(',');
  be->add_option("--sizes", o.sizes, "accumulated sizes for the timing table")->delimiter(',');
  be->add_option("--time-reps", o.time_reps, "timing repetitions (>= 5)");

  tc->add_option("--train", o.train, "directory with pos/ patches and neg/ background images")->required();
  tc->add_option("--stages", o.stages, "number of stages")->check(CLI::PositiveNumber);
  tc->add_option("--negatives-per-stage", o.negatives_per_stage, "bootstrapped negatives per stage");
  tc->add_option("--pool-stride", o.pool_stride, "Haar pool position/size stride")->check(CLI::PositiveNumber);
  tc->add_option("--min-detection", o.min_detection, "per-stage detection goal");
  tc->add_option("--max-fp", o.max_fp, "per-stage false positive goal");
  tc->add_option("--max-learners", o.max_learners, "per-stage learner cap");
  add_scan(tc, o);

  up->add_option("--model", o.model, "model or cascade document")->required();
  up->add_option("--data", o.data, "samples to insert")->required();
  up->add_option("--format", o.format, "auto, vector-table or image-directory");

  de->add_option("--model", o.model, "cascade document")->required();
  de->add_option("--images", o.images, "PGM file or directory")->required();
  add_scan(de, o);

  er->add_option("--model", o.model, "cascade document")->required();
  er->add_option("--data", o.data, "pos/ and neg/ patch directory");
  er->add_option("--images", o.images, "scene images (with --truth)");
  er->add_option("--truth", o.truth, "ground truth CSV: image,x,y,w,h");
  er->add_option("--points", o.points, "threshold shifts for scene ROC");
  add_scan(er, o);

  cu->add_option("--input", o.input, "USPS file")->required();
  cu->add_option("--output", o.output, "vector table to write")->required();
  cu->add_option("--positive", o.positive_label, "positive digit label");
  cu->add_option("--negative", o.negative_label, "negative digit label");

  ms->add_option("--kind", o.kind, "digits, patches or scenes");
  ms->add_option("--positives", o.positives, "face patches");
  ms->add_option("--negatives", o.negatives, "clutter patches");
  ms->add_option("--scenes", o.scenes, "scene images");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const std::string config = find_config(args);
    if (!config.empty() && !args.empty()) {
      auto extra = config_arguments(config, args[0]);
      args.insert(args.begin() + 1, extra.begin(), extra.end());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string hash = run_hash(sub);
    const std::string name = sub->get_name();
    if (name == "train-batch") return cmd_train_batch(o, hash);
    if (name == "train-online") return cmd_train_online(o, hash);
    if (name == "train-cascade") return cmd_train_cascade(o, hash);
    if (name == "update") return cmd_update(o, hash);
    if (name == "detect") return cmd_detect(o, hash);
    if (name == "eval-roc") return cmd_eval_roc(o, hash);
    if (name == "bench") return cmd_bench(o, hash);
    if (name == "convert-usps") return cmd_convert_usps(o, hash);
    if (name == "make-synthetic") return cmd_make_synthetic(o, hash);
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
