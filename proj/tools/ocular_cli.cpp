#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "ocular/ocular.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using namespace ocular;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every run-affecting setting. Flags and config files both write here.
struct Options {
  std::string manifest, other, images, run, model, out, config, predictions = "predictions.csv";
  std::string descriptor = "bsif";
  std::string filters = (fs::path(OCULAR_DATA_DIR) / "bsif_k9_n8.bin").string();
  int window = 7;
  std::string region = "extended";
  std::string attribute = "gender";
  int out_w = 400, out_h = 340;
  int canonical_radius = 60;
  double svm_c = 1.0, svm_tol = 1e-4, bias_feature = 1.0;
  int max_iter = 10'000;
  std::uint64_t svm_seed = 0;
  double train_frac = 0.6;
  int reps = 5;
  std::uint64_t split_seed = 0;
  std::vector<double> sigmas{kBlurSigmas.begin(), kBlurSigmas.end()};
  std::string filter, train_filter, test_filter, field = "eye_color";
  int k = 9, n = 8;
  std::uint64_t seed = 0;
  std::uint64_t patches = 50'000;
  int subjects_per_class = 20, images_per_subject = 3, width = 640, height = 480;
  std::vector<std::string> flip;
  int dead_leaves = 0;
  unsigned threads = 0;
};

using Slot = std::variant<std::string*, int*, double*, std::uint64_t*, unsigned*, std::vector<double>*,
                          std::vector<std::string>*>;

struct OptionDef {
  std::string name;
  Slot slot;
  std::string help;
  bool path = false;
};

std::vector<OptionDef> option_table(Options& o) {
  return {
      {"manifest", &o.manifest, "dataset manifest CSV", true},
      {"other", &o.other, "second manifest scored by the models", true},
      {"images", &o.images, "directory of PGM images", true},
      {"run", &o.run, "output directory of an earlier evaluate run", true},
      {"model", &o.model, "model file", true},
      {"predictions", &o.predictions, "prediction log file name inside --run"},
      {"descriptor", &o.descriptor, "bsif, lbp or lpq"},
      {"filters", &o.filters, "BSIF filter bank file", true},
      {"window", &o.window, "LPQ window size (odd)"},
      {"region", &o.region, "extended, iris-only or iris-excluded"},
      {"attribute", &o.attribute, "gender or race"},
      {"out-w", &o.out_w, "canonical frame width"},
      {"out-h", &o.out_h, "canonical frame height"},
      {"canonical-radius", &o.canonical_radius, "iris radius in the canonical frame"},
      {"svm-c", &o.svm_c, "SVM regularization C"},
      {"svm-tol", &o.svm_tol, "relative duality-gap tolerance"},
      {"max-iter", &o.max_iter, "SVM epoch limit"},
      {"svm-seed", &o.svm_seed, "SVM shuffling seed"},
      {"bias-feature", &o.bias_feature, "constant feature carrying the SVM bias"},
      {"train-frac", &o.train_frac, "fraction of subjects per class used for training"},
      {"reps", &o.reps, "number of repetitions"},
      {"split-seed", &o.split_seed, "seed for subject splits"},
      {"sigmas", &o.sigmas, "blur levels applied to test images"},
      {"filter", &o.filter, "record filter, e.g. gender=male,eye=L"},
      {"train-filter", &o.train_filter, "training subgroup filter"},
      {"test-filter", &o.test_filter, "test subgroup filter"},
      {"field", &o.field, "stratification field"},
      {"k", &o.k, "BSIF filter size"},
      {"n", &o.n, "BSIF bit count"},
      {"seed", &o.seed, "random seed"},
      {"patches", &o.patches, "patches sampled for filter learning"},
      {"subjects-per-class", &o.subjects_per_class, "synthetic subjects per class"},
      {"images-per-subject", &o.images_per_subject, "synthetic images per subject"},
      {"width", &o.width, "synthetic image width"},
      {"height", &o.height, "synthetic image height"},
      {"flip", &o.flip, "eye_color=probability of the opposite iris texture"},
      {"dead-leaves", &o.dead_leaves, "write this many dead-leaves images instead of a dataset"},
  };
}

const std::vector<std::string> kDescriptorKeys{"descriptor", "filters", "window", "region",
                                               "out-w",      "out-h",   "canonical-radius"};
const std::vector<std::string> kSvmKeys{"svm-c", "svm-tol", "max-iter", "svm-seed", "bias-feature"};
const std::vector<std::string> kSplitKeys{"attribute", "train-frac", "reps", "split-seed"};

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

struct Command {
  std::string name;
  std::string help;
  std::vector<std::string> keys;
  std::vector<std::string> required;
};

std::vector<Command> commands() {
  return {
      {"learn-filters", "learn a BSIF filter bank from natural images", {"images", "k", "n", "seed", "patches"},
       {"images"}},
      {"synth", "generate a synthetic ocular dataset",
       {"subjects-per-class", "images-per-subject", "width", "height", "seed", "flip", "dead-leaves"}, {}},
      {"extract", "write one feature file per manifest image", concat({{"manifest"}, kDescriptorKeys}), {"manifest"}},
      {"train", "train one model on every labelled image", concat({{"manifest", "attribute", "filter"}, kDescriptorKeys, kSvmKeys}),
       {"manifest"}},
      {"predict", "score a manifest with a trained model", concat({{"model", "manifest"}, kDescriptorKeys}),
       {"model", "manifest"}},
      {"evaluate", "repeated subject-disjoint train/test experiment",
       concat({{"manifest"}, kSplitKeys, kDescriptorKeys, kSvmKeys}), {"manifest"}},
      {"cross-eval", "score another dataset with the models of an evaluate run", {"run", "other"}, {"run", "other"}},
      {"subgroup-eval", "train on one subgroup and test on another",
       concat({{"manifest", "train-filter", "test-filter"}, kSplitKeys, kDescriptorKeys, kSvmKeys}),
       {"manifest", "train-filter", "test-filter"}},
      {"blur-eval", "evaluate with Gaussian-blurred test images",
       concat({{"manifest", "sigmas"}, kSplitKeys, kDescriptorKeys, kSvmKeys}), {"manifest"}},
      {"stratify", "per-value accuracy of an evaluate run", {"run", "predictions", "field"}, {"run"}},
  };
}

json slot_to_json(const Slot& s) {
  return std::visit([](auto* p) { return json(*p); }, s);
}

void slot_from_json(const Slot& s, const json& j, const std::string& key) {
  try {
    std::visit([&](auto* p) { *p = j.get<std::remove_pointer_t<decltype(p)>>(); }, s);
  } catch (const json::exception& e) {
    throw UsageError("config key '" + key + "': " + e.what());
  }
}

std::string absolute_path(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

json resolved_config(const Command& cmd, Options& o) {
  const auto table = option_table(o);
  json j = json::object();
  j["command"] = cmd.name;
  for (const auto& key : cmd.keys)
    for (const auto& def : table)
      if (def.name == key) {
        if (def.path) *std::get<std::string*>(def.slot) = absolute_path(*std::get<std::string*>(def.slot));
        j[key] = slot_to_json(def.slot);
      }
  return j;
}

void apply_config_file(const Command& cmd, Options& o, const std::string& path) {
  const auto bytes = detail::read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw DataError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("config " + path + ": expected a JSON object");
  if (j.contains("command") && j["command"] != cmd.name)
    throw UsageError("config " + path + " is for command '" + j["command"].get<std::string>() + "', not '" + cmd.name + "'");
  const auto table = option_table(o);
  for (const auto& [key, value] : j.items()) {
    if (key == "command") continue;
    const bool known = std::find(cmd.keys.begin(), cmd.keys.end(), key) != cmd.keys.end();
    if (!known) throw UsageError("config " + path + ": unknown key '" + key + "' for " + cmd.name);
    for (const auto& def : table)
      if (def.name == key) slot_from_json(def.slot, value, key);
  }
}

std::string hex8(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

// Creates <out>/<command>-<crc of config> and stores the config in it.
fs::path make_run_dir(const json& config, const Options& o) {
  const std::string text = config.dump(2) + "\n";
  const fs::path dir = fs::path(o.out) / (config["command"].get<std::string>() + "-" + hex8(detail::crc32(text)));
  if (fs::exists(dir)) throw DataError("output directory " + dir.string() + " already exists; refusing to overwrite");
  fs::create_directories(dir);
  detail::write_text(dir / "config.json", text);
  return dir;
}

DescriptorConfig make_descriptor(const Options& o) {
  if (o.descriptor == "bsif") return DescriptorConfig::bsif(load_filter_bank(o.filters));
  if (o.descriptor == "lbp") return DescriptorConfig::lbp();
  if (o.descriptor == "lpq") return DescriptorConfig::lpq(LpqConfig{o.window});
  throw UsageError("unknown descriptor '" + o.descriptor + "' (expected bsif, lbp or lpq)");
}

AlignParams make_align(const Options& o) {
  AlignParams p{o.out_w, o.out_h, o.canonical_radius};
  p.validate();
  return p;
}

FeatureExtractor make_extractor(const Options& o) {
  return FeatureExtractor(make_descriptor(o), parse_region(o.region), make_align(o));
}

SvmTrainConfig make_svm(const Options& o) {
  SvmTrainConfig c;
  c.C = o.svm_c;
  c.tol = o.svm_tol;
  c.max_iter = o.max_iter;
  c.seed = o.svm_seed;
  c.bias_feature = o.bias_feature;
  c.validate();
  return c;
}

DatasetManifest load_checked(const std::string& path) {
  auto m = load_manifest(path);
  validate_manifest(m);
  return m;
}

KeyValues report_header(const std::string& command, const Options& o, const FeatureExtractor& ex,
                        const DatasetManifest& m) {
  return {{"command", command},
          {"manifest", m.name},
          {"attribute", o.attribute},
          {"descriptor", ex.descriptor().fingerprint()},
          {"region", std::string(to_string(ex.region()))},
          {"feature_dim", std::to_string(ex.fingerprint().dim)}};
}

void write_dropped(const fs::path& dir, const std::vector<std::string>& dropped) {
  if (dropped.empty()) return;
  std::string s;
  for (const auto& d : dropped) s += d + "\n";
  detail::write_text(dir / "dropped.txt", s);
  std::cerr << dropped.size() << " image(s) dropped, see " << (dir / "dropped.txt").string() << "\n";
}

void write_models(const fs::path& dir, std::span<const SvmModel> models) {
  fs::create_directories(dir / "models");
  for (std::size_t r = 0; r < models.size(); ++r) save_model(models[r], dir / "models" / ("rep-" + std::to_string(r) + ".osvm"));
}

void write_splits(const fs::path& dir, const SplitPlan& plan) {
  std::string s = "repetition,subject_id,partition\n";
  for (std::size_t r = 0; r < plan.repetitions.size(); ++r) {
    for (const auto& sid : plan.repetitions[r].train_subjects) s += std::to_string(r) + "," + detail::csv_escape(sid) + ",train\n";
    for (const auto& sid : plan.repetitions[r].test_subjects) s += std::to_string(r) + "," + detail::csv_escape(sid) + ",test\n";
  }
  detail::write_text(dir / "splits.csv", s);
}

void write_report(const fs::path& dir, const std::string& stem, const EvalReport& r, const KeyValues& header,
                  std::span<const PredictionRow> log, const std::string& log_name) {
  detail::write_text(dir / (stem + ".txt"), report_text(r, header));
  detail::write_text(dir / (stem + ".csv"), report_csv(r));
  detail::write_text(dir / log_name, prediction_log_csv(log));
}

SplitPlan plan_for(const DatasetManifest& m, const Options& o) {
  const auto plan = make_splits(m, parse_attribute(o.attribute), o.train_frac, o.reps, o.split_seed);
  if (plan.excluded_unknown_images)
    std::cerr << plan.excluded_unknown_images << " image(s) with unknown " << o.attribute << " excluded\n";
  return plan;
}

std::vector<fs::path> pgm_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .pgm images in " + dir);
  return files;
}

void cmd_learn_filters(const Options& o, const fs::path& dir) {
  std::vector<GrayImage> images;
  for (const auto& f : pgm_files(o.images)) images.push_back(load_pgm(f));
  BsifLearnOptions opt;
  opt.patches = static_cast<std::size_t>(o.patches);
  const auto bank = learn_bsif_filters(images, o.k, o.n, o.seed, opt);
  save_filter_bank(bank, dir / "filters.bin");
}

EyeColor parse_eye_color(std::string_view s) {
  for (std::size_t i = 0; i < kEyeColorNames.size(); ++i)
    if (kEyeColorNames[i] == s) return static_cast<EyeColor>(i);
  throw UsageError("unknown eye color '" + std::string(s) + "'");
}

void cmd_synth(const Options& o, const fs::path& dir) {
  if (o.dead_leaves > 0) {
    for (int i = 0; i < o.dead_leaves; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "leaves_%03d.pgm", i);
      write_pgm(dead_leaves_image(o.width, o.height, mix_seed(o.seed, static_cast<std::uint64_t>(i))), dir / name);
    }
    return;
  }
  SynthSpec spec;
  spec.num_subjects_per_class = o.subjects_per_class;
  spec.images_per_subject = o.images_per_subject;
  spec.width = o.width;
  spec.height = o.height;
  spec.seed = o.seed;
  for (const auto& f : o.flip) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) throw UsageError("--flip expects color=probability, got '" + f + "'");
    const auto p = detail::parse_double(f.substr(eq + 1));
    if (!p) throw UsageError("--flip probability is not a number: '" + f + "'");
    spec.iris_flip_probability[static_cast<std::size_t>(parse_eye_color(f.substr(0, eq)))] = *p;
  }
  generate(spec, dir);
}

std::string feature_file_name(std::size_t row, const SampleRecord& rec) {
  std::string stem = fs::path(rec.image_path).stem().string();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu_", row);
  return buf + stem + ".ofea";
}

int cmd_extract(const Options& o, const fs::path& dir) {
  const auto m = load_manifest(o.manifest);
  const auto ex = make_extractor(o);
  std::vector<std::size_t> rows(m.size());
  std::iota(rows.begin(), rows.end(), 0);
  FeatureTable table;
  fill_features(table, m, rows, ex, 0.0, o.threads);
  fs::create_directories(dir / "features");
  std::string index = "row,image_path,feature_file\n";
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (!table.rows[r]) continue;
    const auto name = feature_file_name(r, m.records[r]);
    save_features(*table.rows[r], dir / "features" / name);
    index += std::to_string(r + 2) + "," + detail::csv_escape(m.records[r].image_path) + "," + name + "\n";
  }
  detail::write_text(dir / "index.csv", index);
  if (table.errors.empty()) return 0;
  std::string listing;
  for (const auto& [row, msg] : table.errors) listing += "row " + std::to_string(row + 2) + ": " + msg + "\n";
  detail::write_text(dir / "errors.txt", listing);
  std::cerr << listing;
  return 2;
}

void cmd_train(const Options& o, const fs::path& dir) {
  auto m = load_checked(o.manifest);
  if (!o.filter.empty()) m = filter(m, parse_filter(o.filter));
  const auto a = parse_attribute(o.attribute);
  const auto ex = make_extractor(o);
  const auto rows = detail::labelled_rows(m, a);
  FeatureTable table;
  fill_features(table, m, rows, ex, 0.0, o.threads);
  std::size_t used = 0;
  const auto model = detail::train_on_rows(m, a, table, rows, make_svm(o), &used);
  save_model(model, dir / "model.osvm");
  write_dropped(dir, detail::dropped_messages(table));
  std::cerr << "trained on " << used << " images, duality gap " << model.duality_gap << " after " << model.epochs
            << " epochs\n";
}

void cmd_predict(const Options& o, const fs::path& dir) {
  const auto model = load_model(o.model);
  const auto m = load_manifest(o.manifest);
  const auto ex = make_extractor(o);
  if (ex.fingerprint() != model.fingerprint)
    throw DataError("model fingerprint " + model.fingerprint.to_string() + " does not match extractor " +
                    ex.fingerprint().to_string());
  std::vector<std::size_t> rows(m.size());
  std::iota(rows.begin(), rows.end(), 0);
  FeatureTable table;
  fill_features(table, m, rows, ex, 0.0, o.threads);
  const bool gender = model.labels == attribute_classes(Attribute::Gender);
  const bool race = model.labels == attribute_classes(Attribute::Race);
  std::vector<PredictionRow> log;
  for (auto r : rows) {
    if (!table.rows[r]) continue;
    const auto p = predict(model, *table.rows[r]);
    std::string truth = "unknown";
    if (gender || race) {
      const auto lab = attribute_label(m.records[r], gender ? Attribute::Gender : Attribute::Race);
      if (lab) truth = model.labels[*lab > 0 ? 1 : 0];
    }
    log.push_back({m.records[r].image_path, 0, truth, p.label, p.decision});
  }
  detail::write_text(dir / "predictions.csv", prediction_log_csv(log));
  write_dropped(dir, detail::dropped_messages(table));
}

void cmd_evaluate(const Options& o, const fs::path& dir) {
  const auto m = load_checked(o.manifest);
  const auto ex = make_extractor(o);
  const auto plan = plan_for(m, o);
  const auto res = run_experiment(m, plan, ex, make_svm(o), o.threads);
  write_splits(dir, plan);
  write_models(dir, res.models);
  write_report(dir, "report", res.report, report_header("evaluate", o, ex, m), res.log, "predictions.csv");
  write_dropped(dir, res.dropped);
  std::cerr << "accuracy " << detail::fixed(res.report.mean, 2) << " +- " << detail::fixed(res.report.std, 2) << "\n";
}

Options options_from_run(const std::string& run) {
  Options o;
  const auto cmds = commands();
  const auto it = std::find_if(cmds.begin(), cmds.end(), [](const Command& c) { return c.name == "evaluate"; });
  try {
    apply_config_file(*it, o, (fs::path(run) / "config.json").string());
  } catch (const UsageError& e) {
    throw DataError(run + " is not an evaluate run: " + e.what());
  }
  return o;
}

std::vector<SvmModel> load_run_models(const std::string& run, int reps) {
  std::vector<SvmModel> models;
  for (int r = 0; r < reps; ++r) models.push_back(load_model(fs::path(run) / "models" / ("rep-" + std::to_string(r) + ".osvm")));
  return models;
}

void cmd_cross_eval(const Options& o, const fs::path& dir) {
  const auto ro = options_from_run(o.run);
  const auto models = load_run_models(o.run, ro.reps);
  const auto other = load_checked(o.other);
  const auto ex = make_extractor(ro);
  const auto res = cross_dataset_eval(models, other, parse_attribute(ro.attribute), ex, o.threads);
  write_report(dir, "report", res.report, report_header("cross-eval", ro, ex, other), res.log, "predictions.csv");
  write_dropped(dir, res.dropped);
  std::cerr << "accuracy " << detail::fixed(res.report.mean, 2) << " +- " << detail::fixed(res.report.std, 2) << "\n";
}

void cmd_subgroup_eval(const Options& o, const fs::path& dir) {
  const auto m = load_checked(o.manifest);
  const auto ex = make_extractor(o);
  const auto res = subgroup_experiment(m, parse_filter(o.train_filter), parse_filter(o.test_filter),
                                       parse_attribute(o.attribute), ex, make_svm(o), o.reps, o.split_seed,
                                       o.train_frac, o.threads);
  auto header = report_header("subgroup-eval", o, ex, m);
  header.push_back({"train_filter", o.train_filter});
  header.push_back({"test_filter", o.test_filter});
  write_models(dir, res.models);
  write_report(dir, "report", res.report, header, res.log, "predictions.csv");
  write_dropped(dir, res.dropped);
  std::cerr << "accuracy " << detail::fixed(res.report.mean, 2) << "\n";
}

void cmd_blur_eval(const Options& o, const fs::path& dir) {
  const auto m = load_checked(o.manifest);
  const auto ex = make_extractor(o);
  const auto plan = plan_for(m, o);
  const auto res = blur_experiment(m, plan, ex, o.sigmas, make_svm(o), o.threads);
  write_splits(dir, plan);
  write_models(dir, res.baseline.models);
  auto header = report_header("blur-eval", o, ex, m);
  auto with_sigma = [&](double s) {
    auto h = header;
    h.push_back({"blur_sigma", detail::format_double(s)});
    return h;
  };
  write_report(dir, "report-sigma-0", res.baseline.report, with_sigma(0), res.baseline.log, "predictions-sigma-0.csv");
  std::string summary = "sigma,accuracy_mean_percent,accuracy_std_percent\n";
  summary += "0," + detail::fixed(res.baseline.report.mean) + "," + detail::fixed(res.baseline.report.std) + "\n";
  for (const auto& level : res.levels) {
    const auto s = detail::format_double(level.sigma);
    write_report(dir, "report-sigma-" + s, level.report, with_sigma(level.sigma), level.log, "predictions-sigma-" + s + ".csv");
    summary += s + "," + detail::fixed(level.report.mean) + "," + detail::fixed(level.report.std) + "\n";
  }
  detail::write_text(dir / "blur.csv", summary);
  write_dropped(dir, res.baseline.dropped);
  std::cerr << summary;
}

void cmd_stratify(const Options& o, const fs::path& dir) {
  const auto ro = options_from_run(o.run);
  const auto m = load_manifest(ro.manifest);
  const auto bytes = detail::read_file(fs::path(o.run) / o.predictions);
  const auto log = parse_prediction_log(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  const auto table = stratified_report(log, m, parse_field(o.field), ro.reps);
  detail::write_text(dir / "strata.txt", strata_text(table));
  detail::write_text(dir / "strata.csv", strata_csv(table));
  std::cerr << strata_text(table);
}

int dispatch(const std::string& name, const Options& o, const fs::path& dir) {
  if (name == "learn-filters") cmd_learn_filters(o, dir);
  else if (name == "synth") cmd_synth(o, dir);
  else if (name == "extract") return cmd_extract(o, dir);
  else if (name == "train") cmd_train(o, dir);
  else if (name == "predict") cmd_predict(o, dir);
  else if (name == "evaluate") cmd_evaluate(o, dir);
  else if (name == "cross-eval") cmd_cross_eval(o, dir);
  else if (name == "subgroup-eval") cmd_subgroup_eval(o, dir);
  else if (name == "blur-eval") cmd_blur_eval(o, dir);
  else if (name == "stratify") cmd_stratify(o, dir);
  return 0;
}

// The value of --config in argv, if any; loaded before flags so flags win.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

int run(int argc, char** argv) {
  Options o;
  const auto cmds = commands();
  CLI::App app{"Texture-descriptor attribute prediction from ocular images", "ocular"};
  app.require_subcommand(1);
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : cmds) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    auto table = option_table(o);
    for (const auto& key : cmd.keys)
      for (const auto& def : table)
        if (def.name == key) std::visit([&](auto* p) { sub->add_option("--" + def.name, *p, def.help)->capture_default_str(); }, def.slot);
    sub->add_option("--config", o.config, "JSON config; flags override its values");
    sub->add_option("--out", o.out, "parent directory for the run output")->required();
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    subs[cmd.name] = sub;
  }

  if (argc > 1 && argv[1][0] != '-' &&
      std::none_of(cmds.begin(), cmds.end(), [&](const Command& c) { return c.name == argv[1]; })) {
    std::cerr << "error: unknown command '" << argv[1] << "'\n\n" << app.help();
    return 1;
  }

  const std::string config_path = find_config_arg(argc, argv);
  if (!config_path.empty() && argc > 1)
    for (const auto& cmd : cmds)
      if (cmd.name == argv[1]) apply_config_file(cmd, o, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  for (const auto& cmd : cmds) {
    if (!subs[cmd.name]->parsed()) continue;
    auto table = option_table(o);
    for (const auto& key : cmd.required)
      for (const auto& def : table)
        if (def.name == key && std::get<std::string*>(def.slot)->empty())
          throw UsageError(cmd.name + ": --" + key + " is required");
    const auto config = resolved_config(cmd, o);
    const auto dir = make_run_dir(config, o);
    int code = 0;
    try {
      code = dispatch(cmd.name, o, dir);
    } catch (...) {
      std::error_code ec;
      fs::remove_all(dir, ec);
      throw;
    }
    std::cout << dir.string() << "\n";
    return code;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
