#include "tcbct/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "raw_io.hpp"
#include "tcbct/checksum.hpp"
#include "tcbct/completion.hpp"
#include "tcbct/dataprep.hpp"
#include "tcbct/error.hpp"
#include "tcbct/fdk.hpp"
#include "tcbct/metrics.hpp"
#include "tcbct/parallel.hpp"
#include "tcbct/phantom.hpp"
#include "tcbct/projector.hpp"
#include "tcbct/simd.hpp"

namespace tcbct::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw Error("--set expects KEY=VALUE, got '" + std::string(assignment) + "'");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error("--set: empty path component in '" + key + "'");
    if (!node->is_object()) {
      if (!node->is_null()) throw Error("--set: '" + key + "' descends into a non-object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

void validate_config(const json& config) {
  if (!config.is_object()) throw Error("config: top level must be an object");
  static const std::set<std::string> known = {"mu_water", "geometry", "phantom", "noise", "recon", "dataprep", "metrics"};
  for (const auto& [key, _] : config.items())
    if (!known.contains(key)) throw Error("config: unknown section '" + key + "'");
}

namespace {

struct NoiseConfig {
  bool enabled = false;
  NoiseSettings settings;
};

struct DataprepConfig {
  PairMode mode = PairMode::TaskSpecific;
  double soi_threshold_hu = 150.0;
  SliceAxis axis = SliceAxis::Axial;
  std::optional<int> slice_begin;
  std::optional<int> slice_end;
  bool report_residual = false;
  std::string volume_id = "phantom";
};

const json& section(const json& config, const char* key) {
  static const json empty = json::object();
  if (!config.contains(key)) return empty;
  const json& s = config.at(key);
  if (!s.is_object()) throw Error(std::string("config: '") + key + "' must be an object");
  return s;
}

void check_keys(const json& s, const char* name, std::initializer_list<const char*> keys) {
  for (const auto& [key, _] : s.items()) {
    bool ok = false;
    for (const char* k : keys) ok = ok || key == k;
    if (!ok) throw Error(std::string("config: unknown key '") + name + "." + key + "'");
  }
}

template <typename T>
T get_or(const json& s, const char* section_name, const char* key, T fallback) {
  if (!s.contains(key)) return fallback;
  try {
    return s.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("config: '") + section_name + "." + key + "' has the wrong type");
  }
}

class Context {
 public:
  Context(json config, fs::path out_dir, std::optional<std::uint64_t> seed, std::ostream& out)
      : config_(std::move(config)), out_dir_(std::move(out_dir)), seed_override_(seed), out_(out) {
    validate_config(config_);
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec) throw Error("cannot create output directory '" + out_dir_.string() + "': " + ec.message());
  }

  fs::path path(const char* name) const { return out_dir_ / name; }
  bool exists(const char* name) const { return fs::exists(path(name)); }

  double mu_water() const { return get_or(config_, "", "mu_water", kDefaultMuWater); }

  SystemGeometry geometry() const {
    if (!config_.contains("geometry")) throw Error("config: missing required key 'geometry'");
    return build_geometry(config_.at("geometry"));
  }

  PhantomSpec phantom() const {
    if (!config_.contains("phantom")) throw Error("config: missing required key 'phantom'");
    return phantom_from_config(config_.at("phantom"));
  }

  ReconOptions recon() const {
    ReconOptions defaults;
    defaults.mu_water = mu_water();
    return ReconOptions::from_json(section(config_, "recon"), defaults);
  }

  NoiseConfig noise() const {
    const json& s = section(config_, "noise");
    check_keys(s, "noise", {"enabled", "photons_per_ray", "seed"});
    NoiseConfig n;
    n.enabled = get_or(s, "noise", "enabled", false);
    n.settings.photons_per_ray = get_or(s, "noise", "photons_per_ray", 1e6);
    n.settings.seed = seed_override_ ? *seed_override_ : get_or<std::uint64_t>(s, "noise", "seed", 0);
    return n;
  }

  DataprepConfig dataprep() const {
    const json& s = section(config_, "dataprep");
    check_keys(s, "dataprep",
               {"mode", "soi_threshold_hu", "axis", "slice_begin", "slice_end", "report_residual", "volume_id"});
    DataprepConfig d;
    d.mode = pair_mode_from_string(get_or<std::string>(s, "dataprep", "mode", "task-specific"));
    d.soi_threshold_hu = get_or(s, "dataprep", "soi_threshold_hu", d.soi_threshold_hu);
    d.axis = slice_axis_from_string(get_or<std::string>(s, "dataprep", "axis", "axial"));
    if (s.contains("slice_begin")) d.slice_begin = get_or(s, "dataprep", "slice_begin", 0);
    if (s.contains("slice_end")) d.slice_end = get_or(s, "dataprep", "slice_end", 0);
    d.report_residual = get_or(s, "dataprep", "report_residual", false);
    d.volume_id = get_or<std::string>(s, "dataprep", "volume_id", d.volume_id);
    return d;
  }

  EvaluationOptions metrics() const {
    const json& s = section(config_, "metrics");
    check_keys(s, "metrics", {"hu_threshold", "dice_outside_fov_only"});
    EvaluationOptions m;
    m.hu_threshold = get_or(s, "metrics", "hu_threshold", m.hu_threshold);
    m.dice_outside_fov_only = get_or(s, "metrics", "dice_outside_fov_only", m.dice_outside_fov_only);
    return m;
  }

  /// Appends one JSON line describing a finished stage and its artifacts.
  void log_stage(const std::string& stage, const std::vector<fs::path>& artifacts, const json& extra = json::object()) {
    json entry = {{"stage", stage},
                  {"param_hash", crc32_hex(config_.dump())},
                  {"params", config_},
                  {"seed", noise().settings.seed},
                  {"threads", thread_count()},
                  {"simd", simd::to_string(simd::active_isa())}};
    json files = json::array();
    for (const auto& p : artifacts) files.push_back({{"file", fs::relative(p, out_dir_).generic_string()}, {"crc32", file_crc32(p)}});
    entry["artifacts"] = files;
    if (!extra.empty()) entry["details"] = extra;
    std::ofstream log(path(artifact::kRunLog), std::ios::app);
    if (!log) throw Error("cannot append to the run log");
    log << entry.dump() << '\n';
    out_ << stage << ": wrote " << artifacts.size() << " artifact(s) to " << out_dir_.string() << '\n';
  }

  static std::string file_crc32(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read '" + p.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return crc32_hex(bytes);
  }

  const fs::path& out_dir() const { return out_dir_; }

 private:
  json config_;
  fs::path out_dir_;
  std::optional<std::uint64_t> seed_override_;
  std::ostream& out_;
};

std::vector<fs::path> with_sidecars(std::initializer_list<fs::path> raws) {
  std::vector<fs::path> files;
  for (const auto& p : raws) {
    files.push_back(p);
    files.push_back(sidecar_path(p));
  }
  return files;
}

void require(const Context& ctx, const char* name, const char* producer) {
  if (!ctx.exists(name))
    throw Error(std::string("missing '") + name + "' in the output directory; run the '" + producer + "' stage first");
}

// Truncated projections fed to extrapolation and reconstruction.
const char* truncated_source(const Context& ctx) {
  if (ctx.noise().enabled) {
    require(ctx, artifact::kTruncatedNoisy, "noise");
    return artifact::kTruncatedNoisy;
  }
  require(ctx, artifact::kTruncated, "project");
  return artifact::kTruncated;
}

void stage_phantom(Context& ctx) {
  const SystemGeometry geom = ctx.geometry();
  const Grid grid = ctx.recon().grid;
  const PhantomSpec spec = ctx.phantom();
  const Volume3D f = rasterize_phantom(spec, grid);
  save_volume(f, ctx.path(artifact::kPhantom));
  save_mask(threshold_segment(f, ctx.dataprep().soi_threshold_hu), ctx.path(artifact::kSoiMask));
  save_mask(fov_cylinder_mask(grid, geom), ctx.path(artifact::kFovMask));
  ctx.log_stage("phantom",
                with_sidecars({ctx.path(artifact::kPhantom), ctx.path(artifact::kSoiMask), ctx.path(artifact::kFovMask)}),
                {{"phantom", phantom_to_json(spec)}});
}

void stage_project(Context& ctx) {
  require(ctx, artifact::kPhantom, "phantom");
  const SystemGeometry geom = ctx.geometry();
  const Volume3D mu = hu_to_mu(load_volume(ctx.path(artifact::kPhantom)), ctx.mu_water());
  const ProjectionStack untruncated = forward_project(mu, geom, DetectorKind::Virtual);
  save_projections(untruncated, ctx.path(artifact::kUntruncated));
  save_projections(crop_to_physical(untruncated), ctx.path(artifact::kTruncated));
  ctx.log_stage("project", with_sidecars({ctx.path(artifact::kUntruncated), ctx.path(artifact::kTruncated)}));
}

void stage_noise(Context& ctx) {
  require(ctx, artifact::kTruncated, "project");
  const NoiseConfig noise = ctx.noise();
  const ProjectionStack p = load_projections(ctx.path(artifact::kTruncated));
  save_projections(add_poisson_noise(p, noise.settings.photons_per_ray, noise.settings.seed),
                   ctx.path(artifact::kTruncatedNoisy));
  ctx.log_stage("noise", with_sidecars({ctx.path(artifact::kTruncatedNoisy)}),
                {{"photons_per_ray", noise.settings.photons_per_ray}});
}

void stage_extrapolate(Context& ctx) {
  const ReconOptions recon = ctx.recon();
  const ProjectionStack p = load_projections(ctx.path(truncated_source(ctx)));
  ProjectionStack completed = [&] {
    switch (recon.extrapolation) {
      case Extrapolation::Wce: return wce_extrapolate(p, WceOptions{recon.mu_water, recon.cosine_fallback_width});
      case Extrapolation::Zero: return zero_extend(p);
      case Extrapolation::None: break;
    }
    throw Error("extrapolate: recon.extrapolation is 'none'");
  }();
  save_projections(completed, ctx.path(artifact::kExtrapolated));
  ctx.log_stage("extrapolate", with_sidecars({ctx.path(artifact::kExtrapolated)}));
}

void stage_reconstruct(Context& ctx) {
  const ReconOptions recon = ctx.recon();
  const ProjectionStack p = load_projections(ctx.path(truncated_source(ctx)));
  save_volume(reconstruct(p, ctx.geometry(), recon), ctx.path(artifact::kRecon));
  ctx.log_stage("reconstruct", with_sidecars({ctx.path(artifact::kRecon)}));
}

void stage_prepare(Context& ctx) {
  require(ctx, artifact::kPhantom, "phantom");
  const SystemGeometry geom = ctx.geometry();
  const DataprepConfig dp = ctx.dataprep();
  const NoiseConfig noise = ctx.noise();
  PrepOptions opts;
  opts.recon = ctx.recon();
  if (noise.enabled) opts.noise = noise.settings;
  opts.volume_id = dp.volume_id;
  opts.report_residual = dp.report_residual;

  const Volume3D f = load_volume(ctx.path(artifact::kPhantom));
  TrainingPair pair = [&] {
    if (dp.mode == PairMode::Conventional) return prepare_conventional(f, geom, opts);
    require(ctx, artifact::kSoiMask, "phantom");
    return prepare_task_specific(f, load_mask(ctx.path(artifact::kSoiMask)), geom, opts);
  }();
  save_volume(pair.input, ctx.path(artifact::kInput));
  save_volume(pair.label, ctx.path(artifact::kLabel));
  detail::write_json(ctx.path(artifact::kPair), pair.provenance);
  auto files = with_sidecars({ctx.path(artifact::kInput), ctx.path(artifact::kLabel)});
  files.push_back(ctx.path(artifact::kPair));
  ctx.log_stage("prepare", files, pair.provenance);
}

void stage_export(Context& ctx) {
  require(ctx, artifact::kInput, "prepare");
  require(ctx, artifact::kLabel, "prepare");
  require(ctx, artifact::kPair, "prepare");
  const DataprepConfig dp = ctx.dataprep();
  const json provenance = detail::read_json(ctx.path(artifact::kPair));
  std::vector<TrainingPair> pairs;
  pairs.push_back(TrainingPair{load_volume(ctx.path(artifact::kInput)), load_volume(ctx.path(artifact::kLabel)),
                               pair_mode_from_string(provenance.at("mode").get<std::string>()), provenance,
                               std::nullopt});
  const auto& dims = pairs.front().input.grid().dims;
  const int axis_dim = dp.axis == SliceAxis::Axial ? dims[2] : dp.axis == SliceAxis::Coronal ? dims[1] : dims[0];
  const fs::path dir = ctx.path(artifact::kDataset);
  const DatasetManifest manifest =
      export_slices(pairs, dp.axis, dp.slice_begin.value_or(0), dp.slice_end.value_or(axis_dim), dir, ctx.geometry());
  std::vector<fs::path> files;
  for (const auto& e : manifest.entries) {
    files.push_back(dir / e.input);
    files.push_back(dir / e.label);
  }
  files.push_back(dir / kManifestName);
  ctx.log_stage("export", files, {{"entries", manifest.entries.size()}});
}

// Aggregate metrics of a trainer evaluation report.
json summarize_trainer_report(const fs::path& path) {
  const json report = detail::read_json(path);
  try {
    const json& agg = report.at("aggregate");
    return {{"file", path.filename().string()},
            {"mode", report.value("mode", std::string("unknown"))},
            {"l1", agg.at("l1").get<double>()},
            {"dice", agg.at("dice").get<double>()},
            {"slices", report.contains("per_slice") ? report.at("per_slice").size() : 0}};
  } catch (const json::exception& e) {
    throw Error("malformed trainer report '" + path.string() + "': " + e.what());
  }
}

void stage_evaluate(Context& ctx, const std::string& pred_path, const std::string& reference_path,
                    const std::vector<std::string>& trainer_reports) {
  std::vector<fs::path> files;
  if (!pred_path.empty() || ctx.exists(artifact::kInput)) {
    const fs::path pred = pred_path.empty() ? ctx.path(artifact::kInput) : fs::path(pred_path);
    const fs::path ref = reference_path.empty() ? ctx.path(artifact::kLabel) : fs::path(reference_path);
    require(ctx, artifact::kSoiMask, "phantom");
    require(ctx, artifact::kFovMask, "phantom");
    const EvaluationOptions opts = ctx.metrics();
    const EvaluationReport report = evaluate_pair(load_volume(pred), load_volume(ref), load_mask(ctx.path(artifact::kSoiMask)),
                                                  load_mask(ctx.path(artifact::kFovMask)), opts);
    json j = report.to_json();
    j["prediction"] = pred.filename().string();
    j["reference"] = ref.filename().string();
    detail::write_json(ctx.path(artifact::kReport), j);
    files.push_back(ctx.path(artifact::kReport));
  } else if (trainer_reports.empty()) {
    throw Error("evaluate: nothing to evaluate; run 'prepare' or pass --pred / --trainer-report");
  }

  if (!trainer_reports.empty()) {
    json models = json::array();
    for (const auto& p : trainer_reports) models.push_back(summarize_trainer_report(p));
    std::size_t best = 0;
    for (std::size_t i = 1; i < models.size(); ++i)
      if (models[i]["dice"].get<double>() > models[best]["dice"].get<double>()) best = i;
    detail::write_json(ctx.path(artifact::kTrainerComparison),
                       {{"models", models}, {"highest_dice", models[best]["file"]}});
    files.push_back(ctx.path(artifact::kTrainerComparison));
  }
  ctx.log_stage("evaluate", files);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Truncated cone-beam CT simulation, reconstruction and training-pair preparation", "trunc-cbct"};
  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 0;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  app.add_option("--config", config_path, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "Override a config value: KEY=VALUE with a dot path")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.add_option("--threads", threads, "Worker threads (default: TRUNC_CBCT_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Noise seed (overrides noise.seed)");
  app.add_option("--out", out_dir, "Output directory for all artifacts");
  app.fallthrough();
  app.require_subcommand(1, 1);

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"phantom", "Rasterize the configured phantom and its SOI and FOV masks"},
      {"project", "Forward project the phantom onto the virtual and physical detectors"},
      {"noise", "Apply Poisson noise to the truncated projections"},
      {"extrapolate", "Complete the truncated projections onto the virtual detector"},
      {"reconstruct", "FDK reconstruction of the truncated projections"},
      {"prepare", "Build a conventional or task-specific training pair"},
      {"export", "Export paired slices and the dataset manifest"},
      {"evaluate", "Score a prediction against the label, or compare trainer reports"},
      {"pipeline", "phantom, prepare, export and evaluate in one run"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : stages) subs[name] = app.add_subcommand(name, help);
  std::string pred_path, reference_path;
  std::vector<std::string> trainer_reports;
  subs["evaluate"]->add_option("--pred", pred_path, "Prediction volume (default: input.raw)");
  subs["evaluate"]->add_option("--reference", reference_path, "Reference volume (default: label.raw)");
  subs["evaluate"]->add_option("--trainer-report", trainer_reports, "Trainer evaluation report(s) to compare")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string message = e.what();
    static const std::set<std::string> with_value = {"--config", "--set", "--threads", "--seed", "--out"};
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (with_value.contains(arg)) {
        ++i;
      } else if (!arg.starts_with("-")) {
        if (!subs.contains(arg)) message = "unknown subcommand '" + arg + "'";
        break;
      }
    }
    err << "error: " << message << "\n\n" << app.help();
    return 2;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    json config = json::object();
    if (!config_path.empty()) config = detail::read_json(config_path);
    for (const auto& o : overrides) apply_override(config, o);
    Context ctx(std::move(config), out_dir, seed_opt->count() ? std::optional(seed) : std::nullopt, out);

    const std::string stage = app.get_subcommands().front()->get_name();
    if (stage == "phantom") stage_phantom(ctx);
    else if (stage == "project") stage_project(ctx);
    else if (stage == "noise") stage_noise(ctx);
    else if (stage == "extrapolate") stage_extrapolate(ctx);
    else if (stage == "reconstruct") stage_reconstruct(ctx);
    else if (stage == "prepare") stage_prepare(ctx);
    else if (stage == "export") stage_export(ctx);
    else if (stage == "evaluate") stage_evaluate(ctx, pred_path, reference_path, trainer_reports);
    else {
      stage_phantom(ctx);
      stage_prepare(ctx);
      stage_export(ctx);
      stage_evaluate(ctx, "", "", {});
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace tcbct::cli
