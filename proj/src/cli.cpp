#include "selfrep/cli.hpp"

#include <bit>
#include <cmath>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "selfrep/action_gate.hpp"
#include "selfrep/artifacts.hpp"
#include "selfrep/config.hpp"
#include "selfrep/errors.hpp"
#include "selfrep/hashing.hpp"
#include "selfrep/text_io.hpp"

namespace selfrep::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr std::uint64_t kStreamSplit = 0x5b1;
constexpr std::uint64_t kStreamTrain = 0x7a1;
constexpr std::uint64_t kStreamScenario = 0x5ce;

struct Context {
  ExperimentConfig cfg;
  fs::path dir;
  std::ostream& out;
  RunManifest manifest;

  fs::path roads() const { return dir / "roads" / "segments.csv"; }
  fs::path dataset() const { return dir / "dataset.csv"; }
  fs::path splits() const { return dir / "splits.json"; }
  fs::path model(double a) const { return dir / ("model_" + alpha_tag(a) + ".json"); }
  fs::path calibration(double a) const { return dir / ("calibration_" + alpha_tag(a) + ".json"); }
  fs::path evaluation(double a) const { return dir / ("evaluation_" + alpha_tag(a) + ".json"); }

  void write_manifest() const {
    io::write_file(dir / ("manifest_" + manifest.command + ".json"), manifest.to_json());
  }
};

/// Dataset plus the deterministic split every downstream stage agrees on.
struct Prepared {
  std::string dataset_hash;
  DatasetSplits splits;
  std::string split_json;
  std::string split_hash;
};

Prepared prepare(Context& c) {
  require_artifact(c.dataset(), "gen-dataset");
  Prepared p;
  p.dataset_hash = sha256_file(c.dataset());
  c.manifest.add_input(c.dir, c.dataset());
  const auto samples = read_dataset(c.dataset());
  p.splits = split_and_scale(samples, c.cfg.train_fraction, c.cfg.calibration_count,
                             derive_seed(c.cfg.seed, {kStreamSplit}));
  p.split_json = split_manifest_json(p.splits);
  p.split_hash = sha256_hex(p.split_json);
  return p;
}

QuantileModel load_checked_model(Context& c, const Prepared& p, double alpha) {
  const auto path = c.model(alpha);
  auto m = load_model(path);
  c.manifest.add_input(c.dir, path);
  if (m.dataset_hash != p.dataset_hash)
    throw ValidationError(path.string() + " was trained on a different dataset");
  if (m.split_hash != p.split_hash)
    throw ValidationError(path.string() + " was trained on a different split (seed or split settings changed)");
  if (std::abs(m.alpha - alpha) > 0.0) throw ValidationError(path.string() + " has alpha " + io::format_double(m.alpha));
  return m;
}

CalibrationResult load_checked_calibration(Context& c, const QuantileModel& m, const std::string& dataset_hash,
                                           double alpha) {
  const auto path = c.calibration(alpha);
  auto cal = load_calibration(path);
  c.manifest.add_input(c.dir, path);
  if (cal.model_id != m.checksum()) throw ValidationError(path.string() + " belongs to a different model");
  if (!dataset_hash.empty() && cal.dataset_hash != dataset_hash)
    throw ValidationError(path.string() + " was calibrated on a different dataset");
  if (cal.alpha != alpha) throw ValidationError(path.string() + " has alpha " + io::format_double(cal.alpha));
  return cal;
}

void cmd_gen_roads(Context& c) {
  const auto segs = synthetic_pool(c.cfg.dataset, c.cfg.seed);
  fs::create_directories(c.roads().parent_path());
  save_segments(c.roads(), segs);
  c.manifest.add_output(c.dir, c.roads());
  for (const auto& s : segs) c.manifest.add_output(c.dir, c.roads().parent_path() / (s.id + ".centerline.csv"));
  c.out << "wrote " << segs.size() << " segments to " << c.roads().string() << "\n";
}

void cmd_gen_dataset(Context& c) {
  DatasetResult r;
  if (fs::exists(c.roads())) {
    const auto pool = load_segments(c.roads());
    c.manifest.add_input(c.dir, c.roads());
    r = generate_dataset(c.cfg.dataset, pool, c.cfg.seed);
  } else {
    r = generate_dataset(c.cfg.dataset, c.cfg.seed);
  }
  write_dataset(c.dataset(), r.samples);
  c.manifest.add_output(c.dir, c.dataset());
  c.out << "wrote " << r.samples.size() << " samples to " << c.dataset().string() << " (" << r.flagged
        << " flagged, " << r.bound_violations << " actuator bound violations)\n";
}

void cmd_train(Context& c) {
  const auto p = prepare(c);
  io::write_file(c.splits(), p.split_json);
  c.manifest.add_output(c.dir, c.splits());
  c.out << "split: " << p.splits.train.size() << " train, " << p.splits.calibration.size() << " calibration, "
        << p.splits.test.size() << " test\n";
  for (double a : c.cfg.alphas) {
    auto m = train(p.splits, a, c.cfg.training, derive_seed(c.cfg.seed, {kStreamTrain, std::bit_cast<std::uint64_t>(a)}));
    m.dataset_hash = p.dataset_hash;
    m.split_hash = p.split_hash;
    m.config_hash = c.cfg.hash();
    save_model(c.model(a), m);
    c.manifest.add_output(c.dir, c.model(a));
    c.out << "alpha " << io::format_double(a) << ": " << m.epochs_run << " epochs, validation loss "
          << io::format_double(m.best_validation_loss) << ", checksum " << m.checksum() << "\n";
  }
}

void cmd_calibrate(Context& c) {
  const auto p = prepare(c);
  for (double a : c.cfg.alphas) {
    const auto m = load_checked_model(c, p, a);
    auto cal = calibrate(m, p.splits.calibration, a);
    cal.dataset_hash = p.dataset_hash;
    save_calibration(c.calibration(a), cal, c.cfg.hash());
    c.manifest.add_output(c.dir, c.calibration(a));
    c.out << "alpha " << io::format_double(a) << ": Q = " << (cal.infinite ? std::string("inf") : io::format_double(cal.q))
          << " m over " << cal.n_cal << " calibration samples\n";
  }
}

void cmd_evaluate(Context& c) {
  const auto p = prepare(c);
  std::vector<EvaluationReport> reports;
  for (double a : c.cfg.alphas) {
    const auto m = load_checked_model(c, p, a);
    const auto cal = load_checked_calibration(c, m, p.dataset_hash, a);
    const auto r = evaluate(m, cal, p.splits.test);
    io::write_file(c.evaluation(a), evaluation_json(r, {m.checksum(), p.dataset_hash, c.cfg.hash(), cal.q}));
    c.manifest.add_output(c.dir, c.evaluation(a));
    reports.push_back(r);
  }
  c.out << evaluation_table(reports);
}

void cmd_predict(Context& c, const std::optional<fs::path>& input) {
  if (!input) throw ValidationError("predict needs --input <feature csv>");
  if (!fs::exists(*input)) throw ValidationError("cannot open input " + input->string());
  const auto lines = io::read_lines(*input);
  if (lines.empty()) throw ValidationError(input->string() + ": empty file");
  const auto header = io::split(lines[0], ',');
  const auto& names = feature_names();
  if (header.size() != kFeatureCount) throw ValidationError(input->string() + ": expected 19 feature columns");
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    if (io::trim(header[f]) != names[f])
      throw ValidationError(input->string() + ": column " + std::to_string(f + 1) + " must be " + std::string(names[f]));
  std::vector<FeatureVector> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = io::split(lines[i], ',');
    if (cells.size() != kFeatureCount)
      throw ValidationError(input->string() + ":" + std::to_string(i + 1) + ": expected 19 values");
    FeatureVector x{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) x[f] = io::parse_double(cells[f]);
    rows.push_back(x);
  }
  c.manifest.add_input(c.dir.empty() ? fs::path(".") : c.dir, fs::absolute(*input));

  const auto range = FeatureRange::from_config(c.cfg.dataset.roads, c.cfg.dataset.maneuvers);
  std::string csv = "row,alpha,lo_m,hi_m,extrapolated\n";
  for (double a : c.cfg.alphas) {
    auto m = load_model(c.model(a));
    c.manifest.add_input(c.dir, c.model(a));
    const auto cal = load_checked_calibration(c, m, "", a);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto iv = predict_interval(m, cal, rows[i]);
      csv += std::to_string(i) + "," + io::format_double(a) + "," + io::format_double(iv.lo) + "," +
             io::format_double(iv.hi) + "," + (range.violations(rows[i]).empty() ? "0" : "1") + "\n";
    }
  }
  const auto path = c.dir / "predictions.csv";
  io::write_file(path, csv);
  c.manifest.add_output(c.dir, path);
  c.out << "wrote " << rows.size() * c.cfg.alphas.size() << " predictions to " << path.string() << "\n";
}

RoadSegment straight_segment(const ScenarioConfig& s) {
  RoadSegment seg;
  seg.id = "scenario";
  seg.length = s.length_m;
  seg.w_min = s.w_min_m;
  seg.w_max = s.w_max_m;
  const int n = static_cast<int>(std::floor(s.length_m));
  for (int i = 0; i <= n; ++i) seg.centerline.push_back({double(i), double(i), 0.0});
  if (seg.centerline.back().s < s.length_m) seg.centerline.push_back({s.length_m, s.length_m, 0.0});
  validate_segment(seg);
  return seg;
}

/// D0 nominal, then steering-only degradations (torque channels nominal).
std::vector<DegradationSet> scenario_degradations(int count, std::uint64_t seed) {
  std::vector<DegradationSet> out{DegradationSet::nominal()};
  Rng rng(derive_seed(seed, {kStreamScenario}));
  for (int i = 0; i < count; ++i) {
    DegradationSet d;
    for (auto& f : d.steer_angle) f = rng.uniform();
    for (auto& f : d.steer_rate) f = rng.uniform();
    out.push_back(d);
  }
  return out;
}

void cmd_scenario(Context& c) {
  const auto& sc = c.cfg.scenario;
  SceneContext scene;
  scene.segment = straight_segment(sc);
  scene.vehicle_width = c.cfg.dataset.plant.vehicle_width;
  scene.speed_kmh = sc.speed_kmh;
  const auto degs = scenario_degradations(sc.degradation_sets, c.cfg.seed);
  const auto range = FeatureRange::from_config(c.cfg.dataset.roads, c.cfg.dataset.maneuvers);

  // True deviation per (degradation, a_max); independent of alpha.
  std::vector<std::vector<double>> truth(degs.size(), std::vector<double>(sc.a_max_grid.size(), NAN));
  if (sc.simulate) {
    for (std::size_t d = 0; d < degs.size(); ++d)
      for (std::size_t k = 0; k < sc.a_max_grid.size(); ++k) {
        ManeuverParams mp;
        mp.v_init_kmh = mp.v_end_kmh = sc.speed_kmh;
        mp.a_max = sc.a_max_grid[k];
        try {
          const auto ref = generate_lane_change(scene.segment, mp);
          const auto trace = track_trajectory(ref, degs[d], c.cfg.dataset.plant, c.cfg.dataset.controller);
          truth[d][k] = max_deviation(trace).eps_lat;
        } catch (const InfeasibleManeuver&) {
        } catch (const SimulationDiverged&) {
        }
      }
  }

  std::string csv = "alpha,deg_idx";
  for (auto n : feature_names())
    if (n.substr(0, 3) == "dsf" || n.substr(0, 3) == "drf") csv += "," + std::string(n);
  csv += ",a_max,lo_m,hi_m,eps_free_m,margin_m,verdict,eps_true_m\n";
  Json report;
  report["version"] = version_string();
  report["config_hash"] = c.cfg.hash();
  Json runs = Json::array();
  for (double a : c.cfg.alphas) {
    auto m = load_model(c.model(a));
    c.manifest.add_input(c.dir, c.model(a));
    const auto cal = load_checked_calibration(c, m, "", a);
    for (std::size_t d = 0; d < degs.size(); ++d) {
      scene.degradation = degs[d];
      const auto actions = enumerate_admissible(scene, sc.a_max_grid, m, cal, range);
      Json entry = Json::parse(assessment_json(scene, a, actions));
      entry["deg_idx"] = d;
      runs.push_back(std::move(entry));
      for (const auto& act : actions) {
        if (act.verdict == Verdict::fallback) continue;
        std::string row = io::format_double(a) + "," + std::to_string(d);
        for (double f : degs[d].steer_angle) row += "," + io::format_double(f);
        for (double f : degs[d].steer_rate) row += "," + io::format_double(f);
        std::size_t k = 0;
        while (k < sc.a_max_grid.size() && sc.a_max_grid[k] != act.params.a_max) ++k;
        const double t = k < sc.a_max_grid.size() ? truth[d][k] : NAN;
        row += "," + io::format_double(act.params.a_max) + "," + io::format_double(act.interval.lo) + "," +
               io::format_double(act.interval.hi) + "," + io::format_double(act.eps_free) + "," +
               io::format_double(act.margin) + "," + to_string(act.verdict) + "," +
               (std::isnan(t) ? std::string() : io::format_double(t)) + "\n";
        csv += row;
      }
    }
  }
  report["assessments"] = std::move(runs);
  const auto csv_path = c.dir / "scenario.csv";
  const auto json_path = c.dir / "assessment.json";
  io::write_file(csv_path, csv);
  io::write_file(json_path, report.dump(2) + "\n");
  c.manifest.add_output(c.dir, csv_path);
  c.manifest.add_output(c.dir, json_path);
  c.out << "scenario: " << degs.size() << " degradation sets x " << sc.a_max_grid.size() << " a_max values x "
        << c.cfg.alphas.size() << " alphas -> " << csv_path.string() << ", " << json_path.string() << "\n";
}

ExperimentConfig build_config(const Options& o) {
  ExperimentConfig cfg;
  if (o.config) {
    if (!fs::exists(*o.config)) throw ValidationError("config file not found: " + o.config->string());
    cfg = load_config(*o.config);
  }
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    cfg.set(std::string(io::trim(kv.substr(0, eq))), std::string(io::trim(kv.substr(eq + 1))));
  }
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  if (o.alphas) cfg.set("conformal.alphas", *o.alphas);
  cfg.validate();
  return cfg;
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"gen-roads", "gen-dataset", "train", "calibrate",
                                          "evaluate",  "predict",     "scenario"};
  return c;
}

int run(const Options& opts, std::ostream& out, std::ostream& err) {
  try {
    if (std::find(commands().begin(), commands().end(), opts.command) == commands().end())
      throw ValidationError("unknown command '" + opts.command + "'");
    Context c{build_config(opts), opts.out, out, {}};
    fs::create_directories(c.dir);
    c.manifest.command = opts.command;
    c.manifest.config_hash = c.cfg.hash();
    c.manifest.seed = c.cfg.seed;
    for (const auto& k : c.cfg.overrides) c.manifest.overrides.push_back(k + " = " + c.cfg.get(k));

    if (opts.command == "gen-roads") cmd_gen_roads(c);
    else if (opts.command == "gen-dataset") cmd_gen_dataset(c);
    else if (opts.command == "train") cmd_train(c);
    else if (opts.command == "calibrate") cmd_calibrate(c);
    else if (opts.command == "evaluate") cmd_evaluate(c);
    else if (opts.command == "predict") cmd_predict(c, opts.input);
    else cmd_scenario(c);
    c.write_manifest();
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const MissingArtifactError& e) {
    err << "error: " << e.what() << "\n";
    return kExitMissingArtifact;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conformalized self-representation of a vehicle motion controller"};
  app.require_subcommand(1, 1);
  app.fallthrough();  // global flags may follow the command
  app.set_version_flag("--version", version_string());
  Options o;
  std::string config, out_dir = "out", input;
  std::uint64_t seed = 0;
  std::string alphas;
  std::vector<std::string> sets;
  app.add_option("--config", config, "Experiment config file (key = value lines)");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out_dir, "Artifact directory")->capture_default_str();
  auto* alpha_opt = app.add_option("--alpha", alphas, "Comma-separated miscoverage levels");
  app.add_option("--set", sets, "Config override key=value (repeatable)");
  for (const auto& name : commands()) {
    auto* sub = app.add_subcommand(name);
    if (name == "predict") sub->add_option("--input", input, "CSV of feature rows with a header")->required();
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version_string() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitValidation;
  }
  o.command = app.get_subcommands().front()->get_name();
  if (!config.empty()) o.config = config;
  if (seed_opt->count()) o.seed = seed;
  if (alpha_opt->count()) o.alphas = alphas;
  o.out = out_dir;
  o.sets = sets;
  if (!input.empty()) o.input = input;
  return run(o, out, err);
}

}  // namespace selfrep::cli
