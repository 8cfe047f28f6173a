#include "selfrep/config.hpp"

#include <algorithm>
#include <charconv>
#include <variant>

#include "selfrep/errors.hpp"
#include "selfrep/hashing.hpp"
#include "selfrep/text_io.hpp"

namespace selfrep {
namespace {

using Target = std::variant<double*, int*, unsigned*, std::uint64_t*, bool*, std::vector<double>*>;

struct Binding {
  const char* key;
  Target target;
};

std::vector<Binding> bindings(ExperimentConfig& c) {
  auto& d = c.dataset;
  auto& r = d.roads;
  auto& m = d.maneuvers;
  auto& p = d.plant;
  auto& k = d.controller;
  auto& t = c.training;
  auto& s = c.scenario;
  return {
      {"seed", &c.seed},
      {"dataset.n_segments", &d.n_segments},
      {"dataset.n_maneuvers", &d.n_maneuvers},
      {"dataset.n_degradations", &d.n_degradations},
      {"dataset.segment_pool", &d.segment_pool},
      {"dataset.maneuver_retries", &d.maneuver_retries},
      {"dataset.max_flagged_fraction", &d.max_flagged_fraction},
      {"dataset.threads", &d.threads},
      {"roads.w_min_lo_m", &r.w_min_lo},
      {"roads.w_min_hi_m", &r.w_min_hi},
      {"roads.w_max_lo_m", &r.w_max_lo},
      {"roads.w_max_hi_m", &r.w_max_hi},
      {"roads.k_min_lo_1pm", &r.k_min_lo},
      {"roads.k_min_hi_1pm", &r.k_min_hi},
      {"roads.k_max_lo_1pm", &r.k_max_lo},
      {"roads.k_max_hi_1pm", &r.k_max_hi},
      {"roads.length_lo_m", &r.length_lo},
      {"roads.length_hi_m", &r.length_hi},
      {"maneuver.v_lo_kmh", &m.v_lo_kmh},
      {"maneuver.v_hi_kmh", &m.v_hi_kmh},
      {"maneuver.a_lo_mps2", &m.a_lo},
      {"maneuver.a_hi_mps2", &m.a_hi},
      {"plant.mass_kg", &p.mass},
      {"plant.yaw_inertia_kgm2", &p.yaw_inertia},
      {"plant.lf_m", &p.lf},
      {"plant.lr_m", &p.lr},
      {"plant.track_m", &p.track},
      {"plant.vehicle_width_m", &p.vehicle_width},
      {"plant.cornering_stiffness_npr", &p.cornering_stiffness},
      {"plant.mu", &p.mu},
      {"plant.wheel_radius_m", &p.wheel_radius},
      {"plant.dt_s", &p.dt},
      {"plant.rolling_resistance", &p.rolling_resistance},
      {"plant.drag_area_m2", &p.drag_area},
      {"plant.air_density_kgpm3", &p.air_density},
      {"controller.horizon_steps", &k.horizon},
      {"controller.dt_s", &k.dt},
      {"controller.w_s", &k.w_s},
      {"controller.w_d", &k.w_d},
      {"controller.w_psi", &k.w_psi},
      {"controller.w_effort", &k.w_effort},
      {"controller.w_speed", &k.w_speed},
      {"controller.w_steer_angle", &k.w_steer_angle},
      {"controller.max_iterations", &k.max_iterations},
      {"controller.settle_time_s", &k.settle_time},
      {"training.hidden_width", &t.hidden_width},
      {"training.hidden_layers", &t.hidden_layers},
      {"training.batch_size", &t.batch_size},
      {"training.learning_rate", &t.learning_rate},
      {"training.max_epochs", &t.max_epochs},
      {"training.validation_fraction", &t.validation_fraction},
      {"training.patience_epochs", &t.patience},
      {"training.rms_decay", &t.rms_decay},
      {"training.rms_eps", &t.rms_eps},
      {"training.bn_momentum", &t.bn_momentum},
      {"training.bn_eps", &t.bn_eps},
      {"split.train_fraction", &c.train_fraction},
      {"split.calibration_count", &c.calibration_count},
      {"conformal.alphas", &c.alphas},
      {"scenario.w_min_m", &s.w_min_m},
      {"scenario.w_max_m", &s.w_max_m},
      {"scenario.length_m", &s.length_m},
      {"scenario.speed_kmh", &s.speed_kmh},
      {"scenario.a_max_grid_mps2", &s.a_max_grid},
      {"scenario.degradation_sets", &s.degradation_sets},
      {"scenario.simulate", &s.simulate},
  };
}

std::string format_target(const Target& t) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          return io::format_double(*p);
        } else if constexpr (std::is_same_v<T, bool>) {
          return *p ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          std::string s;
          for (std::size_t i = 0; i < p->size(); ++i) {
            if (i) s += ',';
            s += io::format_double((*p)[i]);
          }
          return s;
        } else {
          return std::to_string(*p);
        }
      },
      t);
}

void assign(const Target& t, const std::string& value) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          *p = io::parse_double(value);
        } else if constexpr (std::is_same_v<T, bool>) {
          const auto v = io::trim(value);
          if (v == "true" || v == "1")
            *p = true;
          else if (v == "false" || v == "0")
            *p = false;
          else
            throw ValidationError("expected true/false, got '" + std::string(v) + "'");
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          *p = parse_double_list(value);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          const auto v = io::trim(value);
          std::uint64_t x = 0;
          const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
          if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || v.empty())
            throw ValidationError("not an unsigned integer: '" + std::string(v) + "'");
          *p = x;
        } else {
          const long long x = io::parse_int(value);
          if constexpr (std::is_same_v<T, unsigned>) {
            if (x < 0) throw ValidationError("expected a non-negative integer");
          }
          *p = static_cast<T>(x);
        }
      },
      t);
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  const auto t = io::trim(text);
  if (t.empty()) return out;
  for (auto part : io::split(t, ',')) out.push_back(io::parse_double(part));
  return out;
}

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = [] {
    ExperimentConfig c;
    std::vector<std::string> out;
    for (const auto& b : bindings(c)) out.emplace_back(b.key);
    return out;
  }();
  return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& b : bindings(*this)) {
    if (key == b.key) {
      assign(b.target, value);
      overrides.erase(std::remove(overrides.begin(), overrides.end(), key), overrides.end());
      overrides.push_back(key);
      return;
    }
  }
  throw ValidationError("unknown config key '" + key + "'");
}

std::string ExperimentConfig::get(const std::string& key) const {
  for (const auto& b : bindings(const_cast<ExperimentConfig&>(*this)))
    if (key == b.key) return format_target(b.target);
  throw ValidationError("unknown config key '" + key + "'");
}

std::string ExperimentConfig::canonical_text() const {
  std::string out;
  for (const auto& b : bindings(const_cast<ExperimentConfig&>(*this))) {
    out += b.key;
    out += " = ";
    out += format_target(b.target);
    out += '\n';
  }
  return out;
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical_text()); }

void ExperimentConfig::validate() const {
  dataset.validate();
  training.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValidationError("split.train_fraction must lie in (0, 1)");
  if (calibration_count < 1) throw ValidationError("split.calibration_count must be >= 1");
  if (alphas.empty()) throw ValidationError("conformal.alphas must not be empty");
  for (double a : alphas)
    if (!(a > 0.0 && a < 0.5)) throw ValidationError("every alpha must lie in (0, 0.5)");
  const auto& r = dataset.roads;
  if (!(r.w_min_lo <= r.w_min_hi && r.w_max_lo <= r.w_max_hi && r.k_min_lo <= r.k_min_hi &&
        r.k_max_lo <= r.k_max_hi && r.length_lo <= r.length_hi && r.length_lo > 0.0))
    throw ValidationError("road ranges must satisfy lo <= hi");
  const auto& m = dataset.maneuvers;
  if (!(m.v_lo_kmh > 0.0 && m.v_lo_kmh <= m.v_hi_kmh && m.a_lo > 0.0 && m.a_lo <= m.a_hi))
    throw ValidationError("maneuver ranges must be positive with lo <= hi");
  const auto& s = scenario;
  if (!(s.w_min_m > 0.0 && s.w_min_m <= s.w_max_m && s.length_m > 0.0 && s.speed_kmh > 0.0))
    throw ValidationError("invalid scenario geometry");
  if (s.degradation_sets < 0) throw ValidationError("scenario.degradation_sets must be >= 0");
  for (double a : s.a_max_grid)
    if (!(a > 0.0)) throw ValidationError("scenario a_max values must be > 0");
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig c;
  std::size_t line_no = 0;
  for (auto line : io::split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = io::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ValidationError(where + ": expected 'key = value'");
    const std::string key(io::trim(line.substr(0, eq)));
    const std::string value(io::trim(line.substr(eq + 1)));
    try {
      c.set(key, value);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path), path.string());
}

}  // namespace selfrep
