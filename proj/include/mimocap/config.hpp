#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mimocap/antenna.hpp"
#include "mimocap/asymptotics.hpp"
#include "mimocap/capacity.hpp"
#include "mimocap/common.hpp"
#include "mimocap/operators.hpp"
#include "mimocap/spread.hpp"

namespace mimocap {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * One flat declarative configuration covering every command. Key names
 * carry their units. Unknown keys are rejected so typos fail loudly
 * instead of silently running defaults.
 */
struct RunConfig {
  std::uint64_t seed = 1;
  int resolution = 8;
  double k = 2.0 * kPi;  // rad per meter
  SnrConfig snr{10.0, 1.0};

  int tx_count = 4;
  int rx_count = 4;
  Box tx_box;
  Box rx_box;
  FillScheme scheme = FillScheme::halton;
  Vec6 polarization = (Vec6() << 1, 0, 0, 0, 0, 0).finished();

  bool smooth_env = false;
  int env_rank = 2;
  int env_band = 2;
  double env_coeff_scale = 1.0;
  double env_kappa = 5.0;
  double env_amplitude_scale = 1.0;
  Direction env_mu_r{0.0, 0.0};
  Direction env_mu_t{kPi, 0.0};

  std::vector<Route> routes = {Route::direct, Route::fredholm, Route::finite_rank};

  Regime regime = Regime::proportional_finite_rank;
  std::vector<int> m_values = {8, 16, 32, 64};
  double ratio_a = 1.0;
  int fixed_m_r = 4;
  int fixed_m_t = 2;
  double epsilon = 0.5;
  int order_n = 2;
  double saturation_delta_tol = 0.02;
  double saturation_gap_tol = 0.05;
  double slope_tol = 0.05;
  double rank_ratio_tol = 0.10;
};

namespace detail {

using json = nlohmann::json;

inline double as_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j.get<double>();
}

inline int as_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return j.get<int>();
}

inline std::uint64_t as_u64(const json& j, const std::string& key) {
  if (!j.is_number_unsigned() && !j.is_number_integer())
    throw ConfigError("config key '" + key + "' must be a nonnegative integer");
  const auto v = j.get<std::int64_t>();
  if (v < 0) throw ConfigError("config key '" + key + "' must be a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

inline std::string as_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return j.get<std::string>();
}

inline Vec3 as_vec3(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError("config key '" + key + "' must be an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) v(i) = as_number(j[i], key);
  return v;
}

inline Vec3 as_side(const json& j, const std::string& key) {
  if (j.is_number()) {
    const double s = j.get<double>();
    return Vec3(s, s, s);
  }
  return as_vec3(j, key);
}

inline void as_pol6(const json& j, const std::string& key, bool imag, Vec6& pol) {
  if (!j.is_array() || j.size() != 6)
    throw ConfigError("config key '" + key + "' must be an array of 6 numbers");
  for (int i = 0; i < 6; ++i) {
    const double v = as_number(j[i], key);
    pol(i) = imag ? cplx(pol(i).real(), v) : cplx(v, pol(i).imag());
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& root) {
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  RunConfig cfg;
  bool environment_named = false;

  for (const auto& [key, value] : root.items()) {
    using detail::as_int;
    using detail::as_number;
    using detail::as_string;
    if (key == "seed") {
      cfg.seed = detail::as_u64(value, key);
    } else if (key == "resolution") {
      cfg.resolution = as_int(value, key);
    } else if (key == "k_rad_per_m") {
      cfg.k = as_number(value, key);
    } else if (key == "e_t_joule") {
      cfg.snr.e_t = as_number(value, key);
    } else if (key == "n_0_joule") {
      cfg.snr.n_0 = as_number(value, key);
    } else if (key == "tx_count") {
      cfg.tx_count = as_int(value, key);
    } else if (key == "rx_count") {
      cfg.rx_count = as_int(value, key);
    } else if (key == "tx_box_side_m") {
      cfg.tx_box.side = detail::as_side(value, key);
    } else if (key == "rx_box_side_m") {
      cfg.rx_box.side = detail::as_side(value, key);
    } else if (key == "tx_box_center_m") {
      cfg.tx_box.center = detail::as_vec3(value, key);
    } else if (key == "rx_box_center_m") {
      cfg.rx_box.center = detail::as_vec3(value, key);
    } else if (key == "fill_scheme") {
      const std::string s = as_string(value, key);
      if (s == "halton")
        cfg.scheme = FillScheme::halton;
      else if (s == "lattice")
        cfg.scheme = FillScheme::lattice;
      else
        throw ConfigError("fill_scheme must be 'halton' or 'lattice'");
    } else if (key == "polarization_re") {
      detail::as_pol6(value, key, false, cfg.polarization);
    } else if (key == "polarization_im") {
      detail::as_pol6(value, key, true, cfg.polarization);
    } else if (key == "environment") {
      const std::string s = as_string(value, key);
      if (s == "finite_rank")
        cfg.smooth_env = false;
      else if (s == "smooth")
        cfg.smooth_env = true;
      else
        throw ConfigError("environment must be 'finite_rank' or 'smooth'");
      environment_named = true;
    } else if (key == "env_rank") {
      cfg.env_rank = as_int(value, key);
    } else if (key == "env_band") {
      cfg.env_band = as_int(value, key);
    } else if (key == "env_coeff_scale") {
      cfg.env_coeff_scale = as_number(value, key);
    } else if (key == "env_kappa") {
      cfg.env_kappa = as_number(value, key);
    } else if (key == "env_amplitude_scale") {
      cfg.env_amplitude_scale = as_number(value, key);
    } else if (key == "env_mu_r_theta_rad") {
      cfg.env_mu_r.theta = as_number(value, key);
    } else if (key == "env_mu_r_phi_rad") {
      cfg.env_mu_r.phi = as_number(value, key);
    } else if (key == "env_mu_t_theta_rad") {
      cfg.env_mu_t.theta = as_number(value, key);
    } else if (key == "env_mu_t_phi_rad") {
      cfg.env_mu_t.phi = as_number(value, key);
    } else if (key == "routes") {
      if (!value.is_array() || value.empty())
        throw ConfigError("routes must be a nonempty array of route names");
      cfg.routes.clear();
      for (const auto& r : value) {
        const std::string s = as_string(r, key);
        if (s == "direct")
          cfg.routes.push_back(Route::direct);
        else if (s == "fredholm")
          cfg.routes.push_back(Route::fredholm);
        else if (s == "finite_rank")
          cfg.routes.push_back(Route::finite_rank);
        else
          throw ConfigError("unknown route '" + s + "'");
      }
    } else if (key == "regime") {
      const auto parsed = parse_regime(as_string(value, key));
      if (!parsed) throw ConfigError("unknown regime '" + as_string(value, key) + "'");
      cfg.regime = *parsed;
    } else if (key == "m_values") {
      if (!value.is_array()) throw ConfigError("m_values must be an array of integers");
      cfg.m_values.clear();
      for (const auto& m : value) cfg.m_values.push_back(as_int(m, key));
    } else if (key == "ratio_a") {
      cfg.ratio_a = as_number(value, key);
    } else if (key == "fixed_m_r") {
      cfg.fixed_m_r = as_int(value, key);
    } else if (key == "fixed_m_t") {
      cfg.fixed_m_t = as_int(value, key);
    } else if (key == "epsilon") {
      cfg.epsilon = as_number(value, key);
    } else if (key == "order_n") {
      cfg.order_n = as_int(value, key);
    } else if (key == "saturation_delta_tol") {
      cfg.saturation_delta_tol = as_number(value, key);
    } else if (key == "saturation_gap_tol") {
      cfg.saturation_gap_tol = as_number(value, key);
    } else if (key == "slope_tol") {
      cfg.slope_tol = as_number(value, key);
    } else if (key == "rank_ratio_tol") {
      cfg.rank_ratio_tol = as_number(value, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  if (!environment_named)
    throw ConfigError("config must name an 'environment' (finite_rank or smooth)");
  if (cfg.resolution < 1) throw ConfigError("resolution must be >= 1");
  if (!(cfg.k > 0.0)) throw ConfigError("k_rad_per_m must be positive");
  if (!(cfg.snr.e_t > 0.0) || !(cfg.snr.n_0 > 0.0))
    throw ConfigError("e_t_joule and n_0_joule must be positive");
  if (cfg.tx_count < 1 || cfg.rx_count < 1)
    throw ConfigError("tx_count and rx_count must be >= 1");
  if (cfg.env_rank < 1) throw ConfigError("env_rank must be >= 1");
  if (cfg.env_band < 0) throw ConfigError("env_band must be >= 0");
  if (cfg.env_band > cfg.resolution - 1)
    throw ConfigError("env_band exceeds the exactness band of the grid resolution");
  if (!(cfg.env_kappa >= 0.0)) throw ConfigError("env_kappa must be >= 0");
  if (!(cfg.ratio_a > 0.0)) throw ConfigError("ratio_a must be positive");
  for (int i = 0; i < 3; ++i) {
    if (!(cfg.tx_box.side(i) > 0.0) || !(cfg.rx_box.side(i) > 0.0))
      throw ConfigError("box side lengths must be positive");
  }
  const double pol_norm = cfg.polarization.norm();
  if (!(pol_norm > 0.0) || pol_norm > 1.0 + 1e-12)
    throw ConfigError("polarization must have norm in (0, 1]");
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(root);
}

/// Deterministic environment objects derived from the config.
inline ScattererSet config_scatterers(const RunConfig& cfg) {
  return make_random_scatterer_set(cfg.env_rank, cfg.env_band, cfg.seed, cfg.env_coeff_scale);
}

inline SmoothSpread config_smooth(const RunConfig& cfg) {
  SmoothSpread s;
  s.kappa = cfg.env_kappa;
  s.amplitude = cfg.env_amplitude_scale * Mat6::Identity();
  s.mu_r = cfg.env_mu_r;
  s.mu_t = cfg.env_mu_t;
  return s;
}

inline SweepSpec to_sweep_spec(const RunConfig& cfg) {
  SweepSpec spec;
  spec.regime = cfg.regime;
  spec.m_values = cfg.m_values;
  spec.fixed_m_r = cfg.fixed_m_r;
  spec.fixed_m_t = cfg.fixed_m_t;
  spec.ratio_a = cfg.ratio_a;
  spec.tx_box = cfg.tx_box;
  spec.rx_box = cfg.rx_box;
  spec.scheme = cfg.scheme;
  spec.k = cfg.k;
  spec.polarization = cfg.polarization;
  spec.snr = cfg.snr;
  spec.resolution = cfg.resolution;
  spec.seed = cfg.seed;
  if (cfg.smooth_env)
    spec.smooth = config_smooth(cfg);
  else
    spec.scatterers = config_scatterers(cfg);
  spec.epsilon = cfg.epsilon;
  spec.order_n = cfg.order_n;
  spec.saturation_delta_tol = cfg.saturation_delta_tol;
  spec.saturation_gap_tol = cfg.saturation_gap_tol;
  spec.slope_tol = cfg.slope_tol;
  spec.rank_ratio_tol = cfg.rank_ratio_tol;
  return spec;
}

}  // namespace mimocap
