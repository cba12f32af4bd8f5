#include "hieseg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "hieseg/errors.hpp"
#include "hieseg/preproc.hpp"

namespace hieseg {

namespace {

void check_range(bool ok, const char* what) {
  if (!ok) throw config_error(std::string("augment config: ") + what);
}

double sample_trilinear(const ScalarVolume& v, double x, double y, double z) {
  const Dims3& d = v.geometry().dims;
  x = std::clamp(x, 0.0, static_cast<double>(d[0] - 1));
  y = std::clamp(y, 0.0, static_cast<double>(d[1] - 1));
  z = std::clamp(z, 0.0, static_cast<double>(d[2] - 1));
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y), z0 = static_cast<int>(z);
  const int x1 = std::min(x0 + 1, d[0] - 1);
  const int y1 = std::min(y0 + 1, d[1] - 1);
  const int z1 = std::min(z0 + 1, d[2] - 1);
  const double fx = x - x0, fy = y - y0, fz = z - z0;
  const double c00 = (1.0 - fx) * v.at(x0, y0, z0) + fx * v.at(x1, y0, z0);
  const double c10 = (1.0 - fx) * v.at(x0, y1, z0) + fx * v.at(x1, y1, z0);
  const double c01 = (1.0 - fx) * v.at(x0, y0, z1) + fx * v.at(x1, y0, z1);
  const double c11 = (1.0 - fx) * v.at(x0, y1, z1) + fx * v.at(x1, y1, z1);
  const double c0 = (1.0 - fy) * c00 + fy * c10;
  const double c1 = (1.0 - fy) * c01 + fy * c11;
  return (1.0 - fz) * c0 + fz * c1;
}

}  // namespace

void AugmentConfig::validate() const {
  check_range(gate_prob >= 0.0 && gate_prob <= 1.0, "gate_prob must lie in [0, 1]");
  check_range(noise_std >= 0.0, "noise_std must be >= 0");
  check_range(aniso_factor_min >= 1.0, "aniso_factor_min must be >= 1");
  check_range(aniso_factor_min <= aniso_factor_max, "aniso factor range is inverted");
  check_range(blur_sigma_min_mm >= 0.0, "blur_sigma_min_mm must be >= 0");
  check_range(blur_sigma_min_mm <= blur_sigma_max_mm, "blur sigma range is inverted");
  check_range(log_gamma_min <= log_gamma_max, "log_gamma range is inverted");
  check_range(elastic_grid >= 2, "elastic_grid must be >= 2");
  check_range(elastic_max_disp_mm >= 0.0, "elastic_max_disp_mm must be >= 0");
}

nlohmann::json augment_config_to_json(const AugmentConfig& cfg) {
  return nlohmann::json{
      {"gate_prob", cfg.gate_prob},
      {"noise_std", cfg.noise_std},
      {"aniso_factor_min", cfg.aniso_factor_min},
      {"aniso_factor_max", cfg.aniso_factor_max},
      {"blur_sigma_min_mm", cfg.blur_sigma_min_mm},
      {"blur_sigma_max_mm", cfg.blur_sigma_max_mm},
      {"log_gamma_min", cfg.log_gamma_min},
      {"log_gamma_max", cfg.log_gamma_max},
      {"elastic_grid", cfg.elastic_grid},
      {"elastic_max_disp_mm", cfg.elastic_max_disp_mm},
      {"seed", cfg.seed},
  };
}

AugmentConfig augment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("augment config: top level must be a JSON object");
  static constexpr const char* kKeys[] = {
      "gate_prob",         "noise_std",         "aniso_factor_min", "aniso_factor_max",
      "blur_sigma_min_mm", "blur_sigma_max_mm", "log_gamma_min",    "log_gamma_max",
      "elastic_grid",      "elastic_max_disp_mm", "seed"};
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : kKeys) ok = ok || item.key() == k;
    if (!ok) throw config_error("augment config: unknown key \"" + item.key() + "\"");
  }
  auto number = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw config_error(std::string("augment config: \"") + key + "\" must be a number");
    return v.get<double>();
  };
  AugmentConfig cfg;
  cfg.gate_prob = number("gate_prob", cfg.gate_prob);
  cfg.noise_std = number("noise_std", cfg.noise_std);
  cfg.aniso_factor_min = number("aniso_factor_min", cfg.aniso_factor_min);
  cfg.aniso_factor_max = number("aniso_factor_max", cfg.aniso_factor_max);
  cfg.blur_sigma_min_mm = number("blur_sigma_min_mm", cfg.blur_sigma_min_mm);
  cfg.blur_sigma_max_mm = number("blur_sigma_max_mm", cfg.blur_sigma_max_mm);
  cfg.log_gamma_min = number("log_gamma_min", cfg.log_gamma_min);
  cfg.log_gamma_max = number("log_gamma_max", cfg.log_gamma_max);
  if (j.contains("elastic_grid")) {
    const auto& v = j.at("elastic_grid");
    if (!v.is_number_integer()) throw config_error("augment config: \"elastic_grid\" must be an integer");
    cfg.elastic_grid = v.get<int>();
  }
  cfg.elastic_max_disp_mm = number("elastic_max_disp_mm", cfg.elastic_max_disp_mm);
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    const bool ok = v.is_number_unsigned() ||
                    (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (!ok) throw config_error("augment config: \"seed\" must be a non-negative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  cfg.validate();
  return cfg;
}

nlohmann::json applied_log_to_json(const AppliedLog& log) {
  return nlohmann::json{
      {"seed", log.seed},
      {"noise", {{"applied", log.noise_applied}, {"std", log.noise_std}}},
      {"anisotropy",
       {{"applied", log.aniso_applied},
        {"axis", log.aniso_axis},
        {"factor", log.aniso_factor}}},
      {"blur", {{"applied", log.blur_applied}, {"sigma_mm", log.blur_sigma_mm}}},
      {"gamma", {{"applied", log.gamma_applied}, {"log_gamma", log.log_gamma}}},
      {"elastic",
       {{"applied", log.elastic_applied}, {"max_disp_mm", log.elastic_max_disp_mm}}},
  };
}

ScalarVolume add_gaussian_noise(const ScalarVolume& v, double std_dev, std::mt19937_64& rng) {
  if (std_dev <= 0.0) return v;  // normal_distribution requires a positive sigma
  std::normal_distribution<double> noise(0.0, std_dev);
  std::vector<float> out(v.values().begin(), v.values().end());
  for (auto& x : out) x = static_cast<float>(x + noise(rng));
  return ScalarVolume(v.geometry(), std::move(out));
}

ScalarVolume degrade_axis_resolution(const ScalarVolume& v, int axis, double factor) {
  if (axis < 0 || axis > 2) throw config_error("augment: anisotropy axis must be 0, 1, or 2");
  if (factor < 1.0) throw config_error("augment: anisotropy factor must be >= 1");
  Dims3 down = v.geometry().dims;
  down[axis] = std::max(1, static_cast<int>(std::llround(down[axis] / factor)));
  ScalarVolume back = resample_trilinear(resample_trilinear(v, down), v.geometry().dims);
  // the down/up spacing round trip can wobble in the last ulp; the grid is
  // unchanged, so pin the original geometry back on
  std::vector<float> data(back.values().begin(), back.values().end());
  return ScalarVolume(v.geometry(), std::move(data));
}

ScalarVolume gaussian_blur(const ScalarVolume& v, double sigma_mm) {
  if (sigma_mm < 0.0) throw config_error("augment: blur sigma must be >= 0");
  if (sigma_mm == 0.0) return v;
  const Geometry& g = v.geometry();
  std::vector<double> buf(v.values().begin(), v.values().end());
  std::vector<double> next(buf.size());

  for (int axis = 0; axis < 3; ++axis) {
    const double sigma_vox = sigma_mm / g.spacing[axis];
    const int radius = static_cast<int>(std::ceil(3.0 * sigma_vox));
    if (radius == 0) continue;
    std::vector<double> kernel(2 * radius + 1);
    double norm = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      kernel[k + radius] = std::exp(-0.5 * (k / sigma_vox) * (k / sigma_vox));
      norm += kernel[k + radius];
    }
    for (double& w : kernel) w /= norm;

    const int n = g.dims[axis];
    for (int z = 0; z < g.dims[2]; ++z) {
      for (int y = 0; y < g.dims[1]; ++y) {
        for (int x = 0; x < g.dims[0]; ++x) {
          int c[3] = {x, y, z};
          double acc = 0.0;
          for (int k = -radius; k <= radius; ++k) {
            int s[3] = {x, y, z};
            s[axis] = std::clamp(c[axis] + k, 0, n - 1);
            acc += kernel[k + radius] * buf[g.index(s[0], s[1], s[2])];
          }
          next[g.index(x, y, z)] = acc;
        }
      }
    }
    std::swap(buf, next);
  }

  std::vector<float> out(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = static_cast<float>(buf[i]);
  return ScalarVolume(g, std::move(out));
}

ScalarVolume gamma_adjust(const ScalarVolume& v, double log_gamma) {
  if (log_gamma == 0.0) return v;
  const auto src = v.values();
  const auto [lo_it, hi_it] = std::minmax_element(src.begin(), src.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return v;  // constant volume has no contrast to bend
  const double gamma = std::exp(log_gamma);
  const double range = hi - lo;
  std::vector<float> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    out[i] = static_cast<float>(lo + range * std::pow((src[i] - lo) / range, gamma));
  return ScalarVolume(v.geometry(), std::move(out));
}

DisplacementField random_displacement(const Geometry& g, int grid, double max_disp_mm,
                                      std::mt19937_64& rng) {
  if (grid < 2) throw config_error("augment: elastic_grid must be >= 2");
  if (max_disp_mm < 0.0) throw config_error("augment: elastic_max_disp_mm must be >= 0");
  g.validate();

  std::normal_distribution<double> unit(0.0, 1.0);
  const std::size_t nodes =
      static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid) * grid;
  std::vector<Vec3> control(nodes);
  double max_norm = 0.0;
  for (auto& c : control) {
    for (double& comp : c) comp = unit(rng);
    max_norm = std::max(max_norm,
                        std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]));
  }
  const double scale = max_norm > 0.0 ? max_disp_mm / max_norm : 0.0;
  for (auto& c : control)
    for (double& comp : c) comp *= scale;

  const auto node = [&](int i, int j, int k) -> const Vec3& {
    return control[static_cast<std::size_t>((k * grid + j) * grid + i)];
  };

  DisplacementField field;
  field.geometry = g;
  field.mm.resize(static_cast<std::size_t>(g.voxel_count()));
  std::size_t o = 0;
  for (int z = 0; z < g.dims[2]; ++z) {
    const double cz = g.dims[2] > 1
                          ? z * static_cast<double>(grid - 1) / (g.dims[2] - 1)
                          : 0.0;
    const int z0 = std::min(static_cast<int>(cz), grid - 2);
    const double fz = cz - z0;
    for (int y = 0; y < g.dims[1]; ++y) {
      const double cy = g.dims[1] > 1
                            ? y * static_cast<double>(grid - 1) / (g.dims[1] - 1)
                            : 0.0;
      const int y0 = std::min(static_cast<int>(cy), grid - 2);
      const double fy = cy - y0;
      for (int x = 0; x < g.dims[0]; ++x, ++o) {
        const double cx = g.dims[0] > 1
                              ? x * static_cast<double>(grid - 1) / (g.dims[0] - 1)
                              : 0.0;
        const int x0 = std::min(static_cast<int>(cx), grid - 2);
        const double fx = cx - x0;
        for (int comp = 0; comp < 3; ++comp) {
          const double c00 = (1.0 - fx) * node(x0, y0, z0)[comp] + fx * node(x0 + 1, y0, z0)[comp];
          const double c10 = (1.0 - fx) * node(x0, y0 + 1, z0)[comp] + fx * node(x0 + 1, y0 + 1, z0)[comp];
          const double c01 = (1.0 - fx) * node(x0, y0, z0 + 1)[comp] + fx * node(x0 + 1, y0, z0 + 1)[comp];
          const double c11 = (1.0 - fx) * node(x0, y0 + 1, z0 + 1)[comp] + fx * node(x0 + 1, y0 + 1, z0 + 1)[comp];
          const double c0 = (1.0 - fy) * c00 + fy * c10;
          const double c1 = (1.0 - fy) * c01 + fy * c11;
          field.mm[o][comp] = (1.0 - fz) * c0 + fz * c1;
        }
      }
    }
  }
  return field;
}

ScalarVolume warp_trilinear(const ScalarVolume& v, const DisplacementField& d) {
  require_compatible(v.geometry(), d.geometry, "elastic warp");
  const Geometry& g = v.geometry();
  std::vector<float> out(v.size());
  std::size_t o = 0;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x, ++o) {
        const Vec3& disp = d.mm[o];
        out[o] = static_cast<float>(sample_trilinear(v, x - disp[0] / g.spacing[0],
                                                     y - disp[1] / g.spacing[1],
                                                     z - disp[2] / g.spacing[2]));
      }
  return ScalarVolume(g, std::move(out));
}

BinaryMask warp_nearest(const BinaryMask& m, const DisplacementField& d) {
  require_compatible(m.geometry(), d.geometry, "elastic warp");
  const Geometry& g = m.geometry();
  std::vector<std::uint8_t> out(m.size());
  std::size_t o = 0;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x, ++o) {
        const Vec3& disp = d.mm[o];
        const double sx =
            std::clamp(x - disp[0] / g.spacing[0], 0.0, static_cast<double>(g.dims[0] - 1));
        const double sy =
            std::clamp(y - disp[1] / g.spacing[1], 0.0, static_cast<double>(g.dims[1] - 1));
        const double sz =
            std::clamp(z - disp[2] / g.spacing[2], 0.0, static_cast<double>(g.dims[2] - 1));
        out[o] = m.at(static_cast<int>(std::llround(sx)), static_cast<int>(std::llround(sy)),
                      static_cast<int>(std::llround(sz)));
      }
  return BinaryMask(g, std::move(out));
}

AugmentResult augment_case(const MultiChannelVolume& image, const BinaryMask& label,
                           const AugmentConfig& cfg) {
  cfg.validate();
  require_compatible(image.geometry(), label.geometry(), "augment");
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution gate(cfg.gate_prob);

  std::vector<ScalarVolume> chans = image.channels();
  BinaryMask out_label = label;
  AppliedLog log;
  log.seed = cfg.seed;

  if ((log.noise_applied = gate(rng))) {
    log.noise_std = cfg.noise_std;
    for (auto& ch : chans) ch = add_gaussian_noise(ch, cfg.noise_std, rng);
  }
  if ((log.aniso_applied = gate(rng))) {
    log.aniso_axis = std::uniform_int_distribution<int>(0, 2)(rng);
    log.aniso_factor = std::uniform_real_distribution<double>(cfg.aniso_factor_min,
                                                              cfg.aniso_factor_max)(rng);
    for (auto& ch : chans) ch = degrade_axis_resolution(ch, log.aniso_axis, log.aniso_factor);
  }
  if ((log.blur_applied = gate(rng))) {
    log.blur_sigma_mm = std::uniform_real_distribution<double>(cfg.blur_sigma_min_mm,
                                                               cfg.blur_sigma_max_mm)(rng);
    for (auto& ch : chans) ch = gaussian_blur(ch, log.blur_sigma_mm);
  }
  if ((log.gamma_applied = gate(rng))) {
    log.log_gamma =
        std::uniform_real_distribution<double>(cfg.log_gamma_min, cfg.log_gamma_max)(rng);
    for (auto& ch : chans) ch = gamma_adjust(ch, log.log_gamma);
  }
  if ((log.elastic_applied = gate(rng))) {
    log.elastic_max_disp_mm = cfg.elastic_max_disp_mm;
    const DisplacementField field =
        random_displacement(image.geometry(), cfg.elastic_grid, cfg.elastic_max_disp_mm, rng);
    for (auto& ch : chans) ch = warp_trilinear(ch, field);
    out_label = warp_nearest(out_label, field);
  }

  return AugmentResult{MultiChannelVolume(std::move(chans), image.names()),
                       std::move(out_label), log};
}

}  // namespace hieseg
