#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>

#include "cli.hpp"
#include "demix/conclab.hpp"
#include "demix/errors.hpp"
#include "demix/io.hpp"
#include "demix/plot.hpp"

namespace fs = std::filesystem;

namespace demix::cli {

namespace {

RngSeed seed_of(const nlohmann::json& doc, const char* key, std::uint64_t fallback) {
  if (!doc.contains(key)) return {fallback, 0};
  const auto& s = doc[key];
  if (s.is_number_unsigned()) return {s.get<std::uint64_t>(), 0};
  if (s.is_object()) return {s.at("seed").get<std::uint64_t>(), s.value("stream", std::uint64_t{0})};
  throw ParseError(std::string("$.") + key, "expected an unsigned integer or {seed, stream}");
}

std::vector<std::string> cells(std::initializer_list<double> values) {
  std::vector<std::string> out;
  for (double v : values) out.push_back(format_double(v));
  return out;
}

struct BuiltSet {
  FinitePointSet set;
  std::vector<RngSeed> seeds;
};

/// Point sets described in configs:
///   sphere / ball   {count, dim, radius, seed}
///   pure-y          {count, n, m, radius, seed}: x = 0, y on the sphere
///   basis           {dim, count}: e₁ … e_count
///   points          {points: [[…], …]}
///   image-net       {k, k_prime, n, m, hidden, radius, eta, generator_seed, subsample, subsample_seed}
BuiltSet build_point_set(const nlohmann::json& d) {
  const std::string kind = d.at("kind").get<std::string>();
  if (kind == "sphere" || kind == "ball" || kind == "pure-y") {
    const auto count = d.at("count").get<std::size_t>();
    const double radius = d.value("radius", 1.0);
    const RngSeed s = seed_of(d, "seed", 0);
    RngStream rng(s);
    std::size_t lead = 0, dim = 0;
    if (kind == "pure-y") {
      lead = d.at("n").get<std::size_t>();
      dim = d.at("m").get<std::size_t>();
    } else {
      dim = d.at("dim").get<std::size_t>();
    }
    if (count == 0 || dim == 0) throw ParseError("$.point_set", "count and dimension must be positive");
    std::vector<Vector> pts;
    for (std::size_t i = 0; i < count; ++i) {
      Vector p = kind == "ball" ? sample_ball(dim, radius, rng) : Vector(dim);
      if (kind != "ball") {
        for (double& x : p) x = rng.normal();
        const double np = norm2(p);
        for (double& x : p) x *= radius / np;
      }
      Vector full(lead, 0.0);
      full.insert(full.end(), p.begin(), p.end());
      pts.push_back(std::move(full));
    }
    return {FinitePointSet(std::move(pts)), {s}};
  }
  if (kind == "basis") {
    const auto dim = d.at("dim").get<std::size_t>();
    const auto count = d.value("count", dim);
    if (count == 0 || count > dim) throw ParseError("$.point_set.count", "must lie in [1, dim]");
    std::vector<Vector> pts;
    for (std::size_t i = 0; i < count; ++i) {
      Vector e(dim, 0.0);
      e[i] = 1.0;
      pts.push_back(std::move(e));
    }
    return {FinitePointSet(std::move(pts)), {}};
  }
  if (kind == "points") {
    std::vector<Vector> pts;
    const auto& arr = d.at("points");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      pts.push_back(number_array(arr[i], "$.point_set.points[" + std::to_string(i) + "]"));
    }
    return {FinitePointSet(std::move(pts)), {}};
  }
  if (kind == "image-net") {
    const auto k = d.at("k").get<std::size_t>();
    const auto kp = d.at("k_prime").get<std::size_t>();
    const auto n = d.at("n").get<std::size_t>();
    const auto m = d.at("m").get<std::size_t>();
    const auto hidden = d.value("hidden", std::size_t{32});
    const double radius = d.value("radius", 1.0);
    const double eta = d.at("eta").get<double>();
    const RngSeed gs = seed_of(d, "generator_seed", 0);
    const GeneratorNet g = random_two_layer_relu(k, hidden, n, {gs.seed, gs.stream});
    const GeneratorNet h = random_two_layer_relu(kp, hidden, m, {gs.seed, gs.stream + 1});
    ImageNet img = image_net(build_ball_net(k, radius, eta), build_ball_net(kp, radius, eta), g, h);
    BuiltSet out{std::move(img.set), {gs, {gs.seed, gs.stream + 1}}};
    if (d.contains("subsample")) {
      const RngSeed ss = seed_of(d, "subsample_seed", 0);
      out.set = out.set.subsample(d["subsample"].get<std::size_t>(), ss);
      out.seeds.push_back(ss);
    }
    return out;
  }
  throw ParseError("$.point_set.kind", "unknown point set kind '" + kind + "'");
}

struct Report {
  nlohmann::json json;
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  std::vector<Series> plot;
  bool log_y = false;
  bool passed = true;
  std::vector<RngSeed> seeds;
};

Report verify_deviation(const nlohmann::json& cfg) {
  const EnsembleSpec spec = EnsembleSpec::parse(cfg.value("ensemble", std::string("gaussian")));
  const auto m = cfg.at("m").get<std::size_t>();
  const auto n = cfg.at("n").get<std::size_t>();
  const auto trials = cfg.value("trials", std::size_t{200});
  const double t = cfg.value("t", 1.0);
  const auto gamma_samples = cfg.value("gamma_samples", std::size_t{20000});
  const RngSeed seed = seed_of(cfg, "seed", 0);
  BuiltSet built = build_point_set(cfg.at("point_set"));
  const DeviationReport r = deviation_experiment(spec, built.set, m, n, trials, t, seed, gamma_samples);

  Report out;
  out.json = deviation_report_to_json(r);
  out.json["ensemble"] = spec.name();
  out.json["m"] = m;
  out.json["n"] = n;
  bool ok = std::isfinite(r.empirical_constant) && std::isfinite(r.expectation_constant);
  if (cfg.contains("max_empirical_constant")) {
    ok = ok && r.empirical_constant <= cfg["max_empirical_constant"].get<double>();
  }
  if (cfg.value("expect_zero", false)) {
    ok = ok && std::all_of(r.sup_deviation_samples.begin(), r.sup_deviation_samples.end(),
                           [](double v) { return v == 0.0; });
  }
  out.passed = ok;
  out.json["passed"] = ok;
  out.csv_header = {"trial", "sup_deviation"};
  Series sorted;
  std::vector<double> s = r.sup_deviation_samples;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < r.sup_deviation_samples.size(); ++i) {
    out.csv_rows.push_back({std::to_string(i), format_double(r.sup_deviation_samples[i])});
    sorted.x.push_back(static_cast<double>(i + 1) / static_cast<double>(s.size()));
    sorted.y.push_back(s[i]);
  }
  Series bound{{0.0, 1.0}, {r.bound_value, r.bound_value}, palette(3)};
  out.plot = {sorted, bound};
  out.seeds = built.seeds;
  out.seeds.push_back(derive_seed(seed, 1));
  out.seeds.push_back(derive_seed(seed, 2));
  return out;
}

Report verify_srec(const nlohmann::json& cfg) {
  const auto k = cfg.at("k").get<std::size_t>();
  const auto kp = cfg.at("k_prime").get<std::size_t>();
  const auto n = cfg.at("n").get<std::size_t>();
  const auto hidden = cfg.value("hidden", std::size_t{32});
  const double radius = cfg.value("radius", 1.0);
  const double eta = cfg.at("eta").get<double>();
  const double gamma = cfg.value("gamma", 0.5);
  const double delta = cfg.value("delta", 0.1);
  const auto draws = cfg.value("draws", std::size_t{20});
  const double min_pass = cfg.value("min_pass_fraction", 0.95);
  const EnsembleSpec spec = EnsembleSpec::parse(cfg.value("ensemble", std::string("gaussian")));
  const RngSeed gs = seed_of(cfg, "generator_seed", 0);
  const RngSeed ms = seed_of(cfg, "matrix_seed", 0);

  const EpsilonNet nu = build_ball_net(k, radius, eta);
  const EpsilonNet nv = build_ball_net(kp, radius, eta);
  std::size_t cardinality = nu.points.size() * nv.points.size();
  if (cfg.contains("subsample")) cardinality = std::min(cardinality, cfg["subsample"].get<std::size_t>());
  std::size_t m = 0;
  if (cfg.at("m").is_string()) {
    if (cfg["m"].get<std::string>() != "auto") throw ParseError("$.m", "expected an integer or \"auto\"");
    m = static_cast<std::size_t>(
        std::ceil(8.0 * static_cast<double>(k + kp) * std::log(static_cast<double>(cardinality))));
  } else {
    m = cfg["m"].get<std::size_t>();
  }
  if (m == 0) throw ParseError("$.m", "must be positive");

  const GeneratorNet g = random_two_layer_relu(k, hidden, n, {gs.seed, gs.stream});
  const GeneratorNet h = random_two_layer_relu(kp, hidden, m, {gs.seed, gs.stream + 1});
  ImageNet img = image_net(nu, nv, g, h);
  FinitePointSet set = std::move(img.set);
  Report out;
  out.seeds = {gs, {gs.seed, gs.stream + 1}, ms};
  if (cfg.contains("subsample")) {
    const RngSeed ss = seed_of(cfg, "subsample_seed", 0);
    set = set.subsample(cfg["subsample"].get<std::size_t>(), ss);
    out.seeds.push_back(ss);
  }

  std::size_t passes = 0;
  nlohmann::json per_draw = nlohmann::json::array();
  out.csv_header = {"draw", "min_margin", "holds"};
  Series margins;
  for (std::size_t j = 0; j < draws; ++j) {
    const MixingOperator op(sample_matrix(spec, m, n, {ms.seed, ms.stream + j}));
    const SrecReport r = srec_check(op, set, gamma, delta);
    passes += r.holds() ? 1 : 0;
    per_draw.push_back(srec_report_to_json(r));
    out.csv_rows.push_back({std::to_string(j), format_double(r.min_margin), r.holds() ? "1" : "0"});
    margins.x.push_back(static_cast<double>(j));
    margins.y.push_back(r.min_margin);
  }
  const double fraction = draws ? static_cast<double>(passes) / static_cast<double>(draws) : 1.0;
  out.passed = fraction >= min_pass;
  out.json = {{"m", m},
              {"n", n},
              {"set_size", set.size()},
              {"net_delta", img.delta},
              {"draws", per_draw},
              {"pass_fraction", fraction},
              {"min_pass_fraction", min_pass},
              {"passed", out.passed}};
  const double lo = draws ? -0.5 : 0.0, hi = draws ? static_cast<double>(draws) - 0.5 : 1.0;
  out.plot = {margins, Series{{lo, hi}, {0.0, 0.0}, palette(3)}};
  return out;
}

Report verify_width(const nlohmann::json& cfg) {
  const auto samples = cfg.value("samples", std::size_t{100000});
  const RngSeed seed = seed_of(cfg, "seed", 0);
  BuiltSet built = build_point_set(cfg.at("point_set"));
  const WidthEstimates w = gaussian_width_and_complexity_mc(built.set, samples, seed);
  const double rad = built.set.rad(), min_norm = built.set.min_norm();
  const double lower = (w.width.value + rad) / 3.0;
  const double upper = 2.0 * (w.width.value + min_norm);
  const double slack = 3.0 * (w.width.std_error + w.complexity.std_error);
  const bool sandwich = lower - slack <= w.complexity.value && w.complexity.value <= upper + slack;
  bool ok = sandwich;
  Report out;
  out.json = {{"width", {{"value", w.width.value}, {"stderr", w.width.std_error}}},
              {"complexity", {{"value", w.complexity.value}, {"stderr", w.complexity.std_error}}},
              {"rad", rad},
              {"min_norm", min_norm},
              {"sandwich_lower", lower},
              {"sandwich_upper", upper},
              {"sandwich_slack", slack},
              {"sandwich_holds", sandwich}};
  if (cfg.contains("expected_width")) {
    const double expected = cfg["expected_width"].get<double>();
    const double tol = cfg.value("stderr_tolerance", 3.0);
    const bool close = std::abs(w.width.value - expected) <= tol * w.width.std_error;
    out.json["expected_width"] = expected;
    out.json["expected_width_holds"] = close;
    ok = ok && close;
  }
  out.passed = ok;
  out.json["passed"] = ok;
  out.csv_header = {"width", "width_stderr", "complexity", "complexity_stderr", "rad", "min_norm"};
  out.csv_rows.push_back(
      cells({w.width.value, w.width.std_error, w.complexity.value, w.complexity.std_error, rad, min_norm}));
  out.seeds = built.seeds;
  out.seeds.push_back(seed);
  return out;
}

Report run_phase(const nlohmann::json& cfg) {
  const PhaseConfig pc = phase_config_from_json(cfg);
  const PhaseTable table = phase_experiment(pc);
  Report out;
  out.json = phase_table_to_json(table);
  bool ok = true;
  const nlohmann::json checks = cfg.value("assert", nlohmann::json::object());
  nlohmann::json results = nlohmann::json::object();
  for (double noise : pc.noise_levels) {
    const PhaseRow* first = nullptr;
    const PhaseRow* last = nullptr;
    for (const auto& r : table.rows) {
      if (r.noise != noise) continue;
      if (!first) first = &r;
      last = &r;
    }
    if (checks.contains("max_median_at_largest_m")) {
      const bool c = last->median_relative_error <= checks["max_median_at_largest_m"].get<double>();
      results["median_at_largest_m"].push_back(c);
      ok = ok && c;
    }
    if (checks.contains("max_success_at_smallest_m")) {
      const bool c = first->success_rate <= checks["max_success_at_smallest_m"].get<double>();
      results["success_at_smallest_m"].push_back(c);
      ok = ok && c;
    }
  }
  if (checks.contains("max_p_value")) {
    for (const auto& mc : table.monotone) {
      const bool c = mc.p_value < checks["max_p_value"].get<double>();
      results["sign_test"].push_back(c);
      ok = ok && c;
    }
  }
  out.passed = ok;
  out.json["config"] = phase_config_to_json(pc);
  out.json["assertions"] = results;
  out.json["passed"] = ok;
  out.csv_header = {"m", "noise", "median_relative_error", "median_absolute_error", "success_rate"};
  std::vector<double> levels;
  for (const auto& r : table.rows) {
    out.csv_rows.push_back({std::to_string(r.m), format_double(r.noise), format_double(r.median_relative_error),
                            format_double(r.median_absolute_error), format_double(r.success_rate)});
    auto it = std::find(levels.begin(), levels.end(), r.noise);
    if (it == levels.end()) {
      levels.push_back(r.noise);
      out.plot.push_back(Series{{}, {}, palette(levels.size() - 1)});
      it = levels.end() - 1;
    }
    Series& s = out.plot[static_cast<std::size_t>(it - levels.begin())];
    s.x.push_back(static_cast<double>(r.m));
    s.y.push_back(r.median_relative_error);
  }
  out.log_y = true;
  out.seeds = {{pc.generator_seed, 0}, {pc.truth_seed, 0}, {pc.matrix_seed, 0}, {pc.noise_seed, 0}, pc.solver.seed};
  return out;
}

int emit(const std::string& name, const std::string& config_path, const fs::path& dir, Report report,
         Manifest& manifest, const nlohmann::json& cfg) {
  fs::create_directories(dir);
  const fs::path json = dir / (name + ".json"), csv = dir / (name + ".csv"), png = dir / (name + ".png");
  write_json_atomic(json, report.json);
  write_csv(csv, report.csv_header, report.csv_rows);
  write_line_plot(png, report.plot, PlotOptions{800, 600, report.log_y});
  manifest.config = {{"config_path", config_path}, {"config", cfg}};
  manifest.seeds = report.seeds;
  manifest.artifacts = {json.string(), csv.string(), png.string()};
  manifest.write(dir / "manifest.json");
  if (!report.passed) std::cerr << name << ": assertion failed, see " << json.string() << "\n";
  return report.passed ? kOk : kAssertionFailed;
}

}  // namespace

void add_verify(CLI::App& app, Manifest& manifest, int& code) {
  auto* verify = app.add_subcommand("verify", "Statistical checks: deviation | srec | width");
  verify->require_subcommand(1);
  struct Entry {
    const char* name;
    const char* help;
    Report (*fn)(const nlohmann::json&);
  };
  static constexpr Entry entries[] = {
      {"deviation", "Deviation of ‖Bz‖ from √m‖z‖ over a point set", verify_deviation},
      {"srec", "S-REC margins on generator image nets", verify_srec},
      {"width", "Monte Carlo Gaussian width and complexity", verify_width},
  };
  for (const Entry& e : entries) {
    auto config = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto* sub = verify->add_subcommand(e.name, e.help);
    sub->add_option("--config", *config, "experiment config JSON")->required();
    sub->add_option("--out-dir", *out_dir, "report directory");
    sub->callback([&e, config, out_dir, &manifest, &code] {
      const nlohmann::json cfg = read_json(*config);
      manifest.command = std::string("verify ") + e.name;
      code = emit(e.name, *config, *out_dir, e.fn(cfg), manifest, cfg);
    });
  }
}

void add_phase(CLI::App& app, Manifest& manifest, int& code) {
  auto config = std::make_shared<std::string>();
  auto out_dir = std::make_shared<std::string>(".");
  auto* sub = app.add_subcommand("phase", "Recovery error versus m on random generator instances");
  sub->add_option("--config", *config, "phase config JSON")->required();
  sub->add_option("--out-dir", *out_dir, "report directory");
  sub->callback([config, out_dir, &manifest, &code] {
    const nlohmann::json cfg = read_json(*config);
    manifest.command = "phase";
    code = emit("phase", *config, *out_dir, run_phase(cfg), manifest, cfg);
  });
}

}  // namespace demix::cli
