#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>

#include "cli.hpp"
#include "demix/conclab.hpp"
#include "demix/demo.hpp"
#include "demix/ensemble.hpp"
#include "demix/errors.hpp"
#include "demix/image.hpp"
#include "demix/io.hpp"
#include "demix/plot.hpp"
#include "demix/solver.hpp"

namespace fs = std::filesystem;

namespace demix::cli {

namespace {

fs::path sibling(const fs::path& file, const std::string& name) {
  return file.has_parent_path() ? file.parent_path() / name : fs::path(name);
}

void write_trace_plot(const fs::path& path, const std::vector<TracePoint>& trace) {
  Series s;
  for (const auto& p : trace) {
    s.x.push_back(static_cast<double>(p.iteration));
    s.y.push_back(p.loss);
  }
  write_line_plot(path, {s}, PlotOptions{800, 600, true});
}

nlohmann::json seed_json(RngSeed s) { return {{"seed", s.seed}, {"stream", s.stream}}; }

}  // namespace

// ---------------------------------------------------------------------------

void add_generate(CLI::App& app, Manifest& manifest, int& code) {
  struct Opts {
    std::size_t m = 100, n = 100, k = 8, k_prime = 8, hidden = 32;
    std::string ensemble = "gaussian";
    std::uint64_t seed = 1, matrix_seed = 1;
    double noise = 0.0;
    std::string out_dir = ".";
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("generate", "Write a synthetic instance: generators, mixture and ground truth");
  sub->add_option("--m", o->m, "mixture length")->check(CLI::PositiveNumber);
  sub->add_option("--n", o->n, "length of x")->check(CLI::PositiveNumber);
  sub->add_option("--k", o->k, "latent dim of g")->check(CLI::PositiveNumber);
  sub->add_option("--k-prime", o->k_prime, "latent dim of h")->check(CLI::PositiveNumber);
  sub->add_option("--hidden", o->hidden, "hidden width of both generators")->check(CLI::PositiveNumber);
  sub->add_option("--ensemble", o->ensemble, "gaussian | rademacher | uniform-scaled");
  sub->add_option("--seed", o->seed, "generator, latent and noise seed");
  sub->add_option("--matrix-seed", o->matrix_seed, "seed of the mixing matrix");
  sub->add_option("--noise", o->noise, "noise norm")->check(CLI::NonNegativeNumber);
  sub->add_option("--out-dir", o->out_dir, "output directory");
  sub->callback([o, &manifest, &code] {
    const fs::path dir(o->out_dir);
    fs::create_directories(dir);
    const EnsembleSpec spec = EnsembleSpec::parse(o->ensemble);
    const RngSeed gs{o->seed, 0}, hs{o->seed, 1}, ts{o->seed, 2}, ns{o->seed, 3}, ms{o->matrix_seed, 0};
    const GeneratorNet g = random_two_layer_relu(o->k, o->hidden, o->n, gs);
    const GeneratorNet h = random_two_layer_relu(o->k_prime, o->hidden, o->m, hs);
    RngStream truth_rng(ts);
    Vector u(o->k), v(o->k_prime);
    for (double& x : u) x = truth_rng.normal();
    for (double& x : v) x = truth_rng.normal();
    Vector eta(o->m, 0.0);
    if (o->noise > 0.0) {
      RngStream noise_rng(ns);
      for (double& x : eta) x = noise_rng.normal();
      const double ne = norm2(eta);
      for (double& x : eta) x *= o->noise / ne;
    }
    const DemixProblem p =
        DemixProblem::planted(MixingOperator(sample_matrix(spec, o->m, o->n, ms)), g, h, u, v, eta);

    save_weights(g, dir / "g.json");
    save_weights(h, dir / "h.json");
    write_json_atomic(dir / "mixture.json", vector_to_json(p.b()));
    write_json_atomic(dir / "truth.json", {{"u", vector_to_json(u)},
                                           {"v", vector_to_json(v)},
                                           {"x", vector_to_json(p.truth()->x)},
                                           {"y", vector_to_json(p.truth()->y)},
                                           {"noise", vector_to_json(eta)}});
    manifest.command = "generate";
    manifest.config = {{"m", o->m},           {"n", o->n},          {"k", o->k},
                       {"k_prime", o->k_prime}, {"hidden", o->hidden}, {"ensemble", spec.name()},
                       {"noise", o->noise}};
    manifest.seeds = {gs, hs, ts, ns, ms};
    for (const char* f : {"g.json", "h.json", "mixture.json", "truth.json"}) {
      manifest.artifacts.push_back((dir / f).string());
    }
    manifest.write(dir / "manifest.json");
    code = kOk;
  });
}

// ---------------------------------------------------------------------------

void add_demix(CLI::App& app, Manifest& manifest, int& code) {
  struct Opts {
    std::string mixture, gen_g, gen_h, ensemble = "gaussian", init = "random", out;
    std::string init_file, enc_g, enc_h, truth, plot, manifest;
    std::uint64_t matrix_seed = 0, seed = 0;
    std::size_t m = 0, n = 0, iters = 1000, restarts = 0, trace_every = 1;
    double lr = 1e-2, init_noise = 0.1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("demix", "Recover (x, y) from b = A·G(u) + √m·H(v) + η");
  sub->add_option("--mixture", o->mixture, "mixture vector JSON")->required();
  sub->add_option("--gen-g", o->gen_g, "weights of g")->required();
  sub->add_option("--gen-h", o->gen_h, "weights of h")->required();
  sub->add_option("--matrix-seed", o->matrix_seed, "seed of A")->required();
  sub->add_option("--ensemble", o->ensemble, "gaussian | rademacher | uniform-scaled");
  sub->add_option("--m", o->m, "mixture length")->required()->check(CLI::PositiveNumber);
  sub->add_option("--n", o->n, "length of x")->required()->check(CLI::PositiveNumber);
  sub->add_option("--iters", o->iters, "Adam iterations");
  sub->add_option("--lr", o->lr, "Adam learning rate");
  sub->add_option("--init", o->init, "random | encoder | file")
      ->check(CLI::IsMember({"random", "encoder", "file"}));
  sub->add_option("--init-file", o->init_file, "JSON with vectors u and v (for --init file)");
  sub->add_option("--enc-g", o->enc_g, "encoder for g latents (for --init encoder)");
  sub->add_option("--enc-h", o->enc_h, "encoder for h latents (for --init encoder)");
  sub->add_option("--init-noise", o->init_noise, "encoder init perturbation scale");
  sub->add_option("--restarts", o->restarts, "extra random restarts");
  sub->add_option("--seed", o->seed, "solver seed");
  sub->add_option("--trace-every", o->trace_every, "record the loss every this many iterations");
  sub->add_option("--truth", o->truth, "truth.json from generate, for error metrics");
  sub->add_option("--plot", o->plot, "loss-trace PNG");
  sub->add_option("--out", o->out, "result JSON")->required();
  sub->add_option("--manifest", o->manifest, "manifest path (default: manifest.json next to --out)");
  sub->callback([o, &manifest, &code] {
    const EnsembleSpec spec = EnsembleSpec::parse(o->ensemble);
    const Vector b = vector_from_json(read_json(o->mixture), o->mixture);
    if (b.size() != o->m) {
      throw UsageError("--mixture has length " + std::to_string(b.size()) + " but --m is " + std::to_string(o->m));
    }
    GeneratorNet g = load_weights(o->gen_g);
    GeneratorNet h = load_weights(o->gen_h);
    const RngSeed ms{o->matrix_seed, 0};
    MixingOperator op(sample_matrix(spec, o->m, o->n, ms));

    std::optional<GroundTruth> truth;
    if (!o->truth.empty()) {
      const nlohmann::json t = read_json(o->truth);
      truth = GroundTruth{vector_from_json(t.at("u"), "$.u"), vector_from_json(t.at("v"), "$.v"),
                          vector_from_json(t.at("x"), "$.x"), vector_from_json(t.at("y"), "$.y")};
    }
    const DemixProblem problem(b, std::move(op), std::move(g), std::move(h), std::nullopt, truth);

    InitScheme init;
    if (o->init == "file") {
      if (o->init_file.empty()) throw UsageError("--init file requires --init-file");
      const nlohmann::json d = read_json(o->init_file);
      init = InitScheme::provided(vector_from_json(d.at("u"), "$.u"), vector_from_json(d.at("v"), "$.v"));
    } else if (o->init == "encoder") {
      if (o->enc_g.empty() || o->enc_h.empty()) throw UsageError("--init encoder requires --enc-g and --enc-h");
      init = InitScheme::encoder(load_weights(o->enc_g), load_weights(o->enc_h), o->init_noise);
    }
    SolverConfig cfg;
    cfg.learning_rate = o->lr;
    cfg.iterations = o->iters;
    cfg.restarts = o->restarts;
    cfg.seed = {o->seed, 0};
    cfg.record_trace_every = o->trace_every;
    const RecoveryResult r = solve(problem, cfg, init);

    const fs::path out(o->out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    nlohmann::json doc = result_to_json(r);
    doc["config"] = config_to_json(cfg);
    write_json_atomic(out, doc);
    manifest.command = "demix";
    manifest.artifacts.push_back(out.string());
    if (!o->plot.empty()) {
      write_trace_plot(o->plot, r.loss_trace);
      manifest.artifacts.push_back(o->plot);
    }
    manifest.config = {{"mixture", o->mixture},   {"gen_g", o->gen_g},  {"gen_h", o->gen_h},
                       {"ensemble", spec.name()}, {"m", o->m},          {"n", o->n},
                       {"init", o->init},         {"solver", config_to_json(cfg)}};
    manifest.seeds = {ms};
    for (std::size_t j = 0; j <= cfg.restarts; ++j) manifest.seeds.push_back({cfg.seed.seed, cfg.seed.stream + j});
    manifest.write(o->manifest.empty() ? sibling(out, "manifest.json") : fs::path(o->manifest));
    code = kOk;
  });
}

// ---------------------------------------------------------------------------

void add_mnist_demo(CLI::App& app, Manifest& manifest, int& code) {
  struct Opts {
    std::string decoder1, decoder8, image1, image8, encoder1, encoder8, parity1, parity8, out_dir = ".";
    std::uint64_t seed = 0;
    std::size_t iters = 1000, restarts = 0;
    double lr = 1e-2, init_noise = 0.1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("mnist-demo", "Separate a digit 1 from a randomly mixed digit 8");
  sub->add_option("--decoder1", o->decoder1, "decoder for digit 1")->required();
  sub->add_option("--decoder8", o->decoder8, "decoder for digit 8")->required();
  sub->add_option("--image1", o->image1, "28x28 grayscale PNG of a 1")->required();
  sub->add_option("--image8", o->image8, "28x28 grayscale PNG of an 8")->required();
  sub->add_option("--encoder1", o->encoder1, "encoder mean head for digit 1");
  sub->add_option("--encoder8", o->encoder8, "encoder mean head for digit 8");
  sub->add_option("--parity1", o->parity1, "parity fixture for decoder1");
  sub->add_option("--parity8", o->parity8, "parity fixture for decoder8");
  sub->add_option("--seed", o->seed, "seed of Φ and of the solver");
  sub->add_option("--iters", o->iters, "Adam iterations");
  sub->add_option("--lr", o->lr, "Adam learning rate");
  sub->add_option("--restarts", o->restarts, "extra restarts");
  sub->add_option("--init-noise", o->init_noise, "encoder init perturbation scale");
  sub->add_option("--out-dir", o->out_dir, "output directory");
  sub->callback([o, &manifest, &code] {
    constexpr std::size_t side = 28, pixels = side * side;
    const auto load = [&](const std::string& path) {
      GrayImage img = read_gray_png(path);
      if (img.width != side || img.height != side) {
        throw ParseError(path, "expected a 28x28 image, got " + std::to_string(img.width) + "x" +
                                   std::to_string(img.height));
      }
      return img.pixels;
    };
    const Vector x1 = load(o->image1);
    const Vector x8 = load(o->image8);
    const GeneratorNet d1 = load_weights(o->decoder1);
    const GeneratorNet d8 = load_weights(o->decoder8);
    if (d1.output_dim() != pixels || d8.output_dim() != pixels) throw UsageError("decoders must output 784 values");

    nlohmann::json parity = nlohmann::json::object();
    bool parity_ok = true;
    for (const auto& [name, path, net] : {std::tuple{"decoder1", o->parity1, &d1}, {"decoder8", o->parity8, &d8}}) {
      if (path.empty()) continue;
      const ParityReport pr = check_parity(*net, path);
      parity[name] = {{"max_abs_error", pr.max_abs_error}, {"tolerance", pr.tolerance}, {"cases", pr.cases},
                      {"passed", pr.passed()}};
      parity_ok = parity_ok && pr.passed();
    }

    const RngSeed phi_seed{o->seed, 0};
    const DenseMatrix a = sample_matrix(EnsembleSpec::of(EnsembleKind::gaussian), pixels, pixels, phi_seed);
    Vector entries = a.data();
    for (double& v : entries) v /= std::sqrt(static_cast<double>(pixels));
    const DenseMatrix phi(pixels, pixels, std::move(entries));
    const Vector b = clipped_mixture(phi, x8, x1);

    InitScheme init;
    if (!o->encoder1.empty() || !o->encoder8.empty()) {
      if (o->encoder1.empty() || o->encoder8.empty()) throw UsageError("--encoder1 and --encoder8 go together");
      init = InitScheme::encoder(load_weights(o->encoder8), load_weights(o->encoder1), o->init_noise);
    }
    SolverConfig cfg;
    cfg.learning_rate = o->lr;
    cfg.iterations = o->iters;
    cfg.restarts = o->restarts;
    cfg.seed = {o->seed, 1};
    cfg.record_trace_every = 10;
    const ImageDemixResult r = demix_images(b, phi, d8, d1, cfg, init, x8, x1);

    const fs::path dir(o->out_dir);
    fs::create_directories(dir);
    write_gray_png(dir / "x1_hat.png", {side, side, r.x1_hat});
    write_gray_png(dir / "x8_hat.png", {side, side, r.x8_hat});
    write_gray_png(dir / "b.png", {side, side, b});
    write_gray_png(dir / "b_hat.png", {side, side, r.mixture_hat});
    nlohmann::json metrics = {{"mse_mixture", r.mse_mixture},
                              {"mse_x1", r.mse_x1},
                              {"mse_x8", r.mse_x8},
                              {"final_loss", r.recovery.final_loss},
                              {"initial_loss", r.recovery.initial_loss},
                              {"solver_seed", seed_json(r.recovery.seed)}};
    if (!parity.empty()) metrics["parity"] = parity;
    write_json_atomic(dir / "metrics.json", metrics);

    manifest.command = "mnist-demo";
    manifest.config = {{"decoder1", o->decoder1}, {"decoder8", o->decoder8}, {"image1", o->image1},
                       {"image8", o->image8},     {"encoder1", o->encoder1}, {"encoder8", o->encoder8},
                       {"init_noise", o->init_noise}, {"solver", config_to_json(cfg)}};
    manifest.seeds = {phi_seed};
    for (std::size_t j = 0; j <= cfg.restarts; ++j) manifest.seeds.push_back({cfg.seed.seed, cfg.seed.stream + j});
    for (const char* f : {"x1_hat.png", "x8_hat.png", "b.png", "b_hat.png", "metrics.json"}) {
      manifest.artifacts.push_back((dir / f).string());
    }
    manifest.write(dir / "manifest.json");
    code = parity_ok ? kOk : kAssertionFailed;
  });
}

// ---------------------------------------------------------------------------

void add_render(CLI::App& app, Manifest& manifest, int& code) {
  struct Opts {
    std::string input, out;
    bool log_y = true;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("render", "Plot a demix result (loss trace) or a phase report (error vs m)");
  sub->add_option("--input", o->input, "result or phase report JSON")->required();
  sub->add_option("--out", o->out, "PNG path")->required();
  sub->add_flag("--log-y,!--linear-y", o->log_y, "logarithmic y axis (default)");
  sub->callback([o, &manifest, &code] {
    const nlohmann::json doc = read_json(o->input);
    std::vector<Series> series;
    if (doc.contains("loss_trace")) {
      Series s;
      for (const auto& p : doc["loss_trace"]) {
        s.x.push_back(p.at(0).get<double>());
        s.y.push_back(p.at(1).get<double>());
      }
      series.push_back(std::move(s));
    } else if (doc.contains("rows")) {
      std::vector<double> levels;
      for (const auto& r : doc["rows"]) {
        const double nz = r.at("noise").get<double>();
        if (std::find(levels.begin(), levels.end(), nz) == levels.end()) levels.push_back(nz);
      }
      for (std::size_t i = 0; i < levels.size(); ++i) {
        Series s;
        s.color = palette(i);
        for (const auto& r : doc["rows"]) {
          if (r.at("noise").get<double>() != levels[i]) continue;
          s.x.push_back(r.at("m").get<double>());
          s.y.push_back(r.at("median_relative_error").get<double>());
        }
        series.push_back(std::move(s));
      }
    } else {
      throw ParseError(o->input, "expected a demix result (loss_trace) or a phase report (rows)");
    }
    write_line_plot(o->out, series, PlotOptions{800, 600, o->log_y});
    manifest.command = "render";
    manifest.config = {{"input", o->input}, {"log_y", o->log_y}};
    manifest.artifacts.push_back(o->out);
    manifest.write(sibling(fs::path(o->out), "manifest.json"));
    code = kOk;
  });
}

}  // namespace demix::cli
