#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "demix/demo.hpp"
#include "demix/ensemble.hpp"
#include "demix/gennet.hpp"
#include "demix/image.hpp"
#include "demix/io.hpp"
#include "support.hpp"

using namespace demix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string err;
};

fs::path workdir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "demix_cli_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli(const fs::path& dir, const std::string& args) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(DEMIX_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.err = slurp(err);
  return o;
}

void write_config(const fs::path& p, const nlohmann::json& doc) { write_json_atomic(p, doc); }

/// 28x28 image with values k/255 so a PNG round trip is exact.
Vector quantized_image(std::uint64_t seed) {
  testing::Draw d(seed);
  Vector px(784);
  for (double& x : px) x = std::floor(d.uniform(0.0, 256.0)) / 255.0;
  for (double& x : px) x = std::min(x, 1.0);
  return px;
}

}  // namespace

TEST_CASE("generate then demix") {
  const fs::path d = workdir("demix");
  const std::string data = (d / "data").string();
  REQUIRE(cli(d, "generate --m 30 --n 20 --k 3 --k-prime 3 --hidden 16 --seed 5 --matrix-seed 7 --noise 0.01 "
                 "--out-dir " + data).code == 0);
  for (const char* f : {"g.json", "h.json", "mixture.json", "truth.json", "manifest.json"}) {
    CHECK(fs::exists(d / "data" / f));
  }
  const std::string common = "demix --mixture " + data + "/mixture.json --gen-g " + data + "/g.json --gen-h " +
                             data + "/h.json --matrix-seed 7 --m 30 --n 20 --iters 300 --restarts 1";
  const Outcome ok = cli(d, common + " --truth " + data + "/truth.json --plot " + (d / "trace.png").string() +
                                " --out " + (d / "result.json").string());
  CHECK_MESSAGE(ok.code == 0, ok.err);
  const nlohmann::json r = read_json(d / "result.json");
  CHECK(r["final_loss"].get<double>() < r["initial_loss"].get<double>());
  CHECK(r["mse_x"].is_number());
  CHECK(r["loss_trace"].size() == 301);
  CHECK(read_json(d / "manifest.json")["seeds"].size() >= 2);
  CHECK(fs::file_size(d / "trace.png") > 0);

  SUBCASE("render the trace") {
    CHECK(cli(d, "render --input " + (d / "result.json").string() + " --out " + (d / "r.png").string()).code == 0);
    CHECK(fs::exists(d / "r.png"));
  }
  SUBCASE("missing flag is a usage error naming it") {
    const Outcome bad = cli(d, "demix --mixture " + data + "/mixture.json --gen-g " + data +
                                   "/g.json --matrix-seed 7 --m 30 --n 20 --out " + (d / "x.json").string());
    CHECK(bad.code == 2);
    CHECK(bad.err.find("--gen-h") != std::string::npos);
  }
  SUBCASE("malformed weights exit 2") {
    write_text_atomic(d / "bad.json", R"({"format_version": 1, "latent_dim": "three"})");
    const Outcome bad = cli(d, "demix --mixture " + data + "/mixture.json --gen-g " + (d / "bad.json").string() +
                                   " --gen-h " + data + "/h.json --matrix-seed 7 --m 30 --n 20 --out " +
                                   (d / "x.json").string());
    CHECK(bad.code == 2);
    CHECK(bad.err.find("latent_dim") != std::string::npos);
  }
  SUBCASE("wrong m is a dimension error") {
    CHECK(cli(d, "demix --mixture " + data + "/mixture.json --gen-g " + data + "/g.json --gen-h " + data +
                     "/h.json --matrix-seed 7 --m 31 --n 20 --out " + (d / "x.json").string())
              .code == 2);
  }
}

TEST_CASE("verify commands") {
  const fs::path d = workdir("verify");
  SUBCASE("pure-y deviation is identically zero") {
    write_config(d / "dev.json", {{"ensemble", "rademacher"},
                                  {"m", 16},
                                  {"n", 12},
                                  {"trials", 30},
                                  {"gamma_samples", 2000},
                                  {"seed", 3},
                                  {"expect_zero", true},
                                  {"point_set", {{"kind", "pure-y"}, {"count", 10}, {"n", 12}, {"m", 16}, {"seed", 1}}}});
    const Outcome o = cli(d, "verify deviation --config " + (d / "dev.json").string() + " --out-dir " + d.string());
    CHECK_MESSAGE(o.code == 0, o.err);
    const nlohmann::json r = read_json(d / "deviation.json");
    for (const auto& s : r["sup_deviation_samples"]) CHECK(s.get<double>() == 0.0);
    for (const char* f : {"deviation.csv", "deviation.png", "manifest.json"}) CHECK(fs::exists(d / f));
  }
  SUBCASE("under-sampled S-REC fails with exit 4") {
    write_config(d / "srec.json", {{"k", 2},
                                   {"k_prime", 2},
                                   {"n", 20},
                                   {"hidden", 16},
                                   {"eta", 0.5},
                                   {"m", 2},
                                   {"draws", 5},
                                   {"generator_seed", 1},
                                   {"matrix_seed", 2}});
    const Outcome o = cli(d, "verify srec --config " + (d / "srec.json").string() + " --out-dir " + d.string());
    CHECK(o.code == 4);
    CHECK(read_json(d / "srec.json")["passed"] == false);
  }
  SUBCASE("width of an orthonormal pair") {
    write_config(d / "width.json", {{"samples", 100000},
                                    {"seed", 4},
                                    {"expected_width", 1.0 / std::sqrt(M_PI)},
                                    {"point_set", {{"kind", "basis"}, {"dim", 2}}}});
    const Outcome o = cli(d, "verify width --config " + (d / "width.json").string() + " --out-dir " + d.string());
    CHECK_MESSAGE(o.code == 0, o.err);
  }
  SUBCASE("unknown point set kind") {
    write_config(d / "w.json", {{"point_set", {{"kind", "torus"}}}});
    CHECK(cli(d, "verify width --config " + (d / "w.json").string() + " --out-dir " + d.string()).code == 2);
  }
}

TEST_CASE("phase fixture and replay") {
  const fs::path d = workdir("phase");
  const Outcome o =
      cli(d, "phase --config " + testing::fixture("phase_small.json").string() + " --out-dir " + d.string());
  REQUIRE_MESSAGE(o.code == 0, o.err);
  const nlohmann::json r = read_json(d / "phase.json");
  CHECK(r["passed"] == true);
  CHECK(r["rows"].size() == 3);

  const std::string json = slurp(d / "phase.json"), csv = slurp(d / "phase.csv"), png = slurp(d / "phase.png");
  fs::copy_file(d / "manifest.json", d / "recorded.json");
  fs::remove(d / "phase.json");
  fs::remove(d / "phase.csv");
  fs::remove(d / "phase.png");
  CHECK(cli(d, "replay --manifest " + (d / "recorded.json").string()).code == 0);
  CHECK(slurp(d / "phase.json") == json);
  CHECK(slurp(d / "phase.csv") == csv);
  CHECK(slurp(d / "phase.png") == png);
  CHECK(cli(d, "render --input " + (d / "phase.json").string() + " --out " + (d / "curve.png").string()).code == 0);
}

TEST_CASE("mnist-demo") {
  const fs::path d = workdir("mnist");
  const Vector x1 = quantized_image(1), x8 = quantized_image(8);
  write_gray_png(d / "one.png", {28, 28, x1});
  write_gray_png(d / "eight.png", {28, 28, x8});
  const std::string images = " --image1 " + (d / "one.png").string() + " --image8 " + (d / "eight.png").string();

  SUBCASE("constant decoders give the analytic errors") {
    save_weights(GeneratorNet::affine(DenseMatrix(784, 4), Vector(784, 0.6)), d / "dec1.json");
    save_weights(GeneratorNet::affine(DenseMatrix(784, 4), Vector(784, 0.3)), d / "dec8.json");
    const Outcome o = cli(d, "mnist-demo --decoder1 " + (d / "dec1.json").string() + " --decoder8 " +
                                 (d / "dec8.json").string() + images + " --seed 9 --iters 20 --out-dir " +
                                 d.string());
    REQUIRE_MESSAGE(o.code == 0, o.err);
    const nlohmann::json m = read_json(d / "metrics.json");
    double e1 = 0.0, e8 = 0.0, em = 0.0;
    const DenseMatrix a = sample_matrix(EnsembleSpec::of(EnsembleKind::gaussian), 784, 784, {9, 0});
    for (std::size_t i = 0; i < 784; ++i) {
      e1 += (0.6 - x1[i]) * (0.6 - x1[i]) / 784.0;
      e8 += (0.3 - x8[i]) * (0.3 - x8[i]) / 784.0;
      double b = x1[i], bh = 0.6;
      for (std::size_t j = 0; j < 784; ++j) {
        b += a(i, j) * x8[j] / 28.0;
        bh += a(i, j) * 0.3 / 28.0;
      }
      b = std::clamp(b, 0.0, 1.0);
      bh = std::clamp(bh, 0.0, 1.0);
      em += (bh - b) * (bh - b) / 784.0;
    }
    CHECK(m["mse_x1"].get<double>() == doctest::Approx(e1).epsilon(1e-12));
    CHECK(m["mse_x8"].get<double>() == doctest::Approx(e8).epsilon(1e-12));
    CHECK(m["mse_mixture"].get<double>() == doctest::Approx(em).epsilon(1e-9));
    for (const char* f : {"x1_hat.png", "x8_hat.png", "b.png", "b_hat.png", "manifest.json"}) CHECK(fs::exists(d / f));
  }
  SUBCASE("encoder init at the truth recovers both digits") {
    testing::Draw w(3);
    save_weights(GeneratorNet::affine(w.mat(784, 5, 0.01), x1), d / "dec1.json");
    save_weights(GeneratorNet::affine(w.mat(784, 6, 0.01), x8), d / "dec8.json");
    save_weights(GeneratorNet::zero(784, 5), d / "enc1.json");
    save_weights(GeneratorNet::zero(784, 6), d / "enc8.json");
    const Outcome o = cli(d, "mnist-demo --decoder1 " + (d / "dec1.json").string() + " --decoder8 " +
                                 (d / "dec8.json").string() + " --encoder1 " + (d / "enc1.json").string() +
                                 " --encoder8 " + (d / "enc8.json").string() + images +
                                 " --init-noise 0 --seed 2 --iters 50 --out-dir " + d.string());
    REQUIRE_MESSAGE(o.code == 0, o.err);
    const nlohmann::json m = read_json(d / "metrics.json");
    CHECK(m["mse_x1"].get<double>() <= 1e-6);
    CHECK(m["mse_x8"].get<double>() <= 1e-6);
    CHECK(m["mse_mixture"].get<double>() <= 1e-6);
  }
  SUBCASE("parity failure exits 4") {
    save_weights(GeneratorNet::affine(DenseMatrix(784, 6), Vector(784, 0.5)), d / "dec1.json");
    save_weights(GeneratorNet::affine(DenseMatrix(784, 6), Vector(784, 0.5)), d / "dec8.json");
    // Case output is off by 1e-3 in one pixel; the decoder itself is exact elsewhere.
    std::vector<double> expected(784, 0.5);
    expected[17] += 1e-3;
    write_json_atomic(d / "parity1.json",
                      {{"format_version", 1},
                       {"tolerance", 1e-5},
                       {"cases", {{{"latent", std::vector<double>(6, 0.2)}, {"output", expected}}}}});
    write_json_atomic(d / "parity8.json",
                      {{"format_version", 1},
                       {"tolerance", 1e-5},
                       {"cases", {{{"latent", std::vector<double>(6, 0.2)}, {"output", std::vector<double>(784, 0.5)}}}}});
    const std::string dec = "mnist-demo --decoder1 " + (d / "dec1.json").string() + " --decoder8 " +
                            (d / "dec8.json").string() + images + " --iters 5 --out-dir " + d.string();
    CHECK(cli(d, dec + " --parity8 " + (d / "parity8.json").string()).code == 0);
    CHECK(cli(d, dec + " --parity1 " + (d / "parity1.json").string()).code == 4);
    CHECK(read_json(d / "metrics.json")["parity"]["decoder1"]["passed"] == false);
    CHECK(cli(d, dec + " --parity1 " + testing::fixture("parity.json").string()).code == 2);
  }
  SUBCASE("bad images exit 2") {
    save_weights(GeneratorNet::zero(4, 784), d / "dec.json");
    write_gray_png(d / "small.png", {10, 10, Vector(100, 0.5)});
    write_rgb_png(d / "rgb.png", 28, 28, std::vector<std::uint8_t>(28 * 28 * 3, 100));
    const std::string dec = " --decoder1 " + (d / "dec.json").string() + " --decoder8 " + (d / "dec.json").string();
    CHECK(cli(d, "mnist-demo" + dec + " --image1 " + (d / "small.png").string() + " --image8 " +
                     (d / "eight.png").string() + " --out-dir " + d.string())
              .code == 2);
    CHECK(cli(d, "mnist-demo" + dec + " --image1 " + (d / "one.png").string() + " --image8 " +
                     (d / "rgb.png").string() + " --out-dir " + d.string())
              .code == 2);
  }
}
