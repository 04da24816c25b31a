#include <exception>
#include <iostream>

#include "cli.hpp"
#include "demix/errors.hpp"
#include "demix/io.hpp"

namespace demix::cli {

nlohmann::json Manifest::to_json() const {
  nlohmann::json seeds_json = nlohmann::json::array();
  for (const auto& s : seeds) seeds_json.push_back({{"seed", s.seed}, {"stream", s.stream}});
  return {{"command", command},   {"argv", argv},           {"config", config},
          {"seeds", seeds_json},  {"artifacts", artifacts}, {"tool_version", kVersion}};
}

void Manifest::write(const std::filesystem::path& path) const { write_json_atomic(path, to_json()); }

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  write_text_atomic(path, out);
}

namespace {

void add_replay(CLI::App& app, int& code) {
  auto* sub = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  auto path = std::make_shared<std::string>();
  sub->add_option("--manifest", *path, "manifest.json written by an earlier run")->required();
  sub->callback([path, &code] {
    const nlohmann::json doc = read_json(*path);
    if (!doc.contains("argv") || !doc["argv"].is_array()) throw ParseError(*path, "manifest has no argv");
    const auto argv = doc["argv"].get<std::vector<std::string>>();
    if (argv.size() > 1 && argv[1] == "replay") throw UsageError("manifest records a replay");
    code = run(argv);
  });
}

}  // namespace

int run(const std::vector<std::string>& argv) {
  CLI::App app{"Demixing signals from random mixtures with generative priors", "demix"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Manifest manifest;
  manifest.argv = argv;
  int code = kOk;
  add_generate(app, manifest, code);
  add_demix(app, manifest, code);
  add_mnist_demo(app, manifest, code);
  add_render(app, manifest, code);
  add_verify(app, manifest, code);
  add_phase(app, manifest, code);
  add_replay(app, code);

  std::vector<std::string> args(argv.begin() + 1, argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  return code;
}

}  // namespace demix::cli

int main(int argc, char** argv) { return demix::cli::run(std::vector<std::string>(argv, argv + argc)); }
