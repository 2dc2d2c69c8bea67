// raekit command line: reproducible experiment pipeline plus the streaming
// mediator service.
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "raekit/experiment.hpp"
#include "raekit/mediator.hpp"

namespace {

using raekit::experiment::ExperimentConfig;

ExperimentConfig load_config(const std::string& config_path, const std::string& out_override) {
  ExperimentConfig config = ExperimentConfig::load(config_path);
  if (!out_override.empty()) config.out = out_override;
  return config;
}

std::pair<std::string, std::uint16_t> parse_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    throw raekit::ConfigError("--listen expects host:port, got " + listen);
  }
  const std::string host = listen.substr(0, colon);
  const std::string port_text = listen.substr(colon + 1);
  int port = 0;
  try {
    port = std::stoi(port_text);
  } catch (const std::exception&) {
    throw raekit::ConfigError("bad port in --listen: " + port_text);
  }
  if (port < 0 || port > 65535) {
    throw raekit::ConfigError("port out of range: " + port_text);
  }
  return {host, static_cast<std::uint16_t>(port)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replacement-autoencoder toolkit for privacy-preserving sensor streams"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  const auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", out_override, "override the output directory");
  };

  auto* gen_data = app.add_subcommand("gen-data", "write the synthetic dataset CSV(s)");
  add_config(gen_data);
  auto* prepare = app.add_subcommand(
      "prepare", "clean, window, split and normalize into train/test archives");
  add_config(prepare);
  auto* train_rae =
      app.add_subcommand("train-rae", "train the replacement autoencoder");
  add_config(train_rae);

  auto* transform = app.add_subcommand("transform", "run a window archive through the model");
  add_config(transform);
  std::string transform_in, transform_out;
  transform->add_option("--in", transform_in, "input window archive")->required();
  transform->add_option("--out-archive", transform_out, "output window archive")->required();

  auto* train_classifier =
      app.add_subcommand("train-classifier", "train the third-party stand-in classifier");
  add_config(train_classifier);
  auto* evaluate = app.add_subcommand(
      "evaluate", "report per-list F1 and confusion matrices, original vs transformed");
  add_config(evaluate);
  auto* attack = app.add_subcommand(
      "attack", "GAN detectability study, same-user and optionally cross-user");
  add_config(attack);

  auto* serve = app.add_subcommand("serve", "stream windows through a trained model");
  std::string model_path;
  std::string listen = "127.0.0.1:7788";
  serve->add_option("--model", model_path, "trained RAE model file")->required();
  serve->add_option("--listen", listen, "host:port to listen on");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    using namespace raekit::experiment;
    if (gen_data->parsed()) {
      cmd_gen_data(load_config(config_path, out_override));
    } else if (prepare->parsed()) {
      cmd_prepare(load_config(config_path, out_override));
    } else if (train_rae->parsed()) {
      cmd_train_rae(load_config(config_path, out_override));
    } else if (transform->parsed()) {
      cmd_transform(load_config(config_path, out_override), transform_in, transform_out);
    } else if (train_classifier->parsed()) {
      cmd_train_classifier(load_config(config_path, out_override));
    } else if (evaluate->parsed()) {
      const auto report = cmd_evaluate(load_config(config_path, out_override));
      std::cout << raekit::eval::render_report_text(report);
    } else if (attack->parsed()) {
      cmd_attack(load_config(config_path, out_override));
    } else if (serve->parsed()) {
      const auto [host, port] = parse_listen(listen);
      raekit::rae::TrainedRae model = raekit::rae::load_model(model_path);
      std::cout << "serving model " << model_path << " on " << host << ":" << port
                << " (k=" << model.topology.channels
                << ", d=" << model.topology.window_len << ")\n";
      raekit::mediator::serve(std::move(model), host, port);
    }
  } catch (const raekit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
