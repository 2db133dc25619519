#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "delaysof/config.hpp"
#include "delaysof/report.hpp"
#include "delaysof/runner.hpp"

using namespace delaysof;

int main(int argc, char** argv) {
  CLI::App app{"Delay-dependent static output feedback design and verification"};
  std::string mode, config_path, out_path, format = "json";
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  app.add_option("mode", mode, "design | analyze | maxdelay-design | maxdelay-analyze | simulate | verify")
      ->required()
      ->check(CLI::IsMember({"design", "analyze", "maxdelay-design", "maxdelay-analyze", "simulate", "verify"}));
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_path, "write the report here instead of stdout");
  app.add_option("--format", format, "report format")->check(CLI::IsMember({"json", "text"}));
  app.add_option("--seed", seed, "base seed for the simulation oracles");
  app.add_flag("--verbose", verbose, "progress on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    RunConfig cfg = load_config(config_path, mode);
    if (seed) cfg.simulation.base_seed = *seed;
    if (!out_path.empty()) cfg.report_path = out_path;

    RunOptions opts;
    if (verbose) opts.log = [](const std::string& line) { std::cerr << "[delaysof] " << line << std::endl; };
    const RunReport report = run(cfg, opts);
    const std::string text = export_report(report, parse_format(format));
    if (cfg.report_path.empty()) {
      std::cout << text;
    } else {
      write_text_file(cfg.report_path, text);
      std::cerr << "status: " << report.status() << " (report written to " << cfg.report_path << ")\n";
    }
    for (const auto& f : report.body["flags"]) std::cerr << "WARNING: " << f.get<std::string>() << "\n";
    return report.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "delaysof: " << e.what() << "\n";
    return kExitUsage;
  }
}
