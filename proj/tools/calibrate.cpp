// One-shot calibration runner: measures the empirical constant pack on the
// training sweep and writes it as JSON. The checked-in pack under data/ was
// produced by this tool; re-running with the same flags reproduces it
// byte for byte.

#include <cstdint>
#include <iostream>

#include <CLI11.hpp>

#include "quadchaos/io.hpp"
#include "quadchaos/montecarlo.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Calibrate the empirical constant pack"};
  std::string output = "calibration.json";
  std::uint64_t seed = 1;
  std::uint64_t samples = 100000;
  int threads = 0;
  app.add_option("--output", output, "Pack JSON path");
  app.add_option("--seed", seed, "Base RNG seed");
  app.add_option("--samples", samples, "Samples per instance");
  app.add_option("--threads", threads, "Worker threads (0 = auto)");
  CLI11_PARSE(app, argc, argv);

  try {
    quadchaos::CalibrationConfig cfg;
    cfg.sweep.seed = seed;
    cfg.sweep.samples = samples;
    cfg.sweep.threads = threads;
    const auto pack = quadchaos::calibrate_constants(cfg);
    quadchaos::write_json_file(output, quadchaos::pack_to_json(pack));
    std::cerr << "pack written to " << output << '\n';
  } catch (const std::exception& e) {
    quadchaos::json err;
    err["error"] = e.what();
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}
