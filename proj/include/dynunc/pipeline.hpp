#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dynunc/io.hpp"

namespace dynunc::pipeline {

struct PipelineResult {
  std::string kind;
  std::map<std::string, double> metrics;  ///< everything numeric in report.txt
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;
};

/// Runs one of the example workflows described by an INI config:
/// demo_ringing, shock, compensate, hydrophone, ibp. Each reads its inputs
/// from CSV paths in [input], or synthesizes a seeded fixture from [synth]
/// when [input] is absent. Outputs (estimate.csv, spectrum.csv, filter.json,
/// report.txt, ...) land in `outdir`; runs are byte-identical for a fixed
/// seed.
PipelineResult run_pipeline(const io::Config& cfg,
                            const std::filesystem::path& outdir_override = {},
                            std::uint64_t seed_override = 0);

}  // namespace dynunc::pipeline
