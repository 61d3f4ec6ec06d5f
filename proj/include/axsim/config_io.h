#ifndef AXSIM_CONFIG_IO_H
#define AXSIM_CONFIG_IO_H

#include "axsim/scenario.h"

#include <string>
#include <vector>

namespace axsim
{

/// What a config file asks for: the scenario plus optional experiment settings.
struct ExperimentSpec
{
    ScenarioConfig cfg;
    std::vector<Scheme> schemes;
    /// Empty means the default ladder for the scenario.
    std::vector<double> perStaRatesBps;
    std::vector<uint64_t> seeds;
};

/**
 * Parses JSON text. Fields absent from the file keep the scenario's defaults.
 * Unknown keys, wrong types and out-of-range values throw InvalidConfigError
 * naming the offending key path.
 */
ExperimentSpec ParseExperimentSpec(const std::string& text);
ExperimentSpec LoadExperimentSpec(const std::string& path);

/// Full config as JSON text; parsing the result gives back the same config.
std::string ConfigToJson(const ScenarioConfig& cfg);

} // namespace axsim

#endif
