#pragma once

#include <string>

#include "realogic/learn.hpp"

namespace realogic {

// Parameter snapshot: a raw little-endian float64 blob plus a JSON manifest
// recording name, shape, and element offset for every parameter in
// registration order. Loading validates names and shapes against the store.
// Errors: IoError, ConfigError (manifest mismatch), DataError (blob size).
void save_parameters(const ParamStore& params, const std::string& bin_path,
                     const std::string& manifest_path);
void load_parameters(ParamStore& params, const std::string& bin_path,
                     const std::string& manifest_path);

// Metrics table: header "epoch,mean_loss,sat_agg,<formula names...>", one row
// per epoch, 9 significant digits.
std::string metrics_csv_string(const TrainLog& log);
void write_metrics_csv(const TrainLog& log, const std::string& path);  // IoError

}  // namespace realogic
