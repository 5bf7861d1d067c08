#include "realogic/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "realogic/errors.hpp"

namespace realogic {

namespace {

void put_f64_le(std::string& out, double d) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64_le(const std::string& blob, std::size_t byte_offset) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[byte_offset + i]))
            << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) raise(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) raise(ErrorCode::IoError, "write to '" + path + "' failed");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) raise(ErrorCode::IoError, "read from '" + path + "' failed");
  return content;
}

std::string format_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void save_parameters(const ParamStore& params, const std::string& bin_path,
                     const std::string& manifest_path) {
  std::string blob;
  nlohmann::json manifest;
  manifest["dtype"] = "f64";
  manifest["byte_order"] = "little-endian";
  manifest["params"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : params.entries()) {
    nlohmann::json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    entry["offset"] = offset;
    manifest["params"].push_back(std::move(entry));
    for (double v : t.values()) put_f64_le(blob, v);
    offset += t.size();
  }
  manifest["total_size"] = offset;
  write_file(bin_path, blob);
  write_file(manifest_path, manifest.dump(2) + "\n");
}

void load_parameters(ParamStore& params, const std::string& bin_path,
                     const std::string& manifest_path) {
  std::string blob = read_file(bin_path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::ConfigError, "manifest '" + manifest_path + "': " + e.what());
  }

  try {
    if (manifest.at("dtype") != "f64" || manifest.at("byte_order") != "little-endian") {
      raise(ErrorCode::ConfigError, "manifest '" + manifest_path + "' has an unsupported layout");
    }
    const auto& entries = manifest.at("params");
    if (entries.size() != params.count()) {
      raise(ErrorCode::ConfigError,
            "manifest lists " + std::to_string(entries.size()) + " parameters, store has " +
                std::to_string(params.count()));
    }
    for (const auto& entry : entries) {
      std::string name = entry.at("name").get<std::string>();
      Shape shape = entry.at("shape").get<Shape>();
      std::size_t offset = entry.at("offset").get<std::size_t>();
      Tensor* t = params.find(name);
      if (t == nullptr) {
        raise(ErrorCode::ConfigError, "manifest parameter '" + name + "' is not in the store");
      }
      if (t->shape() != shape) {
        raise(ErrorCode::ConfigError, "parameter '" + name + "' has shape " +
                                          shape_to_string(t->shape()) + ", manifest says " +
                                          shape_to_string(shape));
      }
      if ((offset + t->size()) * 8 > blob.size()) {
        raise(ErrorCode::DataError, "parameter blob '" + bin_path + "' is too short for '" +
                                        name + "'");
      }
      std::span<double> x = t->values_mut();
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = get_f64_le(blob, (offset + i) * 8);
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::ConfigError, "manifest '" + manifest_path + "': " + e.what());
  }
}

std::string metrics_csv_string(const TrainLog& log) {
  std::string out = "epoch,mean_loss,sat_agg";
  for (const std::string& name : log.formula_names) out += "," + name;
  out += "\n";
  for (const EpochRecord& rec : log.epochs) {
    out += std::to_string(rec.epoch);
    out += "," + format_sig9(rec.mean_loss);
    out += "," + format_sig9(rec.sat_aggregate);
    for (double s : rec.formula_sat) out += "," + format_sig9(s);
    out += "\n";
  }
  return out;
}

void write_metrics_csv(const TrainLog& log, const std::string& path) {
  write_file(path, metrics_csv_string(log));
}

}  // namespace realogic
