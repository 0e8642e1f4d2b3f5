#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "robcal/kinematics.hpp"
#include "robcal/noise.hpp"
#include "robcal/regressor.hpp"

namespace robcal::io {

/// Compliance layout declared in a model file. Levels come from the data.
struct ComplianceLayout {
  std::optional<int> bucketed_joint = 1;   // 0-based
  std::optional<std::vector<int>> tail_joints;  // default: every joint after the bucketed one

  ComplianceParameterMap resolve(std::span<const JointVector> configs, int n_joints) const;
};

struct ModelFile {
  ManipulatorModel model;
  ComplianceLayout compliance;
};

// Model text: one record per line, `keyword key=value ...`, '#' comments.
//   base   x= y= z= rx= ry= rz=       (m, deg; R = Rz Ry Rx)
//   joint  type=revolute|prismatic a= alpha= d= theta=   (m, deg)
//   tool   x= y= z= rx= ry= rz=
//   marker x= y= z=                   (m, flange frame)
//   compliance bucketed=2 tail=3,4,5,6   (1-based joints; bucketed=none disables)
ModelFile parse_model(std::istream& in, const std::string& source = "<model>");
ModelFile read_model(const std::filesystem::path& path);
std::string format_model(const ModelFile& file);

/// Tab-separated with one header line; positions in um, angles in deg,
/// marker and repetition numbers 1-based.
std::vector<ExperimentRecord> parse_measurements(std::istream& in,
                                                 const std::string& source = "<measurements>");
std::vector<ExperimentRecord> read_measurements(const std::filesystem::path& path);
std::string format_measurements(const std::vector<ExperimentRecord>& records);

/// config, sigma_x, sigma_y, sigma_z [, std_x, std_y, std_z] in um.
NoiseModel parse_noise(std::istream& in, const std::string& source = "<noise>");
NoiseModel read_noise(const std::filesystem::path& path);
std::string format_noise(const NoiseModel& noise);

struct ConfigurationSet {
  std::vector<int> ids;
  std::vector<JointVector> q;  // rad
};
/// config, q1..qN in deg.
ConfigurationSet parse_configurations(std::istream& in,
                                      const std::string& source = "<configurations>");
ConfigurationSet read_configurations(const std::filesystem::path& path);
std::string format_configurations(const ConfigurationSet& set);

std::string read_text(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace robcal::io
