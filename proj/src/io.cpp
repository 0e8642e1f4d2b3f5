#include "robcal/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <system_error>
#include <unistd.h>

#include "robcal/error.hpp"
#include "robcal/units.hpp"

namespace robcal::io {

namespace {

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  /// Next non-blank, non-comment line split on whitespace.
  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      ++number_;
      if (const auto hash = line_.find('#'); hash != std::string::npos) line_.resize(hash);
      if (!line_.empty() && line_.back() == '\r') line_.pop_back();
      fields.clear();
      std::string_view rest(line_);
      while (!rest.empty()) {
        const auto start = rest.find_first_not_of(" \t");
        if (start == std::string_view::npos) break;
        rest.remove_prefix(start);
        const auto end = rest.find_first_of(" \t");
        fields.push_back(rest.substr(0, end));
        rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
      }
      if (!fields.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::Parse, source_ + ":" + std::to_string(number_) + ": " + what);
  }

  double real(std::string_view s) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      fail("expected a finite number, got '" + std::string(s) + "'");
    }
    return v;
  }

  int integer(std::string_view s) const {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail("expected an integer, got '" + std::string(s) + "'");
    }
    return v;
  }

 private:
  std::istream& in_;
  std::string source_;
  std::string line_;
  int number_ = 0;
};

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

Eigen::Matrix3d rpy_deg(double rx, double ry, double rz) {
  return (Eigen::AngleAxisd(units::deg_to_rad(rz), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(units::deg_to_rad(ry), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(units::deg_to_rad(rx), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

std::map<std::string, std::string_view> key_values(const LineReader& reader,
                                                   const std::vector<std::string_view>& fields,
                                                   std::initializer_list<std::string_view> allowed) {
  std::map<std::string, std::string_view> out;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string_view::npos) reader.fail("expected key=value, got '" + std::string(fields[i]) + "'");
    std::string key(fields[i].substr(0, eq));
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      reader.fail("unknown field '" + key + "' for " + std::string(fields[0]));
    }
    if (!out.emplace(key, fields[i].substr(eq + 1)).second) reader.fail("duplicate field '" + key + "'");
  }
  return out;
}

double get_or(const LineReader& reader, const std::map<std::string, std::string_view>& kv,
              const std::string& key, double fallback = 0.0) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : reader.real(it->second);
}

Eigen::Isometry3d frame(const LineReader& reader, const std::map<std::string, std::string_view>& kv) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = rpy_deg(get_or(reader, kv, "rx"), get_or(reader, kv, "ry"), get_or(reader, kv, "rz"));
  t.translation() = Eigen::Vector3d(get_or(reader, kv, "x"), get_or(reader, kv, "y"),
                                    get_or(reader, kv, "z"));
  return t;
}

std::string format_frame(std::string_view keyword, const Eigen::Isometry3d& t) {
  const Eigen::Vector3d zyx = t.linear().eulerAngles(2, 1, 0);
  return fmt::format("{} x={} y={} z={} rx={} ry={} rz={}\n", keyword, t.translation().x(),
                     t.translation().y(), t.translation().z(), units::rad_to_deg(zyx[2]),
                     units::rad_to_deg(zyx[1]), units::rad_to_deg(zyx[0]));
}

std::vector<int> parse_joint_list(const LineReader& reader, std::string_view s) {
  std::vector<int> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(reader.integer(s.substr(0, comma)) - 1);
    s.remove_prefix(comma == std::string_view::npos ? s.size() : comma + 1);
  }
  return out;
}

}  // namespace

ComplianceParameterMap ComplianceLayout::resolve(std::span<const JointVector> configs,
                                                 int n_joints) const {
  ComplianceParameterMap cmap;
  if (bucketed_joint) {
    cmap = ComplianceParameterMap::from_configurations(configs, *bucketed_joint);
  } else {
    cmap.bucketed_joint.reset();
  }
  if (tail_joints) {
    cmap.tail_joints = *tail_joints;
  } else {
    cmap.tail_joints.clear();
    for (int j = bucketed_joint ? *bucketed_joint + 1 : 0; j < n_joints; ++j) {
      cmap.tail_joints.push_back(j);
    }
  }
  cmap.validate(n_joints);
  return cmap;
}

ModelFile parse_model(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  ModelFile out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (f[0] == "base") {
      out.model.base = frame(reader, key_values(reader, f, {"x", "y", "z", "rx", "ry", "rz"}));
    } else if (f[0] == "tool") {
      out.model.tool = frame(reader, key_values(reader, f, {"x", "y", "z", "rx", "ry", "rz"}));
    } else if (f[0] == "joint") {
      const auto kv = key_values(reader, f, {"type", "a", "alpha", "d", "theta"});
      DhJoint j;
      if (const auto it = kv.find("type"); it != kv.end()) {
        if (it->second == "revolute") {
          j.type = JointType::Revolute;
        } else if (it->second == "prismatic") {
          j.type = JointType::Prismatic;
        } else {
          reader.fail("unknown joint type '" + std::string(it->second) + "'");
        }
      }
      j.a = get_or(reader, kv, "a");
      j.alpha = units::deg_to_rad(get_or(reader, kv, "alpha"));
      j.d = get_or(reader, kv, "d");
      j.theta_offset = units::deg_to_rad(get_or(reader, kv, "theta"));
      out.model.joints.push_back(j);
    } else if (f[0] == "marker") {
      const auto kv = key_values(reader, f, {"x", "y", "z"});
      out.model.markers.emplace_back(get_or(reader, kv, "x"), get_or(reader, kv, "y"),
                                     get_or(reader, kv, "z"));
    } else if (f[0] == "compliance") {
      const auto kv = key_values(reader, f, {"bucketed", "tail"});
      if (const auto it = kv.find("bucketed"); it != kv.end()) {
        if (it->second == "none") {
          out.compliance.bucketed_joint.reset();
        } else {
          out.compliance.bucketed_joint = reader.integer(it->second) - 1;
        }
      }
      if (const auto it = kv.find("tail"); it != kv.end()) {
        out.compliance.tail_joints = parse_joint_list(reader, it->second);
      }
    } else {
      reader.fail("unknown record '" + std::string(f[0]) + "'");
    }
  }
  if (out.model.markers.empty()) out.model.markers.emplace_back(Eigen::Vector3d::Zero());
  try {
    out.model.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, source + ": " + e.what());
  }
  return out;
}

ModelFile read_model(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_model(in, path.string());
}

std::string format_model(const ModelFile& file) {
  std::string out;
  out += format_frame("base", file.model.base);
  for (const auto& j : file.model.joints) {
    out += fmt::format("joint type={} a={} alpha={} d={} theta={}\n",
                       j.type == JointType::Revolute ? "revolute" : "prismatic", j.a,
                       units::rad_to_deg(j.alpha), j.d, units::rad_to_deg(j.theta_offset));
  }
  out += format_frame("tool", file.model.tool);
  for (const auto& m : file.model.markers) {
    out += fmt::format("marker x={} y={} z={}\n", m.x(), m.y(), m.z());
  }
  out += "compliance bucketed=";
  out += file.compliance.bucketed_joint ? std::to_string(*file.compliance.bucketed_joint + 1)
                                        : std::string("none");
  if (file.compliance.tail_joints) {
    out += " tail=";
    for (std::size_t i = 0; i < file.compliance.tail_joints->size(); ++i) {
      out += (i ? "," : "") + std::to_string((*file.compliance.tail_joints)[i] + 1);
    }
  }
  out += "\n";
  return out;
}

std::vector<ExperimentRecord> parse_measurements(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header line");
  // config marker repetition q1..qN fx fy fz load_marker p0x p0y p0z px py pz
  const std::size_t n_fields = f.size();
  if (n_fields < 14 || f[0] != "config" || f[1] != "marker" || f[2] != "repetition") {
    reader.fail("header must start with 'config marker repetition q1'");
  }
  const std::size_t n_joints = n_fields - 13;
  const std::vector<std::string_view> tail = {"fx", "fy", "fz", "load_marker", "p0x", "p0y",
                                              "p0z", "px", "py", "pz"};
  for (std::size_t j = 0; j < n_joints; ++j) {
    if (f[3 + j] != "q" + std::to_string(j + 1)) reader.fail("unexpected header column '" + std::string(f[3 + j]) + "'");
  }
  for (std::size_t k = 0; k < tail.size(); ++k) {
    if (f[3 + n_joints + k] != tail[k]) reader.fail("unexpected header column '" + std::string(f[3 + n_joints + k]) + "'");
  }

  std::vector<ExperimentRecord> out;
  while (reader.next(f)) {
    if (f.size() != n_fields) {
      reader.fail("expected " + std::to_string(n_fields) + " fields, got " + std::to_string(f.size()));
    }
    ExperimentRecord r;
    r.config = reader.integer(f[0]);
    r.marker = reader.integer(f[1]) - 1;
    r.repetition = reader.integer(f[2]) - 1;
    if (r.marker < 0 || r.repetition < 0) reader.fail("marker and repetition are 1-based");
    r.q.resize(static_cast<Eigen::Index>(n_joints));
    for (std::size_t j = 0; j < n_joints; ++j) {
      r.q[static_cast<Eigen::Index>(j)] = units::deg_to_rad(reader.real(f[3 + j]));
    }
    std::size_t c = 3 + n_joints;
    for (int a = 0; a < 3; ++a) r.wrench.force[a] = reader.real(f[c++]);
    r.wrench.application_marker = reader.integer(f[c++]) - 1;
    if (r.wrench.application_marker < 0) reader.fail("load_marker is 1-based");
    for (int a = 0; a < 3; ++a) r.p0[a] = units::um_to_m(reader.real(f[c++]));
    for (int a = 0; a < 3; ++a) r.p[a] = units::um_to_m(reader.real(f[c++]));
    out.push_back(std::move(r));
  }
  if (out.empty()) reader.fail("no measurement rows");
  return out;
}

std::vector<ExperimentRecord> read_measurements(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_measurements(in, path.string());
}

std::string format_measurements(const std::vector<ExperimentRecord>& records) {
  const Eigen::Index n_joints = records.empty() ? 0 : records.front().q.size();
  std::string out = "config\tmarker\trepetition";
  for (Eigen::Index j = 0; j < n_joints; ++j) out += fmt::format("\tq{}", j + 1);
  out += "\tfx\tfy\tfz\tload_marker\tp0x\tp0y\tp0z\tpx\tpy\tpz\n";
  for (const auto& r : records) {
    if (r.q.size() != n_joints) throw Error(ErrorCode::InvalidArgument, "mixed joint counts");
    out += fmt::format("{}\t{}\t{}", r.config, r.marker + 1, r.repetition + 1);
    for (Eigen::Index j = 0; j < n_joints; ++j) out += fmt::format("\t{}", units::rad_to_deg(r.q[j]));
    out += fmt::format("\t{}\t{}\t{}\t{}", r.wrench.force.x(), r.wrench.force.y(),
                       r.wrench.force.z(), r.wrench.application_marker + 1);
    for (const auto* v : {&r.p0, &r.p}) {
      for (int a = 0; a < 3; ++a) out += fmt::format("\t{}", units::m_to_um((*v)[a]));
    }
    out += "\n";
  }
  return out;
}

NoiseModel parse_noise(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header line");
  const bool with_std = f.size() == 7;
  if ((f.size() != 4 && !with_std) || f[0] != "config") {
    reader.fail("header must be 'config sigma_x sigma_y sigma_z [std_x std_y std_z]'");
  }
  NoiseModel out;
  while (reader.next(f)) {
    if (f.size() != (with_std ? 7u : 4u)) reader.fail("wrong number of fields");
    const int config = reader.integer(f[0]);
    Eigen::Vector3d s;
    for (int a = 0; a < 3; ++a) {
      s[a] = units::um_to_m(reader.real(f[1 + a]));
      if (s[a] < 0.0) reader.fail("sigma must be non-negative");
    }
    if (!out.sigma.emplace(config, s).second) {
      reader.fail("duplicate configuration " + std::to_string(config));
    }
    if (with_std) {
      Eigen::Vector3d u;
      for (int a = 0; a < 3; ++a) u[a] = units::um_to_m(reader.real(f[4 + a]));
      out.uncertainty[config] = u;
    }
  }
  return out;
}

NoiseModel read_noise(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_noise(in, path.string());
}

std::string format_noise(const NoiseModel& noise) {
  const bool with_std = !noise.uncertainty.empty();
  std::string out = with_std ? "config\tsigma_x\tsigma_y\tsigma_z\tstd_x\tstd_y\tstd_z\n"
                             : "config\tsigma_x\tsigma_y\tsigma_z\n";
  for (const auto& [config, s] : noise.sigma) {
    out += fmt::format("{}\t{}\t{}\t{}", config, units::m_to_um(s.x()), units::m_to_um(s.y()),
                       units::m_to_um(s.z()));
    if (with_std) {
      const auto it = noise.uncertainty.find(config);
      const Eigen::Vector3d u = it == noise.uncertainty.end() ? Eigen::Vector3d::Zero() : it->second;
      out += fmt::format("\t{}\t{}\t{}", units::m_to_um(u.x()), units::m_to_um(u.y()),
                         units::m_to_um(u.z()));
    }
    out += "\n";
  }
  return out;
}

ConfigurationSet parse_configurations(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header line");
  if (f.size() < 2 || f[0] != "config") reader.fail("header must be 'config q1 ... qN'");
  const std::size_t n = f.size() - 1;
  ConfigurationSet out;
  while (reader.next(f)) {
    if (f.size() != n + 1) reader.fail("wrong number of fields");
    out.ids.push_back(reader.integer(f[0]));
    JointVector q(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      q[static_cast<Eigen::Index>(j)] = units::deg_to_rad(reader.real(f[1 + j]));
    }
    out.q.push_back(std::move(q));
  }
  if (out.ids.empty()) reader.fail("no configurations");
  return out;
}

ConfigurationSet read_configurations(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_configurations(in, path.string());
}

std::string format_configurations(const ConfigurationSet& set) {
  const Eigen::Index n = set.q.empty() ? 0 : set.q.front().size();
  std::string out = "config";
  for (Eigen::Index j = 0; j < n; ++j) out += fmt::format("\tq{}", j + 1);
  out += "\n";
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    out += std::to_string(set.ids[i]);
    for (Eigen::Index j = 0; j < n; ++j) out += fmt::format("\t{}", units::rad_to_deg(set.q[i][j]));
    out += "\n";
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += fmt::format(".tmp{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  }
}

}  // namespace robcal::io
