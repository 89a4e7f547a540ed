#include "hlob/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hlob/rng.hpp"

namespace hlob {

namespace {

constexpr std::array<std::pair<const char*, StreamRole>, 6> kRoles{{{"events", StreamRole::Events},
                                                                    {"marks", StreamRole::Marks},
                                                                    {"sizes", StreamRole::Sizes},
                                                                    {"noise", StreamRole::Noise},
                                                                    {"bootstrap", StreamRole::Bootstrap},
                                                                    {"aux", StreamRole::Aux}}};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void CsvTable::add(std::vector<double> row) {
  if (row.size() != columns.size())
    throw std::invalid_argument("csv row has " + std::to_string(row.size()) + " cells, expected " +
                                std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const CsvTable& t) {
  std::string s;
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
  s += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += format_number(row[i]);
    }
    s += '\n';
  }
  return s;
}

void write_csv(const std::filesystem::path& path, const CsvTable& t) { write_text(path, to_csv(t)); }

CsvTable read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty csv file '" + path.string() + "'");
  t.columns = split(line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    for (const auto& cell : split(line)) row.push_back(std::stod(cell));
    t.add(std::move(row));
  }
  return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

CsvTable events_table() { return {{"replicate", "t[time]", "label", "x[price]", "z[log-size]"}, {}}; }

void append_events(CsvTable& t, std::uint64_t replicate, const EventStream& s) {
  for (const auto& e : s.events)
    t.add({static_cast<double>(replicate), e.t, static_cast<double>(e.u.label), e.u.x, e.z});
}

nlohmann::json SeedManifest::to_json() const {
  nlohmann::json j;
  j["version"] = version;
  j["command"] = command;
  j["master_seed"] = master_seed;
  j["threads"] = threads;
  j["level"] = level;
  j["config"] = config;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : groups) {
    nlohmann::json gj{{"name", g.name}, {"seed", g.seed}, {"replicates", g.replicates}};
    gj["roles"] = nlohmann::json::array();
    for (const auto& [name, role] : kRoles) gj["roles"].push_back(name);
    auto& keys = gj["keys"] = nlohmann::json::array();
    for (std::uint64_t r = 0; r < g.replicates; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& [name, role] : kRoles) row.push_back(derive_key(g.seed, r, static_cast<std::uint64_t>(role)));
      keys.push_back(std::move(row));
    }
    j["groups"].push_back(std::move(gj));
  }
  return j;
}

SeedManifest SeedManifest::from_json(const nlohmann::json& j) {
  SeedManifest m;
  try {
    m.version = j.at("version").get<std::string>();
    if (m.version != kArtifactVersion)
      throw std::invalid_argument("manifest version '" + m.version + "' is not " + kArtifactVersion);
    m.command = j.at("command").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.threads = j.at("threads").get<unsigned>();
    m.level = j.at("level").get<int>();
    m.config = j.at("config").get<std::string>();
    for (const auto& gj : j.at("groups")) {
      StreamGroup g{gj.at("name").get<std::string>(), gj.at("seed").get<std::uint64_t>(),
                    gj.at("replicates").get<std::uint64_t>()};
      const auto& keys = gj.at("keys");
      if (keys.size() != g.replicates) throw std::invalid_argument("manifest group '" + g.name + "' is truncated");
      for (std::uint64_t r = 0; r < g.replicates; ++r)
        for (std::size_t k = 0; k < kRoles.size(); ++k)
          if (keys[r][k].get<std::uint64_t>() != derive_key(g.seed, r, static_cast<std::uint64_t>(kRoles[k].second)))
            throw std::invalid_argument("manifest group '" + g.name + "' replicate " + std::to_string(r) +
                                        " lists a key that does not match its derivation");
      m.groups.push_back(std::move(g));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

}  // namespace hlob
