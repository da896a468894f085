#include "flexagg/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <limits>
#include <fstream>
#include <set>
#include <sstream>

#include "flexagg/error.hpp"

namespace flexagg::io {

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& ctx) {
  if (!j.is_object()) parse_error(ctx + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) parse_error(ctx + ": unknown field '" + it.key() + "'");
  }
}

const json& need(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) parse_error(ctx + ": missing field '" + key + "'");
  return *it;
}

double number(const json& j, const std::string& ctx) {
  if (!j.is_number()) parse_error(ctx + ": expected a number");
  return j.get<double>();
}

double number_or(const json& j, const char* key, double def, const std::string& ctx) {
  auto it = j.find(key);
  return it == j.end() ? def : number(*it, ctx + "." + key);
}

std::string text(const json& j, const std::string& ctx) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  parse_error(ctx + ": expected a string");
}

Series series(const json& j, const std::string& ctx) {
  if (j.is_number()) return Series(j.get<double>());
  if (!j.is_array() || j.empty()) parse_error(ctx + ": expected a number or non-empty array");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(number(e, ctx));
  return Series(std::move(v));
}

pf::cplx complex_value(const json& j, const std::string& ctx) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) parse_error(ctx + ": expected [re, im]");
  return {number(j[0], ctx), number(j[1], ctx)};
}

pf::Block3 block3(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) parse_error(ctx + ": expected a 3x3 array");
  pf::Block3 b{};
  for (int r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != 3) parse_error(ctx + ": expected a 3x3 array");
    for (int c = 0; c < 3; ++c) b[r][c] = complex_value(j[r][c], ctx);
  }
  return b;
}

Connection connection(const json& j, const std::string& ctx) {
  const std::string s = text(j, ctx);
  if (s == "wye") return Connection::Wye;
  if (s == "delta") return Connection::Delta;
  parse_error(ctx + ": connection must be 'wye' or 'delta'");
}

int phase(const json& j, Connection kind, const std::string& ctx) {
  const std::string s = text(j, ctx);
  static const char* wye[] = {"a", "b", "c"};
  static const char* delta[] = {"ab", "bc", "ca"};
  for (int p = 0; p < 3; ++p) {
    if (s == (kind == Connection::Wye ? wye[p] : delta[p])) return p;
  }
  parse_error(ctx + ": bad phase '" + s + "'");
}

std::vector<int> phases(const json& j, Connection kind, const std::string& ctx) {
  if (!j.is_array() || j.empty()) parse_error(ctx + ": expected a non-empty phase list");
  std::vector<int> out;
  for (const auto& e : j) out.push_back(phase(e, kind, ctx));
  return out;
}

}  // namespace

pf::NetworkModel parse_feeder(const json& j) {
  const std::string ctx = "feeder";
  check_keys(j, {"name", "base_mva", "substation", "buses", "lines", "limits", "connections",
                 "loads"},
             ctx);
  pf::NetworkModel net;
  net.base_mva = number_or(j, "base_mva", 1.0, ctx);

  const json& sub = need(j, "substation", ctx);
  check_keys(sub, {"bus", "v0"}, ctx + ".substation");
  net.substation = text(need(sub, "bus", ctx + ".substation"), ctx + ".substation.bus");
  if (sub.contains("v0")) {
    const json& v0 = sub["v0"];
    if (!v0.is_array() || v0.size() != 3) parse_error(ctx + ".substation.v0: expected 3 phases");
    for (int p = 0; p < 3; ++p) net.v0[p] = complex_value(v0[p], ctx + ".substation.v0");
  }

  const json& buses = need(j, "buses", ctx);
  if (!buses.is_array()) parse_error(ctx + ".buses: expected an array");
  for (std::size_t b = 0; b < buses.size(); ++b) {
    const std::string c = ctx + ".buses[" + std::to_string(b) + "]";
    check_keys(buses[b], {"id", "phases"}, c);
    net.buses.push_back({text(need(buses[b], "id", c), c + ".id"),
                         phases(need(buses[b], "phases", c), Connection::Wye, c + ".phases")});
  }

  const json& lines = need(j, "lines", ctx);
  if (!lines.is_array()) parse_error(ctx + ".lines: expected an array");
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const std::string c = ctx + ".lines[" + std::to_string(l) + "]";
    const json& lj = lines[l];
    check_keys(lj, {"from", "to", "y", "z", "i_max"}, c);
    pf::Line line;
    line.from = text(need(lj, "from", c), c + ".from");
    line.to = text(need(lj, "to", c), c + ".to");
    if (lj.contains("y") == lj.contains("z")) parse_error(c + ": give exactly one of 'y' or 'z'");
    if (lj.contains("y")) {
      line.y = block3(lj["y"], c + ".y");
    } else {
      // Invert the impedance over the phases with a nonzero diagonal.
      const pf::Block3 z = block3(lj["z"], c + ".z");
      std::vector<int> ph;
      for (int p = 0; p < 3; ++p) {
        if (z[p][p] != 0.0) ph.push_back(p);
      }
      Eigen::MatrixXcd zm(ph.size(), ph.size());
      for (std::size_t r = 0; r < ph.size(); ++r) {
        for (std::size_t s = 0; s < ph.size(); ++s) zm(r, s) = z[ph[r]][ph[s]];
      }
      Eigen::FullPivLU<Eigen::MatrixXcd> lu(zm);
      if (!lu.isInvertible()) parse_error(c + ".z: impedance block is singular");
      const Eigen::MatrixXcd ym = lu.inverse();
      for (std::size_t r = 0; r < ph.size(); ++r) {
        for (std::size_t s = 0; s < ph.size(); ++s) line.y[ph[r]][ph[s]] = ym(r, s);
      }
    }
    line.i_max = number_or(lj, "i_max", std::numeric_limits<double>::infinity(), c);
    net.lines.push_back(line);
  }

  if (j.contains("limits")) {
    const json& lim = j["limits"];
    check_keys(lim, {"v_min", "v_max", "i_min"}, ctx + ".limits");
    net.v_min = number_or(lim, "v_min", net.v_min, ctx + ".limits");
    net.v_max = number_or(lim, "v_max", net.v_max, ctx + ".limits");
    net.i_min = number_or(lim, "i_min", net.i_min, ctx + ".limits");
  }

  if (j.contains("connections")) {
    for (std::size_t k = 0; k < j["connections"].size(); ++k) {
      const std::string c = ctx + ".connections[" + std::to_string(k) + "]";
      const json& cj = j["connections"][k];
      check_keys(cj, {"bus", "connection", "phases"}, c);
      pf::DeviceConnection dc;
      dc.bus = text(need(cj, "bus", c), c + ".bus");
      dc.kind = cj.contains("connection") ? connection(cj["connection"], c) : Connection::Wye;
      dc.phases = phases(need(cj, "phases", c), dc.kind, c + ".phases");
      net.connections.push_back(dc);
    }
  }

  if (j.contains("loads")) {
    for (std::size_t k = 0; k < j["loads"].size(); ++k) {
      const std::string c = ctx + ".loads[" + std::to_string(k) + "]";
      const json& lj = j["loads"][k];
      check_keys(lj, {"bus", "connection", "phase", "p", "q"}, c);
      pf::ExogenousLoad ld;
      ld.bus = text(need(lj, "bus", c), c + ".bus");
      ld.kind = lj.contains("connection") ? connection(lj["connection"], c) : Connection::Wye;
      ld.phase = phase(need(lj, "phase", c), ld.kind, c + ".phase");
      ld.p = lj.contains("p") ? series(lj["p"], c + ".p") : Series(0.0);
      ld.q = lj.contains("q") ? series(lj["q"], c + ".q") : Series(0.0);
      net.loads.push_back(ld);
    }
  }
  return net;
}

der::Fleet parse_fleet(const json& j) {
  const std::string ctx = "fleet";
  check_keys(j, {"name", "devices"}, ctx);
  const json& devs = need(j, "devices", ctx);
  if (!devs.is_array()) parse_error(ctx + ".devices: expected an array");
  der::Fleet fleet;
  std::set<std::string> ids;
  for (std::size_t k = 0; k < devs.size(); ++k) {
    const json& dj = devs[k];
    const std::string c = ctx + ".devices[" + std::to_string(k) + "]";
    if (!dj.is_object()) parse_error(c + ": expected an object");
    der::Device d;
    d.id = text(need(dj, "id", c), c + ".id");
    if (!ids.insert(d.id).second) parse_error(c + ": duplicate id " + d.id);
    const std::string type = text(need(dj, "type", c), c + ".type");
    d.bus = text(need(dj, "bus", c), c + ".bus");
    d.connection = dj.contains("connection") ? connection(dj["connection"], c) : Connection::Wye;
    d.phases = phases(need(dj, "phases", c), d.connection, c + ".phases");
    auto ser = [&](const char* key) { return series(need(dj, key, c), c + "." + key); };
    auto ser_or = [&](const char* key, double def) {
      return dj.contains(key) ? series(dj[key], c + "." + key) : Series(def);
    };
    auto num = [&](const char* key) { return number(need(dj, key, c), c + "." + key); };
    auto num_or = [&](const char* key, double def) { return number_or(dj, key, def, c); };
    if (type == "pv") {
      check_keys(dj, {"id", "type", "bus", "connection", "phases", "p_max", "p_min", "s_max"}, c);
      d.kind = der::DeviceKind::PV;
      d.pv.p_max = ser("p_max");
      d.pv.p_min = ser_or("p_min", 0.0);
      d.pv.s_max = ser("s_max");
    } else if (type == "es") {
      check_keys(dj, {"id", "type", "bus", "connection", "phases", "p_max", "p_min", "s_max",
                      "e_max", "e_min", "e0", "kappa", "realistic", "nu_cha", "nu_dis", "penalty"},
                 c);
      d.kind = der::DeviceKind::ES;
      d.es.p_max = ser("p_max");
      d.es.p_min = ser("p_min");
      d.es.s_max = ser("s_max");
      d.es.e_max = num("e_max");
      d.es.e_min = num_or("e_min", 0.0);
      d.es.e0 = num("e0");
      d.es.kappa = num_or("kappa", 1.0);
      if (dj.contains("realistic")) {
        if (!dj["realistic"].is_boolean()) parse_error(c + ".realistic: expected a boolean");
        d.es.realistic = dj["realistic"].get<bool>();
      }
      d.es.nu_cha = num_or("nu_cha", 1.0);
      d.es.nu_dis = num_or("nu_dis", 1.0);
      d.es.penalty = num_or("penalty", 1e-3);
    } else if (type == "dcl") {
      check_keys(dj, {"id", "type", "bus", "connection", "phases", "p_max", "p_min", "eta",
                      "e_max", "e_min"},
                 c);
      d.kind = der::DeviceKind::DCL;
      d.dcl.p_max = ser("p_max");
      d.dcl.p_min = ser_or("p_min", 0.0);
      d.dcl.eta = num_or("eta", 0.0);
      d.dcl.e_max = num("e_max");
      d.dcl.e_min = num_or("e_min", 0.0);
    } else if (type == "hvac") {
      check_keys(dj, {"id", "type", "bus", "connection", "phases", "p_max", "eta", "alpha",
                      "beta", "f_max", "f_min", "f_out", "f0", "f_comfort"},
                 c);
      d.kind = der::DeviceKind::HVAC;
      d.hvac.p_max = ser("p_max");
      d.hvac.eta = num_or("eta", 0.0);
      d.hvac.alpha = num("alpha");
      d.hvac.beta = num("beta");
      d.hvac.f_max = num("f_max");
      d.hvac.f_min = num("f_min");
      d.hvac.f_out = ser("f_out");
      d.hvac.f0 = num("f0");
      d.hvac.f_comfort = num_or("f_comfort", 0.5 * (d.hvac.f_min + d.hvac.f_max));
    } else {
      parse_error(c + ".type: unknown device type '" + type + "'");
    }
    fleet.devices.push_back(std::move(d));
  }
  return fleet;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::ConfigError, "write failed for " + path);
}

json read_json(const std::string& path) {
  const std::string body = read_file(path);
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    parse_error(path + ": " + e.what());
  }
}

pf::NetworkModel read_feeder(const std::string& path) {
  try {
    return parse_feeder(read_json(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) parse_error(path + ": " + e.what());
    throw;
  }
}

der::Fleet read_fleet(const std::string& path) {
  try {
    return parse_fleet(read_json(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) parse_error(path + ": " + e.what());
    throw;
  }
}

std::string fmt(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) out += (k ? "," : "") + fmt(r[k]);
    out += '\n';
  }
  write_file(path, out);
}

std::vector<std::vector<double>> read_csv(const std::string& path,
                                          const std::vector<std::string>& header) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) parse_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string expect;
  for (std::size_t k = 0; k < header.size(); ++k) expect += (k ? "," : "") + header[k];
  if (line != expect) parse_error(path + ": expected header '" + expect + "'");
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        parse_error(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != header.size()) {
      parse_error(path + ":" + std::to_string(lineno) + ": wrong column count");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace flexagg::io
