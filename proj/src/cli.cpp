#include "sl3/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <variant>

#include "sl3/families.hpp"
#include "sl3/fock.hpp"
#include "sl3/propagator.hpp"
#include "sl3/spectral.hpp"

namespace sl3::cli {

using nlohmann::json;

namespace {

const std::vector<std::pair<Command, std::string>> kCommandNames = {
    {Command::Classify, "classify"}, {Command::Map, "map"},   {Command::Propagate, "propagate"},
    {Command::Loop, "loop"},         {Command::Fock, "fock"}, {Command::Holonomy, "holonomy"},
    {Command::FindEp, "find-ep"},
};

}  // namespace

std::string to_string(Command c) {
  for (const auto& [cmd, name] : kCommandNames) {
    if (cmd == c) return name;
  }
  return "unknown";
}

Command command_from_string(const std::string& s) {
  for (const auto& [cmd, name] : kCommandNames) {
    if (name == s) return cmd;
  }
  throw ConfigError("unknown command '" + s + "'");
}

// ---------------------------------------------------------------------------
// Config serialization

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& target) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  const std::string where = std::string("config field '") + key + "': ";
  if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) throw ConfigError(where + "expected boolean");
    target = it->get<bool>();
  } else if constexpr (std::is_same_v<T, int>) {
    if (!it->is_number_integer()) throw ConfigError(where + "expected integer");
    const auto v = it->get<long long>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError(where + "integer out of range");
    }
    target = static_cast<int>(v);
  } else if constexpr (std::is_same_v<T, double>) {
    if (!it->is_number()) throw ConfigError(where + "expected number");
    target = it->get<double>();
    if (!std::isfinite(target)) throw ConfigError(where + "must be finite");
  } else {
    if (!it->is_string()) throw ConfigError(where + "expected string");
    target = it->get<std::string>();
  }
}

const std::vector<std::string> kConfigKeys = {
    "command", "family",  "gamma",  "kappa1", "kappa2",    "z_max",      "samples",
    "n",       "state",   "on_loop", "loop_r", "loop_turns", "loop_cx",   "loop_cy",
    "tol",     "eps_ep",  "holonomy_steps", "x_min", "x_max", "y_min",    "y_max",
    "nx",      "ny",      "bracket_lo", "bracket_hi", "out", "format",    "jobs",
    "plot_script"};

}  // namespace

RunConfig config_from_json(const std::string& text, RunConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
      throw ConfigError("config field '" + key + "': unknown key");
    }
  }
  std::string s;
  if (j.contains("command")) {
    read_field(j, "command", s);
    c.command = command_from_string(s);
  }
  if (j.contains("family")) {
    read_field(j, "family", s);
    try {
      c.family = family_kind_from_string(s);
    } catch (const ConfigError&) {
      throw ConfigError("config field 'family': unknown family '" + s + "'");
    }
  }
  if (j.contains("format")) {
    read_field(j, "format", s);
    if (s == "csv") {
      c.format = Format::Csv;
    } else if (s == "json") {
      c.format = Format::Json;
    } else {
      throw ConfigError("config field 'format': expected csv or json");
    }
  }
  read_field(j, "gamma", c.gamma);
  read_field(j, "kappa1", c.kappa1);
  read_field(j, "kappa2", c.kappa2);
  read_field(j, "z_max", c.z_max);
  read_field(j, "samples", c.samples);
  read_field(j, "n", c.n);
  read_field(j, "state", c.state);
  read_field(j, "on_loop", c.on_loop);
  read_field(j, "loop_r", c.loop_r);
  read_field(j, "loop_turns", c.loop_turns);
  read_field(j, "loop_cx", c.loop_cx);
  read_field(j, "loop_cy", c.loop_cy);
  read_field(j, "tol", c.tol);
  read_field(j, "eps_ep", c.eps_ep);
  read_field(j, "holonomy_steps", c.holonomy_steps);
  read_field(j, "x_min", c.x_min);
  read_field(j, "x_max", c.x_max);
  read_field(j, "y_min", c.y_min);
  read_field(j, "y_max", c.y_max);
  read_field(j, "nx", c.nx);
  read_field(j, "ny", c.ny);
  read_field(j, "bracket_lo", c.bracket_lo);
  read_field(j, "bracket_hi", c.bracket_hi);
  read_field(j, "out", c.out);
  read_field(j, "jobs", c.jobs);
  read_field(j, "plot_script", c.plot_script);
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["command"] = to_string(c.command);
  j["family"] = to_string(c.family);
  j["gamma"] = c.gamma;
  j["kappa1"] = c.kappa1;
  j["kappa2"] = c.kappa2;
  j["z_max"] = c.z_max;
  j["samples"] = c.samples;
  j["n"] = c.n;
  j["state"] = c.state;
  j["on_loop"] = c.on_loop;
  j["loop_r"] = c.loop_r;
  j["loop_turns"] = c.loop_turns;
  j["loop_cx"] = c.loop_cx;
  j["loop_cy"] = c.loop_cy;
  j["tol"] = c.tol;
  j["eps_ep"] = c.eps_ep;
  j["holonomy_steps"] = c.holonomy_steps;
  j["x_min"] = c.x_min;
  j["x_max"] = c.x_max;
  j["y_min"] = c.y_min;
  j["y_max"] = c.y_max;
  j["nx"] = c.nx;
  j["ny"] = c.ny;
  j["bracket_lo"] = c.bracket_lo;
  j["bracket_hi"] = c.bracket_hi;
  j["out"] = c.out;
  j["format"] = c.format == Format::Csv ? "csv" : "json";
  j["jobs"] = c.jobs;
  j["plot_script"] = c.plot_script;
  return j.dump(2);
}

void validate(const RunConfig& c) {
  const auto finite = [](const char* name, double v) {
    if (!std::isfinite(v)) throw ConfigError(std::string("'") + name + "' must be finite");
  };
  for (const auto& [name, v] :
       std::vector<std::pair<const char*, double>>{{"gamma", c.gamma},     {"kappa1", c.kappa1},
                                                    {"kappa2", c.kappa2},   {"z_max", c.z_max},
                                                    {"loop_r", c.loop_r},   {"loop_cx", c.loop_cx},
                                                    {"loop_cy", c.loop_cy}, {"tol", c.tol},
                                                    {"eps_ep", c.eps_ep},   {"x_min", c.x_min},
                                                    {"x_max", c.x_max},     {"y_min", c.y_min},
                                                    {"y_max", c.y_max},     {"bracket_lo", c.bracket_lo},
                                                    {"bracket_hi", c.bracket_hi}}) {
    finite(name, v);
  }
  if (c.family == FamilyKind::Custom) throw ConfigError("'family': custom families are library-only");
  if (!(c.z_max > 0.0)) throw ConfigError("'z_max' must be positive");
  if (c.samples < 2) throw ConfigError("'samples' must be at least 2");
  if (c.n < 1) throw ConfigError("'n' must be at least 1");
  if (!(c.tol > 0.0 && c.tol <= 1e-2)) throw ConfigError("'tol' must lie in (0, 1e-2]");
  if (!(c.eps_ep > 0.0 && c.eps_ep < 1.0)) throw ConfigError("'eps_ep' must lie in (0, 1)");
  if (!(c.loop_r > 0.0)) throw ConfigError("'loop_r' must be positive");
  if (c.loop_turns < 1) throw ConfigError("'loop_turns' must be at least 1");
  if (c.holonomy_steps < 8 || c.holonomy_steps % 4 != 0) {
    throw ConfigError("'holonomy_steps' must be a multiple of 4, at least 8");
  }
  if (!(c.x_max >= c.x_min) || !(c.y_max >= c.y_min)) throw ConfigError("map range is empty");
  if (c.nx < 1 || c.ny < 1) throw ConfigError("'nx' and 'ny' must be at least 1");
  if (!(c.bracket_hi > c.bracket_lo)) throw ConfigError("'bracket_lo' must be below 'bracket_hi'");
  if (c.jobs < 1) throw ConfigError("'jobs' must be at least 1");
  const bool needs_gamma = c.on_loop || c.command == Command::Loop || c.command == Command::Holonomy ||
                           c.command == Command::FindEp;
  if (needs_gamma && !(c.gamma > 0.0)) throw ConfigError("'gamma' must be positive for this command");
  if (c.command == Command::FindEp && c.family != FamilyKind::PTCyclic) {
    throw ConfigError("find-ep supports the pt_cyclic family only");
  }
  if ((c.on_loop || c.command == Command::Loop || c.command == Command::Holonomy) &&
      c.family != FamilyKind::PTCyclic) {
    throw ConfigError("loops are defined for the pt_cyclic family only");
  }
  if (c.plot_script && (c.out.empty() || c.out == "-" || c.format != Format::Csv)) {
    throw ConfigError("'plot_script' needs a CSV output file");
  }
  parse_state(c.state);
}

CouplerFamily make_family(const RunConfig& c) {
  if (c.on_loop) return ep3_loop({c.loop_r, c.loop_turns}, c.gamma);
  switch (c.family) {
    case FamilyKind::PTCyclic:
      return pt_cyclic(c.gamma, c.kappa1, c.kappa2);
    case FamilyKind::Chiral1:
      return chiral_1(c.gamma, c.kappa1, c.kappa2);
    case FamilyKind::Chiral2:
      return chiral_2(c.gamma, c.kappa1);
    case FamilyKind::Custom:
      break;
  }
  throw ConfigError("custom families are library-only");
}

StateSpec parse_state(const std::string& text) {
  const auto numbers = [&text](const std::string& part) {
    std::vector<double> v;
    std::stringstream ss(part);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(item, &used);
      } catch (const std::exception&) {
        throw ConfigError("'state': cannot parse '" + text + "'");
      }
      if (item.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(x)) {
        throw ConfigError("'state': cannot parse '" + text + "'");
      }
      v.push_back(x);
    }
    if (v.size() != 3) throw ConfigError("'state': expected three components in '" + text + "'");
    return v;
  };
  const auto occupation = [&](const std::string& part) {
    const std::vector<double> v = numbers(part);
    std::array<int, 3> occ{};
    for (int i = 0; i < 3; ++i) {
      if (v[i] < 0.0 || v[i] != std::floor(v[i]) || v[i] > 1e6) {
        throw ConfigError("'state': occupations must be non-negative integers");
      }
      occ[i] = static_cast<int>(v[i]);
    }
    return occ;
  };
  StateSpec spec;
  if (text.rfind("noon:", 0) == 0) {
    const std::string rest = text.substr(5);
    const std::size_t semi = rest.find(';');
    if (semi == std::string::npos) throw ConfigError("'state': NOON needs two triples separated by ';'");
    spec.kind = StateSpec::Kind::Noon;
    spec.a = occupation(rest.substr(0, semi));
    spec.b = occupation(rest.substr(semi + 1));
    if (spec.a == spec.b) throw ConfigError("'state': NOON components must differ");
    return spec;
  }
  if (text.rfind("eigen:", 0) == 0) {
    const std::string rest = text.substr(6);
    if (rest != "1" && rest != "2" && rest != "3") throw ConfigError("'state': eigenmode index must be 1, 2 or 3");
    spec.kind = StateSpec::Kind::Eigen;
    spec.eigen_index = rest[0] - '1';
    return spec;
  }
  const std::vector<double> v = numbers(text);
  spec.field = Vec3(v[0], v[1], v[2]);
  for (int i = 0; i < 3; ++i) {
    spec.a[i] = (v[i] >= 0.0 && v[i] == std::floor(v[i]) && v[i] <= 1e6) ? static_cast<int>(v[i]) : -1;
  }
  return spec;
}

Intensities emit_intensities(const Vec3& e) {
  Intensities out;
  double total = 0.0;
  for (int j = 0; j < 3; ++j) {
    out.I[j] = std::norm(e[j]);
    total += out.I[j];
  }
  if (total > 0.0 && std::isfinite(total)) {
    std::array<double, 3> t{};
    for (int j = 0; j < 3; ++j) t[j] = out.I[j] / total;
    out.I_tilde = t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tables and output

namespace {

using Value = std::variant<std::monostate, double, cd, std::string, bool>;

struct Column {
  std::string name;
  bool complex = false;
};

struct Table {
  std::string name;
  std::string description;
  std::vector<Column> columns;
  std::vector<std::vector<Value>> rows;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& os, const Table& t) {
  os << "# " << t.description << "\n# ";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) os << ',';
    if (t.columns[i].complex) {
      os << t.columns[i].name << "_re," << t.columns[i].name << "_im";
    } else {
      os << t.columns[i].name;
    }
  }
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      const Value& v = row[i];
      if (std::holds_alternative<double>(v)) {
        os << fmt(std::get<double>(v));
      } else if (std::holds_alternative<cd>(v)) {
        const cd z = std::get<cd>(v);
        os << fmt(z.real()) << ',' << fmt(z.imag());
      } else if (std::holds_alternative<std::string>(v)) {
        os << std::get<std::string>(v);
      } else if (std::holds_alternative<bool>(v)) {
        os << (std::get<bool>(v) ? "true" : "false");
      } else if (t.columns[i].complex) {
        os << ',';
      }
    }
    os << '\n';
  }
}

json to_json(const Table& t) {
  json records = json::array();
  for (const auto& row : t.rows) {
    json r = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Value& v = row[i];
      json& slot = r[t.columns[i].name];
      if (std::holds_alternative<double>(v)) {
        slot = std::get<double>(v);
      } else if (std::holds_alternative<cd>(v)) {
        const cd z = std::get<cd>(v);
        slot = {{"re", z.real()}, {"im", z.imag()}};
      } else if (std::holds_alternative<std::string>(v)) {
        slot = std::get<std::string>(v);
      } else if (std::holds_alternative<bool>(v)) {
        slot = std::get<bool>(v);
      } else {
        slot = nullptr;
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::filesystem::path sidecar(const std::string& out, const std::string& name, const std::string& ext) {
  std::filesystem::path p(out);
  const std::string stem = p.stem().string();
  return p.parent_path() / (stem + "." + name + ext);
}

std::string label(const Occupation& s) {
  return std::to_string(s.n1) + "_" + std::to_string(s.n2) + "_" + std::to_string(s.n3);
}

PropagatorOptions propagator_options(const RunConfig& c) {
  PropagatorOptions o;
  o.rtol = c.tol;
  o.atol = 1e-2 * c.tol;
  return o;
}

void add_intensity_columns(Table& t) {
  for (const char* n : {"I1", "I2", "I3", "It1", "It2", "It3"}) t.columns.push_back({n, false});
}

void push_intensities(std::vector<Value>& row, const Vec3& e) {
  const Intensities in = emit_intensities(e);
  for (double v : in.I) row.emplace_back(v);
  for (int j = 0; j < 3; ++j) {
    if (in.I_tilde) {
      row.emplace_back((*in.I_tilde)[j]);
    } else {
      row.emplace_back(std::monostate{});
    }
  }
}

std::vector<Table> run_classify(const RunConfig& c) {
  const Mat3 m1 = make_family(c).traceless(0.0);
  const Invariants inv = invariants(m1);
  const Roots roots = cubic_roots(inv);
  Table t{"classify",
          "spectral classification of M1 at z = 0; complex values as re/im pairs",
          {{"gamma"}, {"kappa1"}, {"kappa2"}, {"regime"}, {"beta2", true}, {"beta3", true},
           {"discriminant", true}, {"lambda1", true}, {"lambda2", true}, {"lambda3", true}},
          {}};
  t.rows.push_back({c.gamma, c.kappa1, c.kappa2, to_string(classify(inv, norm(m1), c.eps_ep)), inv.beta2,
                    inv.beta3, discriminant(inv), roots[0], roots[1], roots[2]});
  return {t};
}

std::vector<Table> run_map(const RunConfig& c) {
  MapGrid g;
  g.x_min = c.x_min;
  g.x_max = c.x_max;
  g.y_min = c.y_min;
  g.y_max = c.y_max;
  g.nx = c.nx;
  g.ny = c.ny;
  g.gamma = c.gamma;
  g.eps = c.eps_ep;
  g.jobs = c.jobs;
  const DiscriminantMap map = discriminant_map(c.family, g);
  const bool chi2 = c.family == FamilyKind::Chiral2;
  const std::string axes = chi2 ? "x = gamma, y = kappa" : "x = kappa1/gamma, y = kappa2/gamma";
  Table grid{"grid",
             "discriminant map of " + to_string(c.family) + " (" + axes + "), rows by y then x",
             {{"x"}, {"y"}, {"discriminant", true}, {"beta2", true}, {"beta3", true}, {"regime"}},
             {}};
  for (const MapRecord& r : map.records) {
    grid.rows.push_back({r.x, r.y, r.discriminant, r.beta2, r.beta3, to_string(r.regime)});
  }
  Table loci{"loci", "polished exceptional points (" + axes + ")", {{"x"}, {"y"}, {"regime"}}, {}};
  for (const EPLocus& l : map.loci) loci.rows.push_back({l.x, l.y, to_string(l.regime)});
  return {grid, loci};
}

std::vector<Table> run_propagate(const RunConfig& c) {
  const StateSpec st = parse_state(c.state);
  if (st.kind != StateSpec::Kind::Vector) throw ConfigError("propagate needs a classical field 'a,b,c'");
  const CouplerFamily family = make_family(c);
  const double z_end = c.on_loop ? loop_length({c.loop_r, c.loop_turns}, c.gamma) : c.z_max;
  const std::vector<double> z = uniform_grid(z_end, static_cast<std::size_t>(c.samples));
  const PropagationResult res = integrate_wei_norman(family, z, propagator_options(c));
  Table t{"samples", "classical field E(z) = U(z) E(0), intensities I_j and renormalized It_j", {{"z"}}, {}};
  add_intensity_columns(t);
  for (const char* n : {"E1", "E2", "E3"}) t.columns.push_back({n, true});
  for (std::size_t k = 0; k < z.size(); ++k) {
    const Vec3 e = res.U[k] * st.field;
    std::vector<Value> row{z[k]};
    push_intensities(row, e);
    for (int j = 0; j < 3; ++j) row.emplace_back(e[j]);
    t.rows.push_back(std::move(row));
  }
  return {t};
}

std::vector<Table> run_loop(const RunConfig& c) {
  const StateSpec st = parse_state(c.state);
  if (st.kind == StateSpec::Kind::Noon) throw ConfigError("loop needs a classical field or eigen:k");
  const LoopSpec spec{c.loop_r, c.loop_turns};
  const CouplerFamily family = ep3_loop(spec, c.gamma);
  const std::vector<double> z =
      uniform_grid(loop_length(spec, c.gamma), static_cast<std::size_t>(c.samples));
  BranchTrackOptions topts;
  topts.eps = c.eps_ep;
  const BranchTrack track = track_branches(family, z, topts);
  const PropagationResult res = integrate_wei_norman(family, z, propagator_options(c));

  const SpectralFrame frame0 = local_frame(family.traceless(0.0), 0.0, track.paths.front(), c.eps_ep);
  const bool eigen = st.kind == StateSpec::Kind::Eigen;
  const Vec3 e0 = eigen ? frame0.right(st.eigen_index) : st.field;
  const Eigen::RowVector3cd l0 = eigen ? frame0.left(st.eigen_index) : Eigen::RowVector3cd::Zero();

  Table t{"samples",
          "loop around EP3: parameters, tracked eigenvalues, intensities, biorthogonal coefficients c_j "
          "(empty at singular frames)" +
              std::string(eigen ? ", biorthogonal populations n_j and n_j / sum |n_j|" : ""),
          {{"z"}, {"kappa1_over_gamma"}, {"kappa2_over_gamma"}, {"discriminant", true},
           {"lambda1", true}, {"lambda2", true}, {"lambda3", true}},
          {}};
  add_intensity_columns(t);
  for (const char* n : {"c1", "c2", "c3"}) t.columns.push_back({n, true});
  for (const char* n : {"c1_abs2", "c2_abs2", "c3_abs2"}) t.columns.push_back({n, false});
  if (eigen) {
    for (const char* n : {"n1", "n2", "n3", "nt1", "nt2", "nt3"}) t.columns.push_back({n, true});
    for (const char* n : {"n1_abs", "n2_abs", "n3_abs"}) t.columns.push_back({n, false});
  }
  std::size_t ti = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    while (track.z[ti] != z[k]) ++ti;
    const Mat3 m1 = family.traceless(z[k]);
    const Vec3 e = res.U[k] * e0;
    std::vector<Value> row{z[k], family.parameter("kappa1", z[k]) / c.gamma,
                           family.parameter("kappa2", z[k]) / c.gamma, discriminant(invariants(m1))};
    for (int b = 0; b < 3; ++b) row.emplace_back(track.paths[ti][static_cast<std::size_t>(b)]);
    push_intensities(row, e);
    try {
      const SpectralFrame f = local_frame(m1, z[k], track.paths[ti], c.eps_ep);
      const Vec3 cj = project_biorthogonal(f, e);
      for (int j = 0; j < 3; ++j) row.emplace_back(cj[j]);
      for (int j = 0; j < 3; ++j) row.emplace_back(std::norm(cj[j]));
    } catch (const FrameSingularError&) {
      for (int j = 0; j < 6; ++j) row.emplace_back(std::monostate{});
    }
    if (eigen) {
      const Eigen::RowVector3cd l = l0 * res.U[k].inverse();
      std::array<cd, 3> n{};
      double total = 0.0;
      for (int j = 0; j < 3; ++j) {
        n[j] = l[j] * e[j];
        total += std::abs(n[j]);
      }
      for (int j = 0; j < 3; ++j) row.emplace_back(n[j]);
      for (int j = 0; j < 3; ++j) {
        if (total > 0.0) {
          row.emplace_back(n[j] / total);
        } else {
          row.emplace_back(std::monostate{});
        }
      }
      for (int j = 0; j < 3; ++j) row.emplace_back(std::abs(n[j]));
    }
    t.rows.push_back(std::move(row));
  }

  Table ev{"events", "branch events along the loop; kind EP2 marks a crossing",
           {{"z"}, {"kind"}, {"kappa1_over_gamma"}, {"kappa2_over_gamma"}, {"discriminant", true}}, {}};
  for (const BranchEvent& e : track.events) {
    ev.rows.push_back({e.z, to_string(e.kind), family.parameter("kappa1", e.z) / c.gamma,
                       family.parameter("kappa2", e.z) / c.gamma, e.discriminant});
  }
  return {t, ev};
}

std::vector<Table> run_fock(const RunConfig& c) {
  const StateSpec st = parse_state(c.state);
  const auto space = basis(c.n);
  const auto occ = [&](const std::array<int, 3>& a) {
    const Occupation o{a[0], a[1], a[2]};
    if (a[0] < 0 || o.total() != c.n) {
      throw ConfigError("'state': occupation must hold exactly n = " + std::to_string(c.n) + " excitations");
    }
    return o;
  };
  FockVector psi0;
  if (st.kind == StateSpec::Kind::Noon) {
    psi0 = FockVector::noon(space, occ(st.a), occ(st.b));
  } else if (st.kind == StateSpec::Kind::Vector) {
    for (int v : st.a) {
      if (v < 0) throw ConfigError("'state': occupations must be non-negative integers");
    }
    psi0 = FockVector::basis_state(space, occ(st.a));
  } else {
    throw ConfigError("fock needs an occupation triple or a NOON pair");
  }
  const CouplerFamily family = make_family(c);
  const double z_end = c.on_loop ? loop_length({c.loop_r, c.loop_turns}, c.gamma) : c.z_max;
  const std::vector<double> z = uniform_grid(z_end, static_cast<std::size_t>(c.samples));
  const FockSamples fs = propagate_fock(family, psi0, z, propagator_options(c));
  Table t{"samples",
          "n = " + std::to_string(c.n) +
              " Fock propagation: P_a_b_c = |<a,b,c|psi(z)>|^2 and Pt_a_b_c = P / sum P",
          {{"z"}},
          {}};
  for (const Occupation& s : space->states()) t.columns.push_back({"P_" + label(s)});
  for (const Occupation& s : space->states()) t.columns.push_back({"Pt_" + label(s)});
  for (std::size_t k = 0; k < z.size(); ++k) {
    const AmplitudeTable a = amplitudes(fs.states[k]);
    std::vector<Value> row{z[k]};
    for (double p : a.P) row.emplace_back(p);
    for (double p : a.P_tilde) row.emplace_back(p);
    t.rows.push_back(std::move(row));
  }
  return {t};
}

std::vector<Table> run_holonomy(const RunConfig& c) {
  const double g = c.gamma;
  const double r = c.loop_r;
  const double cx = c.loop_cx;
  const double cy = c.loop_cy;
  const Profile k1 = Profile::function([=](double z) { return g * (cx + r * std::cos(2.0 * M_PI * g * z)); });
  const Profile k2 = Profile::function([=](double z) { return g * (cy + r * std::sin(2.0 * M_PI * g * z)); });
  const CouplerFamily family = pt_cyclic(g, k1, k2);
  HolonomyOptions opts;
  opts.steps = c.holonomy_steps;
  opts.eps = c.eps_ep;
  const HolonomyResult h = holonomy(family, c.loop_turns / g, opts);
  Table t{"holonomy",
          "path-ordered frame holonomy around a circle of radius loop_r centred at (loop_cx, loop_cy)",
          {{"steps"}, {"det", true}, {"theta_I0", true}, {"theta_Y", true}, {"convergence_ratio"},
           {"delta_fine"}, {"branches_closed"}},
          {}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      t.columns.push_back({"H" + std::to_string(i + 1) + std::to_string(j + 1), true});
    }
  }
  std::vector<Value> row{static_cast<double>(h.steps), h.H.determinant(), h.theta_I0, h.theta_Y,
                         h.convergence_ratio, h.delta_fine, h.branches_closed};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) row.emplace_back(h.H(i, j));
  }
  t.rows.push_back(std::move(row));
  return {t};
}

std::vector<Table> run_find_ep(const RunConfig& c) {
  const double k1 = c.kappa1 / c.gamma;
  Table t{"roots",
          "EP2 roots kappa2/gamma of the pt_cyclic discriminant at kappa1/gamma = " + fmt(k1),
          {{"kappa1_over_gamma"}, {"kappa2_over_gamma"}, {"discriminant"}, {"regime"}},
          {}};
  for (const double k2 : find_ep2(k1, {c.bracket_lo, c.bracket_hi})) {
    const Invariants inv = pt_cyclic_invariants(1.0, k1, k2);
    const Mat3 m1 = pt_cyclic(1.0, k1, k2).traceless(0.0);
    t.rows.push_back({k1, k2, discriminant(inv).real(), to_string(classify(inv, norm(m1), c.eps_ep))});
  }
  return {t};
}

std::vector<Table> compute(const RunConfig& c) {
  switch (c.command) {
    case Command::Classify:
      return run_classify(c);
    case Command::Map:
      return run_map(c);
    case Command::Propagate:
      return run_propagate(c);
    case Command::Loop:
      return run_loop(c);
    case Command::Fock:
      return run_fock(c);
    case Command::Holonomy:
      return run_holonomy(c);
    case Command::FindEp:
      return run_find_ep(c);
  }
  throw ConfigError("unknown command");
}

std::string plot_script(const std::vector<std::filesystem::path>& files) {
  std::ostringstream os;
  os << "import matplotlib.pyplot as plt\n"
        "import numpy as np\n\n"
        "def load(path):\n"
        "    with open(path) as f:\n"
        "        f.readline()\n"
        "        names = f.readline().lstrip('# ').strip().split(',')\n"
        "    data = np.genfromtxt(path, delimiter=',', comments='#', dtype=float)\n"
        "    return names, np.atleast_2d(data)\n\n";
  for (const auto& f : files) {
    os << "names, data = load(" << json(f.filename().string()).dump() << ")\n"
       << "fig, ax = plt.subplots()\n"
       << "for i, n in enumerate(names[1:], start=1):\n"
       << "    col = data[:, i]\n"
       << "    if np.isfinite(col).any():\n"
       << "        ax.plot(data[:, 0], col, label=n)\n"
       << "ax.set_xlabel(names[0])\n"
       << "ax.legend(fontsize='x-small')\n"
       << "fig.savefig(" << json(f.stem().string() + ".png").dump() << ")\n\n";
  }
  return os.str();
}

void write_outputs(const RunConfig& c, const std::vector<Table>& tables) {
  const bool to_stdout = c.out.empty() || c.out == "-";
  if (c.format == Format::Json) {
    json doc;
    doc["command"] = to_string(c.command);
    doc["config"] = json::parse(config_to_json(c));
    for (const Table& t : tables) doc[t.name] = to_json(t);
    if (to_stdout) {
      std::cout << doc.dump(2) << '\n';
      return;
    }
    std::ofstream os(c.out, std::ios::binary | std::ios::trunc);
    os << doc.dump(2) << '\n';
    os.close();
    if (!os) {
      std::error_code ec;
      std::filesystem::remove(c.out, ec);
      throw ConfigError("cannot write output file '" + c.out + "'");
    }
    return;
  }
  if (to_stdout) {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      if (i) std::cout << '\n';
      write_csv(std::cout, tables[i]);
    }
    return;
  }
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    paths.push_back(i == 0 ? std::filesystem::path(c.out) : sidecar(c.out, tables[i].name, ".csv"));
  }
  std::vector<std::filesystem::path> written;
  try {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      std::ofstream os(paths[i], std::ios::binary | std::ios::trunc);
      written.push_back(paths[i]);
      write_csv(os, tables[i]);
      if (!os) throw ConfigError("cannot write output file '" + paths[i].string() + "'");
    }
    if (c.plot_script) {
      const auto p = sidecar(c.out, "plot", ".py");
      std::ofstream os(p, std::ios::trunc);
      written.push_back(p);
      os << plot_script(paths);
      if (!os) throw ConfigError("cannot write plot script '" + p.string() + "'");
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
}

}  // namespace

int run(const RunConfig& config, std::ostream& diag) {
  try {
    validate(config);
    write_outputs(config, compute(config));
    return 0;
  } catch (const ConfigError& e) {
    diag << "sl3c: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NotTracelessError& e) {
    diag << "sl3c: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const FrameSingularError& e) {
    diag << "sl3c: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    diag << "sl3c: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    diag << "sl3c: numerical failure: " << e.what() << '\n';
    return 3;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"sl3c: spectral classification, propagation and Fock dynamics of three-mode couplers"};
  app.set_help_all_flag("--help-all");
  std::string command;
  std::string config_file;
  std::string family, format;
  bool print_config = false;
  RunConfig f;  // receives flag values

  app.add_option("command", command, "classify | map | propagate | loop | fock | holonomy | find-ep");
  app.add_option("--config", config_file, "JSON config file; flags override its fields");
  app.add_flag("--print-config", print_config, "print the resolved config as JSON and exit");
  auto* o_family = app.add_option("--family", family, "pt_cyclic | chiral_1 | chiral_2");
  auto* o_gamma = app.add_option("--gamma", f.gamma, "gain/loss gamma");
  auto* o_k1 = app.add_option("--kappa1", f.kappa1, "coupling kappa1 (kappa for chiral_2)");
  auto* o_k2 = app.add_option("--kappa2", f.kappa2, "coupling kappa2");
  auto* o_zmax = app.add_option("--z-max", f.z_max, "propagation length");
  auto* o_samples = app.add_option("--samples", f.samples, "number of output samples");
  auto* o_n = app.add_option("--n", f.n, "excitation number for fock");
  auto* o_state = app.add_option("--state", f.state, "a,b,c | noon:a,b,c;d,e,f | eigen:k");
  auto* o_on_loop = app.add_flag("--on-loop", f.on_loop, "propagate/fock along the EP3 loop");
  auto* o_r = app.add_option("--loop-r", f.loop_r, "loop radius");
  auto* o_turns = app.add_option("--loop-turns", f.loop_turns, "loop turns");
  auto* o_cx = app.add_option("--loop-cx", f.loop_cx, "holonomy loop centre kappa1/gamma");
  auto* o_cy = app.add_option("--loop-cy", f.loop_cy, "holonomy loop centre kappa2/gamma");
  auto* o_tol = app.add_option("--tol", f.tol, "integrator relative tolerance");
  auto* o_eps = app.add_option("--eps-ep", f.eps_ep, "EP classification threshold");
  auto* o_hsteps = app.add_option("--holonomy-steps", f.holonomy_steps, "holonomy product steps");
  auto* o_xmin = app.add_option("--x-min", f.x_min, "map x range start");
  auto* o_xmax = app.add_option("--x-max", f.x_max, "map x range end");
  auto* o_ymin = app.add_option("--y-min", f.y_min, "map y range start");
  auto* o_ymax = app.add_option("--y-max", f.y_max, "map y range end");
  auto* o_nx = app.add_option("--nx", f.nx, "map points along x");
  auto* o_ny = app.add_option("--ny", f.ny, "map points along y");
  auto* o_blo = app.add_option("--bracket-lo", f.bracket_lo, "find-ep bracket start");
  auto* o_bhi = app.add_option("--bracket-hi", f.bracket_hi, "find-ep bracket end");
  auto* o_out = app.add_option("--out", f.out, "output path (stdout when omitted)");
  auto* o_format = app.add_option("--format", format, "csv | json");
  auto* o_jobs = app.add_option("--jobs", f.jobs, "worker threads for map");
  auto* o_plot = app.add_flag("--plot-script", f.plot_script, "write a matplotlib script next to the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  RunConfig c;
  try {
    if (!config_file.empty()) {
      std::ifstream is(config_file);
      if (!is) throw ConfigError("cannot read config file '" + config_file + "'");
      std::stringstream ss;
      ss << is.rdbuf();
      c = config_from_json(ss.str());
    }
    if (!command.empty()) c.command = command_from_string(command);
    else if (config_file.empty() && !print_config) throw ConfigError("no command given");
    if (o_family->count()) c.family = family_kind_from_string(family);
    if (o_format->count()) {
      if (format == "csv") {
        c.format = Format::Csv;
      } else if (format == "json") {
        c.format = Format::Json;
      } else {
        throw ConfigError("--format must be csv or json");
      }
    }
    const auto take = [](CLI::Option* o, auto& dst, const auto& src) {
      if (o->count()) dst = src;
    };
    take(o_gamma, c.gamma, f.gamma);
    take(o_k1, c.kappa1, f.kappa1);
    take(o_k2, c.kappa2, f.kappa2);
    take(o_zmax, c.z_max, f.z_max);
    take(o_samples, c.samples, f.samples);
    take(o_n, c.n, f.n);
    take(o_state, c.state, f.state);
    take(o_on_loop, c.on_loop, f.on_loop);
    take(o_r, c.loop_r, f.loop_r);
    take(o_turns, c.loop_turns, f.loop_turns);
    take(o_cx, c.loop_cx, f.loop_cx);
    take(o_cy, c.loop_cy, f.loop_cy);
    take(o_tol, c.tol, f.tol);
    take(o_eps, c.eps_ep, f.eps_ep);
    take(o_hsteps, c.holonomy_steps, f.holonomy_steps);
    take(o_xmin, c.x_min, f.x_min);
    take(o_xmax, c.x_max, f.x_max);
    take(o_ymin, c.y_min, f.y_min);
    take(o_ymax, c.y_max, f.y_max);
    take(o_nx, c.nx, f.nx);
    take(o_ny, c.ny, f.ny);
    take(o_blo, c.bracket_lo, f.bracket_lo);
    take(o_bhi, c.bracket_hi, f.bracket_hi);
    take(o_out, c.out, f.out);
    take(o_jobs, c.jobs, f.jobs);
    take(o_plot, c.plot_script, f.plot_script);
    if (print_config) {
      std::cout << config_to_json(c) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "sl3c: configuration error: " << e.what() << '\n';
    return 2;
  }
  return run(c, std::cerr);
}

}  // namespace sl3::cli
