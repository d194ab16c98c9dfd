#include "diamond/atomic_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "json_fields.hpp"

namespace diamond {

namespace {

using nlohmann::json;
using Fields = detail::JsonFields<AtomDataError>;

[[noreturn]] void fail(const std::string& where, const std::string& what) { Fields::fail(where, what); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys,
                std::initializer_list<const char*> optional = {}) {
  Fields::check_keys(obj, where, keys, optional);
}

double number(const json& v, const std::string& where) { return Fields::number(v, where); }
std::string text(const json& v, const std::string& where) { return Fields::text(v, where); }

// Angular momentum given as an integer or half-integer number.
int twice(const json& v, const std::string& where) {
  const double x = number(v, where);
  const double t = 2.0 * x;
  if (std::abs(t - std::round(t)) > 1e-12) fail(where, "expected an integer or half-integer");
  return static_cast<int>(std::lround(t));
}

int twice_key(const std::string& key, const std::string& where) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(key, &used);
  } catch (const std::exception&) {
    fail(where, "key '" + key + "' is not a number");
  }
  if (used != key.size()) fail(where, "key '" + key + "' is not a number");
  const double t = 2.0 * x;
  if (std::abs(t - std::round(t)) > 1e-12) fail(where, "key '" + key + "' is not a half-integer");
  return static_cast<int>(std::lround(t));
}

ZeemanState parse_state(const json& v, const std::string& where) {
  check_keys(v, where, {"level", "F", "m"});
  ZeemanState s{text(v["level"], where + ".level"), twice(v["F"], where + ".F"),
                twice(v["m"], where + ".m")};
  try {
    s.validate();
  } catch (const AtomDataError& e) {
    fail(where, e.what());
  }
  return s;
}

int polarization(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected -1, 0 or 1");
  const int q = v.get<int>();
  if (q < -1 || q > 1) fail(where, "expected -1, 0 or 1");
  return q;
}

std::map<std::string, double> number_map(const json& v, const std::string& where) {
  if (!v.is_object()) fail(where, "expected an object");
  std::map<std::string, double> out;
  for (auto it = v.begin(); it != v.end(); ++it)
    out[it.key()] = number(it.value(), where + "." + it.key());
  return out;
}

std::string transition_key(const std::string& lower, const std::string& upper) {
  return lower + "-" + upper;
}

}  // namespace

void ZeemanState::validate() const {
  if (two_f < 0) throw AtomDataError("F must be >= 0");
  if (std::abs(two_m) > two_f) throw AtomDataError("|m_F| exceeds F in " + to_string(*this));
  if ((two_f + two_m) % 2 != 0) throw AtomDataError("F + m_F must be an integer in " + to_string(*this));
}

std::string to_string(const ZeemanState& s) {
  auto half = [](int t) {
    return t % 2 == 0 ? std::to_string(t / 2) : std::to_string(t) + "/2";
  };
  return s.level + "(F=" + half(s.two_f) + ",m=" + half(s.two_m) + ")";
}

const FineLevel& AtomSpec::level(const std::string& id) const {
  for (const auto& l : levels)
    if (l.id == id) return l;
  throw AtomDataError("unknown level '" + id + "' in " + species);
}

bool AtomSpec::has_level(const std::string& id) const {
  return std::any_of(levels.begin(), levels.end(), [&](const FineLevel& l) { return l.id == id; });
}

const RoleAssignment& AtomSpec::role(const std::string& name) const {
  for (const auto& r : roles)
    if (r.name == name) return r;
  throw AtomDataError("unknown role assignment '" + name + "' in " + species);
}

double AtomSpec::gamma(const std::string& id) const {
  const auto it = gammas_2pi_mhz.find(id);
  if (it == gammas_2pi_mhz.end()) throw AtomDataError("missing decay rate for level " + id);
  return it->second / reference_gamma_2pi_mhz;
}

double AtomSpec::shift(const std::string& id, int two_f) const {
  const auto lv = splittings_mhz.find(id);
  if (lv == splittings_mhz.end()) throw AtomDataError("missing splitting data for level " + id);
  const auto it = lv->second.find(two_f);
  if (it == lv->second.end())
    throw AtomDataError("missing splitting data for " + id + " 2F=" + std::to_string(two_f));
  // A shift of nu MHz is an angular frequency 2 pi nu; the unit is 2 pi gamma_ref.
  return it->second / reference_gamma_2pi_mhz;
}

double AtomSpec::reduced_dipole(const std::string& lower, const std::string& upper) const {
  const auto it = reduced_dipoles_ea0.find(transition_key(lower, upper));
  if (it == reduced_dipoles_ea0.end())
    throw AtomDataError("missing reduced dipole for " + transition_key(lower, upper));
  return it->second;
}

double AtomSpec::wavelength_nm(const std::string& lower, const std::string& upper) const {
  const auto it = wavelengths_nm.find(transition_key(lower, upper));
  if (it == wavelengths_nm.end())
    throw AtomDataError("missing wavelength for " + transition_key(lower, upper));
  return it->second;
}

std::vector<ZeemanState> AtomSpec::zeeman_states(const std::string& id) const {
  std::vector<ZeemanState> out;
  for (int tf : level(id).two_f)
    for (int tm = -tf; tm <= tf; tm += 2) out.push_back({id, tf, tm});
  return out;
}

void AtomSpec::validate() const {
  if (schema_version != kAtomSchemaVersion)
    throw AtomDataError("unsupported schema_version " + std::to_string(schema_version));
  if (!(reference_gamma_2pi_mhz > 0.0))
    throw AtomDataError("reference_gamma_2pi_MHz must be positive");
  if (two_i < 0) throw AtomDataError("nuclear_spin must be >= 0");
  std::set<std::string> ids;
  for (const auto& l : levels) {
    if (!ids.insert(l.id).second) throw AtomDataError("duplicate level " + l.id);
    if (l.two_f.empty()) throw AtomDataError("level " + l.id + " lists no F values");
    for (int tf : l.two_f) {
      if (tf < std::abs(l.two_j - two_i) || tf > l.two_j + two_i || (tf + l.two_j + two_i) % 2)
        throw AtomDataError("level " + l.id + ": F=" + std::to_string(tf / 2.0) +
                            " is not allowed by J and I");
      shift(l.id, tf);
    }
    if (!gammas_2pi_mhz.count(l.id)) throw AtomDataError("missing decay rate for level " + l.id);
  }
  for (const auto& [id, _] : splittings_mhz)
    if (!ids.count(id)) throw AtomDataError("splittings_MHz: unknown level " + id);
  for (const auto& [id, rate] : gammas_2pi_mhz) {
    if (!ids.count(id)) throw AtomDataError("gammas_2pi_MHz: unknown level " + id);
    if (!(rate >= 0.0)) throw AtomDataError("gammas_2pi_MHz." + id + " must be >= 0");
    if (rate > 0.0 && !branching.count(id))
      throw AtomDataError("branching: decaying level " + id + " has no entry");
  }
  for (const auto& [upper, lowers] : branching) {
    if (!ids.count(upper)) throw AtomDataError("branching: unknown level " + upper);
    double sum = 0.0;
    for (const auto& [lower, f] : lowers) {
      if (!ids.count(lower)) throw AtomDataError("branching." + upper + ": unknown level " + lower);
      if (!(f >= 0.0)) throw AtomDataError("branching." + upper + "." + lower + " must be >= 0");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw AtomDataError("branching." + upper + " sums to " + std::to_string(sum) + ", not 1");
  }
  auto check_transitions = [&](const std::map<std::string, double>& m, const char* name) {
    for (const auto& [key, v] : m) {
      const auto dash = key.find('-');
      if (dash == std::string::npos || !ids.count(key.substr(0, dash)) ||
          !ids.count(key.substr(dash + 1)))
        throw AtomDataError(std::string(name) + ": key '" + key + "' is not 'lower-upper'");
      if (!(v > 0.0)) throw AtomDataError(std::string(name) + "." + key + " must be positive");
    }
  };
  check_transitions(reduced_dipoles_ea0, "reduced_dipoles_ea0");
  check_transitions(wavelengths_nm, "wavelengths_nm");
  std::set<std::string> role_names;
  for (const auto& r : roles) {
    if (!role_names.insert(r.name).second) throw AtomDataError("duplicate role " + r.name);
    for (const ZeemanState* s : {&r.ground0, &r.ground1, &r.e1, &r.e2, &r.e3}) {
      const auto& lv = level(s->level);
      if (std::find(lv.two_f.begin(), lv.two_f.end(), s->two_f) == lv.two_f.end())
        throw AtomDataError("role " + r.name + ": " + to_string(*s) + " is not a level of the atom");
      s->validate();
    }
    const auto& q = r.polarizations;
    const std::pair<const ZeemanState*, const ZeemanState*> legs[] = {
        {&r.ground0, &r.e1}, {&r.e1, &r.e2}, {&r.e3, &r.e2}, {&r.ground0, &r.e3}};
    const int qs[] = {q.omega1, q.omega_e, q.cavity, q.omega2};
    for (int k = 0; k < 4; ++k) {
      const auto [lo, up] = legs[k];
      if (up->two_m - lo->two_m != 2 * qs[k])
        throw AtomDataError("role " + r.name + ": polarization of " + to_string(*lo) + " -> " +
                            to_string(*up) + " does not match m_F");
      reduced_dipole(lo->level, up->level);
    }
  }
}

AtomSpec parse_atom_spec(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw AtomDataError(std::string("atomic data is not valid JSON: ") + e.what());
  }
  check_keys(root, "atomic data",
             {"schema_version", "data_version", "species", "nuclear_spin",
              "reference_gamma_2pi_MHz", "levels", "splittings_MHz", "gammas_2pi_MHz",
              "branching", "reduced_dipoles_ea0", "wavelengths_nm", "roles"},
             {"provenance"});
  AtomSpec a;
  if (!root["schema_version"].is_number_integer()) fail("schema_version", "expected an integer");
  a.schema_version = root["schema_version"].get<int>();
  if (a.schema_version != kAtomSchemaVersion)
    fail("schema_version", "unsupported version " + std::to_string(a.schema_version));
  a.data_version = text(root["data_version"], "data_version");
  a.species = text(root["species"], "species");
  a.two_i = twice(root["nuclear_spin"], "nuclear_spin");
  a.reference_gamma_2pi_mhz = number(root["reference_gamma_2pi_MHz"], "reference_gamma_2pi_MHz");

  if (!root["levels"].is_array()) fail("levels", "expected an array");
  for (std::size_t i = 0; i < root["levels"].size(); ++i) {
    const auto& v = root["levels"][i];
    const std::string where = "levels[" + std::to_string(i) + "]";
    check_keys(v, where, {"id", "n", "L", "J", "F"});
    FineLevel l;
    l.id = text(v["id"], where + ".id");
    if (!v["n"].is_number_integer() || !v["L"].is_number_integer())
      fail(where, "n and L must be integers");
    l.n = v["n"].get<int>();
    l.l = v["L"].get<int>();
    l.two_j = twice(v["J"], where + ".J");
    if (!v["F"].is_array() || v["F"].empty()) fail(where + ".F", "expected a non-empty array");
    for (const auto& f : v["F"]) l.two_f.push_back(twice(f, where + ".F"));
    std::sort(l.two_f.begin(), l.two_f.end());
    a.levels.push_back(std::move(l));
  }

  const auto& split = root["splittings_MHz"];
  if (!split.is_object()) fail("splittings_MHz", "expected an object");
  for (auto it = split.begin(); it != split.end(); ++it) {
    const std::string where = "splittings_MHz." + it.key();
    if (!it.value().is_object()) fail(where, "expected an object keyed by F");
    for (auto f = it.value().begin(); f != it.value().end(); ++f)
      a.splittings_mhz[it.key()][twice_key(f.key(), where)] =
          number(f.value(), where + "." + f.key());
  }
  a.gammas_2pi_mhz = number_map(root["gammas_2pi_MHz"], "gammas_2pi_MHz");
  const auto& br = root["branching"];
  if (!br.is_object()) fail("branching", "expected an object");
  for (auto it = br.begin(); it != br.end(); ++it)
    a.branching[it.key()] = number_map(it.value(), "branching." + it.key());
  a.reduced_dipoles_ea0 = number_map(root["reduced_dipoles_ea0"], "reduced_dipoles_ea0");
  a.wavelengths_nm = number_map(root["wavelengths_nm"], "wavelengths_nm");

  if (!root["roles"].is_array()) fail("roles", "expected an array");
  for (std::size_t i = 0; i < root["roles"].size(); ++i) {
    const auto& v = root["roles"][i];
    const std::string where = "roles[" + std::to_string(i) + "]";
    check_keys(v, where, {"name", "ground0", "ground1", "e1", "e2", "e3", "polarizations"});
    RoleAssignment r;
    r.name = text(v["name"], where + ".name");
    r.ground0 = parse_state(v["ground0"], where + ".ground0");
    r.ground1 = parse_state(v["ground1"], where + ".ground1");
    r.e1 = parse_state(v["e1"], where + ".e1");
    r.e2 = parse_state(v["e2"], where + ".e2");
    r.e3 = parse_state(v["e3"], where + ".e3");
    const auto& q = v["polarizations"];
    const std::string wq = where + ".polarizations";
    check_keys(q, wq, {"omega1", "omega_e", "cavity", "omega2"});
    r.polarizations = {polarization(q["omega1"], wq + ".omega1"),
                       polarization(q["omega_e"], wq + ".omega_e"),
                       polarization(q["cavity"], wq + ".cavity"),
                       polarization(q["omega2"], wq + ".omega2")};
    a.roles.push_back(std::move(r));
  }
  if (root.contains("provenance")) {
    const auto& p = root["provenance"];
    if (!p.is_object()) fail("provenance", "expected an object");
    for (auto it = p.begin(); it != p.end(); ++it)
      a.provenance[it.key()] = text(it.value(), "provenance." + it.key());
  }
  a.validate();
  return a;
}

AtomSpec load_atom_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AtomDataError("cannot open atomic data file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_atom_spec(buf.str());
  } catch (const AtomDataError& e) {
    throw AtomDataError(path + ": " + e.what());
  }
}

std::string bundled_data_path(const std::string& species) {
  return std::string(DIAMOND_DATA_DIR) + "/" + species + ".json";
}

AtomSpec bundled_atom_spec(const std::string& species) {
  if (species != "cesium" && species != "rubidium")
    throw AtomDataError("no bundled data for species '" + species + "'");
  return load_atom_spec(bundled_data_path(species));
}

}  // namespace diamond
