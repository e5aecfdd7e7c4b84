#include "bnblab/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace bnblab {

using json = nlohmann::json;

namespace {

constexpr std::string_view kKnownBases[] = {"is_on", "switch_on", "switch_off", "startup"};

int expected_indices(std::string_view base) { return base == "startup" ? 3 : 2; }

// Non-negative decimal without leading zeros, so rendering reproduces the text.
std::optional<int> parse_index(std::string_view s) {
  if (s.empty() || s.size() > 9) return std::nullopt;
  if (s.size() > 1 && s[0] == '0') return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

double read_bound(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ModelError(where + ": expected number or \"inf\"/\"-inf\"");
}

json write_bound(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return v;
}

const json& field(const json& obj, const char* name, const std::string& where) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ModelError(where + ": missing field \"" + name + "\"");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ModelError(where + ": expected number");
  return j.get<double>();
}

}  // namespace

bool is_known_base(std::string_view base) {
  return std::find(std::begin(kKnownBases), std::end(kKnownBases), base) != std::end(kKnownBases);
}

VariableKey parse_variable_key(std::string_view raw) {
  VariableKey key;
  key.raw = std::string(raw);
  key.base = key.raw;

  const auto open = raw.find('[');
  if (open == std::string_view::npos || raw.empty() || raw.back() != ']') return key;
  const std::string_view base = raw.substr(0, open);
  if (!is_known_base(base)) return key;

  std::vector<int> idx;
  std::string_view inner = raw.substr(open + 1, raw.size() - open - 2);
  while (true) {
    const auto comma = inner.find(',');
    const auto v = parse_index(inner.substr(0, comma));
    if (!v) return key;
    idx.push_back(*v);
    if (comma == std::string_view::npos) break;
    inner.remove_prefix(comma + 1);
  }
  if (static_cast<int>(idx.size()) != expected_indices(base)) return key;

  key.base = std::string(base);
  key.generator = idx[0];
  key.time = idx[1];
  if (idx.size() == 3) key.startup_category = idx[2];
  return key;
}

std::string VariableKey::render() const {
  if (!generator || !time || !is_known_base(base)) return raw.empty() ? base : raw;
  std::string out = base + "[" + std::to_string(*generator) + "," + std::to_string(*time);
  if (startup_category) out += "," + std::to_string(*startup_category);
  return out + "]";
}

std::string_view to_string(Sense sense) {
  switch (sense) {
    case Sense::ge: return ">=";
    case Sense::le: return "<=";
    case Sense::eq: return "=";
  }
  return "?";
}

int MILPInstance::num_binaries() const {
  return static_cast<int>(std::count_if(variables.begin(), variables.end(),
                                        [](const Variable& v) { return v.is_binary(); }));
}

double MILPInstance::objective(const std::vector<double>& x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < variables.size(); ++j) total += variables[j].obj * x[j];
  return total;
}

void MILPInstance::validate() const {
  for (int j = 0; j < num_variables(); ++j) {
    const Variable& v = variables[j];
    const std::string where = "variable " + std::to_string(j) + " (" + v.key.raw + ")";
    if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.obj))
      throw ModelError(where + ": non-finite data");
    if (v.lower > v.upper) throw ModelError(where + ": lower bound exceeds upper bound");
    if (v.is_binary() && (v.lower != 0.0 || v.upper != 1.0))
      throw ModelError(where + ": binary variable must have bounds [0, 1]");
  }
  std::vector<int> seen(variables.size(), -1);
  for (int i = 0; i < num_constraints(); ++i) {
    const Constraint& c = constraints[i];
    const std::string where = "constraint " + std::to_string(i);
    if (c.terms.empty()) throw ModelError(where + ": empty term list");
    if (!std::isfinite(c.rhs)) throw ModelError(where + ": non-finite right-hand side");
    for (const Term& t : c.terms) {
      if (t.var < 0 || t.var >= num_variables())
        throw ModelError(where + ": variable index " + std::to_string(t.var) + " out of range");
      if (!std::isfinite(t.coeff)) throw ModelError(where + ": non-finite coefficient");
      if (seen[t.var] == i)
        throw ModelError(where + ": duplicate variable index " + std::to_string(t.var));
      seen[t.var] = i;
    }
  }
}

std::string instance_to_json(const MILPInstance& instance) {
  std::ostringstream out;
  out << "{\n\"name\": " << json(instance.name).dump() << ",\n\"variables\": [";
  for (std::size_t j = 0; j < instance.variables.size(); ++j) {
    const Variable& v = instance.variables[j];
    json jv = json::object();
    jv["name"] = v.key.raw;
    jv["kind"] = v.is_binary() ? "binary" : "continuous";
    jv["lb"] = write_bound(v.lower);
    jv["ub"] = write_bound(v.upper);
    jv["obj"] = v.obj;
    out << (j ? ",\n" : "\n") << jv.dump();
  }
  out << "\n],\n\"constraints\": [";
  for (std::size_t i = 0; i < instance.constraints.size(); ++i) {
    const Constraint& c = instance.constraints[i];
    json terms = json::array();
    for (const Term& t : c.terms) terms.push_back(json::array({t.var, t.coeff}));
    json jc = json::object();
    jc["terms"] = std::move(terms);
    jc["sense"] = to_string(c.sense);
    jc["rhs"] = c.rhs;
    out << (i ? ",\n" : "\n") << jc.dump();
  }
  out << "\n]\n}\n";
  return out.str();
}

MILPInstance instance_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw ModelError("instance parse error at line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) throw ModelError("instance: top level must be an object");

  MILPInstance inst;
  if (auto it = doc.find("name"); it != doc.end()) {
    if (!it->is_string()) throw ModelError("name: expected string");
    inst.name = it->get<std::string>();
  }
  if (auto it = doc.find("sense"); it != doc.end()) {
    if (!it->is_string() || (*it != "min" && *it != "minimize"))
      throw ModelError("sense: only minimization is supported");
  }

  const json& vars = field(doc, "variables", "instance");
  if (!vars.is_array()) throw ModelError("variables: expected array");
  inst.variables.reserve(vars.size());
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const std::string where = "variables[" + std::to_string(j) + "]";
    const json& jv = vars[j];
    if (!jv.is_object()) throw ModelError(where + ": expected object");
    const json& name = field(jv, "name", where);
    if (!name.is_string()) throw ModelError(where + ".name: expected string");
    const json& kind = field(jv, "kind", where);
    Variable v;
    v.key = parse_variable_key(name.get<std::string>());
    if (kind == "binary") v.kind = VarKind::binary;
    else if (kind == "continuous") v.kind = VarKind::continuous;
    else throw ModelError(where + ".kind: expected \"binary\" or \"continuous\"");
    v.lower = read_bound(field(jv, "lb", where), where + ".lb");
    v.upper = read_bound(field(jv, "ub", where), where + ".ub");
    v.obj = number(field(jv, "obj", where), where + ".obj");
    inst.variables.push_back(std::move(v));
  }

  const json& rows = field(doc, "constraints", "instance");
  if (!rows.is_array()) throw ModelError("constraints: expected array");
  inst.constraints.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string where = "constraints[" + std::to_string(i) + "]";
    const json& jc = rows[i];
    if (!jc.is_object()) throw ModelError(where + ": expected object");
    Constraint c;
    const json& terms = field(jc, "terms", where);
    if (!terms.is_array()) throw ModelError(where + ".terms: expected array");
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const json& t = terms[k];
      const std::string tw = where + ".terms[" + std::to_string(k) + "]";
      if (!t.is_array() || t.size() != 2 || !t[0].is_number_integer() || !t[1].is_number())
        throw ModelError(tw + ": expected [varIndex, coeff]");
      c.terms.push_back({t[0].get<int>(), t[1].get<double>()});
    }
    const json& sense = field(jc, "sense", where);
    if (sense == ">=") c.sense = Sense::ge;
    else if (sense == "<=") c.sense = Sense::le;
    else if (sense == "=" || sense == "==") c.sense = Sense::eq;
    else throw ModelError(where + ".sense: expected \">=\", \"<=\" or \"=\"");
    c.rhs = number(field(jc, "rhs", where), where + ".rhs");
    inst.constraints.push_back(std::move(c));
  }

  inst.validate();
  return inst;
}

MILPInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open instance file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return instance_from_json(buf.str());
  } catch (const ModelError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

void save_instance(const MILPInstance& instance, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write instance file " + path.string());
  out << instance_to_json(instance);
  if (!out) throw ModelError("write failed: " + path.string());
}

}  // namespace bnblab
