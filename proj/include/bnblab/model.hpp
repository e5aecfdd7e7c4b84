#pragma once

// MILP instance model: minimize c'x subject to sparse linear rows and bounds,
// with binary and continuous columns. Variables carry a structured key so the
// same column can be recognised across instances of one family.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bnblab {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structured identity of a variable, e.g. "startup[2,7,1]".
struct VariableKey {
  std::string base;
  std::optional<int> generator;
  std::optional<int> time;
  std::optional<int> startup_category;
  std::string raw;

  /// Canonical text; equals raw for every key produced by parse_variable_key.
  std::string render() const;

  friend bool operator==(const VariableKey&, const VariableKey&) = default;
};

/// Recognises is_on[g,t], switch_on[g,t], switch_off[g,t] and startup[g,t,s].
/// Anything else becomes {base = raw} with no indices. Never throws.
VariableKey parse_variable_key(std::string_view raw);

/// True for the four unit-commitment base names understood by parse_variable_key.
bool is_known_base(std::string_view base);

enum class VarKind { binary, continuous };

struct Variable {
  VariableKey key;
  VarKind kind = VarKind::continuous;
  double lower = 0.0;
  double upper = 0.0;
  double obj = 0.0;

  bool is_binary() const { return kind == VarKind::binary; }
  friend bool operator==(const Variable&, const Variable&) = default;
};

enum class Sense { ge, le, eq };

struct Term {
  int var = 0;
  double coeff = 0.0;
  friend bool operator==(const Term&, const Term&) = default;
};

struct Constraint {
  std::vector<Term> terms;
  Sense sense = Sense::ge;
  double rhs = 0.0;
  friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// Minimisation problem. Immutable once validated; share freely across solves.
struct MILPInstance {
  std::string name;
  std::vector<Variable> variables;
  std::vector<Constraint> constraints;

  int num_variables() const { return static_cast<int>(variables.size()); }
  int num_constraints() const { return static_cast<int>(constraints.size()); }
  int num_binaries() const;
  int num_continuous() const { return num_variables() - num_binaries(); }

  /// Throws ModelError naming the offending variable or constraint.
  void validate() const;

  double objective(const std::vector<double>& x) const;

  friend bool operator==(const MILPInstance&, const MILPInstance&) = default;
};

/// JSON instance document (see README). Infinite bounds are written as the
/// strings "inf" / "-inf".
std::string instance_to_json(const MILPInstance& instance);
MILPInstance instance_from_json(std::string_view text);

MILPInstance load_instance(const std::filesystem::path& path);
void save_instance(const MILPInstance& instance, const std::filesystem::path& path);

std::string_view to_string(Sense sense);

}  // namespace bnblab
