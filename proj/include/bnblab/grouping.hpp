#pragma once

// Grouping schemes decide which regression model scores a candidate:
//   ET   one general model
//   PNA  (base, startup category)
//   PTI  (base, time, startup category)
//   PGE  (base, generator, startup category)
//   PV   one model per variable name
// Non-startup bases carry no startup category. Keys whose base is unknown, or
// which lack an index the scheme needs, fall into the ET bucket.

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "bnblab/forest.hpp"
#include "bnblab/model.hpp"

namespace bnblab {

enum class GroupingScheme { et, pna, pti, pge, pv };

std::string_view to_string(GroupingScheme scheme);
/// Accepts et, pna, pti, pge, pv (case-insensitive).
std::optional<GroupingScheme> parse_scheme(std::string_view text);

struct GroupKey {
  GroupingScheme scheme = GroupingScheme::et;
  std::string base;
  std::optional<int> generator;
  std::optional<int> time;
  std::optional<int> startup_category;
  std::string raw;

  bool is_general() const { return scheme == GroupingScheme::et; }
  /// Stable text form, e.g. "pge:is_on:g7" or "pv:is_on[7,3]".
  std::string id() const;
  /// id() with every byte outside [A-Za-z0-9._-] percent-encoded.
  std::string file_name() const;

  auto operator<=>(const GroupKey&) const = default;
  bool operator==(const GroupKey&) const = default;
};

GroupKey group_of(GroupingScheme scheme, const VariableKey& key);

/// Forest hyperparameters used for models of the given scheme.
Hyperparams hyperparams_for(GroupingScheme scheme);

std::string url_encode(std::string_view text);
std::string url_decode(std::string_view text);

/// General forest plus per-group forests for one scheme.
class ModelStore {
 public:
  ModelStore() = default;
  ModelStore(GroupingScheme scheme, Forest general) : scheme_(scheme), general_(std::move(general)) {}

  GroupingScheme scheme() const { return scheme_; }
  const Forest& general() const { return general_; }
  const std::map<GroupKey, Forest>& groups() const { return groups_; }
  /// Training-sample count per group (including groups without a model).
  const std::map<std::string, long>& sample_counts() const { return sample_counts_; }

  void add_group(GroupKey key, Forest forest);
  void set_sample_count(const std::string& group_id, long count) { sample_counts_[group_id] = count; }

  /// Total number of forests, general model included.
  std::size_t model_count() const { return 1 + groups_.size(); }

  void save(const std::filesystem::path& dir) const;
  static ModelStore load(const std::filesystem::path& dir);

 private:
  GroupingScheme scheme_ = GroupingScheme::et;
  Forest general_;
  std::map<GroupKey, Forest> groups_;
  std::map<std::string, long> sample_counts_;
};

struct ResolvedModel {
  const Forest* forest = nullptr;
  bool used_fallback = false;
};

/// The group's forest when trained; otherwise the general forest with
/// used_fallback set. ET always resolves to the general forest without
/// counting a fallback.
ResolvedModel resolve_model(const ModelStore& store, const VariableKey& key);

}  // namespace bnblab
