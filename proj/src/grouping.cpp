#include "bnblab/grouping.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bnblab {

using json = nlohmann::json;

std::string_view to_string(GroupingScheme scheme) {
  switch (scheme) {
    case GroupingScheme::et: return "et";
    case GroupingScheme::pna: return "pna";
    case GroupingScheme::pti: return "pti";
    case GroupingScheme::pge: return "pge";
    case GroupingScheme::pv: return "pv";
  }
  return "?";
}

std::optional<GroupingScheme> parse_scheme(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto s : {GroupingScheme::et, GroupingScheme::pna, GroupingScheme::pti, GroupingScheme::pge,
                 GroupingScheme::pv})
    if (lower == to_string(s)) return s;
  return std::nullopt;
}

std::string GroupKey::id() const {
  std::string out(to_string(scheme));
  if (scheme == GroupingScheme::et) return out;
  if (scheme == GroupingScheme::pv) return out + ":" + raw;
  out += ":" + base;
  if (time) out += ":t" + std::to_string(*time);
  if (generator) out += ":g" + std::to_string(*generator);
  if (startup_category) out += ":s" + std::to_string(*startup_category);
  return out;
}

std::string url_encode(std::string_view text) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '.' || c == '_' || c == '-') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

std::string url_decode(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%' && i + 2 < text.size()) {
      out += static_cast<char>(std::stoi(std::string(text.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += text[i];
    }
  }
  return out;
}

std::string GroupKey::file_name() const { return url_encode(id()) + ".json"; }

GroupKey group_of(GroupingScheme scheme, const VariableKey& key) {
  GroupKey g;
  const bool structured = is_known_base(key.base) && key.generator && key.time &&
                          (key.base != "startup" || key.startup_category);
  if (scheme == GroupingScheme::et || !structured) return g;
  g.scheme = scheme;
  if (scheme == GroupingScheme::pv) {
    g.raw = key.raw;
    return g;
  }
  g.base = key.base;
  g.startup_category = key.startup_category;
  if (scheme == GroupingScheme::pti) g.time = key.time;
  if (scheme == GroupingScheme::pge) g.generator = key.generator;
  return g;
}

Hyperparams hyperparams_for(GroupingScheme scheme) {
  Hyperparams hp;
  switch (scheme) {
    case GroupingScheme::et: hp.min_split = 10; hp.max_depth = 25; break;
    case GroupingScheme::pv:
    case GroupingScheme::pge: hp.min_split = 5; hp.max_depth = 12; break;
    case GroupingScheme::pti: hp.min_split = 8; hp.max_depth = 12; break;
    case GroupingScheme::pna: hp.min_split = 8; hp.max_depth = 16; break;
  }
  return hp;
}

void ModelStore::add_group(GroupKey key, Forest forest) {
  if (key.scheme != scheme_ || key.is_general())
    throw ForestError("group " + key.id() + " does not belong to a " +
                      std::string(to_string(scheme_)) + " store");
  groups_.insert_or_assign(std::move(key), std::move(forest));
}

namespace {

json key_to_json(const GroupKey& k) {
  json j;
  j["id"] = k.id();
  j["base"] = k.base;
  j["raw"] = k.raw;
  j["generator"] = k.generator ? json(*k.generator) : json(nullptr);
  j["time"] = k.time ? json(*k.time) : json(nullptr);
  j["startup_category"] = k.startup_category ? json(*k.startup_category) : json(nullptr);
  j["file"] = k.file_name();
  return j;
}

std::optional<int> opt_int(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

}  // namespace

// Layout: general.json, one <file_name()> per group, store.json indexing them.
void ModelStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_model(general_, dir / "general.json");
  json index;
  index["scheme"] = to_string(scheme_);
  index["feature_layout_version"] = kFeatureLayoutVersion;
  json groups = json::array();
  for (const auto& [key, forest] : groups_) {
    save_model(forest, dir / key.file_name());
    groups.push_back(key_to_json(key));
  }
  index["groups"] = std::move(groups);
  index["sample_counts"] = sample_counts_;
  std::ofstream out(dir / "store.json", std::ios::binary | std::ios::trunc);
  if (!out) throw ForestError("cannot write " + (dir / "store.json").string());
  out << index.dump(1) << "\n";
}

ModelStore ModelStore::load(const std::filesystem::path& dir) {
  const auto index_path = dir / "store.json";
  std::ifstream in(index_path, std::ios::binary);
  if (!in) throw ForestError("no model store at " + dir.string() + " (missing store.json)");
  json index;
  try {
    index = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ForestError(index_path.string() + ": " + e.what());
  }
  try {
    const auto scheme = parse_scheme(index.at("scheme").get<std::string>());
    if (!scheme) throw ForestError(index_path.string() + ": unknown scheme");
    if (index.at("feature_layout_version") != kFeatureLayoutVersion)
      throw ForestError(index_path.string() + ": feature layout mismatch");
    ModelStore store(*scheme, load_model(dir / "general.json"));
    for (const json& g : index.at("groups")) {
      GroupKey key;
      key.scheme = *scheme;
      key.base = g.at("base").get<std::string>();
      key.raw = g.at("raw").get<std::string>();
      key.generator = opt_int(g.at("generator"));
      key.time = opt_int(g.at("time"));
      key.startup_category = opt_int(g.at("startup_category"));
      if (key.id() != g.at("id").get<std::string>())
        throw ForestError(index_path.string() + ": inconsistent group entry " + key.id());
      store.groups_.emplace(key, load_model(dir / key.file_name()));
    }
    store.sample_counts_ = index.at("sample_counts").get<std::map<std::string, long>>();
    return store;
  } catch (const json::exception& e) {
    throw ForestError(index_path.string() + ": " + e.what());
  }
}

ResolvedModel resolve_model(const ModelStore& store, const VariableKey& key) {
  if (store.scheme() == GroupingScheme::et) return {&store.general(), false};
  const GroupKey g = group_of(store.scheme(), key);
  if (!g.is_general()) {
    if (auto it = store.groups().find(g); it != store.groups().end()) return {&it->second, false};
  }
  return {&store.general(), true};
}

}  // namespace bnblab
