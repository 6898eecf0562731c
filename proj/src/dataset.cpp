#include "semproj/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "semproj/embed_store.hpp"
#include "semproj/error.hpp"

namespace semproj {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

const std::vector<std::string>& Dataset::category_items(const std::string& name) const {
  auto it = categories.find(name);
  if (it == categories.end()) throw InvalidInput("unknown category: " + name);
  return it->second;
}

const FeaturePoles& Dataset::feature_poles(const std::string& name) const {
  auto it = features.find(name);
  if (it == features.end()) throw InvalidInput("unknown feature: " + name);
  return it->second;
}

Dataset parse_dataset_json(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }

  Dataset ds;
  if (!doc.contains("categories") || !doc.contains("features") || !doc.contains("pairs"))
    throw ParseError(origin + ": dataset needs 'categories', 'features' and 'pairs'");

  for (const auto& [name, items] : doc.at("categories").items()) {
    std::vector<std::string> list = items.get<std::vector<std::string>>();
    std::set<std::string> seen;
    for (const auto& item : list) {
      if (item.empty()) throw ParseError(origin + ": empty item in category '" + name + "'");
      if (!seen.insert(normalize_item(item)).second)
        throw ParseError(origin + ": duplicate item '" + item + "' in category '" + name + "'");
    }
    ds.categories.emplace(name, std::move(list));
  }

  for (const auto& [name, poles] : doc.at("features").items()) {
    FeaturePoles fp;
    fp.name = name;
    fp.strong_words = poles.at("strong").get<std::vector<std::string>>();
    fp.weak_words = poles.at("weak").get<std::vector<std::string>>();
    fp.validate();
    ds.features.emplace(name, std::move(fp));
  }

  for (const auto& pair : doc.at("pairs")) {
    const std::string category = pair.at("category").get<std::string>();
    const std::string feature = pair.at("feature").get<std::string>();
    if (!ds.categories.count(category))
      throw ParseError(origin + ": pair references unknown category '" + category + "'");
    if (!ds.features.count(feature))
      throw ParseError(origin + ": pair references unknown feature '" + feature + "'");
    ds.pairs.emplace_back(category, feature);
  }

  if (doc.contains("provenance")) ds.provenance = doc.at("provenance").get<std::string>();

  if (doc.contains("expected_counts")) {
    for (const auto& [name, count] : doc.at("expected_counts").items()) {
      auto it = ds.categories.find(name);
      if (it == ds.categories.end())
        throw ParseError(origin + ": expected_counts references unknown category '" + name + "'");
      if (it->second.size() != count.get<std::size_t>())
        throw ParseError(origin + ": category '" + name + "' has " +
                         std::to_string(it->second.size()) + " items, expected " +
                         std::to_string(count.get<std::size_t>()));
    }
  }
  return ds;
}

Dataset load_dataset(const std::string& path) {
  return parse_dataset_json(read_file(path), path);
}

PairSelection select_pairs(const std::map<ExperimentPair, double>& norming_means,
                           const std::vector<ExperimentPair>& manual_pairs,
                           const std::vector<ExperimentPair>& exclusions,
                           double percentile) {
  if (norming_means.empty()) throw InvalidInput("select_pairs: empty norming input");
  if (percentile <= 0.0 || percentile >= 100.0)
    throw InvalidInput("select_pairs: percentile must lie in (0, 100)");
  for (const auto& [pair, m] : norming_means) {
    if (m < 1.0 || m > 5.0)
      throw InvalidInput("select_pairs: mean rating for " + pair.first + ":" + pair.second +
                         " outside [1, 5]");
  }

  std::vector<double> means;
  means.reserve(norming_means.size());
  for (const auto& [pair, m] : norming_means) means.push_back(m);
  std::sort(means.begin(), means.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(percentile / 100.0 * static_cast<double>(means.size())));
  const double percentile_value = means[std::max<std::size_t>(rank, 1) - 1];

  const std::set<ExperimentPair> excluded(exclusions.begin(), exclusions.end());

  PairSelection sel;
  sel.percentile_value = percentile_value;
  std::set<ExperimentPair> normed;
  double min_admitted = 5.0;
  for (const auto& [pair, m] : norming_means) {
    if (m > percentile_value && !excluded.count(pair)) {
      normed.insert(pair);
      min_admitted = std::min(min_admitted, m);
    }
  }
  sel.threshold = normed.empty() ? percentile_value : min_admitted;

  std::set<ExperimentPair> result = normed;
  for (const auto& pair : manual_pairs) {
    if (!excluded.count(pair)) result.insert(pair);
  }

  const std::set<ExperimentPair> manual(manual_pairs.begin(), manual_pairs.end());
  for (const auto& pair : result) {
    std::string route;
    if (normed.count(pair)) route = "normed";
    if (manual.count(pair)) route = route.empty() ? "manual" : "normed+manual";
    sel.route[pair] = route;
    sel.pairs.push_back(pair);
  }
  return sel;
}

std::map<ExperimentPair, double> load_norming(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open norming file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "category,feature,mean_rating")
    throw ParseError(path + ": expected header 'category,feature,mean_rating'");
  std::map<ExperimentPair, double> means;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 3)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 3 fields");
    double m = 0.0;
    try {
      m = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad mean rating");
    }
    if (!std::isfinite(m) || m < 1.0 || m > 5.0)
      throw ParseError(path + ":" + std::to_string(line_no) + ": mean rating " + fields[2] +
                       " outside the 1-5 scale");
    if (!means.emplace(ExperimentPair{fields[0], fields[1]}, m).second)
      throw ParseError(path + ":" + std::to_string(line_no) + ": duplicate pair");
  }
  if (means.empty()) throw ParseError(path + ": no norming rows");
  return means;
}

std::vector<ExperimentPair> load_pair_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pair list: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "category,feature")
    throw ParseError(path + ": expected header 'category,feature'");
  std::vector<ExperimentPair> pairs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 2)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 2 fields");
    pairs.emplace_back(fields[0], fields[1]);
  }
  return pairs;
}

}  // namespace semproj
