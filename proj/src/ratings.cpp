#include "semproj/ratings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "semproj/error.hpp"
#include "semproj/eval_stats.hpp"
#include "semproj/projection.hpp"

namespace semproj {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::vector<double> row_vector(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

std::vector<double> leave_one_out_mean(const Eigen::MatrixXd& z, Eigen::Index skip) {
  std::vector<double> out(static_cast<std::size_t>(z.cols()), 0.0);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    if (r == skip) continue;
    for (Eigen::Index c = 0; c < z.cols(); ++c) out[static_cast<std::size_t>(c)] += z(r, c);
  }
  const double denom = static_cast<double>(z.rows() - 1);
  for (double& v : out) v /= denom;
  return out;
}

void require_zscored(const RatingsTable& table, const char* op) {
  if (!table.has_zscores())
    throw InvalidInput(std::string(op) + ": table must be z-scored first");
}

}  // namespace

RatingsTable load_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ratings file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "experiment,participant,item,rating")
    throw ParseError(path + ": expected header 'experiment,participant,item,rating'");

  std::string experiment;
  std::vector<std::string> participants, items;
  std::map<std::string, std::size_t> pidx, iidx;
  std::map<std::pair<std::size_t, std::size_t>, double> cells;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 4)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 4 fields");
    if (experiment.empty()) {
      experiment = fields[0];
    } else if (fields[0] != experiment) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": mixed experiment ids in one file");
    }
    double rating = 0.0;
    try {
      rating = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad rating value");
    }
    if (!std::isfinite(rating) || rating < 0.0 || rating > 100.0)
      throw ParseError(path + ":" + std::to_string(line_no) + ": rating " + fields[3] +
                       " outside [0, 100]");
    auto [pit, pnew] = pidx.emplace(fields[1], participants.size());
    if (pnew) participants.push_back(fields[1]);
    auto [iit, inew] = iidx.emplace(fields[2], items.size());
    if (inew) items.push_back(fields[2]);
    if (!cells.emplace(std::make_pair(pit->second, iit->second), rating).second)
      throw ParseError(path + ":" + std::to_string(line_no) + ": duplicate (participant, item) pair '" +
                       fields[1] + "', '" + fields[2] + "'");
  }

  if (participants.empty()) throw ParseError(path + ": no rating rows");

  RatingsTable table;
  const auto colon = experiment.find(':');
  if (colon == std::string::npos)
    throw ParseError(path + ": experiment id must be 'category:feature', got '" + experiment + "'");
  table.category = experiment.substr(0, colon);
  table.feature = experiment.substr(colon + 1);
  table.participants = participants;
  table.items = items;
  table.raw.resize(static_cast<Eigen::Index>(participants.size()),
                   static_cast<Eigen::Index>(items.size()));
  for (std::size_t p = 0; p < participants.size(); ++p) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto it = cells.find({p, i});
      if (it == cells.end())
        throw ParseError(path + ": participant '" + participants[p] + "' missing item '" +
                         items[i] + "'");
      table.raw(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = it->second;
    }
  }
  return table;
}

RatingsTable zscore_participants(const RatingsTable& table, std::vector<std::string>* dropped) {
  if (table.items.size() < 2)
    throw InvalidInput("zscore_participants: at least 2 items required");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index p = 0; p < table.raw.rows(); ++p) {
    const double first = table.raw(p, 0);
    bool constant = true;
    for (Eigen::Index i = 1; i < table.raw.cols(); ++i) {
      if (table.raw(p, i) != first) {
        constant = false;
        break;
      }
    }
    if (constant) {
      if (dropped) dropped->push_back(table.participants[static_cast<std::size_t>(p)]);
    } else {
      keep.push_back(p);
    }
  }
  if (keep.empty()) throw InvalidInput("zscore_participants: all participants gave constant ratings");

  RatingsTable out;
  out.category = table.category;
  out.feature = table.feature;
  out.items = table.items;
  out.raw.resize(static_cast<Eigen::Index>(keep.size()), table.raw.cols());
  out.zscored.resize(static_cast<Eigen::Index>(keep.size()), table.raw.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const Eigen::Index p = keep[k];
    out.participants.push_back(table.participants[static_cast<std::size_t>(p)]);
    out.raw.row(static_cast<Eigen::Index>(k)) = table.raw.row(p);
    auto z = zscore(row_vector(table.raw, p));
    for (Eigen::Index c = 0; c < table.raw.cols(); ++c)
      out.zscored(static_cast<Eigen::Index>(k), c) = z[static_cast<std::size_t>(c)];
  }
  return out;
}

ReliabilityReport inter_subject_r(const RatingsTable& table) {
  require_zscored(table, "inter_subject_r");
  if (table.participants.size() < 3)
    throw InvalidInput("inter_subject_r: at least 3 participants required");
  if (table.items.size() < 3)
    throw InvalidInput("inter_subject_r: at least 3 items required");

  ReliabilityReport report;
  report.n_items = static_cast<int>(table.items.size());
  report.n_participants_retained = static_cast<int>(table.participants.size());
  double fisher_sum = 0.0;
  for (Eigen::Index p = 0; p < table.zscored.rows(); ++p) {
    const auto others = leave_one_out_mean(table.zscored, p);
    const double r = pearson_r(row_vector(table.zscored, p), others);
    report.is_r.push_back(r);
    const double clamped = std::clamp(r, -0.9999999999, 0.9999999999);
    report.fisher_z.push_back(std::atanh(clamped));
    fisher_sum += report.fisher_z.back();
  }
  report.mean_is_r = std::tanh(fisher_sum / static_cast<double>(report.fisher_z.size()));
  return report;
}

std::pair<RatingsTable, std::vector<std::string>> exclude_outlier_participants(
    const ReliabilityReport& report, const RatingsTable& table) {
  if (report.fisher_z.size() != table.participants.size())
    throw InvalidInput("exclude_outlier_participants: report does not match table");
  const double m = mean(report.fisher_z);
  const double sd = sample_sd(report.fisher_z);
  const double cutoff = m - 2.5 * sd;

  std::vector<Eigen::Index> keep;
  std::vector<std::string> excluded;
  for (std::size_t p = 0; p < report.fisher_z.size(); ++p) {
    if (sd > 0.0 && report.fisher_z[p] < cutoff) {
      excluded.push_back(table.participants[p]);
    } else {
      keep.push_back(static_cast<Eigen::Index>(p));
    }
  }
  if (keep.size() < 3)
    throw InvalidInput("exclude_outlier_participants: fewer than 3 participants would remain");

  if (excluded.empty()) return {table, excluded};

  RatingsTable out;
  out.category = table.category;
  out.feature = table.feature;
  out.items = table.items;
  out.raw.resize(static_cast<Eigen::Index>(keep.size()), table.raw.cols());
  if (table.has_zscores())
    out.zscored.resize(static_cast<Eigen::Index>(keep.size()), table.zscored.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.participants.push_back(table.participants[static_cast<std::size_t>(keep[k])]);
    out.raw.row(static_cast<Eigen::Index>(k)) = table.raw.row(keep[k]);
    if (table.has_zscores())
      out.zscored.row(static_cast<Eigen::Index>(k)) = table.zscored.row(keep[k]);
  }
  return {out, excluded};
}

double inter_subject_ocp(const RatingsTable& table) {
  require_zscored(table, "inter_subject_ocp");
  if (table.participants.size() < 3)
    throw InvalidInput("inter_subject_ocp: at least 3 participants required");
  double sum = 0.0;
  for (Eigen::Index p = 0; p < table.zscored.rows(); ++p) {
    const auto others = leave_one_out_mean(table.zscored, p);
    sum += pairwise_oc(row_vector(table.zscored, p), others);
  }
  return sum / static_cast<double>(table.zscored.rows());
}

std::vector<double> mean_item_ratings(const RatingsTable& table) {
  require_zscored(table, "mean_item_ratings");
  if (table.participants.empty()) throw InvalidInput("mean_item_ratings: empty table");
  std::vector<double> means(table.items.size(), 0.0);
  for (Eigen::Index i = 0; i < table.zscored.cols(); ++i)
    means[static_cast<std::size_t>(i)] = table.zscored.col(i).mean();
  return means;
}

ReliabilityOutcome reliability_pipeline(const RatingsTable& table) {
  ReliabilityOutcome out;
  out.table = zscore_participants(table, &out.dropped_constant);
  const auto initial = inter_subject_r(out.table);
  auto [retained, excluded] = exclude_outlier_participants(initial, out.table);
  out.table = std::move(retained);
  out.report = inter_subject_r(out.table);
  out.report.is_ocp = inter_subject_ocp(out.table);
  out.report.excluded = std::move(excluded);
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> flag_low_reliability(
    const std::map<std::string, double>& mean_is_r_by_experiment, double threshold) {
  std::vector<std::string> kept, flagged;
  for (const auto& [id, is_r] : mean_is_r_by_experiment) {
    if (is_r < threshold)
      flagged.push_back(id);
    else
      kept.push_back(id);
  }
  return {kept, flagged};
}

}  // namespace semproj
