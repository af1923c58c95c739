#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "mcrl/error.hpp"
#include "mcrl/metacontrol.hpp"
#include "mcrl/modelselect.hpp"

namespace mcrl {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> BicTable::holes() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (Eigen::Index i = 0; i < bic.rows(); ++i)
    for (Eigen::Index j = 0; j < bic.cols(); ++j)
      if (!std::isfinite(bic(i, j)))
        out.emplace_back(participants[static_cast<std::size_t>(i)], models[static_cast<std::size_t>(j)]);
  return out;
}

EvidenceMatrix BicTable::evidence() const {
  const auto h = holes();
  if (!h.empty()) {
    std::string msg = "BIC matrix has " + std::to_string(h.size()) + " missing cell(s):";
    for (const auto& [p, m] : h) msg += "\n  participant " + p + ", model " + m;
    throw SchemaError(msg);
  }
  EvidenceMatrix e;
  e.participants = participants;
  e.models = models;
  e.log_evidence = -0.5 * bic;
  return e;
}

BicTable read_bic_csv(std::istream& in) {
  BicTable t;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("BIC csv: missing header");
  auto header = split_csv(strip_cr(line));
  if (header.empty() || header.front() != "participant") throw SchemaError("BIC csv: header must start with 'participant'");
  t.models.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw SchemaError("BIC csv line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " cells, got " + std::to_string(cells.size()));
    t.participants.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      if (cells[j].empty()) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cells[j], &used));
        if (used != cells[j].size()) throw std::invalid_argument(cells[j]);
      } catch (const std::exception&) {
        throw SchemaError("BIC csv line " + std::to_string(line_no) + ": bad number '" + cells[j] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  t.bic.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.models.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.bic(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

BicTable read_bic_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open BIC matrix " + path);
  return read_bic_csv(in);
}

void write_bic_csv(std::ostream& out, const BicTable& table) {
  out << "participant";
  for (const auto& m : table.models) out << ',' << m;
  out << '\n';
  for (std::size_t i = 0; i < table.participants.size(); ++i) {
    if (table.participants[i].find(',') != std::string::npos)
      throw SchemaError("participant id contains a comma: " + table.participants[i]);
    out << table.participants[i];
    for (std::size_t j = 0; j < table.models.size(); ++j) {
      const double v = table.bic(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      out << ',';
      if (std::isfinite(v)) out << fmt(v);
    }
    out << '\n';
  }
}

namespace {

nlohmann::ordered_json bms_rows(const BmsResult& r, const std::vector<double>& mean_bic) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < r.labels.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    rows.push_back({{"name", r.labels[k]},
                    {"r", r.r[i]},
                    {"phi", r.phi[i]},
                    {"pxp", r.pxp[i]},
                    {"mean_bic", mean_bic[k]}});
  }
  return rows;
}

}  // namespace

nlohmann::ordered_json selection_report(const BicTable& table, const SelectionOptions& options) {
  const EvidenceMatrix e = table.evidence();
  const auto N = table.bic.rows();
  nlohmann::ordered_json rep;
  rep["schema"] = "mcrl.selection_report/1";
  rep["n_participants"] = N;
  rep["mc_samples"] = options.bms.mc_samples;
  rep["seed"] = options.bms.seed;

  std::vector<double> mean_bic(table.models.size());
  for (std::size_t k = 0; k < table.models.size(); ++k)
    mean_bic[k] = N ? table.bic.col(static_cast<Eigen::Index>(k)).mean() : 0.0;
  const BmsResult model = rfx_bms(e, options.bms);
  rep["models"] = {{"converged", model.converged}, {"bor", model.bor}, {"rows", bms_rows(model, mean_bic)}};

  auto families = nlohmann::ordered_json::array();
  auto add_family = [&](const std::string& name, const Partition& p) {
    std::vector<double> fam_bic(p.names.size(), 0.0);
    for (std::size_t f = 0; f < p.names.size(); ++f) {
      double acc = 0.0;
      for (Eigen::Index n = 0; n < N; ++n) {
        double best = std::numeric_limits<double>::infinity();
        for (auto m : p.members[f]) best = std::min(best, table.bic(n, static_cast<Eigen::Index>(m)));
        acc += best;
      }
      fam_bic[f] = N ? acc / static_cast<double>(N) : 0.0;
    }
    const BmsResult r = family_bms(e, p, options.bms);
    auto rows = bms_rows(r, fam_bic);
    for (std::size_t f = 0; f < p.names.size(); ++f) {
      std::vector<std::string> members;
      for (auto m : p.members[f]) members.push_back(table.models[m]);
      rows[f]["members"] = members;
    }
    families.push_back({{"partition", name}, {"converged", r.converged}, {"bor", r.bor}, {"rows", rows}});
  };
  for (const auto& attr : options.partitions) add_family(attr, partition_by(table.models, attr));
  if (!options.custom_partition.is_null()) add_family("custom", partition_from_json(options.custom_partition, table.models));
  rep["families"] = families;

  // Best model with pseudo-rewards against best model without, per participant.
  std::vector<std::size_t> with, without;
  for (std::size_t k = 0; k < table.models.size(); ++k)
    (ModelConfig::from_id(table.models[k]).pseudo_rewards ? with : without).push_back(k);
  if (!with.empty() && !without.empty()) {
    int for_pr = 0, against = 0, inconclusive = 0;
    for (Eigen::Index n = 0; n < N; ++n) {
      double a = std::numeric_limits<double>::infinity(), b = a;
      for (auto k : with) a = std::min(a, table.bic(n, static_cast<Eigen::Index>(k)));
      for (auto k : without) b = std::min(b, table.bic(n, static_cast<Eigen::Index>(k)));
      switch (delta_bic_class(a, b)) {
        case EvidenceLabel::substantial_for_a: ++for_pr; break;
        case EvidenceLabel::substantial_for_b: ++against; break;
        case EvidenceLabel::inconclusive: ++inconclusive; break;
      }
    }
    rep["pseudo_reward_evidence"] = {{"threshold", kDeltaBicThreshold},
                                     {"substantial_for_pr", for_pr},
                                     {"substantial_against_pr", against},
                                     {"inconclusive", inconclusive}};
  }
  return rep;
}

std::string format_selection_tables(const nlohmann::ordered_json& report) {
  std::ostringstream out;
  char buf[256];
  auto table = [&](const std::string& title, const nlohmann::ordered_json& rows) {
    out << title << '\n';
    std::snprintf(buf, sizeof buf, "  %-36s %8s %8s %8s %12s\n", "", "r", "phi", "pxp", "mean BIC");
    out << buf;
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof buf, "  %-36s %8.4f %8.4f %8.4f %12.2f\n", row["name"].get<std::string>().c_str(),
                    row["r"].get<double>(), row["phi"].get<double>(), row["pxp"].get<double>(),
                    row["mean_bic"].get<double>());
      out << buf;
    }
    out << '\n';
  };
  out << "Participants: " << report["n_participants"].get<long>() << "\n\n";
  table("Model-level BMS", report["models"]["rows"]);
  for (const auto& f : report["families"])
    table("Family-level BMS (" + f["partition"].get<std::string>() + ")", f["rows"]);
  if (report.contains("pseudo_reward_evidence")) {
    const auto& p = report["pseudo_reward_evidence"];
    out << "Pseudo-rewards, |dBIC| > 3.2: for " << p["substantial_for_pr"].get<int>() << ", against "
        << p["substantial_against_pr"].get<int>() << ", inconclusive " << p["inconclusive"].get<int>() << '\n';
  }
  return out.str();
}

}  // namespace mcrl
