// mcrl: command-line front end.
//
//   mcrl [--out DIR] [--threads N] [--conditions FILE] <verb> ...
//
// The output root defaults to $MCRL_OUTPUT_ROOT, then ./mcrl-out.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mcrl/env_json.hpp"
#include "mcrl/fitkit.hpp"
#include "mcrl/metacontrol.hpp"
#include "mcrl/modelselect.hpp"
#include "mcrl/parallel.hpp"
#include "mcrl/service.hpp"
#include "mcrl/simlab.hpp"

namespace fs = std::filesystem;
using namespace mcrl;

namespace {

struct Globals {
  std::string out;
  int threads = 0;
  std::string conditions;
  ConditionTable table;
  bool custom_table = false;

  const ConditionTable& conditions_table() const { return custom_table ? table : ConditionTable::defaults(); }
  std::string under(const std::string& rel) const { return (fs::path(out) / rel).string(); }
};

void ensure_parent(const std::string& path) {
  const fs::path p = fs::path(path).parent_path();
  if (!p.empty()) fs::create_directories(p);
}

std::ofstream open_out(const std::string& path) {
  ensure_parent(path);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path);
  return f;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw Error(what + " " + path + " does not exist");
}

// Comma-separated list, empty items dropped.
std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------- gen-env

struct GenEnvArgs {
  std::string condition = "exp1-far";
  int count = kDefaultTrials;
  std::uint64_t seed = 0;
  std::string dir;
};

int cmd_gen_env(const Globals& g, const GenEnvArgs& a) {
  if (a.count < 0) throw Error("count must be nonnegative");
  const auto& table = g.conditions_table();
  (void)table.params(a.condition);
  const std::string dir = a.dir.empty() ? g.under("envs/" + a.condition) : a.dir;
  for (int i = 0; i < a.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "env-%03d.json", i);
    const ConditionEnv env = make_condition_env(a.condition, derive_seed(a.seed, stream::ground_truth, i), table);
    auto f = open_out((fs::path(dir) / name).string());
    f << env_to_json(env).dump(2) << '\n';
  }
  std::cout << "gen-env: wrote " << a.count << " trial file(s) for " << a.condition;
  if (a.count > 0) std::cout << " to " << dir;
  std::cout << '\n';
  return 0;
}

// ----------------------------------------------------------------- ingest

struct IngestArgs {
  std::string records;
  std::string write;
};

int cmd_ingest(const Globals&, const IngestArgs& a) {
  require_file(a.records, "records file");
  const auto records = ingest_records(a.records);
  std::size_t trials = 0;
  long clicks = 0;
  for (const auto& r : records) {
    int c = 0;
    for (const auto& t : r.trials) c += t.n_clicks();
    trials += r.trials.size();
    clicks += c;
    std::cout << r.participant_id << "  condition=" << r.condition << "  trials=" << r.trials.size()
              << "  clicks=" << c << "  n_obs=" << r.n_obs() << '\n';
  }
  std::cout << "ingest: " << records.size() << " participant(s), " << trials << " trial(s), " << clicks
            << " click(s); all valid\n";
  if (!a.write.empty()) {
    auto f = open_out(a.write);
    write_records(f, records);
  }
  return 0;
}

// -------------------------------------------------------------------- fit

struct FitArgs {
  std::string records;
  std::string models;
  std::string grid_manifest;
  std::string registry_manifest;
  int budget = 200;
  std::uint64_t seed = 0;
  std::string fits;
  std::string bic;
};

std::string fit_key(const std::string& pid, const std::string& model, int budget, std::uint64_t seed) {
  return pid + '\x1f' + model + '\x1f' + std::to_string(budget) + '\x1f' + std::to_string(seed);
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::vector<nlohmann::json> out;
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void check_registry_manifest(const std::string& path) {
  require_file(path, "registry manifest");
  std::ifstream in(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("registry manifest: " + std::string(e.what()));
  }
  const std::string tag = j.at("name").get<std::string>() + "@" + std::to_string(j.at("version").get<int>());
  const auto& reg = registry_by_tag(tag);
  if (nlohmann::json(reg.manifest()) != j) throw SchemaError("registry manifest " + path + " differs from " + tag);
}

int cmd_fit(const Globals& g, const FitArgs& a) {
  require_file(a.records, "records file");
  if (!a.registry_manifest.empty()) check_registry_manifest(a.registry_manifest);
  std::vector<std::string> model_ids = split_list(a.models);
  if (!a.grid_manifest.empty()) {
    require_file(a.grid_manifest, "grid manifest");
    for (const auto& j : read_jsonl(a.grid_manifest)) model_ids.push_back(j.at("id").get<std::string>());
  }
  std::vector<ModelConfig> configs;
  std::set<std::string> seen;
  for (const auto& id : model_ids) {
    if (!seen.insert(id).second) continue;
    try {
      configs.push_back(ModelConfig::from_id(id));
    } catch (const std::invalid_argument& e) {
      throw Error("unknown model id '" + id + "': " + e.what());
    }
  }
  const auto records = ingest_records(a.records);
  std::set<std::string> ids;
  for (const auto& r : records)
    if (!ids.insert(r.participant_id).second) throw Error("duplicate participant id '" + r.participant_id + "'");
  const auto& registry = default_registry();
  const std::string fits_path = a.fits.empty() ? g.under("fits.jsonl") : a.fits;
  const std::string bic_path = a.bic.empty() ? g.under("bic.csv") : a.bic;

  std::set<std::string> done;
  if (fs::exists(fits_path))
    for (const auto& j : read_jsonl(fits_path))
      done.insert(fit_key(j.at("participant_id").get<std::string>(), j.at("model_id").get<std::string>(),
                          j.at("budget").get<int>(), j.at("seed").get<std::uint64_t>()));

  std::vector<FitJob> jobs;
  std::size_t skipped = 0;
  for (std::size_t r = 0; r < records.size(); ++r)
    for (const auto& c : configs) {
      if (done.count(fit_key(records[r].participant_id, c.id(), a.budget, a.seed))) {
        ++skipped;
        continue;
      }
      jobs.push_back({r, c});
    }
  std::cout << "fit: " << jobs.size() << " new job(s), " << skipped << " already done\n";

  FitOptions opts;
  opts.budget = a.budget;
  opts.seed = a.seed;
  ensure_parent(fits_path);
  JsonlAppender appender(fits_path);
  // Chunks keep completed work on disk while preserving job order.
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, max_threads()) * 2);
  for (std::size_t begin = 0; begin < jobs.size(); begin += chunk) {
    const std::vector<FitJob> part(jobs.begin() + static_cast<long>(begin),
                                   jobs.begin() + static_cast<long>(std::min(jobs.size(), begin + chunk)));
    for (const auto& res : run_fit_jobs(records, part, registry, opts)) {
      appender.append(fit_result_to_json(res).dump());
      std::printf("  %-12s %-28s loglik=%.3f bic=%.3f\n", res.participant_id.c_str(), res.model_id.c_str(),
                  res.loglik, res.bic);
    }
  }

  // BIC matrix over every finished fit with this budget and seed.
  BicTable table;
  for (const auto& r : records) table.participants.push_back(r.participant_id);
  for (const auto& c : configs) table.models.push_back(c.id());
  table.bic = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(table.participants.size()),
                                        static_cast<Eigen::Index>(table.models.size()),
                                        std::numeric_limits<double>::quiet_NaN());
  std::map<std::string, Eigen::Index> prow, mcol;
  for (std::size_t i = 0; i < table.participants.size(); ++i) prow[table.participants[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t i = 0; i < table.models.size(); ++i) mcol[table.models[i]] = static_cast<Eigen::Index>(i);
  if (fs::exists(fits_path))
    for (const auto& j : read_jsonl(fits_path)) {
      if (j.at("budget").get<int>() != a.budget || j.at("seed").get<std::uint64_t>() != a.seed) continue;
      const auto pi = prow.find(j.at("participant_id").get<std::string>());
      const auto mi = mcol.find(j.at("model_id").get<std::string>());
      if (pi != prow.end() && mi != mcol.end()) table.bic(pi->second, mi->second) = j.at("bic").get<double>();
    }
  {
    auto f = open_out(bic_path);
    write_bic_csv(f, table);
  }
  for (std::size_t m = 0; m < table.models.size(); ++m) {
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index p = 0; p < table.bic.rows(); ++p)
      if (std::isfinite(table.bic(p, static_cast<Eigen::Index>(m)))) sum += table.bic(p, static_cast<Eigen::Index>(m)), ++n;
    std::printf("  mean BIC %-28s %.3f (n=%d)\n", table.models[m].c_str(), n ? sum / n : 0.0, n);
  }
  std::cout << "fit: results in " << fits_path << ", BIC matrix in " << bic_path << '\n';
  return 0;
}

// ----------------------------------------------------------------- select

struct SelectArgs {
  std::string bic;
  std::string partitions = "base";
  std::string families;
  std::uint64_t seed = 0;
  long mc_samples = kDefaultMcSamples;
  std::string report;
};

int cmd_select(const Globals& g, const SelectArgs& a) {
  require_file(a.bic, "BIC matrix");
  SelectionOptions opts;
  opts.partitions = split_list(a.partitions);
  opts.bms.seed = a.seed;
  opts.bms.mc_samples = a.mc_samples;
  if (!a.families.empty()) {
    require_file(a.families, "family partition");
    std::ifstream in(a.families);
    try {
      opts.custom_partition = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("family partition: " + std::string(e.what()));
    }
  }
  const BicTable table = read_bic_csv(a.bic);
  const auto report = selection_report(table, opts);
  const std::string path = a.report.empty() ? g.under("selection.json") : a.report;
  {
    auto f = open_out(path);
    f << report.dump(2) << '\n';
  }
  std::cout << format_selection_tables(report);
  std::cout << "select: report in " << path << '\n';
  return 0;
}

// --------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string models = "reinforce";
  std::string conditions = "exp1-far";
  int agents = 30;
  int trials = kDefaultTrials;
  std::uint64_t seed = 0;
  std::string params;
  int bootstrap = 1000;
  std::string curves;
  std::string dir;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  if (a.agents < 0 || a.trials < 0) throw Error("agents and trials must be nonnegative");
  nlohmann::json overrides = nlohmann::json::object();
  if (!a.params.empty()) {
    require_file(a.params, "parameter file");
    std::ifstream in(a.params);
    try {
      overrides = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("parameter file: " + std::string(e.what()));
    }
    if (!overrides.is_object()) throw SchemaError("parameter file must hold a {name: value} object");
  }
  const auto& registry = default_registry();
  const std::string dir = a.dir.empty() ? g.under("sim") : a.dir;
  const std::string curves_path = a.curves.empty() ? (fs::path(dir) / "curves.csv").string() : a.curves;
  auto curves = open_out(curves_path);
  write_curve_csv_header(curves);
  SimOptions sim;
  sim.table = &g.conditions_table();
  if (a.agents == 0 || a.trials == 0)
    std::cout << "simulate: zero agents or trials; writing an empty curve set\n";
  for (const auto& id : split_list(a.models)) {
    const ModelConfig config = ModelConfig::from_id(id);
    ParamVector params = param_space(config, registry);
    for (const auto& [name, value] : overrides.items())
      if (params.has(name)) params.set(name, value.get<double>());
    if (!params.within_bounds()) throw Error("parameters for " + id + " are out of bounds");
    for (const auto& condition : split_list(a.conditions)) {
      (void)sim.table->params(condition);
      if (a.agents == 0 || a.trials == 0) continue;
      CohortSpec cohort;
      cohort.config = config;
      cohort.params = params;
      cohort.condition = condition;
      cohort.n_agents = a.agents;
      cohort.n_trials = a.trials;
      cohort.seed = condition_seed(a.seed, condition);
      cohort.id_prefix = id + "/" + condition;
      const auto traces = simulate_cohort(cohort, registry, sim);
      {
        auto f = open_out((fs::path(dir) / id / (condition + ".jsonl")).string());
        for (const auto& t : traces) f << record_to_json(t.to_record()).dump() << '\n';
      }
      CurveOptions copts;
      copts.bootstrap = a.bootstrap;
      copts.seed = derive_seed(cohort.seed, stream::bootstrap);
      std::vector<Measure> measures{Measure::score, Measure::clicks};
      if (has_strategy_rule(condition)) measures.push_back(Measure::adaptive);
      for (Measure m : measures) write_curve_csv(curves, aggregate_curves(traces, m, copts));
      std::cout << "simulate: " << id << " x " << condition << ": " << traces.size() << " agent(s), " << a.trials
                << " trial(s)\n";
    }
  }
  std::cout << "simulate: curves in " << curves_path << '\n';
  return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string curves;
  std::string report;
};

int cmd_analyze(const Globals& g, const AnalyzeArgs& a) {
  const std::string path = a.curves.empty() ? g.under("sim/curves.csv") : a.curves;
  require_file(path, "curve file");
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line != "condition,model,measure,trial,mean,lower,upper,n")
    throw SchemaError(path + ": unexpected curve header");
  struct Series {
    std::string condition, model, measure;
    std::vector<double> mean;
    long n = 0;
  };
  std::vector<Series> series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw SchemaError(path + " line " + std::to_string(line_no) + ": expected 8 cells");
    if (series.empty() || series.back().condition != cells[0] || series.back().model != cells[1] ||
        series.back().measure != cells[2])
      series.push_back({cells[0], cells[1], cells[2], {}, 0});
    try {
      series.back().mean.push_back(std::stod(cells[4]));
      series.back().n = std::stol(cells[7]);
    } catch (const std::exception&) {
      throw SchemaError(path + " line " + std::to_string(line_no) + ": bad number");
    }
  }
  nlohmann::ordered_json report;
  report["schema"] = "mcrl.trend_report/1";
  report["test"] = "mann-kendall on per-trial cohort means";
  report["trends"] = nlohmann::ordered_json::array();
  if (series.empty()) std::cout << "analyze: no curves\n";
  for (const auto& s : series) {
    nlohmann::ordered_json t{{"condition", s.condition}, {"model", s.model}, {"measure", s.measure},
                             {"n_agents", s.n}, {"trials", s.mean.size()}};
    if (s.mean.size() < 3) {
      t["note"] = "fewer than 3 trials; no test";
    } else {
      const TrendResult r = mann_kendall(s.mean);
      t["S"] = r.s;
      t["variance"] = r.variance;
      t["z"] = r.z;
      t["p"] = r.p;
      t["direction"] = r.direction;
      std::printf("%-28s %-12s %-9s S=%6lld z=%7.3f p=%.4g\n", s.condition.c_str(), s.model.c_str(),
                  s.measure.c_str(), r.s, r.z, r.p);
    }
    report["trends"].push_back(std::move(t));
  }
  const std::string out = a.report.empty() ? (fs::path(path).parent_path() / "trends.json").string() : a.report;
  auto f = open_out(out);
  f << report.dump(2) << '\n';
  std::cout << "analyze: report in " << out << '\n';
  return 0;
}

// ------------------------------------------------------------------- grid

struct GridArgs {
  std::string manifest;
  std::string registry_manifest;
};

int cmd_grid(const Globals& g, const GridArgs& a) {
  const auto grid = build_grid();
  const std::string path = a.manifest.empty() ? g.under("grid.jsonl") : a.manifest;
  {
    auto f = open_out(path);
    for (const auto& c : grid) f << grid_manifest_record(c).dump() << '\n';
  }
  const std::string reg = a.registry_manifest.empty() ? g.under("registry.json") : a.registry_manifest;
  {
    auto f = open_out(reg);
    f << default_registry().manifest().dump(2) << '\n';
  }
  for (const auto& c : grid) std::cout << c.id() << '\n';
  std::cout << "grid: " << grid.size() << " models; manifest " << path << ", registry " << reg << '\n';
  return 0;
}

// ------------------------------------------------------------------ serve

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string output;
  std::string static_dir;
  std::uint64_t seed = 0;
};

int cmd_serve(const Globals& g, const ServeArgs& a) {
  ServeOptions o;
  o.host = a.host;
  o.port = a.port;
  o.output = a.output.empty() ? g.under("sessions.jsonl") : a.output;
  o.static_dir = a.static_dir;
  o.seed = a.seed;
  o.table = &g.conditions_table();
  ensure_parent(o.output);
  CollectService service(o);
  const int port = service.bind();
  std::cout << "serve: listening on http://" << o.host << ":" << port << ", sessions to " << o.output << std::endl;
  service.listen();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metacognitive RL workbench"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults");
  Globals g;
  const char* root = std::getenv("MCRL_OUTPUT_ROOT");
  g.out = root && *root ? root : "mcrl-out";
  app.add_option("--out", g.out, "output root (default $MCRL_OUTPUT_ROOT or ./mcrl-out)");
  app.add_option("--threads", g.threads, "OpenMP threads (0 = default)");
  app.add_option("--conditions", g.conditions, "condition table JSON overriding the built-in one")
      ->check(CLI::ExistingFile);

  std::function<int()> run;

  GenEnvArgs gen;
  auto* c_gen = app.add_subcommand("gen-env", "write trial specs and ground truths");
  c_gen->add_option("--condition", gen.condition)->capture_default_str();
  c_gen->add_option("--count", gen.count)->capture_default_str();
  c_gen->add_option("--seed", gen.seed)->required();
  c_gen->add_option("--dir", gen.dir, "output directory (default <out>/envs/<condition>)");
  c_gen->callback([&] { run = [&] { return cmd_gen_env(g, gen); }; });

  IngestArgs ing;
  auto* c_ing = app.add_subcommand("ingest", "validate a participant JSONL file");
  c_ing->add_option("records", ing.records)->required();
  c_ing->add_option("--write", ing.write, "write the normalized records here");
  c_ing->callback([&] { run = [&] { return cmd_ingest(g, ing); }; });

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "fit models to participants (resumable)");
  c_fit->add_option("--records", fit.records)->required();
  c_fit->add_option("--models", fit.models, "model ids, comma separated");
  c_fit->add_option("--grid-manifest", fit.grid_manifest, "fit every model listed in this manifest");
  c_fit->add_option("--registry-manifest", fit.registry_manifest, "check the feature registry against this file");
  c_fit->add_option("--budget", fit.budget)->capture_default_str();
  c_fit->add_option("--seed", fit.seed)->required();
  c_fit->add_option("--fits", fit.fits, "FitResult JSONL (default <out>/fits.jsonl)");
  c_fit->add_option("--bic", fit.bic, "BIC matrix CSV (default <out>/bic.csv)");
  c_fit->callback([&] { run = [&] { return cmd_fit(g, fit); }; });

  SelectArgs sel;
  auto* c_sel = app.add_subcommand("select", "random-effects model and family selection");
  c_sel->add_option("--bic", sel.bic)->required();
  c_sel->add_option("--partition", sel.partitions, "base, stage1, pr, td or model")
      ->capture_default_str();
  c_sel->add_option("--families", sel.families, "custom partition JSON {family: [model ids]}");
  c_sel->add_option("--seed", sel.seed)->required();
  c_sel->add_option("--mc-samples", sel.mc_samples)->capture_default_str();
  c_sel->add_option("--report", sel.report, "report JSON (default <out>/selection.json)");
  c_sel->callback([&] { run = [&] { return cmd_select(g, sel); }; });

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "simulate agent cohorts and learning curves");
  c_sim->add_option("--model", sim.models)->capture_default_str();
  c_sim->add_option("--condition", sim.conditions)->capture_default_str();
  c_sim->add_option("--agents", sim.agents)->capture_default_str();
  c_sim->add_option("--trials", sim.trials)->capture_default_str();
  c_sim->add_option("--seed", sim.seed)->required();
  c_sim->add_option("--params", sim.params, "JSON {name: value} overriding synthetic defaults");
  c_sim->add_option("--bootstrap", sim.bootstrap)->capture_default_str();
  c_sim->add_option("--dir", sim.dir, "output directory (default <out>/sim)");
  c_sim->add_option("--curves", sim.curves, "curve CSV (default <dir>/curves.csv)");
  c_sim->callback([&] { run = [&] { return cmd_simulate(g, sim); }; });

  AnalyzeArgs ana;
  auto* c_ana = app.add_subcommand("analyze", "Mann-Kendall trend report over curve CSVs");
  c_ana->add_option("--curves", ana.curves, "curve CSV (default <out>/sim/curves.csv)");
  c_ana->add_option("--report", ana.report, "report JSON (default next to the curves)");
  c_ana->callback([&] { run = [&] { return cmd_analyze(g, ana); }; });

  GridArgs grid;
  auto* c_grid = app.add_subcommand("grid", "write the model grid and registry manifests");
  c_grid->add_option("--manifest", grid.manifest, "default <out>/grid.jsonl");
  c_grid->add_option("--registry-manifest", grid.registry_manifest, "default <out>/registry.json");
  c_grid->callback([&] { run = [&] { return cmd_grid(g, grid); }; });

  ServeArgs srv;
  auto* c_srv = app.add_subcommand("serve", "collection service for live sessions");
  c_srv->add_option("--host", srv.host)->capture_default_str();
  c_srv->add_option("--port", srv.port)->capture_default_str();
  c_srv->add_option("--output", srv.output, "session JSONL (default <out>/sessions.jsonl)");
  c_srv->add_option("--static", srv.static_dir, "directory served at /");
  c_srv->add_option("--seed", srv.seed)->required();
  c_srv->callback([&] { run = [&] { return cmd_serve(g, srv); }; });

  CLI11_PARSE(app, argc, argv);
  try {
    set_threads(g.threads);
    if (!g.conditions.empty()) {
      g.table = ConditionTable::load(g.conditions);
      g.custom_table = true;
    }
    return run ? run() : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
