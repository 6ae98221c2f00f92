// rtbsim: batch simulation, model fitting and evaluation driven by a JSON
// configuration file.
//
// Exit codes: 0 success, 1 I/O or internal failure, 2 configuration error,
// 3 data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rtb/attribution.hpp"
#include "rtb/dataio.hpp"
#include "rtb/json_io.hpp"
#include "rtb/landscape.hpp"
#include "rtb/linear.hpp"
#include "rtb/simulator.hpp"

namespace fs = std::filesystem;
using rtb::cfg::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct DataError : rtb::Error {
  using rtb::Error::Error;
};

struct IoError : rtb::Error {
  using rtb::Error::Error;
};

struct Invocation {
  std::string command;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) const {
    const auto path = dir_ / name;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << content;
    os.close();
    if (!os) throw IoError("cannot write " + path.string());
    std::cout << path.string() << '\n';
  }

  void write_json(const std::string& name, const json& j) const { write(name, j.dump(2) + "\n"); }

 private:
  fs::path dir_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string num(double x) { return json(x).dump(); }

rtb::cfg::RunConfig load_config(const std::string& path) {
  const fs::path p(path);
  if (!fs::is_regular_file(p)) throw rtb::cfg::ConfigError("", "config file not found: " + path);
  return rtb::cfg::parse_config_text(read_file(p), p.parent_path().empty() ? fs::path(".") : p.parent_path());
}

fs::path output_dir(const Invocation& inv, const rtb::cfg::RunConfig& rc) {
  if (inv.out) return *inv.out;
  if (const char* env = std::getenv("RTB_OUT_DIR"); env && *env) return env;
  if (rc.output_dir) return *rc.output_dir;
  return ".";
}

std::optional<std::uint64_t> run_seed(const Invocation& inv, const rtb::cfg::RunConfig& rc) {
  return inv.seed ? inv.seed : rc.seed;
}

rtb::LogReadResult load_log(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  auto res = rtb::read_log(in);
  for (const auto& e : res.errors) std::cerr << p.filename().string() << ": skipped " << e.describe() << '\n';
  if (res.records.empty()) throw DataError(p.filename().string() + ": no valid records");
  return res;
}

int cmd_simulate(const Invocation& inv, const rtb::cfg::RunConfig& rc) {
  if (!rc.simulate) throw rtb::cfg::ConfigError("/simulate", "required by the simulate command");
  const auto seed = run_seed(inv, rc);
  if (!seed) throw rtb::cfg::ConfigError("/seed", "required by the simulate command (or pass --seed)");
  auto sim_cfg = *rc.simulate;
  sim_cfg.seed = *seed;
  const auto report = rtb::sim::simulate(sim_cfg);
  const Output out(output_dir(inv, rc));
  out.write_json("metrics.json", rtb::cfg::simulation_report_json(report));
  out.write("slots.csv", rtb::cfg::simulation_slots_csv(report));
  return kExitOk;
}

void fit_landscape(const rtb::cfg::FitSpec& f, const Output& out) {
  const auto log = load_log(f.data);
  std::vector<rtb::BidLogRecord> logs;
  logs.reserve(log.records.size());
  for (const auto& r : log.records) logs.push_back(rtb::to_bid_log(r));
  const auto table = rtb::build_survival_table(logs);
  auto model = rtb::cfg::survival_model_json(table, logs);
  model["skipped_lines"] = log.errors.size();
  out.write_json("model.json", model);
  std::ostringstream csv;
  csv << "bid,win_prob_km,win_prob_counting\n";
  for (const auto& r : table.rows())
    csv << r.bid.ticks() << ',' << num(rtb::win_prob_km(table, r.bid)) << ','
        << num(rtb::win_prob_counting(logs, r.bid)) << '\n';
  out.write("diagnostics.csv", csv.str());
}

std::vector<rtb::LabeledExample> labeled_examples(const std::vector<rtb::CanonicalLogLine>& records,
                                                  const rtb::EncoderConfig& enc) {
  std::vector<rtb::LabeledExample> data;
  for (const auto& r : records)
    if (r.won && r.click) data.push_back({rtb::encode(r.features, enc), *r.click});
  return data;
}

void fit_response(const rtb::cfg::FitSpec& f, const Output& out) {
  const auto log = load_log(f.data);
  rtb::cfg::ResponseModel m;
  m.encoder = f.response.encoder;
  m.bits = f.response.bits;
  if (m.encoder == rtb::EncoderMode::exact_onehot) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : log.records)
      if (r.won && r.click) rows.push_back(r.features);
    m.dictionary = rtb::Dictionary::build(rows);
  }
  const auto enc = m.encoder_config();
  const auto data = labeled_examples(log.records, enc);
  if (data.empty()) throw DataError(f.data.filename().string() + ": no won records with a click label");
  m.model = rtb::LinearModel(enc.dimension(), f.response.l2, true);
  const auto curve = rtb::lr_fit(m.model, data, f.response.sgd);
  auto model = rtb::cfg::response_model_json(m);
  model["examples"] = data.size();
  model["training_log_loss"] = curve.back();
  out.write_json("model.json", model);
  std::ostringstream csv;
  csv << "epoch,log_loss\n";
  for (std::size_t e = 0; e < curve.size(); ++e) csv << e + 1 << ',' << num(curve[e]) << '\n';
  out.write("loss.csv", csv.str());
}

void fit_attribution(const rtb::cfg::FitSpec& f, std::optional<std::uint64_t> seed, const Output& out) {
  using rtb::cfg::AttributionMethod;
  const auto& a = f.attribution;
  std::vector<rtb::TouchpointPath> paths;
  {
    std::ifstream in(f.data, std::ios::binary);
    if (!in) throw IoError("cannot read " + f.data.string());
    try {
      paths = rtb::read_paths(in);
    } catch (const rtb::Error& e) {
      throw DataError(f.data.filename().string() + ": " + e.what());
    }
  }
  if (paths.empty()) throw DataError(f.data.filename().string() + ": no paths");
  for (std::size_t k = 0; k < paths.size(); ++k) {
    try {
      paths[k].validate(a.channels);
    } catch (const rtb::Error& e) {
      throw DataError(f.data.filename().string() + ": path " + std::to_string(k + 1) + ": " + e.what());
    }
  }

  const auto n = a.channels;
  std::vector<double> values(n, 0.0);
  std::vector<std::size_t> excluded(n, 0);
  json extra = json::object();
  switch (a.method) {
    case AttributionMethod::shapley: {
      const auto rates = rtb::coalition_rates(paths, n);
      values = rtb::shapley_values(rates.rate);
      extra["unsupported_coalitions"] = rates.unsupported;
      break;
    }
    case AttributionMethod::shao: {
      const auto stats = rtb::channel_stats(paths, n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = rtb::shao_value(stats, i);
        values[i] = v.value;
        excluded[i] = v.excluded;
      }
      break;
    }
    case AttributionMethod::causal:
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = rtb::causal_value(paths, n, i);
        values[i] = v.value;
        excluded[i] = v.excluded;
      }
      break;
    case AttributionMethod::bagged_lr: {
      auto opt = a.bagging;
      if (seed) opt.seed = *seed;
      try {
        values = rtb::bagged_lr_attribution(paths, n, opt);
      } catch (const rtb::Error& e) {
        throw DataError(e.what());
      }
      extra["seed"] = opt.seed;
      break;
    }
    default: {
      rtb::CreditModel model = rtb::CreditModel::last();
      if (a.method == AttributionMethod::first) model = rtb::CreditModel::first();
      if (a.method == AttributionMethod::linear) model = rtb::CreditModel::linear();
      if (a.method == AttributionMethod::time_decay) model = rtb::CreditModel::time_decay();
      if (a.method == AttributionMethod::position) model = rtb::CreditModel::position();
      for (const auto& p : paths) {
        if (!p.converted || p.events.empty()) continue;
        const auto touch = rtb::heuristic_credit(p, model);
        const auto per_channel = rtb::channel_credit(p, touch, n);
        for (std::size_t c = 0; c < n; ++c) values[c] += per_channel[c];
      }
      break;
    }
  }

  const char* method = rtb::cfg::attribution_method_name(a.method);
  json channels = json::array();
  std::vector<rtb::CreditRow> rows;
  for (std::size_t c = 0; c < n; ++c) {
    json entry = {{"channel", a.channel_names[c]}, {"value", values[c]}};
    if (a.method == AttributionMethod::shao || a.method == AttributionMethod::causal) entry["excluded"] = excluded[c];
    channels.push_back(entry);
    rows.push_back({a.channel_names[c], method, values[c]});
  }
  std::size_t conversions = 0;
  for (const auto& p : paths) conversions += p.converted ? 1 : 0;
  json model = {{"format", rtb::cfg::kModelFormat}, {"kind", "attribution"}, {"method", method},
                {"paths", paths.size()},          {"conversions", conversions}, {"channels", channels}};
  model.update(extra);
  out.write_json("model.json", model);
  std::ostringstream csv;
  rtb::write_credit_csv(csv, rows);
  out.write("credit.csv", csv.str());
}

int cmd_fit(const Invocation& inv, const rtb::cfg::RunConfig& rc) {
  if (!rc.fit) throw rtb::cfg::ConfigError("/fit", "required by the fit command");
  const Output out(output_dir(inv, rc));
  switch (rc.fit->task) {
    case rtb::cfg::FitTask::landscape: fit_landscape(*rc.fit, out); break;
    case rtb::cfg::FitTask::response: fit_response(*rc.fit, out); break;
    case rtb::cfg::FitTask::attribution: fit_attribution(*rc.fit, run_seed(inv, rc), out); break;
  }
  return kExitOk;
}

int cmd_evaluate(const Invocation& inv, const rtb::cfg::RunConfig& rc) {
  if (!rc.evaluate) throw rtb::cfg::ConfigError("/evaluate", "required by the evaluate command");
  json doc;
  try {
    doc = json::parse(read_file(rc.evaluate->model));
  } catch (const json::parse_error& e) {
    throw rtb::cfg::ConfigError("/evaluate/model", std::string("model file is not valid JSON: ") + e.what());
  }
  rtb::cfg::ResponseModel m;
  try {
    m = rtb::cfg::parse_response_model(doc);
  } catch (const rtb::cfg::ConfigError& e) {
    throw rtb::cfg::ConfigError("/evaluate/model", std::string("model file ") + e.what());
  }
  const auto log = load_log(rc.evaluate->data);
  const auto data = labeled_examples(log.records, m.encoder_config());
  if (data.empty()) throw DataError(rc.evaluate->data.filename().string() + ": no won records with a click label");
  std::vector<double> p;
  std::vector<int> y;
  std::size_t positives = 0;
  for (const auto& ex : data) {
    p.push_back(rtb::lr_predict(m.model, ex.x));
    y.push_back(ex.y);
    positives += static_cast<std::size_t>(ex.y);
  }
  json metrics = {{"format", rtb::cfg::kReportFormat},
                  {"command", "evaluate"},
                  {"examples", data.size()},
                  {"positives", positives},
                  {"log_loss", rtb::log_loss(p, y)},
                  {"skipped_lines", log.errors.size()}};
  metrics["auc"] = positives == 0 || positives == data.size() ? json(nullptr) : json(rtb::roc_auc(p, y));
  const Output out(output_dir(inv, rc));
  out.write_json("metrics.json", metrics);
  return kExitOk;
}

int run(const Invocation& inv) {
  const auto rc = load_config(inv.config);
  if (inv.command == "simulate") return cmd_simulate(inv, rc);
  if (inv.command == "fit") return cmd_fit(inv, rc);
  return cmd_evaluate(inv, rc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rtbsim: real-time bidding simulation, fitting and evaluation"};
  app.set_version_flag("--version", "rtbsim 1.0");
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "Print the JSON Schema of the configuration file and exit");
  app.require_subcommand(0, 1);

  Invocation inv;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<CLI::App*> commands;
  for (const auto& [name, help] : {std::pair{"simulate", "Replay campaigns against a synthetic market"},
                                   std::pair{"fit", "Fit a landscape, response or attribution model"},
                                   std::pair{"evaluate", "Score a response model on a labelled log"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", inv.config, "JSON configuration file")->required();
    sub->add_option("--seed", seed, "Random seed; overrides the configuration");
    sub->add_option("--out", out, "Output directory; overrides RTB_OUT_DIR and the configuration");
    commands.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (print_schema) {
    std::cout << rtb::cfg::config_schema().dump(2) << '\n';
    return kExitOk;
  }
  for (auto* sub : commands) {
    if (!sub->parsed()) continue;
    inv.command = sub->get_name();
    if (sub->count("--seed")) inv.seed = seed;
    if (sub->count("--out")) inv.out = out;
  }
  if (inv.command.empty()) {
    std::cerr << "rtbsim: a command is required (simulate, fit or evaluate)\n" << app.help();
    return kExitConfig;
  }

  try {
    return run(inv);
  } catch (const rtb::cfg::ConfigError& e) {
    std::cerr << "rtbsim: config error at " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "rtbsim: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "rtbsim: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "rtbsim: " << e.what() << '\n';
    return kExitIo;
  }
}
