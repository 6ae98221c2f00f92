#pragma once

// JSON run configuration, reports and model files for the command-line
// driver. Configuration errors carry a JSON pointer to the offending value.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rtb/attribution.hpp"
#include "rtb/dataio.hpp"
#include "rtb/landscape.hpp"
#include "rtb/linear.hpp"
#include "rtb/simulator.hpp"

namespace rtb::cfg {

using json = nlohmann::json;

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kReportFormat = "rtb-report v1";
inline constexpr const char* kModelFormat = "rtb-model v1";

class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& message)
      : Error((pointer.empty() ? std::string("/") : pointer) + ": " + message), pointer_(std::move(pointer)) {}
  [[nodiscard]] const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

namespace detail {

inline std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }

inline const json& object_at(const json& j, const std::string& ptr) {
  if (!j.is_object()) throw ConfigError(ptr, "expected an object");
  return j;
}

inline void allow_keys(const json& j, const std::string& ptr, std::initializer_list<const char*> keys) {
  std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(child(ptr, k), "unknown key");
}

inline const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline const json& require(const json& j, const std::string& ptr, const char* key) {
  const auto* v = find(j, key);
  if (!v) throw ConfigError(child(ptr, key), "required");
  return *v;
}

inline double number(const json& v, const std::string& ptr) {
  if (!v.is_number()) throw ConfigError(ptr, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(ptr, "must be finite");
  return d;
}

inline std::int64_t integer(const json& v, const std::string& ptr) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9.2e18) return static_cast<std::int64_t>(d);
  }
  throw ConfigError(ptr, "expected an integer");
}

inline std::string string(const json& v, const std::string& ptr) {
  if (!v.is_string()) throw ConfigError(ptr, "expected a string");
  return v.get<std::string>();
}

inline bool boolean(const json& v, const std::string& ptr) {
  if (!v.is_boolean()) throw ConfigError(ptr, "expected true or false");
  return v.get<bool>();
}

template <class E>
E choice(const json& v, const std::string& ptr, std::initializer_list<std::pair<const char*, E>> options) {
  const auto s = string(v, ptr);
  std::string names;
  for (const auto& [name, e] : options) {
    if (s == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(ptr, "'" + s + "' is not one of: " + names);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Run configuration

struct LandscapeFitSpec {};

struct ResponseFitSpec {
  EncoderMode encoder = EncoderMode::hashed;
  int bits = 18;
  SgdOptions sgd{10, 0.1, true};
  double l2 = 0.0;
};

enum class AttributionMethod { shapley, shao, causal, bagged_lr, last, first, linear, time_decay, position };

struct AttributionFitSpec {
  AttributionMethod method = AttributionMethod::shapley;
  std::size_t channels = 0;
  std::vector<std::string> channel_names;
  BaggingOptions bagging;
};

enum class FitTask { landscape, response, attribution };

struct FitSpec {
  FitTask task = FitTask::landscape;
  std::filesystem::path data;
  ResponseFitSpec response;
  AttributionFitSpec attribution;
};

struct EvaluateSpec {
  std::filesystem::path model;
  std::filesystem::path data;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<sim::SimulationConfig> simulate;
  std::optional<FitSpec> fit;
  std::optional<EvaluateSpec> evaluate;
};

inline const char* attribution_method_name(AttributionMethod m) {
  switch (m) {
    case AttributionMethod::shapley: return "shapley";
    case AttributionMethod::shao: return "shao";
    case AttributionMethod::causal: return "causal";
    case AttributionMethod::bagged_lr: return "bagged_lr";
    case AttributionMethod::last: return "last";
    case AttributionMethod::first: return "first";
    case AttributionMethod::linear: return "linear";
    case AttributionMethod::time_decay: return "time_decay";
    case AttributionMethod::position: return "position";
  }
  return "?";
}

namespace detail {

inline sim::MarketSpec parse_market(const json& j, const std::string& ptr) {
  object_at(j, ptr);
  allow_keys(j, ptr, {"volume", "price_upper", "ctr_beta", "pricing", "slots"});
  sim::MarketSpec m;
  if (auto* v = find(j, "volume")) m.volume = integer(*v, child(ptr, "volume"));
  if (auto* v = find(j, "price_upper")) m.price_upper = integer(*v, child(ptr, "price_upper"));
  if (auto* v = find(j, "ctr_beta")) m.ctr_beta = number(*v, child(ptr, "ctr_beta"));
  if (auto* v = find(j, "pricing"))
    m.pricing = choice<AuctionPricing>(*v, child(ptr, "pricing"),
                                       {{"first_price", AuctionPricing::first_price},
                                        {"second_price", AuctionPricing::second_price}});
  if (auto* v = find(j, "slots")) m.slots = static_cast<int>(integer(*v, child(ptr, "slots")));
  try {
    m.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(ptr, e.what());
  }
  return m;
}

inline sim::CampaignSpec parse_campaign(const json& j, const std::string& ptr) {
  object_at(j, ptr);
  allow_keys(j, ptr,
             {"id", "budget", "value", "strategy", "kpi", "parameter", "landscape_scale", "pacing", "initial_rate"});
  sim::CampaignSpec c;
  c.id = string(require(j, ptr, "id"), child(ptr, "id"));
  if (c.id.empty()) throw ConfigError(child(ptr, "id"), "must not be empty");
  const auto budget = integer(require(j, ptr, "budget"), child(ptr, "budget"));
  if (budget < 0) throw ConfigError(child(ptr, "budget"), "must be non-negative");
  c.budget = Price::from_ticks(budget);
  const auto value = integer(require(j, ptr, "value"), child(ptr, "value"));
  if (value <= 0) throw ConfigError(child(ptr, "value"), "must be positive");
  c.value = Price::from_ticks(value);
  c.strategy = choice<sim::StrategyKind>(require(j, ptr, "strategy"), child(ptr, "strategy"),
                                         {{"truthful", sim::StrategyKind::truthful},
                                          {"linear", sim::StrategyKind::linear},
                                          {"ortb1", sim::StrategyKind::ortb1},
                                          {"ortb2", sim::StrategyKind::ortb2},
                                          {"ortb_uniform_fp", sim::StrategyKind::ortb_uniform_fp}});
  if (auto* v = find(j, "kpi"))
    c.kpi = choice<Kpi>(*v, child(ptr, "kpi"), {{"clicks", Kpi::clicks}, {"profit", Kpi::profit}});
  if (auto* v = find(j, "parameter")) {
    const double p = number(*v, child(ptr, "parameter"));
    if (!(p > 0.0)) throw ConfigError(child(ptr, "parameter"), "must be positive");
    c.parameter = p;
  }
  if (auto* v = find(j, "landscape_scale")) {
    const double l = number(*v, child(ptr, "landscape_scale"));
    if (!(l > 0.0)) throw ConfigError(child(ptr, "landscape_scale"), "must be positive");
    c.landscape_scale = l;
  }
  if (auto* v = find(j, "pacing"))
    c.pacing = choice<sim::PacingMode>(*v, child(ptr, "pacing"),
                                       {{"none", sim::PacingMode::none}, {"throttle", sim::PacingMode::throttle}});
  if (auto* v = find(j, "initial_rate")) {
    c.initial_rate = number(*v, child(ptr, "initial_rate"));
    if (!(c.initial_rate > 0.0 && c.initial_rate <= 1.0)) throw ConfigError(child(ptr, "initial_rate"), "must be in (0, 1]");
  }
  return c;
}

inline sim::SimulationConfig parse_simulate(const json& j, const std::string& ptr) {
  object_at(j, ptr);
  allow_keys(j, ptr, {"market", "campaigns"});
  sim::SimulationConfig s;
  if (auto* v = find(j, "market")) s.market = parse_market(*v, child(ptr, "market"));
  const auto& camps = require(j, ptr, "campaigns");
  const auto cptr = child(ptr, "campaigns");
  if (!camps.is_array() || camps.empty()) throw ConfigError(cptr, "expected a non-empty array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < camps.size(); ++i) {
    const auto p = child(cptr, std::to_string(i));
    s.campaigns.push_back(parse_campaign(camps[i], p));
    if (!ids.insert(s.campaigns.back().id).second) throw ConfigError(child(p, "id"), "duplicate campaign id");
  }
  return s;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline std::filesystem::path existing_file(const json& j, const std::string& ptr, const char* key,
                                           const std::filesystem::path& base) {
  const auto p = resolve(base, string(require(j, ptr, key), child(ptr, key)));
  if (!std::filesystem::is_regular_file(p)) throw ConfigError(child(ptr, key), "file not found: " + p.string());
  return p;
}

inline FitSpec parse_fit(const json& j, const std::string& ptr, const std::filesystem::path& base) {
  object_at(j, ptr);
  allow_keys(j, ptr, {"task", "data", "model"});
  FitSpec f;
  f.task = choice<FitTask>(require(j, ptr, "task"), child(ptr, "task"),
                           {{"landscape", FitTask::landscape},
                            {"response", FitTask::response},
                            {"attribution", FitTask::attribution}});
  f.data = existing_file(j, ptr, "data", base);
  const json empty = json::object();
  const auto* model = find(j, "model");
  const json& m = model ? *model : empty;
  const auto mptr = child(ptr, "model");
  object_at(m, mptr);
  switch (f.task) {
    case FitTask::landscape:
      allow_keys(m, mptr, {});
      break;
    case FitTask::response: {
      allow_keys(m, mptr, {"encoder", "bits", "epochs", "eta0", "decay", "l2"});
      auto& r = f.response;
      if (auto* v = find(m, "encoder"))
        r.encoder = choice<EncoderMode>(*v, child(mptr, "encoder"),
                                        {{"hashed", EncoderMode::hashed}, {"exact", EncoderMode::exact_onehot}});
      if (auto* v = find(m, "bits")) {
        r.bits = static_cast<int>(integer(*v, child(mptr, "bits")));
        if (r.bits < 16 || r.bits > 28) throw ConfigError(child(mptr, "bits"), "must be in [16, 28]");
      }
      if (auto* v = find(m, "epochs")) {
        r.sgd.epochs = static_cast<int>(integer(*v, child(mptr, "epochs")));
        if (r.sgd.epochs < 1) throw ConfigError(child(mptr, "epochs"), "must be at least 1");
      }
      if (auto* v = find(m, "eta0")) {
        r.sgd.eta0 = number(*v, child(mptr, "eta0"));
        if (!(r.sgd.eta0 > 0.0)) throw ConfigError(child(mptr, "eta0"), "must be positive");
      }
      if (auto* v = find(m, "decay")) r.sgd.decay = boolean(*v, child(mptr, "decay"));
      if (auto* v = find(m, "l2")) {
        r.l2 = number(*v, child(mptr, "l2"));
        if (r.l2 < 0.0) throw ConfigError(child(mptr, "l2"), "must be non-negative");
      }
      break;
    }
    case FitTask::attribution: {
      allow_keys(m, mptr, {"method", "channels", "bags", "bootstrap", "channel_fraction", "epochs", "eta0"});
      auto& a = f.attribution;
      if (auto* v = find(m, "method"))
        a.method = choice<AttributionMethod>(*v, child(mptr, "method"),
                                             {{"shapley", AttributionMethod::shapley},
                                              {"shao", AttributionMethod::shao},
                                              {"causal", AttributionMethod::causal},
                                              {"bagged_lr", AttributionMethod::bagged_lr},
                                              {"last", AttributionMethod::last},
                                              {"first", AttributionMethod::first},
                                              {"linear", AttributionMethod::linear},
                                              {"time_decay", AttributionMethod::time_decay},
                                              {"position", AttributionMethod::position}});
      const auto& ch = require(m, mptr, "channels");
      const auto chptr = child(mptr, "channels");
      if (!ch.is_array() || ch.empty() || ch.size() > kMaxExactShapleyChannels)
        throw ConfigError(chptr, "expected an array of 1 to 20 channel names");
      for (std::size_t i = 0; i < ch.size(); ++i) a.channel_names.push_back(string(ch[i], child(chptr, std::to_string(i))));
      a.channels = a.channel_names.size();
      if (auto* v = find(m, "bags")) {
        const auto b = integer(*v, child(mptr, "bags"));
        if (b < 1) throw ConfigError(child(mptr, "bags"), "must be at least 1");
        a.bagging.bags = static_cast<std::size_t>(b);
      }
      if (auto* v = find(m, "bootstrap")) a.bagging.bootstrap = boolean(*v, child(mptr, "bootstrap"));
      if (auto* v = find(m, "channel_fraction")) {
        a.bagging.channel_fraction = number(*v, child(mptr, "channel_fraction"));
        if (!(a.bagging.channel_fraction > 0.0 && a.bagging.channel_fraction <= 1.0))
          throw ConfigError(child(mptr, "channel_fraction"), "must be in (0, 1]");
      }
      if (auto* v = find(m, "epochs")) {
        a.bagging.sgd.epochs = static_cast<int>(integer(*v, child(mptr, "epochs")));
        if (a.bagging.sgd.epochs < 1) throw ConfigError(child(mptr, "epochs"), "must be at least 1");
      }
      if (auto* v = find(m, "eta0")) {
        a.bagging.sgd.eta0 = number(*v, child(mptr, "eta0"));
        if (!(a.bagging.sgd.eta0 > 0.0)) throw ConfigError(child(mptr, "eta0"), "must be positive");
      }
      break;
    }
  }
  return f;
}

}  // namespace detail

/// Parses a configuration document. Relative file paths resolve against
/// `base`, normally the directory holding the configuration file.
inline RunConfig parse_config(const json& j, const std::filesystem::path& base) {
  using namespace detail;
  object_at(j, "");
  allow_keys(j, "", {"version", "seed", "output_dir", "simulate", "fit", "evaluate"});
  if (auto* v = find(j, "version"); v && integer(*v, "/version") != kConfigVersion)
    throw ConfigError("/version", "unsupported version, expected " + std::to_string(kConfigVersion));
  RunConfig rc;
  if (auto* v = find(j, "seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
      throw ConfigError("/seed", "expected a non-negative integer");
    rc.seed = v->get<std::uint64_t>();
  }
  if (auto* v = find(j, "output_dir")) rc.output_dir = resolve(base, string(*v, "/output_dir"));
  if (auto* v = find(j, "simulate")) rc.simulate = parse_simulate(*v, "/simulate");
  if (auto* v = find(j, "fit")) rc.fit = parse_fit(*v, "/fit", base);
  if (auto* v = find(j, "evaluate")) {
    object_at(*v, "/evaluate");
    allow_keys(*v, "/evaluate", {"model", "data"});
    rc.evaluate = EvaluateSpec{existing_file(*v, "/evaluate", "model", base), existing_file(*v, "/evaluate", "data", base)};
  }
  return rc;
}

inline RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j, base);
}

/// JSON Schema of the configuration document.
inline json config_schema() {
  const json positive_int = {{"type", "integer"}, {"minimum", 1}};
  return {
      {"$schema", "https://json-schema.org/draft/2020-12/schema"},
      {"title", "rtbsim run configuration"},
      {"type", "object"},
      {"additionalProperties", false},
      {"properties",
       {{"version", {{"const", kConfigVersion}}},
        {"seed", {{"type", "integer"}, {"minimum", 0}, {"description", "Required unless --seed is given."}}},
        {"output_dir", {{"type", "string"}, {"description", "Overridden by RTB_OUT_DIR and --out."}}},
        {"simulate",
         {{"type", "object"},
          {"additionalProperties", false},
          {"required", {"campaigns"}},
          {"properties",
           {{"market",
             {{"type", "object"},
              {"additionalProperties", false},
              {"properties",
               {{"volume", positive_int},
                {"price_upper", {{"type", "integer"}, {"minimum", 1}, {"description", "Market prices are uniform on [0, price_upper] ticks."}}},
                {"ctr_beta", {{"type", "number"}, {"exclusiveMinimum", 0}, {"description", "CTR ~ Beta(1, ctr_beta)."}}},
                {"pricing", {{"enum", {"first_price", "second_price"}}}},
                {"slots", positive_int}}}}},
            {"campaigns",
             {{"type", "array"},
              {"minItems", 1},
              {"items",
               {{"type", "object"},
                {"additionalProperties", false},
                {"required", {"id", "budget", "value", "strategy"}},
                {"properties",
                 {{"id", {{"type", "string"}, {"minLength", 1}}},
                  {"budget", {{"type", "integer"}, {"minimum", 0}, {"description", "Ticks."}}},
                  {"value", {{"type", "integer"}, {"minimum", 1}, {"description", "Ticks per click."}}},
                  {"strategy", {{"enum", {"truthful", "linear", "ortb1", "ortb2", "ortb_uniform_fp"}}}},
                  {"kpi", {{"enum", {"clicks", "profit"}}}},
                  {"parameter",
                   {{"type", "number"},
                    {"exclusiveMinimum", 0},
                    {"description", "phi for linear, lambda for ORTB; calibrated to the budget when omitted."}}},
                  {"landscape_scale", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                  {"pacing", {{"enum", {"none", "throttle"}}}},
                  {"initial_rate", {{"type", "number"}, {"exclusiveMinimum", 0}, {"maximum", 1}}}}}}}}}}}}},
        {"fit",
         {{"type", "object"},
          {"additionalProperties", false},
          {"required", {"task", "data"}},
          {"properties",
           {{"task", {{"enum", {"landscape", "response", "attribution"}}}},
            {"data", {{"type", "string"}, {"description", "Canonical log TSV, or a path log for attribution."}}},
            {"model",
             {{"type", "object"},
              {"description", "response: encoder, bits, epochs, eta0, decay, l2. attribution: method, channels, bags, bootstrap, channel_fraction, epochs, eta0."}}}}}}},
        {"evaluate",
         {{"type", "object"},
          {"additionalProperties", false},
          {"required", {"model", "data"}},
          {"properties", {{"model", {{"type", "string"}}}, {"data", {{"type", "string"}}}}}}}}}};
}

// ---------------------------------------------------------------------------
// Reports

inline json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

inline json simulation_report_json(const sim::SimulationReport& r) {
  json camps = json::array();
  for (const auto& c : r.campaigns) {
    std::int64_t bids = 0;
    for (const auto& s : c.replay.slots) bids += s.bids;
    camps.push_back({{"id", c.id},
                     {"strategy", c.strategy},
                     {"parameter", c.parameter},
                     {"budget", c.budget.ticks()},
                     {"auctions", c.metrics.auctions},
                     {"bids", bids},
                     {"impressions", c.metrics.impressions},
                     {"clicks", c.metrics.clicks},
                     {"spend", c.metrics.spend.ticks()},
                     {"awr", c.metrics.awr},
                     {"ctr", c.metrics.ctr},
                     {"ecpc", optional_number(c.metrics.ecpc)},
                     {"ecpm", optional_number(c.metrics.ecpm)},
                     {"exhausted_at", c.replay.exhausted_at ? json(*c.replay.exhausted_at) : json(nullptr)}});
  }
  return {{"format", kReportFormat}, {"command", "simulate"}, {"seed", r.seed}, {"requests", r.requests},
          {"campaigns", camps}};
}

inline std::string simulation_slots_csv(const sim::SimulationReport& r) {
  std::ostringstream os;
  os << "campaign,slot,requests,bids,wins,clicks,spend,rate\n";
  for (const auto& c : r.campaigns)
    for (std::size_t t = 0; t < c.replay.slots.size(); ++t) {
      const auto& s = c.replay.slots[t];
      os << c.id << ',' << t << ',' << s.requests << ',' << s.bids << ',' << s.wins << ',' << s.clicks << ','
         << s.spend.ticks() << ',' << json(s.rate).dump() << '\n';
    }
  return os.str();
}

// ---------------------------------------------------------------------------
// Model files

inline json survival_model_json(const SurvivalTable& t, std::span<const BidLogRecord> logs) {
  json rows = json::array();
  json curve = json::array();
  for (const auto& r : t.rows()) {
    rows.push_back({{"bid", r.bid.ticks()}, {"deaths", r.deaths}, {"at_risk", r.at_risk}});
    const auto w = win_prob_km_exact(t, r.bid);
    const auto wo = win_prob_counting_exact(logs, r.bid);
    curve.push_back({{"bid", r.bid.ticks()},
                     {"win_prob", std::to_string(w.num()) + "/" + std::to_string(w.den())},
                     {"win_prob_counting", std::to_string(wo.num()) + "/" + std::to_string(wo.den())}});
  }
  return {{"format", kModelFormat}, {"kind", "kaplan_meier"}, {"records", logs.size()}, {"rows", rows},
          {"curve", curve}};
}

struct ResponseModel {
  LinearModel model;
  EncoderMode encoder = EncoderMode::hashed;
  int bits = 18;
  std::optional<Dictionary> dictionary;

  [[nodiscard]] EncoderConfig encoder_config() const {
    return encoder == EncoderMode::hashed ? EncoderConfig::hashed_bits(bits) : EncoderConfig::exact(*dictionary);
  }
};

inline json response_model_json(const ResponseModel& m) {
  json weights = json::array();
  for (std::size_t i = 0; i < m.model.weights.size(); ++i)
    if (m.model.weights[i] != 0.0) weights.push_back({i, m.model.weights[i]});
  json enc = {{"mode", m.encoder == EncoderMode::hashed ? "hashed" : "exact"}};
  if (m.encoder == EncoderMode::hashed) {
    enc["bits"] = m.bits;
  } else {
    json dict = json::array();
    for (const auto& [tok, idx] : m.dictionary->entries()) dict.push_back({tok, idx});
    enc["dictionary"] = dict;
  }
  return {{"format", kModelFormat},
          {"kind", "logistic_regression"},
          {"encoder", enc},
          {"dimension", m.model.weights.size()},
          {"bias", m.model.bias},
          {"weights", weights}};
}

/// Reads a response model file; problems are reported against the model
/// document.
inline ResponseModel parse_response_model(const json& j) {
  using namespace detail;
  object_at(j, "");
  if (string(require(j, "", "format"), "/format") != kModelFormat) throw ConfigError("/format", "unsupported model format");
  if (string(require(j, "", "kind"), "/kind") != "logistic_regression")
    throw ConfigError("/kind", "only logistic_regression models can be evaluated");
  ResponseModel m;
  const auto& enc = require(j, "", "encoder");
  object_at(enc, "/encoder");
  m.encoder = choice<EncoderMode>(require(enc, "/encoder", "mode"), "/encoder/mode",
                                  {{"hashed", EncoderMode::hashed}, {"exact", EncoderMode::exact_onehot}});
  const auto dim = integer(require(j, "", "dimension"), "/dimension");
  if (m.encoder == EncoderMode::hashed) {
    m.bits = static_cast<int>(integer(require(enc, "/encoder", "bits"), "/encoder/bits"));
    if (m.bits < 16 || m.bits > 28) throw ConfigError("/encoder/bits", "must be in [16, 28]");
    if (dim != (std::int64_t{1} << m.bits)) throw ConfigError("/dimension", "does not match the hash width");
  } else {
    const auto& d = require(enc, "/encoder", "dictionary");
    if (!d.is_array()) throw ConfigError("/encoder/dictionary", "expected an array");
    std::vector<std::pair<std::string, std::uint32_t>> entries;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto p = "/encoder/dictionary/" + std::to_string(i);
      if (!d[i].is_array() || d[i].size() != 2) throw ConfigError(p, "expected [token, index]");
      entries.emplace_back(string(d[i][0], p + "/0"), static_cast<std::uint32_t>(integer(d[i][1], p + "/1")));
    }
    try {
      m.dictionary = Dictionary::from_entries(entries);
    } catch (const Error& e) {
      throw ConfigError("/encoder/dictionary", e.what());
    }
    if (dim != static_cast<std::int64_t>(m.dictionary->dimension()))
      throw ConfigError("/dimension", "does not match the dictionary");
  }
  m.model = LinearModel(static_cast<std::size_t>(dim), 0.0, true);
  m.model.bias = number(require(j, "", "bias"), "/bias");
  const auto& w = require(j, "", "weights");
  if (!w.is_array()) throw ConfigError("/weights", "expected an array");
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto p = "/weights/" + std::to_string(i);
    if (!w[i].is_array() || w[i].size() != 2) throw ConfigError(p, "expected [index, weight]");
    const auto idx = integer(w[i][0], p + "/0");
    if (idx < 0 || idx >= dim) throw ConfigError(p + "/0", "index out of range");
    m.model.weights[static_cast<std::size_t>(idx)] = number(w[i][1], p + "/1");
  }
  return m;
}

}  // namespace rtb::cfg
