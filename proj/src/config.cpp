#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "error.hpp"

namespace cellnas {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

std::size_t get_count(const json& obj, const char* key, const std::string& where, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError("'" + std::string(key) + "' in " + where + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

IntDomain parse_domain(const json& v, const std::string& name) {
  if (v.is_array()) {
    std::vector<int> values;
    for (const auto& x : v) {
      if (!x.is_number_integer()) throw ConfigError("domain '" + name + "' values must be integers");
      values.push_back(x.get<int>());
    }
    return IntDomain::enumerated(name, std::move(values));
  }
  if (v.is_object()) {
    check_keys(v, "domain " + name, {"lo", "hi"});
    if (!v.contains("lo") || !v.contains("hi") || !v["lo"].is_number_integer() ||
        !v["hi"].is_number_integer()) {
      throw ConfigError("domain '" + name + "' range needs integer lo and hi");
    }
    return IntDomain::range(name, v["lo"].get<int>(), v["hi"].get<int>());
  }
  throw ConfigError("domain '" + name + "' must be a list or {lo, hi}");
}

json domain_to_json(const IntDomain& d) {
  if (d.is_range()) return {{"lo", d.lo()}, {"hi", d.hi()}};
  return d.values();
}

std::optional<std::pair<int, int>> parse_bound(const json& v, const std::string& name) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw ConfigError("validity bound '" + name + "' must be [lo, hi]");
  }
  return std::make_pair(v[0].get<int>(), v[1].get<int>());
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

ErrorPolicy parse_policy(const std::string& s) {
  if (s == "penalize") return ErrorPolicy::penalize;
  if (s == "abort") return ErrorPolicy::abort;
  throw ConfigError("on_error must be \"penalize\" or \"abort\"");
}

EvaluatorKind parse_kind(const std::string& s) {
  if (s == "surrogate") return EvaluatorKind::surrogate;
  if (s == "table") return EvaluatorKind::table;
  if (s == "param_count") return EvaluatorKind::param_count;
  if (s == "external") return EvaluatorKind::external;
  throw ConfigError("unknown evaluator kind '" + s + "'");
}

void parse_train_config(const json& v, protocol::TrainConfig& t) {
  const std::string w = "evaluator.external.train_config";
  check_keys(v, w, {"kernel", "base_filters", "cell_filters", "dense_units", "dropout_cell",
                    "dropout_head", "l2", "optimizer", "learning_rate"});
  t.kernel = get(v, "kernel", w, t.kernel);
  t.base_filters = get(v, "base_filters", w, t.base_filters);
  t.cell_filters = get(v, "cell_filters", w, t.cell_filters);
  t.dense_units = get(v, "dense_units", w, t.dense_units);
  t.dropout_cell = get(v, "dropout_cell", w, t.dropout_cell);
  t.dropout_head = get(v, "dropout_head", w, t.dropout_head);
  t.l2 = get(v, "l2", w, t.l2);
  t.optimizer = get(v, "optimizer", w, t.optimizer);
  t.learning_rate = get(v, "learning_rate", w, t.learning_rate);
}

EvaluatorSpec parse_evaluator(const json& v, const std::filesystem::path& base_dir) {
  check_keys(v, "evaluator",
             {"kind", "table", "surrogate", "external", "validity", "penalty_fitness", "on_error"});
  EvaluatorSpec spec;
  spec.kind = parse_kind(get<std::string>(v, "kind", "evaluator", "surrogate"));
  if (v.contains("table")) {
    const auto table = get<std::string>(v, "table", "evaluator", "");
    if (!table.empty()) spec.table_path = resolve(base_dir, table);
  }
  spec.penalty_fitness = get(v, "penalty_fitness", "evaluator", spec.penalty_fitness);
  spec.on_error = parse_policy(get<std::string>(v, "on_error", "evaluator", "penalize"));
  if (v.contains("validity")) {
    const auto& b = v["validity"];
    check_keys(b, "evaluator.validity", {"conv", "dense"});
    if (b.contains("conv")) spec.validity.conv = parse_bound(b["conv"], "conv");
    if (b.contains("dense")) spec.validity.dense = parse_bound(b["dense"], "dense");
  }
  if (v.contains("surrogate")) {
    const auto& s = v["surrogate"];
    const std::string w = "evaluator.surrogate";
    check_keys(s, w, {"peak", "optimum", "curvature", "noise_sd", "seed"});
    auto& p = spec.surrogate;
    p.peak = get(s, "peak", w, p.peak);
    if (s.contains("optimum")) {
      const auto o = get<std::vector<int>>(s, "optimum", w, {});
      if (o.size() != 2) throw ConfigError("surrogate optimum must be [conv, dense]");
      p.optimum_conv = o[0];
      p.optimum_dense = o[1];
    }
    if (s.contains("curvature")) {
      const auto c = get<std::vector<double>>(s, "curvature", w, {});
      if (c.size() != 2) throw ConfigError("surrogate curvature must be [a, b]");
      p.curvature_conv = c[0];
      p.curvature_dense = c[1];
    }
    p.noise_sd = get(s, "noise_sd", w, p.noise_sd);
    if (s.contains("seed") && !s["seed"].is_null()) p.seed = get<std::uint64_t>(s, "seed", w, 0);
  }
  if (v.contains("external")) {
    const auto& e = v["external"];
    const std::string w = "evaluator.external";
    check_keys(e, w, {"command", "timeout_seconds", "handshake_timeout_seconds", "train_config"});
    spec.external.command = get<std::vector<std::string>>(e, "command", w, {});
    spec.external.timeout_seconds = get(e, "timeout_seconds", w, spec.external.timeout_seconds);
    spec.external.handshake_timeout_seconds =
        get(e, "handshake_timeout_seconds", w, spec.external.handshake_timeout_seconds);
    if (e.contains("train_config")) parse_train_config(e["train_config"], spec.external.train);
  }
  return spec;
}

json bound_to_json(const std::optional<std::pair<int, int>>& b) {
  if (!b) return nullptr;
  return {b->first, b->second};
}

}  // namespace

void RunConfig::validate() const {
  if (strategy != "grid" && strategy != "random" && strategy != "ga") {
    throw ConfigError("strategy must be grid, random or ga (got '" + strategy + "')");
  }
  space.validate();
  if (strategy == "grid" && (space.conv_domain.is_range() || space.dense_domain.is_range())) {
    throw ConfigError("grid search needs enumerated (list) domains");
  }
  if (strategy == "ga") ga_config(*this).validate();
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, "config",
             {"strategy", "seed", "workers", "cache", "epochs", "out", "space", "random", "ga",
              "evaluator"});
  RunConfig c;
  c.strategy = get<std::string>(doc, "strategy", "config", c.strategy);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  c.workers = get_count(doc, "workers", "config", c.workers);
  if (c.workers == 0) throw ConfigError("workers must be >= 1");
  c.cache = get(doc, "cache", "config", c.cache);
  c.epochs = get(doc, "epochs", "config", c.epochs);
  if (doc.contains("out") && !doc["out"].is_null()) {
    c.out = resolve(base_dir, get<std::string>(doc, "out", "config", ""));
  }

  if (doc.contains("space")) {
    const auto& s = doc["space"];
    check_keys(s, "space", {"conv", "dense", "genome"});
    if (s.contains("conv")) c.space.conv_domain = parse_domain(s["conv"], "conv");
    if (s.contains("dense")) c.space.dense_domain = parse_domain(s["dense"], "dense");
    if (s.contains("genome")) {
      const auto& g = s["genome"];
      check_keys(g, "space.genome", {"total_bits", "conv_bits", "dense_bits"});
      const auto conv_bits = static_cast<int>(get_count(g, "conv_bits", "space.genome", 4));
      const auto dense_bits = static_cast<int>(get_count(g, "dense_bits", "space.genome", 4));
      c.space.genome_layout = GenomeLayout(conv_bits, dense_bits);
      if (g.contains("total_bits") &&
          get_count(g, "total_bits", "space.genome", 0) != static_cast<std::size_t>(conv_bits + dense_bits)) {
        throw ConfigError("space.genome total_bits must equal conv_bits + dense_bits");
      }
    }
  }

  if (doc.contains("random")) {
    const auto& r = doc["random"];
    check_keys(r, "random", {"iterations", "dedup", "dedup_retry_cap"});
    c.random.iterations = get_count(r, "iterations", "random", c.random.iterations);
    c.random.dedup = get(r, "dedup", "random", c.random.dedup);
    c.random.dedup_retry_cap = get_count(r, "dedup_retry_cap", "random", c.random.dedup_retry_cap);
  }

  if (doc.contains("ga")) {
    const auto& g = doc["ga"];
    const std::string w = "ga";
    check_keys(g, w, {"population_size", "generations", "genome_length", "init_bit_probability",
                      "tournament_size", "crossover_probability", "mutation_rate", "elitism"});
    c.ga.population_size = get_count(g, "population_size", w, c.ga.population_size);
    c.ga.generations = get_count(g, "generations", w, c.ga.generations);
    c.ga.genome_length = get_count(g, "genome_length", w,
                                   static_cast<std::size_t>(c.space.genome_layout.total_bits()));
    c.ga.init_bit_probability = get(g, "init_bit_probability", w, c.ga.init_bit_probability);
    c.ga.tournament_size = get_count(g, "tournament_size", w, c.ga.tournament_size);
    c.ga.crossover_probability = get(g, "crossover_probability", w, c.ga.crossover_probability);
    if (g.contains("mutation_rate") && !g["mutation_rate"].is_null()) {
      c.ga.mutation_rate = get(g, "mutation_rate", w, 0.0);
    }
    c.ga.elitism = get_count(g, "elitism", w, c.ga.elitism);
  } else {
    c.ga.genome_length = static_cast<std::size_t>(c.space.genome_layout.total_bits());
  }

  if (doc.contains("evaluator")) c.evaluator = parse_evaluator(doc["evaluator"], base_dir);
  c.validate();
  return c;
}

RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(doc, base_dir);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str(), path.parent_path());
}

json to_json(const RunConfig& c) {
  json j;
  j["strategy"] = c.strategy;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["cache"] = c.cache;
  j["epochs"] = c.epochs;
  j["out"] = c.out ? json(c.out->string()) : json(nullptr);
  j["space"] = {{"conv", domain_to_json(c.space.conv_domain)},
                {"dense", domain_to_json(c.space.dense_domain)},
                {"genome",
                 {{"total_bits", c.space.genome_layout.total_bits()},
                  {"conv_bits", c.space.genome_layout.conv_bits()},
                  {"dense_bits", c.space.genome_layout.dense_bits()}}}};
  j["random"] = {{"iterations", c.random.iterations},
                 {"dedup", c.random.dedup},
                 {"dedup_retry_cap", c.random.dedup_retry_cap}};
  j["ga"] = {{"population_size", c.ga.population_size},
             {"generations", c.ga.generations},
             {"genome_length", c.ga.genome_length},
             {"init_bit_probability", c.ga.init_bit_probability},
             {"tournament_size", c.ga.tournament_size},
             {"crossover_probability", c.ga.crossover_probability},
             {"mutation_rate", c.ga.effective_mutation_rate()},
             {"elitism", c.ga.elitism}};
  const auto& e = c.evaluator;
  const auto& s = e.surrogate;
  const auto& t = e.external.train;
  j["evaluator"] = {
      {"kind", to_string(e.kind)},
      {"table", e.table_path.string()},
      {"penalty_fitness", e.penalty_fitness},
      {"on_error", e.on_error == ErrorPolicy::abort ? "abort" : "penalize"},
      {"validity", {{"conv", bound_to_json(e.validity.conv)}, {"dense", bound_to_json(e.validity.dense)}}},
      {"surrogate",
       {{"peak", s.peak},
        {"optimum", {s.optimum_conv, s.optimum_dense}},
        {"curvature", {s.curvature_conv, s.curvature_dense}},
        {"noise_sd", s.noise_sd},
        {"seed", s.seed ? json(*s.seed) : json(nullptr)}}},
      {"external",
       {{"command", e.external.command},
        {"timeout_seconds", e.external.timeout_seconds},
        {"handshake_timeout_seconds", e.external.handshake_timeout_seconds},
        {"train_config",
         {{"kernel", t.kernel},
          {"base_filters", t.base_filters},
          {"cell_filters", t.cell_filters},
          {"dense_units", t.dense_units},
          {"dropout_cell", t.dropout_cell},
          {"dropout_head", t.dropout_head},
          {"l2", t.l2},
          {"optimizer", t.optimizer},
          {"learning_rate", t.learning_rate}}}}}};
  return j;
}

GridConfig grid_config(const RunConfig& c) { return {c.space.conv_domain, c.space.dense_domain}; }

RandomConfig random_config(const RunConfig& c) {
  RandomConfig r;
  r.conv = c.space.conv_domain;
  r.dense = c.space.dense_domain;
  r.n_iterations = c.random.iterations;
  r.seed = c.seed;
  r.dedup = c.random.dedup;
  r.dedup_retry_cap = c.random.dedup_retry_cap;
  return r;
}

GAConfig ga_config(const RunConfig& c) {
  GAConfig g = c.ga;
  g.seed = c.seed;
  return g;
}

std::unique_ptr<SearchStrategy> make_strategy(const RunConfig& c) {
  c.validate();
  if (c.strategy == "grid") return make_grid_search(grid_config(c));
  if (c.strategy == "random") return make_random_search(random_config(c));
  return std::make_unique<GeneticSearch>(ga_config(c), c.space.genome_layout);
}

}  // namespace cellnas
