#include "cachenet/config.hpp"

#include <fstream>

namespace cachenet {

using nlohmann::json;

namespace {

void expect_keys(const json& j, const std::string& ctx,
                 std::initializer_list<const char*> keys) {
  if (!j.is_object())
    throw config_error("config: " + ctx + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* k : keys)
      if (key == k) {
        known = true;
        break;
      }
    if (!known)
      throw config_error("config: unknown key '" + key + "' in " + ctx);
  }
}

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw config_error(std::string("config: ") + key + " must be a number");
  return j[key].get<double>();
}

CostFunction parse_cost_function(const json& j, const std::string& ctx) {
  expect_keys(j, ctx, {"kind", "a", "b", "k"});
  CostFunction f;
  const std::string kind = j.value("kind", "identity");
  if (kind == "identity")
    f.kind = CostFunction::Kind::Identity;
  else if (kind == "affine")
    f.kind = CostFunction::Kind::Affine;
  else if (kind == "power")
    f.kind = CostFunction::Kind::Power;
  else
    throw config_error("config: unknown cost kind '" + kind + "' in " + ctx);
  f.a = number(j, "a", 1.0);
  f.b = number(j, "b", 0.0);
  f.k = number(j, "k", 1.0);
  f.validate();
  return f;
}

ContentCatalog parse_catalog(const json& j) {
  expect_keys(j, "catalog", {"n", "zipf_alpha", "rate", "rates", "weights"});
  if (j.contains("rates")) {
    ContentCatalog cat;
    cat.rates = j["rates"].get<std::vector<double>>();
    cat.weights = j.contains("weights")
                      ? j["weights"].get<std::vector<double>>()
                      : cat.rates;
    cat.validate();
    return cat;
  }
  if (!j.contains("n")) throw config_error("config: catalog needs n or rates");
  return ContentCatalog::zipf(j["n"].get<std::size_t>(),
                              number(j, "zipf_alpha", 0.8),
                              number(j, "rate", 1.0));
}

NetworkSpec parse_network(const json& j, std::uint64_t seed) {
  expect_keys(j, "network",
              {"kind", "length", "depth", "side", "capacity", "capacities",
               "requesters", "weight_low", "weight_high", "sources",
               "shared_contents", "catalog", "num_nodes", "paths"});
  const std::string kind = j.value("kind", "explicit");
  if (kind == "explicit") {
    NetworkSpec net;
    net.num_nodes = j.at("num_nodes").get<std::size_t>();
    net.capacity = j.at("capacities").get<std::vector<double>>();
    for (const json& jp : j.at("paths")) {
      expect_keys(jp, "path", {"nodes", "contents", "rates", "weights"});
      PathSpec p;
      p.nodes = jp.at("nodes").get<std::vector<int>>();
      p.contents = jp.at("contents").get<std::vector<int>>();
      p.rates = jp.at("rates").get<std::vector<double>>();
      p.weights = jp.contains("weights")
                      ? jp["weights"].get<std::vector<double>>()
                      : p.rates;
      net.paths.push_back(std::move(p));
    }
    net.validate();
    return net;
  }
  const ContentCatalog catalog = parse_catalog(j.at("catalog"));
  const double capacity = number(j, "capacity", 1.0);
  if (kind == "line")
    return build_line(j.value("length", 3), capacity, catalog);
  if (kind == "tree") {
    const int depth = j.value("depth", 3);
    if (j.value("shared_contents", true))
      return build_binary_tree(depth, capacity, {catalog});
    const int leaves = 1 << (depth - 1);
    return build_binary_tree(
        depth, capacity, std::vector<ContentCatalog>(leaves, catalog));
  }
  if (kind == "grid") {
    GridParams params;
    params.side = j.value("side", 4);
    params.num_requesters = j.value("requesters", 12);
    params.weight_low = number(j, "weight_low", 1.0);
    params.weight_high = number(j, "weight_high", 20.0);
    params.seed = seed;
    if (j.contains("sources"))
      params.sources = j["sources"].get<std::vector<int>>();
    return build_grid(params, capacity, catalog);
  }
  throw config_error("config: unknown network kind '" + kind + "'");
}

Variant parse_variant(const std::string& name) {
  if (name == "l-u-mcdp") return Variant::L_U_MCDP;
  if (name == "l-u-mcd") return Variant::L_U_MCD;
  if (name == "g-n-u-mcdp") return Variant::G_N_U_MCDP;
  if (name == "g-n-u-mcd") return Variant::G_N_U_MCD;
  if (name == "mcd-cost") return Variant::MCD_COST;
  throw config_error("config: unknown solver variant '" + name + "'");
}

Eviction parse_eviction(const std::string& name) {
  if (name == "lru") return Eviction::LRU;
  if (name == "lfu") return Eviction::LFU;
  if (name == "fifo") return Eviction::FIFO;
  if (name == "rr") return Eviction::RR;
  throw config_error("config: unknown eviction policy '" + name + "'");
}

}  // namespace

std::string config_hash(const json& doc) {
  const std::string dump = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const json& doc) {
  expect_keys(doc, "document",
              {"scenario", "policy", "network", "utility", "penalty", "cost",
               "solver", "online", "primal_dual", "sim", "timers", "hits",
               "seed"});
  ExperimentConfig cfg;
  cfg.hash = config_hash(doc);
  cfg.scenario = doc.value("scenario", "");
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();

  if (doc.contains("policy")) {
    const std::string p = doc["policy"].get<std::string>();
    if (p == "mcdp")
      cfg.policy = Policy::MCDP;
    else if (p == "mcd")
      cfg.policy = Policy::MCD;
    else
      throw config_error("config: policy must be 'mcdp' or 'mcd'");
  }

  if (doc.contains("utility")) {
    const json& j = doc["utility"];
    expect_keys(j, "utility", {"beta", "psi", "h_min"});
    cfg.utility.beta = number(j, "beta", 1.0);
    cfg.utility.psi = number(j, "psi", 1.0);
    cfg.utility.h_min = number(j, "h_min", 1e-9);
    cfg.utility.validate();
  }

  if (doc.contains("penalty")) {
    const json& j = doc["penalty"];
    expect_keys(j, "penalty", {"family", "strength"});
    const std::string family = j.value("family", "normalized");
    if (family == "normalized")
      cfg.penalty.family = PenaltySpec::CapacityFamily::Normalized;
    else if (family == "plain")
      cfg.penalty.family = PenaltySpec::CapacityFamily::Plain;
    else
      throw config_error("config: penalty family must be normalized|plain");
    cfg.penalty.strength = number(j, "strength", 20.0);
  }

  if (doc.contains("cost")) {
    const json& j = doc["cost"];
    expect_keys(j, "cost", {"search", "fetch", "transfer"});
    if (j.contains("search"))
      cfg.cost.search = parse_cost_function(j["search"], "cost.search");
    if (j.contains("fetch"))
      cfg.cost.fetch = parse_cost_function(j["fetch"], "cost.fetch");
    if (j.contains("transfer"))
      cfg.cost.transfer = parse_cost_function(j["transfer"], "cost.transfer");
  }

  if (doc.contains("solver")) {
    const json& j = doc["solver"];
    expect_keys(j, "solver", {"variant", "eps", "grad_tol", "max_iterations"});
    if (j.contains("variant"))
      cfg.variant = parse_variant(j["variant"].get<std::string>());
    cfg.eps = number(j, "eps", 1e-9);
    cfg.grad_tol = number(j, "grad_tol", 1e-8);
    cfg.max_iterations =
        static_cast<int>(number(j, "max_iterations", 100000));
  }

  if (doc.contains("online")) {
    const json& j = doc["online"];
    expect_keys(j, "online", {"zeta_scale", "horizon", "record_every"});
    cfg.online.zeta_scale = number(j, "zeta_scale", 0.01);
    cfg.online.horizon =
        static_cast<long long>(number(j, "horizon", 1000000));
    cfg.online.record_every =
        static_cast<long long>(number(j, "record_every", 1000));
  }

  if (doc.contains("primal_dual")) {
    const json& j = doc["primal_dual"];
    expect_keys(j, "primal_dual",
                {"gamma", "tol", "max_iterations", "nu0", "mu0",
                 "record_every"});
    cfg.primal_dual.gamma = number(j, "gamma", 0.05);
    cfg.primal_dual.tol = number(j, "tol", 1e-4);
    cfg.primal_dual.max_iterations = static_cast<int>(
        number(j, "max_iterations", cfg.primal_dual.max_iterations));
    cfg.primal_dual.nu0 = number(j, "nu0", 1.0);
    cfg.primal_dual.mu0 = number(j, "mu0", 1.0);
    cfg.primal_dual.record_every =
        static_cast<int>(number(j, "record_every", 100));
  }

  if (doc.contains("sim")) {
    const json& j = doc["sim"];
    expect_keys(j, "sim",
                {"horizon", "warmup_fraction", "evictions", "replications"});
    cfg.sim_horizon = static_cast<long long>(number(j, "horizon", 1000000));
    cfg.warmup_fraction = number(j, "warmup_fraction", 0.1);
    if (j.contains("evictions")) {
      cfg.evictions.clear();
      for (const json& e : j["evictions"])
        cfg.evictions.push_back(parse_eviction(e.get<std::string>()));
    }
    cfg.replications = static_cast<int>(number(j, "replications", 5));
  }

  if (doc.contains("network"))
    cfg.network = parse_network(doc["network"], cfg.seed);

  if (doc.contains("timers"))
    cfg.timers = doc["timers"].get<std::vector<std::vector<double>>>();
  if (doc.contains("hits"))
    cfg.hits = doc["hits"].get<std::vector<std::vector<double>>>();

  cfg.online.seed = cfg.seed;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw config_error(std::string("config: parse failure: ") + e.what());
  }
  return parse_config(doc);
}

ProgramSpec ExperimentConfig::program() const {
  ProgramSpec prog;
  prog.variant = variant;
  prog.network = network;
  prog.utility = utility;
  prog.cost = cost;
  prog.eps = eps;
  prog.grad_tol = grad_tol;
  prog.max_iterations = max_iterations;
  return prog;
}

SharedSpec ExperimentConfig::shared() const {
  SharedSpec spec;
  spec.policy = policy;
  spec.network = network;
  spec.utility = utility;
  spec.eps = eps;
  return spec;
}

}  // namespace cachenet
