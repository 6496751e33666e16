#include "dta/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dta/errors.hpp"
#include "json.hpp"

namespace dta {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool same_matrix(const StateMatrix& a, const StateMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

// ---------------------------------------------------------------- parsing

template <typename T>
T scalar(const YAML::Node& node, const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value for '" + what + "'");
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, T& out,
          const std::string& prefix) {
  if (const auto n = parent[key]) out = scalar<T>(n, prefix + key);
}

template <typename T>
void read_opt(const YAML::Node& parent, const char* key, std::optional<T>& out,
              const std::string& prefix) {
  if (const auto n = parent[key]; n && !n.IsNull()) {
    if (n.IsScalar() && n.Scalar() == "auto") {
      out.reset();
    } else {
      out = scalar<T>(n, prefix + key);
    }
  }
}

std::vector<double> read_list(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) throw ConfigError("'" + what + "' must be a list");
  std::vector<double> out;
  for (const auto& v : n) out.push_back(scalar<double>(v, what));
  return out;
}

StateMatrix read_matrix(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence() || n.size() == 0) {
    throw ConfigError("'" + what + "' must be a non-empty list");
  }
  const bool nested = n[0].IsSequence();
  const auto rows = static_cast<Eigen::Index>(n.size());
  const auto cols = static_cast<Eigen::Index>(nested ? n[0].size() : 1);
  StateMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (nested) {
      const auto row = read_list(n[i], what);
      if (static_cast<Eigen::Index>(row.size()) != cols) {
        throw ConfigError("'" + what + "' rows have unequal length");
      }
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[j];
    } else {
      m(i, 0) = scalar<double>(n[i], what);
    }
  }
  return m;
}

void check_keys(const YAML::Node& node, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw ConfigError("'" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + section + "." + key + "'");
  }
}

// -------------------------------------------------------------- emitting

void emit_list(YAML::Emitter& e, const std::vector<double>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << x;
  e << YAML::EndSeq;
}

void emit_matrix(YAML::Emitter& e, const StateMatrix& m) {
  e << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m.cols() == 1) {
      e << m(i, 0);
    } else {
      e << YAML::Flow << YAML::BeginSeq;
      for (Eigen::Index j = 0; j < m.cols(); ++j) e << m(i, j);
      e << YAML::EndSeq;
    }
  }
  e << YAML::EndSeq;
}

json matrix_json(const StateMatrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

json opt_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

bool EngineSection::operator==(const EngineSection& o) const {
  return algorithm == o.algorithm && iterations == o.iterations &&
         replicas == o.replicas && seed == o.seed && x0 == o.x0 &&
         same_matrix(x0_values, o.x0_values) && execution == o.execution;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return schema_version == o.schema_version && name == o.name &&
         costs == o.costs && same_matrix(demands, o.demands) &&
         network == o.network && engine == o.engine &&
         stepsizes == o.stepsizes && disturbance == o.disturbance &&
         sweep == o.sweep && rate == o.rate && wga == o.wga &&
         output_dir == o.output_dir;
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML parse error: ") + e.what());
  }
  check_keys(root, "config",
             {"schema_version", "name", "costs", "demands", "network", "engine",
              "stepsizes", "disturbance", "sweep", "rate", "wga", "output"});

  ExperimentConfig cfg;
  read(root, "schema_version", cfg.schema_version, "");
  if (cfg.schema_version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " +
                      std::to_string(cfg.schema_version));
  }
  read(root, "name", cfg.name, "");

  const auto costs = root["costs"];
  if (!costs) throw ConfigError("missing 'costs' section");
  check_keys(costs, "costs", {"a", "b", "c"});
  cfg.costs.a = read_list(costs["a"], "costs.a");
  cfg.costs.b = costs["b"] ? read_list(costs["b"], "costs.b")
                           : std::vector<double>(cfg.costs.a.size(), 0.0);
  cfg.costs.c = costs["c"] ? read_list(costs["c"], "costs.c")
                           : std::vector<double>(cfg.costs.a.size(), 0.0);
  if (!root["demands"]) throw ConfigError("missing 'demands'");
  cfg.demands = read_matrix(root["demands"], "demands");

  if (const auto n = root["network"]) {
    check_keys(n, "network",
               {"topology", "theta", "edges", "edge_probability",
                "topology_seed", "proposals", "proposal_weight", "square_mode",
                "square_samples"});
    auto& net = cfg.network;
    read(n, "topology", net.topology, "network.");
    read(n, "theta", net.theta, "network.");
    if (const auto e = n["edges"]) {
      if (!e.IsSequence()) throw ConfigError("'network.edges' must be a list");
      for (const auto& pair : e) {
        if (!pair.IsSequence() || pair.size() != 2) {
          throw ConfigError("each edge must be a pair [i, j]");
        }
        net.edges.push_back({scalar<int>(pair[0], "network.edges"),
                             scalar<int>(pair[1], "network.edges")});
      }
    }
    read(n, "edge_probability", net.edge_probability, "network.");
    read(n, "topology_seed", net.topology_seed, "network.");
    read(n, "proposals", net.proposals, "network.");
    read(n, "proposal_weight", net.proposal_weight, "network.");
    read(n, "square_mode", net.square_mode, "network.");
    read(n, "square_samples", net.square_samples, "network.");
  }

  if (const auto n = root["engine"]) {
    check_keys(n, "engine",
               {"algorithm", "iterations", "replicas", "seed", "x0", "execution"});
    auto& eng = cfg.engine;
    read(n, "algorithm", eng.algorithm, "engine.");
    read(n, "iterations", eng.iterations, "engine.");
    read(n, "replicas", eng.replicas, "engine.");
    read(n, "seed", eng.seed, "engine.");
    read(n, "execution", eng.execution, "engine.");
    if (const auto x0 = n["x0"]) {
      if (x0.IsScalar()) {
        eng.x0 = scalar<std::string>(x0, "engine.x0");
      } else {
        eng.x0 = "explicit";
        eng.x0_values = read_matrix(x0, "engine.x0");
      }
    }
  }

  if (const auto n = root["stepsizes"]) {
    check_keys(n, "stepsizes",
               {"source", "alpha", "beta", "alpha_scale", "beta_scale",
                "theta_base", "alphas", "betas", "alpha_range", "beta_range",
                "plans", "plan_seed", "bracket"});
    auto& st = cfg.stepsizes;
    read(n, "source", st.source, "stepsizes.");
    read(n, "alpha", st.alpha, "stepsizes.");
    read(n, "beta", st.beta, "stepsizes.");
    read(n, "alpha_scale", st.alpha_scale, "stepsizes.");
    read(n, "beta_scale", st.beta_scale, "stepsizes.");
    read_opt(n, "theta_base", st.theta_base, "stepsizes.");
    if (n["alphas"]) st.alphas = read_list(n["alphas"], "stepsizes.alphas");
    if (n["betas"]) st.betas = read_list(n["betas"], "stepsizes.betas");
    if (const auto r = n["alpha_range"]) {
      const auto v = read_list(r, "stepsizes.alpha_range");
      if (v.size() != 2) throw ConfigError("alpha_range needs [lo, hi]");
      st.alpha_lo = v[0];
      st.alpha_hi = v[1];
    }
    if (const auto r = n["beta_range"]) {
      const auto v = read_list(r, "stepsizes.beta_range");
      if (v.size() != 2) throw ConfigError("beta_range needs [lo, hi]");
      st.beta_lo = v[0];
      st.beta_hi = v[1];
    }
    read(n, "plans", st.plans, "stepsizes.");
    read(n, "plan_seed", st.plan_seed, "stepsizes.");
    read(n, "bracket", st.bracket, "stepsizes.");
  }

  if (const auto n = root["disturbance"]) {
    check_keys(n, "disturbance", {"kind", "m_zeta", "q_zeta", "cutoff"});
    auto& d = cfg.disturbance;
    read(n, "kind", d.kind, "disturbance.");
    read_opt(n, "m_zeta", d.m_zeta, "disturbance.");
    read(n, "q_zeta", d.q_zeta, "disturbance.");
    read_opt(n, "cutoff", d.cutoff, "disturbance.");
  }

  if (const auto n = root["sweep"]; n && !n.IsNull()) {
    check_keys(n, "sweep", {"axis", "values"});
    SweepSection s;
    read(n, "axis", s.axis, "sweep.");
    if (!n["values"]) throw ConfigError("'sweep.values' is required");
    s.values = read_list(n["values"], "sweep.values");
    cfg.sweep = std::move(s);
  }

  if (const auto n = root["rate"]) {
    check_keys(n, "rate", {"k_e", "N", "floor_rel"});
    read_opt(n, "k_e", cfg.rate.k_e, "rate.");
    read(n, "N", cfg.rate.N, "rate.");
    read(n, "floor_rel", cfg.rate.floor_rel, "rate.");
  }

  if (const auto n = root["wga"]) {
    check_keys(n, "wga", {"alpha"});
    read_opt(n, "alpha", cfg.wga.alpha, "wga.");
  }

  if (const auto n = root["output"]) {
    check_keys(n, "output", {"dir"});
    read(n, "dir", cfg.output_dir, "output.");
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "schema_version" << YAML::Value << cfg.schema_version;
  e << YAML::Key << "name" << YAML::Value << cfg.name;

  e << YAML::Key << "costs" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "a" << YAML::Value;
  emit_list(e, cfg.costs.a);
  e << YAML::Key << "b" << YAML::Value;
  emit_list(e, cfg.costs.b);
  e << YAML::Key << "c" << YAML::Value;
  emit_list(e, cfg.costs.c);
  e << YAML::EndMap;
  e << YAML::Key << "demands" << YAML::Value;
  emit_matrix(e, cfg.demands);

  const auto& net = cfg.network;
  e << YAML::Key << "network" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "topology" << YAML::Value << net.topology;
  e << YAML::Key << "theta" << YAML::Value << net.theta;
  if (!net.edges.empty()) {
    e << YAML::Key << "edges" << YAML::Value << YAML::BeginSeq;
    for (const auto& ed : net.edges) {
      e << YAML::Flow << YAML::BeginSeq << ed.i << ed.j << YAML::EndSeq;
    }
    e << YAML::EndSeq;
  }
  e << YAML::Key << "edge_probability" << YAML::Value << net.edge_probability;
  e << YAML::Key << "topology_seed" << YAML::Value << net.topology_seed;
  e << YAML::Key << "proposals" << YAML::Value << net.proposals;
  e << YAML::Key << "proposal_weight" << YAML::Value << net.proposal_weight;
  e << YAML::Key << "square_mode" << YAML::Value << net.square_mode;
  e << YAML::Key << "square_samples" << YAML::Value << net.square_samples;
  e << YAML::EndMap;

  const auto& eng = cfg.engine;
  e << YAML::Key << "engine" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "algorithm" << YAML::Value << eng.algorithm;
  e << YAML::Key << "iterations" << YAML::Value << eng.iterations;
  e << YAML::Key << "replicas" << YAML::Value << eng.replicas;
  e << YAML::Key << "seed" << YAML::Value << eng.seed;
  e << YAML::Key << "x0" << YAML::Value;
  if (eng.x0 == "explicit") {
    emit_matrix(e, eng.x0_values);
  } else {
    e << eng.x0;
  }
  e << YAML::Key << "execution" << YAML::Value << eng.execution;
  e << YAML::EndMap;

  const auto& st = cfg.stepsizes;
  e << YAML::Key << "stepsizes" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "source" << YAML::Value << st.source;
  e << YAML::Key << "alpha" << YAML::Value << st.alpha;
  e << YAML::Key << "beta" << YAML::Value << st.beta;
  e << YAML::Key << "alpha_scale" << YAML::Value << st.alpha_scale;
  e << YAML::Key << "beta_scale" << YAML::Value << st.beta_scale;
  if (st.theta_base) e << YAML::Key << "theta_base" << YAML::Value << *st.theta_base;
  if (!st.alphas.empty()) {
    e << YAML::Key << "alphas" << YAML::Value;
    emit_list(e, st.alphas);
  }
  if (!st.betas.empty()) {
    e << YAML::Key << "betas" << YAML::Value;
    emit_list(e, st.betas);
  }
  e << YAML::Key << "alpha_range" << YAML::Value;
  emit_list(e, {st.alpha_lo, st.alpha_hi});
  e << YAML::Key << "beta_range" << YAML::Value;
  emit_list(e, {st.beta_lo, st.beta_hi});
  e << YAML::Key << "plans" << YAML::Value << st.plans;
  e << YAML::Key << "plan_seed" << YAML::Value << st.plan_seed;
  e << YAML::Key << "bracket" << YAML::Value << st.bracket;
  e << YAML::EndMap;

  const auto& d = cfg.disturbance;
  e << YAML::Key << "disturbance" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << d.kind;
  e << YAML::Key << "m_zeta" << YAML::Value;
  if (d.m_zeta) e << *d.m_zeta; else e << "auto";
  e << YAML::Key << "q_zeta" << YAML::Value << d.q_zeta;
  if (d.cutoff) e << YAML::Key << "cutoff" << YAML::Value << *d.cutoff;
  e << YAML::EndMap;

  if (cfg.sweep) {
    e << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "axis" << YAML::Value << cfg.sweep->axis;
    e << YAML::Key << "values" << YAML::Value;
    emit_list(e, cfg.sweep->values);
    e << YAML::EndMap;
  }

  e << YAML::Key << "rate" << YAML::Value << YAML::BeginMap;
  if (cfg.rate.k_e) e << YAML::Key << "k_e" << YAML::Value << *cfg.rate.k_e;
  e << YAML::Key << "N" << YAML::Value << cfg.rate.N;
  e << YAML::Key << "floor_rel" << YAML::Value << cfg.rate.floor_rel;
  e << YAML::EndMap;

  e << YAML::Key << "wga" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "alpha" << YAML::Value;
  if (cfg.wga.alpha) e << *cfg.wga.alpha; else e << "auto";
  e << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dir" << YAML::Value << cfg.output_dir;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

// ------------------------------------------------------------- resolution

namespace {

CostSpec build_spec(const ExperimentConfig& cfg) {
  const auto& c = cfg.costs;
  if (c.a.empty()) throw ConfigError("costs.a must list one value per agent");
  if (c.b.size() != c.a.size() || c.c.size() != c.a.size()) {
    throw ConfigError("costs.a, costs.b and costs.c must have equal length");
  }
  if (cfg.demands.rows() != static_cast<Eigen::Index>(c.a.size())) {
    throw ConfigError("demands must have one row per agent");
  }
  std::vector<QuadraticCost> q;
  try {
    for (std::size_t i = 0; i < c.a.size(); ++i) q.emplace_back(c.a[i], c.b[i], c.c[i]);
    return CostSpec::quadratic(q, cfg.demands);
  } catch (const InvalidSpecError& e) {
    throw ConfigError(std::string("invalid cost spec: ") + e.what());
  }
}

SquareMode square_mode(const std::string& s) {
  if (s == "analytic") return SquareMode::Analytic;
  if (s == "exact") return SquareMode::Exact;
  if (s == "monte-carlo") return SquareMode::MonteCarlo;
  throw ConfigError("unknown square_mode '" + s + "'");
}

NetworkModel build_model(const NetworkConfig& nc, int n) {
  NetworkModel m;
  if (nc.topology == "complete") {
    m = NetworkModel::complete(n, nc.theta);
  } else if (nc.topology == "ring") {
    m = NetworkModel::ring(n, nc.theta);
  } else if (nc.topology == "edge-list") {
    m = NetworkModel::from_edges(n, nc.edges, nc.theta);
  } else if (nc.topology == "random") {
    Rng rng = make_stream(nc.topology_seed, 0, StreamPurpose::Model);
    m = NetworkModel::random(n, nc.edge_probability, nc.theta, rng);
  } else {
    throw ConfigError("unknown topology '" + nc.topology + "'");
  }
  if (nc.proposals == "uniform") {
    m.set_uniform_proposals(nc.proposal_weight);
  } else if (nc.proposals != "metropolis") {
    throw ConfigError("unknown proposal rule '" + nc.proposals + "'");
  }
  try {
    m.validate();
  } catch (const InvalidModelError& e) {
    throw ConfigError(std::string("invalid network: ") + e.what());
  }
  return m;
}

SpectralReport report_for(const NetworkModel& m, const NetworkConfig& nc) {
  const auto mode = square_mode(nc.square_mode);
  if (mode == SquareMode::MonteCarlo) {
    // spectral_report has no sample count; assemble it from the pieces.
    SpectralReport r = spectral_report(m, SquareMode::Analytic);
    const Eigen::MatrixXd ew2 =
        expected_square_matrix(m, mode, nc.square_samples, nc.topology_seed);
    const auto ev2 = symmetric_eigenvalues_desc(ew2);
    r.lambda2_sq = m.n > 1 ? ev2(1) : 0.0;
    const Eigen::MatrixXd avg = Eigen::MatrixXd::Constant(m.n, m.n, 1.0 / m.n);
    r.rho_sq_gap = symmetric_eigenvalues_desc(ew2 - avg).cwiseAbs().maxCoeff();
    return r;
  }
  return spectral_report(m, mode);
}

void check_config(const ExperimentConfig& cfg) {
  if (cfg.engine.iterations < 1) throw ConfigError("engine.iterations must be >= 1");
  if (cfg.engine.replicas < 1) throw ConfigError("engine.replicas must be >= 1");
  if (cfg.engine.execution != "parallel" && cfg.engine.execution != "serial") {
    throw ConfigError("engine.execution must be parallel or serial");
  }
  if (cfg.sweep) {
    const auto& s = *cfg.sweep;
    if (s.axis != "alpha" && s.axis != "beta" && s.axis != "theta") {
      throw ConfigError("sweep.axis must be alpha, beta or theta");
    }
    if (s.values.empty()) throw ConfigError("sweep.values must not be empty");
    for (double v : s.values) {
      if (!std::isfinite(v) || v < 0.0) {
        throw ConfigError("sweep values must be finite and non-negative");
      }
      if (s.axis == "theta" && v > 1.0) throw ConfigError("theta values must be <= 1");
      if (s.axis != "theta" && v <= 0.0) {
        throw ConfigError("stepsize multipliers must be positive");
      }
    }
    if (cfg.stepsizes.source == "uncoordinated" && s.axis != "theta") {
      throw ConfigError("alpha/beta sweeps need shared stepsizes");
    }
  }
  if (cfg.rate.N < 1) throw ConfigError("rate.N must be >= 1");
}

}  // namespace

Resolved resolve(const ExperimentConfig& cfg) {
  check_config(cfg);
  Resolved r(build_spec(cfg));
  const int n = r.spec.agents();
  r.model = build_model(cfg.network, n);
  r.net = report_for(r.model, cfg.network);
  r.kkt = kkt_solve(r.spec);

  const auto& eng = cfg.engine;
  if (eng.x0 == "zero") {
    r.x0 = StateMatrix::Zero(n, r.spec.dimension());
  } else if (eng.x0 == "demand") {
    r.x0 = r.spec.demands();
  } else if (eng.x0 == "explicit") {
    if (eng.x0_values.rows() != n || eng.x0_values.cols() != r.spec.dimension()) {
      throw ConfigError("engine.x0 shape does not match the demands");
    }
    r.x0 = eng.x0_values;
  } else {
    throw ConfigError("engine.x0 must be zero, demand or a matrix");
  }

  const auto& st = cfg.stepsizes;
  if (st.theta_base) {
    if (!(*st.theta_base > 0.0 && *st.theta_base <= 1.0)) {
      throw ConfigError("stepsizes.theta_base must lie in (0, 1]");
    }
    NetworkModel base = r.model;
    base.set_theta(*st.theta_base);
    r.stepsize_net = report_for(base, cfg.network);
  } else {
    r.stepsize_net = r.net;
  }

  bool have_constants = false;
  try {
    r.rc = constants(r.spec, r.stepsize_net);
    have_constants = true;
  } catch (const InfeasibleNetworkError&) {
    if (st.source != "explicit") throw;
  }
  if (have_constants) r.optimal = optimal_stepsizes(r.rc, r.stepsize_net);

  if (st.source == "optimal") {
    r.plans.push_back(StepsizePlan::shared(st.alpha_scale * r.optimal->alpha,
                                           st.beta_scale * r.optimal->beta));
  } else if (st.source == "explicit") {
    if (!(st.alpha >= 0.0) || !(st.beta >= 0.0)) {
      throw ConfigError("explicit stepsizes must be non-negative");
    }
    r.plans.push_back(
        StepsizePlan::shared(st.alpha_scale * st.alpha, st.beta_scale * st.beta));
  } else if (st.source == "uncoordinated") {
    if (!st.alphas.empty() || !st.betas.empty()) {
      if (static_cast<int>(st.alphas.size()) != n ||
          static_cast<int>(st.betas.size()) != n) {
        throw ConfigError("stepsizes.alphas and betas need one entry per agent");
      }
      r.plans.push_back(StepsizePlan::uncoordinated(st.alphas, st.betas));
    } else {
      if (st.plans < 1) throw ConfigError("stepsizes.plans must be >= 1");
      if (!(st.alpha_lo > 0.0 && st.alpha_lo <= st.alpha_hi &&
            st.beta_lo > 0.0 && st.beta_lo <= st.beta_hi)) {
        throw ConfigError("uncoordinated ranges need 0 < lo <= hi");
      }
      for (int p = 0; p < st.plans; ++p) {
        Rng rng = make_stream(st.plan_seed, static_cast<std::uint64_t>(p),
                              StreamPurpose::Plan);
        r.plans.push_back(sample_uncoordinated_plan(
            r.spec, r.stepsize_net, st.alpha_lo, st.alpha_hi, st.beta_lo,
            st.beta_hi, rng));
      }
    }
  } else {
    throw ConfigError("stepsizes.source must be optimal, explicit or uncoordinated");
  }

  r.disturbance.kind = disturbance_kind_from_string(cfg.disturbance.kind);
  r.disturbance.m_zeta =
      cfg.disturbance.m_zeta.value_or((r.x0 - r.kkt.x_star).norm());
  r.disturbance.q_zeta = cfg.disturbance.q_zeta;
  r.disturbance.cutoff = cfg.disturbance.cutoff;
  r.disturbance.validate();

  if (cfg.wga.alpha) {
    r.wga_alpha = *cfg.wga.alpha;
  } else {
    // Largest step keeping every realization's multiplier 1 - a phi (1 - l) in [0, 1).
    r.wga_alpha = 1.0 / (r.spec.phi_hi() * (1.0 - r.net.lambdan_floor));
  }
  return r;
}

// --------------------------------------------------------------- running

fs::path output_dir(const ExperimentConfig& cfg,
                    const std::optional<std::string>& cli_out) {
  if (cli_out && !cli_out->empty()) return *cli_out;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "dtasim-out";
}

void write_trace_csv(std::ostream& os, const RunTrace& trace) {
  os << "# dtasim-trace schema_version=" << kSchemaVersion << "\n";
  os << "k,optimality_distance,feasibility_gap,tracking_norm,gradient_dispersion\n";
  char buf[160];
  for (std::size_t k = 0; k < trace.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", k,
                  trace.optimality_distance[k], trace.feasibility_gap[k],
                  trace.tracking_norm[k], trace.gradient_dispersion[k]);
    os << buf;
  }
}

PointResult analyze_trace(const RunTrace& trace, const RateSection& rate,
                          std::int64_t iterations) {
  PointResult p;
  const auto& d = trace.optimality_distance;
  p.initial_distance = d.front();
  p.final_distance = d.back();
  p.converged = p.final_distance <= 1e-6 * p.initial_distance;

  const std::int64_t k_e = std::min(rate.k_e.value_or(iterations), iterations);
  const std::int64_t N = std::min(rate.N, k_e);
  if (k_e >= 1) p.rate = empirical_rate(d, k_e, N, rate.floor_rel);

  const std::size_t window =
      std::min<std::size_t>(10000, static_cast<std::size_t>(iterations) / 2);
  if (window >= 1) p.non_convergent = non_convergent(d, window, rate.floor_rel);

  const std::size_t pre = floor_index(d, rate.floor_rel);
  const std::size_t fit_len = std::min<std::size_t>(5000, pre / 2);
  if (fit_len >= 2) p.fit = log_linear_fit(d, pre - fit_len, pre);
  return p;
}

namespace {

struct PointSpec {
  std::string label;
  std::string axis;
  double value = 0.0;
  StepsizePlan plan;
  double theta = 0.0;
};

std::string fmt_label(const std::string& prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%02zu", prefix.c_str(), i);
  return buf;
}

std::vector<PointSpec> expand_points(const ExperimentConfig& cfg,
                                     const Resolved& r) {
  std::vector<PointSpec> pts;
  const double theta = cfg.network.theta;
  if (cfg.sweep) {
    const auto& s = *cfg.sweep;
    const StepsizePlan& base = r.plans.front();
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      PointSpec p{fmt_label(s.axis, i), s.axis, s.values[i], base, theta};
      if (s.axis == "alpha") {
        p.plan = StepsizePlan::shared(base.alpha * s.values[i], base.beta);
      } else if (s.axis == "beta") {
        p.plan = StepsizePlan::shared(base.alpha, base.beta * s.values[i]);
      } else {
        p.theta = s.values[i];
      }
      pts.push_back(std::move(p));
    }
    return pts;
  }
  if (r.plans.size() == 1 && cfg.stepsizes.source != "uncoordinated") {
    pts.push_back({"base", "", 0.0, r.plans.front(), theta});
    return pts;
  }
  const int n = r.spec.agents();
  for (std::size_t i = 0; i < r.plans.size(); ++i) {
    const auto& plan = r.plans[i];
    const std::string label = fmt_label("plan", i);
    pts.push_back({label, "plan", static_cast<double>(i), plan, theta});
    if (cfg.stepsizes.bracket) {
      pts.push_back({label + "-alpha-hi", "plan", static_cast<double>(i),
                     StepsizePlan::uncoordinated(
                         std::vector<double>(n, plan.alpha_hi()), plan.betas),
                     theta});
      pts.push_back({label + "-alpha-lo", "plan", static_cast<double>(i),
                     StepsizePlan::uncoordinated(
                         std::vector<double>(n, plan.alpha_lo()), plan.betas),
                     theta});
    }
  }
  return pts;
}

Algorithm point_algorithm(const ExperimentConfig& cfg, const StepsizePlan& plan) {
  const Algorithm a = algorithm_from_string(cfg.engine.algorithm);
  if (plan.mode == PlanMode::Uncoordinated && a == Algorithm::Dta) {
    return Algorithm::DtaUncoordinated;
  }
  return a;
}

EngineConfig engine_config(const ExperimentConfig& cfg, const Resolved& r,
                           const StepsizePlan& plan, Algorithm algorithm) {
  EngineConfig ec;
  ec.algorithm = algorithm;
  ec.plan = plan;
  ec.wga_alpha = r.wga_alpha;
  ec.iterations = cfg.engine.iterations;
  ec.x0 = r.x0;
  ec.seed = cfg.engine.seed;
  ec.replicas = cfg.engine.replicas;
  ec.disturbance = r.disturbance;
  ec.execution =
      cfg.engine.execution == "serial" ? Execution::Serial : Execution::Parallel;
  return ec;
}

// Feasibility of a plan on a given network; warns and proceeds when outside.
void assess(PointResult& p, const Resolved& r, const SpectralReport& net,
            const std::optional<double>& q_zeta,
            std::vector<std::string>& warnings) {
  if (!net.connected_in_mean()) {
    p.notes = "network is not connected in mean; no stepsize guarantee applies";
    warnings.push_back(p.label + ": " + p.notes);
    return;
  }
  const RateConstants rc = constants(r.spec, net, &p.plan);
  if (p.plan.mode == PlanMode::Shared) {
    p.verdict = feasible_region_shared(rc, net).check(p.plan.alpha, p.plan.beta);
    p.fixed_network_rate =
        fixed_network_rate(rc, net, p.plan.alpha, p.plan.beta, q_zeta);
    if (p.verdict->feasible) p.predicted_rate = predicted_rate(rc, p.plan, net, q_zeta);
  } else {
    p.verdict = feasible_region_uncoordinated(rc, p.plan, net);
  }
  if (!p.verdict->feasible) {
    warnings.push_back(p.label + ": stepsizes outside the certified region (" +
                       p.verdict->failed + "); running anyway");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

void emit_trace(PointResult& p, const std::string& name,
                const std::optional<fs::path>& out) {
  if (!out) return;
  fs::create_directories(*out);
  p.trace_file = name + "_" + p.label + ".csv";
  std::ofstream os(*out / p.trace_file, std::ios::binary);
  if (!os) throw Error("cannot write trace '" + p.trace_file + "'");
  write_trace_csv(os, p.trace);
}

void emit_summary(const SummaryReport& report, const std::optional<fs::path>& out) {
  if (!out) return;
  fs::create_directories(*out);
  write_text(*out / (report.config.name + "_summary.json"), summary_json(report));
}

PointResult run_point(const ExperimentConfig& cfg, const Resolved& r,
                      const PointSpec& ps, Algorithm algorithm,
                      const std::optional<fs::path>& out,
                      std::vector<std::string>& warnings,
                      RunResult* raw = nullptr) {
  NetworkModel model = r.model;
  SpectralReport net = r.net;
  if (ps.theta != cfg.network.theta) {
    model.set_theta(ps.theta);
    net = report_for(model, cfg.network);
  }
  const bool disturbed = r.disturbance.active() &&
                         (algorithm == Algorithm::DtaDisturbed ||
                          algorithm == Algorithm::Wga);
  const std::optional<double> q_zeta =
      disturbed ? std::optional<double>(r.disturbance.q_zeta) : std::nullopt;

  PointResult p;
  p.label = ps.label;
  p.axis = ps.axis;
  p.value = ps.value;
  p.algorithm = to_string(algorithm);
  p.plan = ps.plan;
  p.theta = ps.theta;
  if (algorithm != Algorithm::Wga) assess(p, r, net, q_zeta, warnings);

  try {
    RunResult result = run(engine_config(cfg, r, ps.plan, algorithm), r.spec, model);
    const RunTrace agg = result.aggregated();
    PointResult analysed = analyze_trace(agg, cfg.rate, cfg.engine.iterations);
    p.rate = analysed.rate;
    p.initial_distance = analysed.initial_distance;
    p.final_distance = analysed.final_distance;
    p.fit = analysed.fit;
    p.converged = analysed.converged;
    p.non_convergent = analysed.non_convergent;
    p.trace = agg;
    emit_trace(p, cfg.name, out);
    if (raw) *raw = std::move(result);
  } catch (const DivergenceError& e) {
    p.divergence = e.what();
    warnings.push_back(p.label + ": " + e.what());
  }
  return p;
}

}  // namespace

SummaryReport cmd_bounds(const ExperimentConfig& cfg) {
  SummaryReport rep;
  rep.command = "bounds";
  rep.config = cfg;
  Resolved r = resolve(cfg);
  if (!r.net.connected_in_mean()) {
    throw InfeasibleNetworkError("network is not connected in mean");
  }
  if (r.optimal) {
    for (const auto& w : r.optimal->warnings) rep.warnings.push_back(w);
  }
  rep.resolved = std::move(r);
  return rep;
}

SummaryReport cmd_run(const ExperimentConfig& cfg,
                      const std::optional<fs::path>& out) {
  SummaryReport rep;
  rep.command = "run";
  rep.config = cfg;
  Resolved r = resolve(cfg);
  for (const auto& ps : expand_points(cfg, r)) {
    rep.points.push_back(
        run_point(cfg, r, ps, point_algorithm(cfg, ps.plan), out, rep.warnings));
  }
  rep.resolved = std::move(r);
  emit_summary(rep, out);
  return rep;
}

SummaryReport sweep(ExperimentConfig cfg, const std::string& axis,
                    const std::vector<double>& values,
                    const std::optional<fs::path>& out) {
  cfg.sweep = SweepSection{axis, values};
  SummaryReport rep = cmd_run(cfg, out);
  rep.command = "sweep";
  emit_summary(rep, out);
  return rep;
}

SummaryReport cmd_compare(const ExperimentConfig& cfg,
                          const std::optional<fs::path>& out) {
  SummaryReport rep;
  rep.command = "compare";
  rep.config = cfg;
  Resolved r = resolve(cfg);
  if (r.plans.front().mode != PlanMode::Shared) {
    throw ConfigError("compare needs shared stepsizes");
  }
  if (!(r.wga_alpha > 0.0)) throw ConfigError("wga.alpha could not be resolved");

  const double theta = cfg.network.theta;
  CompareResult cmp;
  RunResult dta_raw, wga_raw;
  cmp.dta = run_point(cfg, r, {"dta", "", 0.0, r.plans.front(), theta},
                      Algorithm::DtaDisturbed, out, rep.warnings, &dta_raw);
  cmp.wga = run_point(cfg, r, {"wga", "", 0.0, r.plans.front(), theta},
                      Algorithm::Wga, out, rep.warnings, &wga_raw);

  for (const auto& rr : wga_raw.replicas) {
    const double gap =
        (rr.final_state.x.colwise().sum() - r.spec.demands().colwise().sum()).norm();
    const double drift = rr.disturbance_sum.norm();
    cmp.wga_final_gap.push_back(gap);
    cmp.disturbance_drift.push_back(drift);
    cmp.max_drift_mismatch = std::max(cmp.max_drift_mismatch, std::abs(gap - drift));
  }
  if (!cmp.dta.divergence && !cmp.wga.divergence) {
    cmp.plateau_ratio = cmp.dta.final_distance > 0.0
                            ? cmp.wga.final_distance / cmp.dta.final_distance
                            : std::numeric_limits<double>::infinity();
  }
  rep.compare = std::move(cmp);
  rep.resolved = std::move(r);
  emit_summary(rep, out);
  return rep;
}

// ------------------------------------------------------------------- JSON

namespace {

json verdict_json(const FeasibilityVerdict& v) {
  json checks = json::array();
  for (const auto& c : v.checks) {
    checks.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs},
                      {"holds", c.holds}});
  }
  return {{"feasible", v.feasible},
          {"failed_condition", v.failed.empty() ? json(nullptr) : json(v.failed)},
          {"checks", checks}};
}

json plan_json(const StepsizePlan& p) {
  json j;
  j["mode"] = p.mode == PlanMode::Shared ? "shared" : "uncoordinated";
  if (p.mode == PlanMode::Shared) {
    j["alpha"] = p.alpha;
    j["beta"] = p.beta;
  } else {
    j["alphas"] = p.alphas;
    j["betas"] = p.betas;
    j["alpha_hi"] = p.alpha_hi();
    j["alpha_lo"] = p.alpha_lo();
    j["beta_hi"] = p.beta_hi();
    j["beta_lo"] = p.beta_lo();
  }
  if (p.verdict) j["verdict"] = verdict_json(*p.verdict);
  return j;
}

json spectral_json(const SpectralReport& s) {
  return {{"lambda2_mean", s.lambda2_mean},   {"lambdan_mean", s.lambdan_mean},
          {"lambda2_sq", s.lambda2_sq},       {"lambdan_floor", s.lambdan_floor},
          {"rho_mean_gap", s.rho_mean_gap},   {"rho_sq_gap", s.rho_sq_gap},
          {"graph_connected", s.graph_connected},
          {"connected_in_mean", s.connected_in_mean()}};
}

json point_json(const PointResult& p) {
  json j;
  j["label"] = p.label;
  j["axis"] = p.axis;
  j["value"] = p.value;
  j["algorithm"] = p.algorithm;
  j["theta"] = p.theta;
  j["plan"] = plan_json(p.plan);
  j["verdict"] = p.verdict ? verdict_json(*p.verdict) : json(nullptr);
  j["predicted_rate"] = opt_json(p.predicted_rate);
  j["fixed_network_rate"] = opt_json(p.fixed_network_rate);
  j["diverged"] = p.divergence.has_value();
  j["divergence"] = p.divergence ? json(*p.divergence) : json(nullptr);
  if (!p.divergence) {
    j["q_n"] = p.rate.q_n;
    j["k_e"] = p.rate.k_e;
    j["N"] = p.rate.N;
    j["window_shrunk"] = p.rate.window_shrunk;
    j["exact_convergence"] = p.rate.exact_convergence;
    j["initial_distance"] = p.initial_distance;
    j["final_distance"] = p.final_distance;
    j["final_feasibility_gap"] = p.trace.feasibility_gap.back();
    j["final_tracking_norm"] = p.trace.tracking_norm.back();
    j["final_gradient_dispersion"] = p.trace.gradient_dispersion.back();
    j["fit_r_squared"] = p.fit ? json(p.fit->r_squared) : json(nullptr);
    j["fit_slope"] = p.fit ? json(p.fit->slope) : json(nullptr);
    j["converged"] = p.converged;
    j["non_convergent"] = p.non_convergent;
  }
  j["trace_file"] = p.trace_file.empty() ? json(nullptr) : json(p.trace_file);
  if (!p.notes.empty()) j["notes"] = p.notes;
  return j;
}

}  // namespace

std::string summary_json(const SummaryReport& rep) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = rep.command;
  j["name"] = rep.config.name;
  j["seed"] = rep.config.engine.seed;
  j["iterations"] = rep.config.engine.iterations;
  j["replicas"] = rep.config.engine.replicas;

  if (rep.resolved) {
    const Resolved& r = *rep.resolved;
    j["kkt"] = {{"x_star", matrix_json(r.kkt.x_star)},
                {"mu_star", std::vector<double>(r.kkt.mu_star.data(),
                                                r.kkt.mu_star.data() +
                                                    r.kkt.mu_star.size())}};
    j["moduli"] = {{"eta_lo", r.spec.eta_lo()}, {"phi_hi", r.spec.phi_hi()}};
    j["spectral"] = spectral_json(r.net);
    j["stepsize_spectral"] = spectral_json(r.stepsize_net);
    if (r.optimal) {
      const auto& rc = r.rc;
      j["constants"] = {{"K1", rc.K1},   {"K2", rc.K2},   {"K1p", rc.K1p},
                        {"K2p", rc.K2p}, {"K1pp", rc.K1pp}, {"K2pp", rc.K2pp}};
      const auto region = feasible_region_shared(rc, r.stepsize_net);
      j["region"] = {{"alpha_max", region.alpha_max},
                     {"beta_max", region.beta_max},
                     {"fixed_alpha_max", 1.0 - r.stepsize_net.lambdan_mean},
                     {"fixed_beta_max", 1.0 / rc.K2p}};
      json branches = json::array();
      for (double b : r.optimal->branches) {
        branches.push_back(std::isnan(b) ? json(nullptr) : json(b));
      }
      const double ao = r.optimal->alpha;
      const double bo = r.optimal->beta;
      json opt = {{"alpha", ao},
                  {"beta", bo},
                  {"alpha_branches", branches},
                  {"active_branch", r.optimal->active_branch},
                  {"warnings", r.optimal->warnings},
                  {"shared_verdict", verdict_json(region.check(ao, bo))},
                  {"fixed_verdict", verdict_json(feasible_fixed(rc, r.stepsize_net, ao, bo))},
                  {"fixed_network_rate", fixed_network_rate(rc, r.stepsize_net, ao, bo)}};
      try {
        opt["predicted_rate"] =
            predicted_rate(rc, StepsizePlan::shared(ao, bo), r.stepsize_net);
      } catch (const InfeasiblePlanError& e) {
        opt["predicted_rate"] = nullptr;
        opt["predicted_rate_error"] = e.what();
      }
      j["optimal"] = opt;
    }
    json plans = json::array();
    for (const auto& p : r.plans) {
      json pj = plan_json(p);
      if (r.optimal && p.mode == PlanMode::Shared) {
        const auto region = feasible_region_shared(r.rc, r.stepsize_net);
        pj["verdict"] = verdict_json(region.check(p.alpha, p.beta));
        try {
          pj["predicted_rate"] = predicted_rate(r.rc, p, r.stepsize_net);
        } catch (const InfeasiblePlanError&) {
          pj["predicted_rate"] = nullptr;
        }
      }
      plans.push_back(pj);
    }
    j["base_plans"] = plans;
    j["disturbance"] = {{"kind", to_string(r.disturbance.kind)},
                        {"m_zeta", r.disturbance.m_zeta},
                        {"q_zeta", r.disturbance.q_zeta},
                        {"cutoff", r.disturbance.cutoff
                                       ? json(*r.disturbance.cutoff)
                                       : json(nullptr)}};
    j["wga_alpha"] = r.wga_alpha;
  }

  json points = json::array();
  for (const auto& p : rep.points) points.push_back(point_json(p));
  j["points"] = points;

  if (rep.compare) {
    const auto& c = *rep.compare;
    j["compare"] = {{"dta", point_json(c.dta)},
                    {"wga", point_json(c.wga)},
                    {"wga_final_feasibility_gap", c.wga_final_gap},
                    {"disturbance_drift", c.disturbance_drift},
                    {"max_drift_mismatch", c.max_drift_mismatch},
                    {"plateau_ratio", c.plateau_ratio}};
  }
  j["warnings"] = rep.warnings;
  return j.dump(2) + "\n";
}

}  // namespace dta
