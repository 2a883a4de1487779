#pragma once

// Command-line front end. Exit codes: 0 definite success, 2 definite negative
// (criterion fails, refusal, validation fails), 3 inconclusive, 1 usage or
// model errors (with {"error": {"code", "message"}} on stderr).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coarse/json_io.hpp"

namespace coarse::cli {

enum Exit : int { kOk = 0, kUsage = 1, kNegative = 2, kInconclusive = 3 };

struct RunConfig {
  std::string subcommand;
  std::vector<std::string> models;
  std::string alpha, alpha_max = "2", window, out;
  std::string witness, domain, space, k, r, net_out, declared_c, dump, lambda_min = "1e-6";
  double tol = 1e-10;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t n_max = 10, k_max = 5, h_dim = 0;
  bool frame = false;
};

namespace detail {

inline Length need_length(const std::string& s, const char* flag) {
  if (s.empty()) throw ContractError(std::string("missing required ") + flag);
  Length l = Length::parse(s);
  if (l <= Length()) throw ContractError(std::string(flag) + " must be positive");
  return l;
}

inline const std::string& need_model(const RunConfig& c, std::size_t count = 1) {
  if (c.models.size() != count)
    throw ContractError("expected " + std::to_string(count) + " --model argument(s), got " + std::to_string(c.models.size()));
  return c.models.front();
}

inline Region window_for(const RunConfig& c, const PointModel& m) {
  Region r = c.window.empty() ? m.default_region() : parse_window(c.window);
  if (r.dim() != m.dim()) throw ContractError("window dimension does not match the model");
  return r;
}

inline Json model_summary(const PointModel& m, const Region& w) {
  Json j{{"kind", std::string(to_string(m.kind()))}, {"dim", m.dim()}, {"window", to_json(w)}};
  j["name"] = m.name();
  return j;
}

inline int outcome_exit(Outcome o) {
  switch (o) {
    case Outcome::Satisfied: return kOk;
    case Outcome::Fails: return kNegative;
    case Outcome::Inconclusive: return kInconclusive;
  }
  return kUsage;
}

struct Result {
  Json body;
  int code = kOk;
};

inline Result analyze(const RunConfig& c) {
  PointModel m = load_model(need_model(c, c.models.size() == 2 ? 2 : 1));
  Region region = window_for(c, m);
  Window w = enumerate_window(m, region);
  Length amax = need_length(c.alpha_max, "--alpha-max");
  CriterionVerdict v = decide_criterion(m, w, amax, c.threads);
  BMReport bm = bm_report(m, w, v.reports);
  Json body{{"model", model_summary(m, region)}, {"window_size", w.size()}, {"criterion", to_json(v)}, {"bm", to_json(bm)}};
  if (!w.empty()) {
    GeometryAudit audit = audit_geometry(m, w, {Length::from_value(1), amax});
    Json table = Json::array();
    for (auto& [r, n] : audit.ball_count_table) table.push_back({{"R", to_json(r)}, {"max_count", n}});
    body["geometry"] = {{"separation", to_json(audit.separation)},
                        {"ball_counts", table},
                        {"declared_bounds_ok", audit.declared_bounds_ok},
                        {"violations", audit.violations}};
  }
  if (c.models.size() == 2) {
    Length alpha = c.alpha.empty() ? amax : need_length(c.alpha, "--alpha");
    std::optional<Length> declared;
    if (!c.declared_c.empty()) declared = Length::parse(c.declared_c);
    CoarsePair pair = make_coarse_pair(m, load_model(c.models[1]), region, declared);
    Json transfers = Json::array();
    for (auto& t : transfer_all(pair, alpha)) transfers.push_back(to_json(t));
    body["coarse_transfer"] = {{"C", to_json(pair.C)}, {"alpha", to_json(alpha)}, {"transfers", transfers}};
  }
  return {body, outcome_exit(v.outcome)};
}

inline Result bm(const RunConfig& c) {
  PointModel m = load_model(need_model(c));
  Region region = window_for(c, m);
  Window w = enumerate_window(m, region);
  CriterionVerdict v = decide_criterion(m, w, need_length(c.alpha_max, "--alpha-max"), c.threads);
  BMReport report = bm_report(m, w, v.reports);
  Json body{{"model", model_summary(m, region)}, {"bm", to_json(report)}};
  int code = report.limit.verdict == BMLimit::Vanishes ? kOk : report.limit.verdict == BMLimit::Persists ? kNegative : kInconclusive;
  return {body, code};
}

inline Result rays(const RunConfig& c) {
  PointModel m = load_model(need_model(c));
  Region region = window_for(c, m);
  Window w = enumerate_window(m, region);
  Length alpha = need_length(c.alpha, "--alpha");
  RayStructureWitness witness;
  try {
    witness = synthesize_ray_structure(m, w, alpha);
  } catch (const Refusal& e) {
    // A refusal backed by a model proof is definite; otherwise it is inconclusive.
    int code = m.persistent_finite_reason() ? kNegative : kInconclusive;
    return {Json{{"refusal", {{"code", e.code()}, {"message", e.what()}}}}, code};
  }
  Json body = to_json(witness);
  body["validation"] = to_json(validate_ray_structure(witness, m));
  return {body, body["validation"]["passed"].get<bool>() ? kOk : kNegative};
}

inline Result verify(const RunConfig& c) {
  if (c.witness.empty()) throw ContractError("missing required --witness");
  PointModel m = load_model(need_model(c));
  Json wj = read_json_file(c.witness);
  RayStructureWitness witness = witness_from_json(wj.contains("witness") ? wj.at("witness") : wj);
  ValidationReport report = validate_ray_structure(witness, m);
  return {to_json(report), report.passed() ? kOk : kNegative};
}

inline Result net(const RunConfig& c) {
  if (c.domain.empty()) throw ContractError("missing required --domain");
  if (c.r.empty()) throw ContractError("missing required --r");
  DomainSample d = domain_from_json(read_json_file(c.domain));
  Rational r = parse_rational(c.r);
  std::vector<Point> pts = build_net(d, r);
  NetReport report = check_net(pts, d, r);
  PointModel model = net_to_model(pts, d.dim);
  Json mj = to_json(model);
  if (!c.net_out.empty()) {
    std::ofstream f(c.net_out);
    if (!f) throw Error("io_error", "cannot write " + c.net_out);
    f << mj.dump(2) << '\n';
  }
  Json body{{"domain", {{"shape", d.shape}, {"dim", d.dim}, {"resolution", to_string(d.h)}, {"sample_size", d.size()}}},
            {"report", to_json(report)},
            {"net_model", mj}};
  return {body, report.passed() ? kOk : kNegative};
}

inline Result transfer(const RunConfig& c) {
  need_model(c, 2);
  PointModel d1 = load_model(c.models[0]), d2 = load_model(c.models[1]);
  Region region = window_for(c, d1);
  Length alpha = need_length(c.alpha, "--alpha");
  std::optional<Length> declared;
  if (!c.declared_c.empty()) declared = Length::parse(c.declared_c);
  CoarsePair pair = make_coarse_pair(d1, d2, region, declared);
  Json transfers = Json::array();
  for (auto& t : transfer_all(pair, alpha)) transfers.push_back(to_json(t));
  Json body{{"window", to_json(region)},
            {"C", to_json(pair.C)},
            {"window_constant", to_json(pair.window_constant)},
            {"alpha", to_json(alpha)},
            {"source_scale", to_json(transfer_source_scale(pair, alpha))},
            {"transfers", transfers}};
  body["declared_C"] = declared ? to_json(*declared) : Json(nullptr);
  return {body, transfers.empty() ? kNegative : kOk};
}

inline Result mvn(const RunConfig& c) {
  std::vector<std::int64_t> k;
  if (!c.k.empty()) {
    std::stringstream ss(c.k);
    std::string part;
    while (std::getline(ss, part, ',')) k.push_back(std::stoll(part));
  } else {
    std::mt19937_64 rng(c.seed);
    std::uniform_int_distribution<std::int64_t> dist(0, static_cast<std::int64_t>(c.k_max));
    for (std::size_t i = 0; i < c.n_max; ++i) k.push_back(dist(rng));
  }
  OperatorCertificate cert = mvn_shift_witness(k, c.h_dim ? std::optional<std::size_t>(c.h_dim) : std::nullopt);
  Json body = to_json(cert);
  body["k"] = k;
  bool ok = true;
  for (auto& [name, flag] : cert.exact_flags) ok = ok && flag;
  return {body, ok ? kOk : kNegative};
}

inline Result wannier(const RunConfig& c) {
  if (c.space.empty()) throw ContractError("missing required --space");
  WannierInput in = wannier_from_json(read_json_file(c.space));
  OperatorCertificate cert;
  bool ok = true;
  if (c.frame) {
    cert = frame_polar(in.space, in.phi, parse_rational(c.lambda_min).convert_to<double>());
    ok = cert.residuals["isometry"] <= c.tol && cert.residuals["projector_vs_reference"] <= 1e-8;
    cert.propagation = propagation_bound(cert.projection, in.space, 1e-12);
  } else {
    cert = build_wannier_isometry(in.space, in.phi);
    cert.exact_flags["isometry_exact"] = exact_isometry(in.space, in.amp_sq, in.weights);
    cert.propagation = propagation_bound(cert.projection, in.space);
    ok = cert.residuals["isometry"] <= c.tol && cert.residuals["idempotent"] <= 1e-9 && cert.residuals["self_adjoint"] <= 1e-9 &&
         *cert.propagation <= cert.values["max_support_diameter"];
  }
  if (!c.dump.empty()) {
    std::ofstream f(c.dump);
    if (!f) throw Error("io_error", "cannot write " + c.dump);
    dump_dense(f, cert.primary);
    dump_dense(f, cert.projection);
  }
  Json body = to_json(cert);
  body["tolerance"] = c.tol;
  return {body, ok ? kOk : kNegative};
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  if (const char* env = std::getenv("COARSE_TOL")) {
    try {
      cfg.tol = std::stod(env);
    } catch (const std::exception&) {
      err << error_json("usage", "COARSE_TOL is not a number").dump() << '\n';
      return kUsage;
    }
  }

  CLI::App app{"coarse: finite component criterion, ray structures and operator witnesses"};
  app.require_subcommand(1);
  auto add_common = [&](CLI::App* s) {
    s->add_option("--out", cfg.out, "write the JSON result here instead of stdout");
    s->add_option("--tol", cfg.tol, "numerical tolerance")->check(CLI::PositiveNumber);
    s->add_option("--seed", cfg.seed, "seed for randomized inputs");
    s->add_option("--threads", cfg.threads, "threads for per-scale analysis")->check(CLI::PositiveNumber);
  };
  auto add_model = [&](CLI::App* s) {
    s->add_option("--model", cfg.models, "model JSON file");
    s->add_option("--window", cfg.window, "box:lo1,lo2:hi1,hi2 or ball:c1,c2:r");
  };
  auto* analyze = app.add_subcommand("analyze", "decide the criterion and report Borel-Moore classes");
  add_model(analyze);
  analyze->add_option("--alpha-max", cfg.alpha_max, "largest scale examined");
  analyze->add_option("--alpha", cfg.alpha, "transfer scale when a second --model is given");
  analyze->add_option("--declared-c", cfg.declared_c, "declared coarse constant");
  auto* rays = app.add_subcommand("rays", "synthesize a ray structure witness");
  add_model(rays);
  rays->add_option("--alpha", cfg.alpha, "scale");
  auto* net = app.add_subcommand("net", "build and check a maximal r-disjoint net");
  net->add_option("--domain", cfg.domain, "domain JSON file");
  net->add_option("--r", cfg.r, "net radius");
  net->add_option("--net-out", cfg.net_out, "write the net as a model file");
  auto* bm = app.add_subcommand("bm", "Borel-Moore class per scale and its limit");
  add_model(bm);
  bm->add_option("--alpha-max", cfg.alpha_max, "largest scale examined");
  auto* transfer = app.add_subcommand("transfer", "transfer finite components between coarsely equivalent models");
  add_model(transfer);
  transfer->add_option("--alpha", cfg.alpha, "target scale");
  transfer->add_option("--declared-c", cfg.declared_c, "declared coarse constant");
  auto* mvn = app.add_subcommand("mvn", "exact shift witness T*T = P + Q, TT* = Q");
  mvn->add_option("--k", cfg.k, "comma-separated k_1,...,k_n");
  mvn->add_option("--n-max", cfg.n_max, "sites for a random k")->check(CLI::PositiveNumber);
  mvn->add_option("--k-max", cfg.k_max, "bound for a random k");
  mvn->add_option("--h-dim", cfg.h_dim, "dimension of H (default l(n_max))");
  auto* wannier = app.add_subcommand("wannier", "Wannier isometry or polar frame certificate");
  wannier->add_option("--space", cfg.space, "discretized space JSON file");
  wannier->add_flag("--frame", cfg.frame, "use the polar frame path");
  wannier->add_option("--lambda-min", cfg.lambda_min, "declared lower bound on the Gram spectrum");
  wannier->add_option("--dump", cfg.dump, "dump U (or W) and the projection as dense text");
  auto* verify = app.add_subcommand("verify", "validate a ray structure witness");
  add_model(verify);
  verify->add_option("--witness", cfg.witness, "witness JSON file");
  for (auto* s : {analyze, rays, net, bm, transfer, mvn, wannier, verify}) add_common(s);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << error_json("usage", e.what()).dump() << '\n';
    return kUsage;
  }

  detail::Result result;
  try {
    if (*analyze) result = detail::analyze(cfg);
    else if (*rays) result = detail::rays(cfg);
    else if (*net) result = detail::net(cfg);
    else if (*bm) result = detail::bm(cfg);
    else if (*transfer) result = detail::transfer(cfg);
    else if (*mvn) result = detail::mvn(cfg);
    else if (*wannier) result = detail::wannier(cfg);
    else result = detail::verify(cfg);
  } catch (const Refusal& e) {
    result = {Json{{"refusal", {{"code", e.code()}, {"message", e.what()}}}}, kNegative};
  } catch (const Error& e) {
    err << error_json(e.code(), e.what()).dump() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what()).dump() << '\n';
    return kUsage;
  }

  std::string text = result.body.dump(2) + "\n";
  if (cfg.out.empty()) {
    out << text;
  } else {
    std::ofstream f(cfg.out);
    if (!f) {
      err << error_json("io_error", "cannot write " + cfg.out).dump() << '\n';
      return kUsage;
    }
    f << text;
  }
  return result.code;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace coarse::cli
