#include "mimosa/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mimosa/baselines.hpp"
#include "mimosa/error.hpp"
#include "mimosa/evaluate.hpp"
#include "mimosa/io.hpp"

namespace mimosa {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string side_name(Sidedness s) { return s == Sidedness::TwoSided ? "two" : "one"; }

Sidedness parse_side(const std::string& s) {
  if (s == "two") return Sidedness::TwoSided;
  if (s == "one") return Sidedness::OneSidedIncrease;
  throw ConfigError("sided must be 'one' or 'two', found '" + s + "'");
}

std::string generator_name(Generator g) {
  return g == Generator::Beta ? "beta" : "truncnormal";
}

Generator parse_generator(const std::string& s) {
  if (s == "beta") return Generator::Beta;
  if (s == "truncnormal") return Generator::TruncNormalMatched;
  throw ConfigError("generator must be 'beta' or 'truncnormal', found '" + s + "'");
}

// Shortest round-trip text for a double; "inf", "-inf" and "nan" as such.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// JSON has no infinities; they are written as strings.
json jnum(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

std::string timestamp_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void require_keys(const json& obj, const std::vector<std::string>& allowed,
                  const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError("unknown config key '" + where + "." + k + "'");
}

void apply_em(EmConfig& em, const json& j) {
  require_keys(j, {"max_iters", "loglik_tol", "init_pvalue_threshold", "optimizer_tol",
                   "optimizer_max_evals", "init_resamples"},
               "em");
  if (j.contains("max_iters")) em.max_iters = j["max_iters"].get<int>();
  if (j.contains("loglik_tol")) em.loglik_tol = j["loglik_tol"].get<double>();
  if (j.contains("init_pvalue_threshold"))
    em.init_pvalue_threshold = j["init_pvalue_threshold"].get<double>();
  if (j.contains("optimizer_tol")) em.optimizer_tol = j["optimizer_tol"].get<double>();
  if (j.contains("optimizer_max_evals"))
    em.optimizer_max_evals = j["optimizer_max_evals"].get<std::size_t>();
  if (j.contains("init_resamples")) em.init_resamples = j["init_resamples"].get<std::size_t>();
}

void apply_mcmc(McmcConfig& m, const json& j) {
  require_keys(j, {"iterations", "burn_in", "thin", "adapt_until", "target_accept",
                   "prior_mean_hypers", "keep_trace"},
               "mcmc");
  if (j.contains("iterations")) m.iterations = j["iterations"].get<long>();
  if (j.contains("burn_in")) m.burn_in = j["burn_in"].get<long>();
  if (j.contains("thin")) m.thin = j["thin"].get<long>();
  if (j.contains("adapt_until")) m.adapt_until = j["adapt_until"].get<long>();
  if (j.contains("target_accept")) m.target_accept = j["target_accept"].get<double>();
  if (j.contains("prior_mean_hypers"))
    m.prior_mean_hypers = j["prior_mean_hypers"].get<double>();
  if (j.contains("keep_trace")) m.keep_trace = j["keep_trace"].get<bool>();
}

void apply_sim(RunConfig& c, const json& j) {
  require_keys(j, {"n_subjects", "w", "total_counts", "replicates", "generator", "hypers",
                   "mean_u", "concentration", "effect_deltas", "category_labels"},
               "simulate");
  if (j.contains("n_subjects"))
    c.sim.n_subjects = c.multi_sim.n_subjects = j["n_subjects"].get<int>();
  if (j.contains("w")) c.sim.w = c.multi_sim.w = j["w"].get<double>();
  if (j.contains("total_counts"))
    c.sim.total_counts = c.multi_sim.total_counts = j["total_counts"].get<long long>();
  if (j.contains("replicates"))
    c.sim.replicates = c.multi_sim.replicates = j["replicates"].get<int>();
  if (j.contains("generator")) c.sim.generator = parse_generator(j["generator"].get<std::string>());
  if (j.contains("hypers")) {
    const json& h = j["hypers"];
    require_keys(h, {"alpha_u", "beta_u", "alpha_s", "beta_s"}, "simulate.hypers");
    if (h.contains("alpha_u")) c.sim.hypers.alpha_u = h["alpha_u"].get<double>();
    if (h.contains("beta_u")) c.sim.hypers.beta_u = h["beta_u"].get<double>();
    if (h.contains("alpha_s")) c.sim.hypers.alpha_s = h["alpha_s"].get<double>();
    if (h.contains("beta_s")) c.sim.hypers.beta_s = h["beta_s"].get<double>();
  }
  if (j.contains("mean_u")) c.multi_sim.mean_u = j["mean_u"].get<std::vector<double>>();
  if (j.contains("concentration"))
    c.multi_sim.concentration = j["concentration"].get<double>();
  if (j.contains("effect_deltas"))
    c.multi_sim.effect_deltas = j["effect_deltas"].get<std::vector<double>>();
  if (j.contains("category_labels"))
    c.multi_sim.category_labels = j["category_labels"].get<std::vector<std::string>>();
}

// Fills command-dependent defaults and propagates the shared settings.
void finalize(RunConfig& c) {
  if (c.method.empty()) c.method = c.command == "baseline" ? "fisher" : "em";
  c.em.seed = c.mcmc.seed = c.sim.seed = c.multi_sim.seed = c.seed;
  c.em.sidedness = c.mcmc.sidedness = c.sidedness;
  if (c.sidedness_set) c.sim.sidedness = c.sidedness;
  c.sim.hypers.w = c.sim.w;
}

void check(const RunConfig& c) {
  const std::vector<std::string> commands = {"fit", "simulate", "evaluate", "baseline"};
  if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
    throw ConfigError("command must be fit, simulate, evaluate or baseline");
  if (c.model != "betabin" && c.model != "dirmult")
    throw ConfigError("model must be betabin or dirmult");
  if (c.command == "fit" && c.method != "em" && c.method != "mcmc")
    throw ConfigError("fit method must be em or mcmc");
  if (c.command == "baseline") {
    const bool ok = c.model == "betabin"
                        ? (c.method == "fisher" || c.method == "lrt" || c.method == "lfc")
                        : (c.method == "fisher" || c.method == "lrt");
    if (!ok) throw ConfigError("baseline method '" + c.method + "' is not available for " + c.model);
  }
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  if (c.command != "simulate") {
    if (c.input.empty()) throw ConfigError("--input is required for " + c.command);
    if (!fs::exists(c.input)) throw ConfigError("input does not exist: " + c.input.string());
  }
  if (c.command == "evaluate") {
    if (c.labels.empty()) throw ConfigError("--labels is required for evaluate");
    if (!fs::exists(c.labels)) throw ConfigError("labels do not exist: " + c.labels.string());
  }
  validate(c.em);
  if (c.command == "fit" && c.method == "mcmc") validate(c.mcmc);
  if (c.command == "simulate") {
    if (c.model == "betabin")
      validate(c.sim);
    else if (c.multi_sim.n_subjects < 2 || c.multi_sim.replicates < 1 ||
             c.multi_sim.total_counts < 1)
      throw ConfigError("simulation needs n_subjects >= 2, replicates >= 1, total_counts >= 1");
  }
}

json config_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["model"] = c.model;
  j["method"] = c.method;
  j["sided"] = side_name(c.sidedness);
  j["input"] = c.input.string();
  if (!c.labels.empty()) j["labels"] = c.labels.string();
  j["output_dir"] = c.output_dir.string();
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["em"] = {{"max_iters", c.em.max_iters},
             {"loglik_tol", c.em.loglik_tol},
             {"init_pvalue_threshold", c.em.init_pvalue_threshold},
             {"optimizer_tol", c.em.optimizer_tol},
             {"optimizer_max_evals", c.em.optimizer_max_evals},
             {"init_resamples", c.em.init_resamples}};
  j["mcmc"] = {{"iterations", c.mcmc.iterations},
               {"burn_in", c.mcmc.burn_in},
               {"thin", c.mcmc.thin},
               {"adapt_until", c.mcmc.adapt_until},
               {"target_accept", c.mcmc.target_accept},
               {"prior_mean_hypers", c.mcmc.prior_mean_hypers},
               {"keep_trace", c.mcmc.keep_trace}};
  json sim;
  sim["n_subjects"] = c.sim.n_subjects;
  sim["w"] = c.sim.w;
  sim["total_counts"] = c.sim.total_counts;
  sim["replicates"] = c.sim.replicates;
  sim["generator"] = generator_name(c.sim.generator);
  sim["sided"] = side_name(c.sim.sidedness);
  sim["hypers"] = {{"alpha_u", c.sim.hypers.alpha_u},
                   {"beta_u", c.sim.hypers.beta_u},
                   {"alpha_s", c.sim.hypers.alpha_s},
                   {"beta_s", c.sim.hypers.beta_s}};
  sim["mean_u"] = c.multi_sim.mean_u;
  sim["concentration"] = c.multi_sim.concentration;
  sim["effect_deltas"] = c.multi_sim.effect_deltas;
  sim["category_labels"] = c.multi_sim.category_labels;
  j["simulate"] = sim;
  return j;
}

json header(const RunConfig& c) {
  json j;
  j["tool"] = "mimosa";
  j["version"] = kToolVersion;
  j["command"] = c.command;
  j["timestamp"] = timestamp_utc();
  j["seed"] = c.seed;
  j["config"] = config_json(c);
  return j;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

struct Outcome {
  int code = kExitOk;
  std::string error_type;
  std::string message;
};

void write_error(const fs::path& dir, const Outcome& o) {
  json j;
  j["status"] = "error";
  j["exit_code"] = o.code;
  j["error_type"] = o.error_type;
  j["message"] = o.message;
  j["timestamp"] = timestamp_utc();
  fs::create_directories(dir);
  write_json(dir / "error.json", j);
}

// Maps an in-flight exception to an exit status.
Outcome classify(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError& e) {
    return {kExitValidation, "config_error", e.what()};
  } catch (const SchemaError& e) {
    return {kExitValidation, "schema_error", e.what()};
  } catch (const ValidationError& e) {
    return {kExitValidation, "validation_error", e.what()};
  } catch (const ParameterError& e) {
    return {kExitValidation, "parameter_error", e.what()};
  } catch (const DomainError& e) {
    return {kExitValidation, "domain_error", e.what()};
  } catch (const DegenerateConstraintError& e) {
    return {kExitDiagnostic, "degenerate_constraint", e.what()};
  } catch (const InitializationError& e) {
    return {kExitDiagnostic, "initialization_error", e.what()};
  } catch (const std::exception& e) {
    return {kExitFailure, "internal_error", e.what()};
  }
}

json beta_hypers_json(const BetaBinHypers& h) {
  return {{"alpha_u", h.alpha_u}, {"beta_u", h.beta_u}, {"alpha_s", h.alpha_s},
          {"beta_s", h.beta_s},   {"w", h.w}};
}

json dirichlet_hypers_json(const DirMultHypers& h) {
  return {{"alpha_u", h.alpha_u}, {"alpha_s", h.alpha_s}, {"w", h.w}};
}

template <class Fit>
json em_diagnostics(const Fit& fit) {
  json d;
  d["converged"] = fit.converged;
  d["iterations"] = fit.iterations;
  d["rejected_m_steps"] = fit.rejected_m_steps;
  d["optimizer_failure"] = fit.optimizer_failure;
  d["final_loglik"] =
      fit.observed_loglik_trace.empty() ? json(nullptr) : jnum(fit.observed_loglik_trace.back());
  d["loglik_trace"] = json::array();
  for (double v : fit.observed_loglik_trace) d["loglik_trace"].push_back(jnum(v));
  d["warnings"] = fit.warnings;
  return d;
}

template <class Fit>
json mcmc_diagnostics(const Fit& fit) {
  json d;
  d["acceptance_rates"] = fit.acceptance_rates;
  d["diagnostic_failure"] = fit.diagnostic_failure;
  double min_ess = std::numeric_limits<double>::infinity();
  json params = json::array();
  for (const ParamSummary& p : fit.chain_summary) {
    params.push_back({{"name", p.name}, {"mean", p.mean}, {"sd", p.sd}, {"ess", p.ess}});
    min_ess = std::min(min_ess, p.ess);
  }
  d["min_ess"] = jnum(min_ess);
  d["parameters"] = params;
  return d;
}

void write_trace(const fs::path& dir, const auto& fit) {
  std::ostringstream os;
  write_trace_csv(os, fit);
  write_text(dir / "trace.csv", os.str());
}

int fit_univariate(const RunConfig& c, const fs::path& input, const fs::path& out_dir,
                   json& doc) {
  const std::vector<CountPair> data = read_univariate(input);
  BetaBinHypers h;
  std::vector<double> resp;
  int code = kExitOk;
  std::string failure;
  if (c.method == "em") {
    const EmFit fit = fit_em(data, c.em);
    h = fit.hypers;
    resp = fit.responsibilities;
    doc["diagnostics"] = em_diagnostics(fit);
    if (!fit.converged) failure = "EM did not converge within max_iters";
  } else {
    const McmcFit fit = fit_mcmc(data, c.mcmc);
    h = fit.hyper_posterior_means;
    resp = fit.posterior_response_prob;
    doc["diagnostics"] = mcmc_diagnostics(fit);
    if (c.mcmc.keep_trace) write_trace(out_dir, fit);
    if (fit.diagnostic_failure) failure = "MCMC acceptance rate below 1% after burn-in";
  }
  doc["hyperparameters"] = beta_hypers_json(h);
  std::vector<double> diffs;
  std::vector<ProportionSummary> sums;
  for (const CountPair& y : data) {
    sums.push_back(posterior_proportion_summaries(h, y, c.sidedness));
    diffs.push_back(sums.back().mean_diff);
  }
  const std::vector<double> signed_scores = signed_score(resp, diffs);
  json subjects = json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    subjects.push_back({{"subject_id", data[i].subject_id},
                        {"responsibility", resp[i]},
                        {"score", resp[i]},
                        {"signed_score", signed_scores[i]},
                        {"mean_p_u", sums[i].mean_p_u},
                        {"mean_p_s", sums[i].mean_p_s},
                        {"mean_diff", sums[i].mean_diff}});
  }
  doc["score_kind"] = "responsibility";
  doc["fdr_basis"] = "posterior";
  doc["subjects"] = subjects;
  if (!failure.empty()) {
    code = kExitDiagnostic;
    doc["status"] = "diagnostic_failure";
    write_error(out_dir, {code, "diagnostic_failure", failure});
  }
  return code;
}

int fit_multivariate(const RunConfig& c, const fs::path& input, const fs::path& out_dir,
                     json& doc) {
  const std::vector<MultiCountPair> data = read_multivariate(input);
  DirMultHypers h;
  std::vector<double> resp;
  int code = kExitOk;
  std::string failure;
  if (c.method == "em") {
    const EmFitMv fit = fit_em(data, c.em);
    h = fit.hypers;
    resp = fit.responsibilities;
    doc["diagnostics"] = em_diagnostics(fit);
    if (!fit.converged) failure = "EM did not converge within max_iters";
  } else {
    const McmcFitMv fit = fit_mcmc(data, c.mcmc);
    h = fit.hyper_posterior_means;
    resp = fit.posterior_response_prob;
    doc["diagnostics"] = mcmc_diagnostics(fit);
    if (c.mcmc.keep_trace) write_trace(out_dir, fit);
    if (fit.diagnostic_failure) failure = "MCMC acceptance rate below 1% after burn-in";
  }
  doc["categories"] = data.front().category_labels;
  doc["hyperparameters"] = dirichlet_hypers_json(h);
  json subjects = json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const MultiProportionSummary s = posterior_proportion_summaries(h, data[i]);
    subjects.push_back({{"subject_id", data[i].subject_id},
                        {"responsibility", resp[i]},
                        {"score", resp[i]},
                        {"mean_p_u", s.mean_p_u},
                        {"mean_p_s", s.mean_p_s}});
  }
  doc["score_kind"] = "responsibility";
  doc["fdr_basis"] = "posterior";
  doc["subjects"] = subjects;
  if (!failure.empty()) {
    code = kExitDiagnostic;
    doc["status"] = "diagnostic_failure";
    write_error(out_dir, {code, "diagnostic_failure", failure});
  }
  return code;
}

double neg_log_p(double p) { return p > 0.0 ? -std::log(p) : std::numeric_limits<double>::infinity(); }

int baseline_file(const RunConfig& c, const fs::path& input, json& doc) {
  std::vector<TestResult> results;
  if (c.model == "betabin") {
    for (const CountPair& y : read_univariate(input)) {
      if (c.method == "fisher")
        results.push_back(fisher_exact(y, c.sidedness));
      else if (c.method == "lrt")
        results.push_back(binomial_lrt(y, c.sidedness));
      else
        results.push_back(log_fold_change(y));
    }
  } else {
    MultiFisherOptions opts;
    const std::uint64_t base = stream_key("baseline");
    for (const MultiCountPair& y : read_multivariate(input)) {
      if (c.method == "lrt") {
        results.push_back(multinomial_lrt(y));
      } else {
        SeededRng rng(c.seed, combine_keys(base, stream_key(y.subject_id)));
        results.push_back(multi_fisher(y, rng, opts));
      }
    }
  }
  const bool has_p = c.method != "lfc";
  std::vector<double> ps;
  for (const TestResult& r : results) ps.push_back(r.p_value);
  const std::vector<double> qs = has_p ? adjust_pvalues(ps) : std::vector<double>{};
  json subjects = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    json s;
    s["subject_id"] = results[i].subject_id;
    s["statistic"] = jnum(results[i].statistic);
    s["direction"] = results[i].direction;
    if (has_p) {
      s["p_value"] = results[i].p_value;
      s["q_value"] = qs[i];
      s["score"] = jnum(neg_log_p(results[i].p_value));
    } else {
      s["score"] = jnum(results[i].statistic);
    }
    subjects.push_back(s);
  }
  doc["score_kind"] = has_p ? "neg_log_p" : "statistic";
  doc["fdr_basis"] = has_p ? "qvalue" : "none";
  doc["subjects"] = subjects;
  return kExitOk;
}

// One input file: fit or baseline into out_dir/results.json.
int process_file(const RunConfig& c, const fs::path& input, const fs::path& out_dir) {
  try {
    fs::create_directories(out_dir);
    json doc = header(c);
    doc["status"] = "ok";
    doc["input_file"] = input.filename().string();
    int code = kExitOk;
    if (c.command == "fit")
      code = c.model == "betabin" ? fit_univariate(c, input, out_dir, doc)
                                  : fit_multivariate(c, input, out_dir, doc);
    else
      code = baseline_file(c, input, doc);
    write_json(out_dir / "results.json", doc);
    return code;
  } catch (...) {
    const Outcome o = classify(std::current_exception());
    write_error(out_dir, o);
    return o.code;
  }
}

int run_files(const RunConfig& c) {
  if (!fs::is_directory(c.input)) return process_file(c, c.input, c.output_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(c.input))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no .csv files in " + c.input.string());

  std::vector<int> codes(files.size(), kExitOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < files.size();)
      codes[k] = process_file(c, files[k], c.output_dir / files[k].stem());
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(c.threads), files.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  json summary = header(c);
  summary["files"] = json::array();
  int worst = kExitOk;
  for (std::size_t k = 0; k < files.size(); ++k) {
    summary["files"].push_back({{"file", files[k].filename().string()},
                                {"output", files[k].stem().string()},
                                {"exit_code", codes[k]}});
    worst = std::max(worst, codes[k]);
  }
  write_json(c.output_dir / "batch.json", summary);
  return worst;
}

int run_simulate(const RunConfig& c) {
  json doc = header(c);
  json reps = json::array();
  auto rep_dir = [&](int r) {
    std::ostringstream name;
    name << "replicate_" << (r + 1 < 10 ? "0" : "") << (r + 1);
    return c.output_dir / name.str();
  };
  auto ids_of = [](const auto& records) {
    std::vector<std::string> ids;
    for (const auto& y : records) ids.push_back(y.subject_id);
    return ids;
  };
  if (c.model == "betabin") {
    for (const LabelledDataset& d : simulate_replicates(c.sim)) {
      const fs::path dir = rep_dir(d.replicate_index);
      fs::create_directories(dir);
      std::ostringstream data, labels;
      write_univariate(data, d.records);
      write_labels(labels, ids_of(d.records), d.true_z);
      write_text(dir / "data.csv", data.str());
      write_text(dir / "labels.csv", labels.str());
      reps.push_back(dir.filename().string());
    }
  } else {
    for (const LabelledMultiDataset& d : simulate_multi_replicates(c.multi_sim)) {
      const fs::path dir = rep_dir(d.replicate_index);
      fs::create_directories(dir);
      std::ostringstream data, labels;
      write_multivariate(data, d.records);
      write_labels(labels, ids_of(d.records), d.true_z);
      write_text(dir / "data.csv", data.str());
      write_text(dir / "labels.csv", labels.str());
      reps.push_back(dir.filename().string());
    }
  }
  doc["replicates"] = reps;
  write_json(c.output_dir / "simulation.json", doc);
  return kExitOk;
}

double json_score(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw SchemaError("score must be a number or +/-inf");
}

int run_evaluate(const RunConfig& c) {
  json results;
  try {
    results = json::parse(read_text(c.input));
  } catch (const json::parse_error& e) {
    throw SchemaError(c.input.string() + ": " + e.what());
  }
  if (!results.contains("subjects") || !results["subjects"].is_array())
    throw SchemaError(c.input.string() + ": no subjects array");
  const std::string basis = results.value("fdr_basis", "posterior");

  std::map<std::string, int> truth;
  for (const SubjectLabel& l : read_labels(c.labels)) truth[l.subject_id] = l.true_z;

  std::vector<double> scores, fdr_values;
  std::vector<int> labels;
  for (const json& s : results["subjects"]) {
    const std::string id = s.at("subject_id").get<std::string>();
    const auto it = truth.find(id);
    if (it == truth.end()) throw ValidationError("no label for subject '" + id + "'");
    scores.push_back(json_score(s.at("score")));
    labels.push_back(it->second);
    if (basis == "posterior") fdr_values.push_back(s.at("responsibility").get<double>());
    if (basis == "qvalue") fdr_values.push_back(s.at("q_value").get<double>());
  }

  const RocCurve curve = roc(scores, labels);
  std::ostringstream roc_csv;
  roc_csv << "threshold,fpr,tpr\n";
  for (std::size_t k = 0; k < curve.fpr.size(); ++k)
    roc_csv << num(curve.thresholds[k]) << ',' << num(curve.fpr[k]) << ','
            << num(curve.tpr[k]) << '\n';
  fs::create_directories(c.output_dir);
  write_text(c.output_dir / "roc.csv", roc_csv.str());

  std::ostringstream fdr_csv;
  fdr_csv << "nominal,observed,n_called\n";
  json fdr = json::array();
  if (basis != "none") {
    const std::vector<double> grid = nominal_grid();
    const auto calls = basis == "posterior" ? calls_from_posterior(fdr_values, grid)
                                            : calls_from_qvalues(fdr_values, grid);
    const FdrCurve fc = observed_vs_nominal(calls, grid, labels);
    for (std::size_t k = 0; k < fc.nominal.size(); ++k) {
      fdr_csv << num(fc.nominal[k]) << ',' << num(fc.observed[k]) << ',' << fc.n_called[k]
              << '\n';
      fdr.push_back({{"nominal", fc.nominal[k]},
                     {"observed", fc.observed[k]},
                     {"n_called", fc.n_called[k]}});
    }
  }
  write_text(c.output_dir / "fdr.csv", fdr_csv.str());

  json doc = header(c);
  doc["status"] = "ok";
  doc["auc"] = curve.auc;
  doc["fdr_basis"] = basis;
  doc["n_subjects"] = labels.size();
  doc["n_responders"] = std::count(labels.begin(), labels.end(), 1);
  doc["fdr"] = fdr;
  write_json(c.output_dir / "evaluation.json", doc);
  return kExitOk;
}

}  // namespace

void apply_config_text(RunConfig& c, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    require_keys(j, {"command", "model", "method", "sided", "input", "labels", "output_dir",
                     "seed", "threads", "em", "mcmc", "simulate"},
                 "config");
    if (j.contains("command")) c.command = j["command"].get<std::string>();
    if (j.contains("model")) c.model = j["model"].get<std::string>();
    if (j.contains("method")) c.method = j["method"].get<std::string>();
    if (j.contains("sided")) {
      c.sidedness = parse_side(j["sided"].get<std::string>());
      c.sidedness_set = true;
    }
    if (j.contains("input")) c.input = j["input"].get<std::string>();
    if (j.contains("labels")) c.labels = j["labels"].get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("em")) apply_em(c.em, j["em"]);
    if (j.contains("mcmc")) apply_mcmc(c.mcmc, j["mcmc"]);
    if (j.contains("simulate")) apply_sim(c, j["simulate"]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
  }
}

std::string config_echo(const RunConfig& cfg) { return config_json(cfg).dump(2); }

RunConfig parse_command_line(int argc, const char* const* argv, bool* help_shown) {
  if (help_shown) *help_shown = false;
  CLI::App app{"Mixture models for paired stimulated/unstimulated count data"};
  app.name("mimosa");
  std::string command, input, output_dir, model, method, sided, config, labels;
  std::uint64_t seed = 1;
  long iterations = 0, burn_in = 0;
  int threads = 1;
  app.add_option("command", command, "fit, simulate, evaluate or baseline")
      ->required()
      ->check(CLI::IsMember({"fit", "simulate", "evaluate", "baseline"}));
  app.add_option("--input", input, "CSV file, directory of CSVs, or results.json (evaluate)");
  app.add_option("--output-dir", output_dir, "Directory for artifacts");
  app.add_option("--model", model, "betabin or dirmult");
  app.add_option("--method", method, "em or mcmc (fit); fisher, lrt or lfc (baseline)");
  app.add_option("--sided", sided, "one or two")->check(CLI::IsMember({"one", "two"}));
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--config", config, "JSON config file; flags override it");
  app.add_option("--iterations", iterations, "MCMC iterations, or the EM iteration cap");
  app.add_option("--burn-in", burn_in, "MCMC burn-in iterations");
  app.add_option("--threads", threads, "Parallel files in batch mode");
  app.add_option("--labels", labels, "subject_id,true_z CSV (evaluate)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    if (help_shown) *help_shown = true;
    return {};
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  RunConfig c;
  if (!config.empty()) apply_config_text(c, read_text(config));
  c.command = command;
  if (app.count("--input")) c.input = input;
  if (app.count("--output-dir")) c.output_dir = output_dir;
  if (app.count("--model")) c.model = model;
  if (app.count("--method")) c.method = method;
  if (app.count("--sided")) {
    c.sidedness = parse_side(sided);
    c.sidedness_set = true;
  }
  if (app.count("--seed")) c.seed = seed;
  if (app.count("--threads")) c.threads = threads;
  if (app.count("--labels")) c.labels = labels;
  finalize(c);
  if (app.count("--iterations")) {
    if (c.method == "mcmc")
      c.mcmc.iterations = iterations;
    else
      c.em.max_iters = static_cast<int>(iterations);
  }
  if (app.count("--burn-in")) c.mcmc.burn_in = burn_in;
  check(c);
  return c;
}

int run(const RunConfig& c) {
  try {
    fs::create_directories(c.output_dir);
    if (c.command == "simulate") return run_simulate(c);
    if (c.command == "evaluate") return run_evaluate(c);
    return run_files(c);
  } catch (...) {
    const Outcome o = classify(std::current_exception());
    write_error(c.output_dir, o);
    return o.code;
  }
}

int cli_main(int argc, const char* const* argv) {
  RunConfig cfg;
  try {
    bool help = false;
    cfg = parse_command_line(argc, argv, &help);
    if (help) return kExitOk;
  } catch (...) {
    const Outcome o = classify(std::current_exception());
    std::cerr << "mimosa: " << o.message << '\n';
    return o.code;
  }
  const int code = run(cfg);
  if (code != kExitOk) {
    std::ifstream err(cfg.output_dir / "error.json");
    std::cerr << "mimosa: exit " << code << (err ? ", see error.json" : "") << '\n';
  }
  return code;
}

}  // namespace mimosa
