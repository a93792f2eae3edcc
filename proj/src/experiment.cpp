#include "ope/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "ope/errors.hpp"
#include "ope/statistics.hpp"

#ifndef OPESTAT_VERSION
#define OPESTAT_VERSION "0.0.0"
#endif

namespace ope {

namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

const std::set<std::string> kKnownKeys{
    "schema_version", "experiment", "measure",  "n_grid",    "statistic",      "replicas",
    "seed",           "output_dir", "method",   "eps_grid",  "deltas",         "s_grid",
    "point",          "box",        "box_grid", "totik_interval", "totik_grid", "description"};

std::vector<double> number_array(const nlohmann::json& j, const char* key, bool positive) {
  if (!j.is_array() || j.empty())
    throw ConfigurationError(std::string("'") + key + "' must be a nonempty array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigurationError(std::string("'") + key + "' must contain numbers");
    const double d = v.get<double>();
    if (!std::isfinite(d) || (positive && !(d > 0.0)))
      throw ConfigurationError(std::string("'") + key + "' entries must be " +
                               (positive ? "positive" : "finite"));
    out.push_back(d);
  }
  return out;
}

Interval pair_interval(const nlohmann::json& j, const char* key) {
  const auto v = number_array(j, key, false);
  if (v.size() != 2 || !(v[0] < v[1]))
    throw ConfigurationError(std::string("'") + key + "' must be [lo, hi] with lo < hi");
  return {v[0], v[1]};
}

std::string csv_field(double v) { return format_double(v); }

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ConfigurationError*>(&e)) return "ConfigurationError";
  if (dynamic_cast<const PreconditionError*>(&e)) return "PreconditionError";
  if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
  if (dynamic_cast<const InstabilityError*>(&e)) return "InstabilityError";
  if (dynamic_cast<const DegenerateMeasureError*>(&e)) return "DegenerateMeasureError";
  if (dynamic_cast<const SamplingStallError*>(&e)) return "SamplingStallError";
  if (dynamic_cast<const ConsistencyError*>(&e)) return "ConsistencyError";
  if (dynamic_cast<const ResolutionError*>(&e)) return "ResolutionError";
  if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
  return "Error";
}

void report_error(const std::string& kind, const std::string& type, const std::string& message) {
  nlohmann::json j{{"status", "error"}, {"kind", kind}, {"type", type}, {"message", message}};
  std::cerr << j.dump() << std::endl;
}

void validate_for(const ExperimentConfig& c, Experiment e) {
  const auto& f = c.statistic.f;
  if (e == Experiment::Bounds || e == Experiment::Report) {
    if (!std::isfinite(f.sup_norm) || !(f.sup_norm > 0.0))
      throw ConfigurationError("bounds need a statistic with a finite positive sup_norm");
  }
  if (e == Experiment::Sample && c.method == SampleMethod::Tridiagonal && !c.track_rank)
    throw ConfigurationError(
        "the tridiagonal sampler needs a varying_gaussian measure without params.n (N = n)");
  if (e == Experiment::Universality || e == Experiment::Report) {
    const auto m = c.measure_at(c.n_grid.front());
    const Interval s = m->support();
    if (!(c.point > s.lo && c.point < s.hi))
      throw ConfigurationError("'point' must lie in the interior of the support");
  }
  if (e == Experiment::Nevai || e == Experiment::Report) {
    const auto m = c.measure_at(c.n_grid.front());
    const Interval s = m->support();
    if (!(c.statistic.xstar > s.lo && c.statistic.xstar < s.hi))
      throw ConfigurationError("'xstar' must lie in the interior of the support");
  }
}

class Writer {
 public:
  Writer(fs::path dir, RunManifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {}

  void write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    {
      std::ofstream out(p, std::ios::binary);
      if (!out) throw Error("cannot open output file " + p.string());
      out << content;
      if (!out) throw Error("failed writing " + p.string());
    }
    manifest_.files.push_back({name, sha256_file(p.string()), fs::file_size(p)});
  }

 private:
  fs::path dir_;
  RunManifest& manifest_;
};

class Runner {
 public:
  Runner(const ExperimentConfig& c, unsigned threads, Writer& w) : c_(c), threads_(threads), w_(w) {}

  void sample() {
    for (std::size_t n : c_.n_grid) {
      const auto measure = c_.measure_at(n);
      std::vector<SampleConfiguration> out(c_.replicas);
      const RngStream base(c_.seed, n);
      if (c_.method == SampleMethod::Tridiagonal) {
        parallel_for(c_.replicas, threads_, [&](std::size_t r) {
          RngStream rng = base.substream(r);
          out[r] = sample_gue_tridiagonal(n, rng);
        });
      } else {
        const CDKernel kern(measure, n);
        const OpeSampler sampler(kern);
        parallel_for(c_.replicas, threads_, [&](std::size_t r) {
          RngStream rng = base.substream(r);
          out[r] = sampler.sample(rng);
        });
      }
      std::ostringstream os;
      write_samples_csv(os, out, measure->to_json());
      w_.write("samples_n" + std::to_string(n) + ".csv", os.str());
    }
  }

  void stats() {
    std::ostringstream os;
    os << "n,mean,variance,commutator_hs_norm_sq,generic_bound,lipschitz_bound\n";
    const auto& st = c_.statistic;
    for (std::size_t n : c_.n_grid) {
      const CDKernel kern(c_.measure_at(n), n);
      const TestFunction fn = st.at_rank(n);
      const double mean = exact_mean(kern, fn);
      const double var = exact_variance(kern, fn);
      const double nn = static_cast<double>(n);
      os << n << ',' << csv_field(mean) << ',' << csv_field(var) << ',' << csv_field(2.0 * var) << ','
         << csv_field(2.0 * nn * st.f.sup_norm * st.f.sup_norm) << ',';
      if (st.f.lipschitz) {
        const double L = *st.f.lipschitz;
        os << csv_field(L * L * kern.b_n() * kern.b_n() * std::pow(nn, 2.0 * st.alpha));
      }
      os << '\n';
    }
    w_.write("stats.csv", os.str());
  }

  void bounds() {
    std::ostringstream bs, ts;
    bs << "n,bound,epsilon,rhs,log_rhs,regime,asymptotic_only\n";
    ts << "n,epsilon,empirical,wilson_lo,wilson_hi,bound_rhs,regime,dominated\n";
    const auto& st = c_.statistic;
    const double sup = st.f.sup_norm;
    for (std::size_t n : c_.n_grid) {
      const CDKernel kern(c_.measure_at(n), n);
      const TestFunction fn = st.at_rank(n);
      const double var = exact_variance(kern, fn);
      const double ratio = recurrence_ratio_bound(kern.coeffs(), n);
      for (double eps : c_.eps_grid) {
        std::vector<BoundReport> reps{bound_global(n, sup, eps), bound_general(var, sup, eps),
                                      bound_rank(n, sup, eps)};
        if (st.alpha > 0.0) {
          reps.push_back(bound_meso(n, st.alpha, sup, eps));
          reps.push_back(bound_local(n, st.alpha, sup, eps));
        }
        if (st.f.lipschitz && *st.f.lipschitz > 0.0) {
          reps.push_back(bound_lipschitz(*st.f.lipschitz, sup, eps, ratio));
          if (st.alpha > 0.0) reps.push_back(bound_meso(n, st.alpha, sup, eps, st.f.lipschitz, ratio));
        }
        for (const auto& r : reps)
          bs << n << ',' << bound_label(r.name) << ',' << csv_field(eps) << ',' << csv_field(r.rhs) << ','
             << csv_field(r.log_rhs) << ',' << regime_label(r.regime) << ','
             << (r.asymptotic_only ? "true" : "false") << '\n';
        if (c_.replicas >= 1000) {
          const RngStream base(c_.seed, n);
          const auto est = tail_probability_mc(kern, fn, eps, c_.replicas, base,
                                               static_cast<double>(n), threads_);
          ts << n << ',' << csv_field(eps) << ',' << csv_field(est.empirical) << ','
             << csv_field(est.interval.lo) << ',' << csv_field(est.interval.hi) << ','
             << csv_field(est.bound.rhs) << ',' << regime_label(est.bound.regime) << ','
             << (est.dominated ? "true" : "false") << '\n';
        }
      }
    }
    w_.write("bounds.csv", bs.str());
    if (c_.replicas >= 1000) w_.write("tails.csv", ts.str());
  }

  void nevai() {
    const auto& st = c_.statistic;
    std::ostringstream os;
    os << "n,nevai_integral,alpha_nevai,scaled_variance_normalized";
    for (double d : c_.deltas) {
      char label[32];
      std::snprintf(label, sizeof label, "%g", d);
      os << ",concentration_mass_" << label;
    }
    os << '\n';
    std::vector<double> nev, anev, svar;
    std::vector<std::vector<double>> mass(c_.deltas.size());
    for (std::size_t n : c_.n_grid) {
      const CDKernel kern(c_.measure_at(n), n);
      const double nn = static_cast<double>(n);
      nev.push_back(nevai_integral(kern, st.f, st.xstar));
      anev.push_back(alpha_nevai_functional(kern, st.f, st.alpha, st.xstar, c_.s_grid));
      svar.push_back(std::pow(nn, st.alpha - 1.0) * exact_scaled_variance(kern, st));
      os << n << ',' << csv_field(nev.back()) << ',' << csv_field(anev.back()) << ','
         << csv_field(svar.back());
      for (std::size_t d = 0; d < c_.deltas.size(); ++d) {
        mass[d].push_back(concentration_mass(kern, st.xstar, c_.deltas[d]));
        os << ',' << csv_field(mass[d].back());
      }
      os << '\n';
    }
    w_.write("nevai.csv", os.str());
    std::vector<double> abs_nev;
    for (double v : nev) abs_nev.push_back(std::abs(v));
    const bool premise = c_.measure_at(c_.n_grid.front())->family().kind == Family::Discretized;
    nlohmann::json side;
    side["config"] = c_.to_json();
    side["config"].erase("output_dir");  // keep the file independent of where it is written
    auto diag = [&](std::vector<double> v) {
      auto d = make_decay_diagnostic(c_.n_grid, std::move(v));
      d.unverified_premise = premise;
      return d.to_json();
    };
    side["nevai_integral_abs"] = diag(abs_nev);
    side["alpha_nevai"] = diag(anev);
    side["scaled_variance_normalized"] = diag(svar);
    nlohmann::json cm = nlohmann::json::array();
    for (std::size_t d = 0; d < c_.deltas.size(); ++d)
      cm.push_back({{"delta", c_.deltas[d]}, {"values", mass[d]},
                    {"is_increasing", strictly_increasing(mass[d])}});
    side["concentration_mass"] = cm;
    w_.write("nevai_decay.json", side.dump(2) + "\n");
  }

  void universality() {
    std::ostringstream os;
    os << "n,universality_error,totik_error\n";
    for (std::size_t n : c_.n_grid) {
      const auto measure = c_.measure_at(n);
      const CDKernel kern(measure, n);
      os << n << ',' << csv_field(universality_error(kern, c_.point, c_.box, c_.box_grid)) << ',';
      const bool fixed_gaussian = measure->family().kind == Family::VaryingGaussian && !c_.track_rank;
      const auto rho = equilibrium_for(*measure);
      if (rho && !fixed_gaussian)
        os << csv_field(totik_error(kern, rho->evaluator, c_.totik_interval, c_.totik_grid));
      os << '\n';
    }
    w_.write("universality.csv", os.str());
  }

 private:
  const ExperimentConfig& c_;
  unsigned threads_;
  Writer& w_;
};

}  // namespace

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Sample: return "sample";
    case Experiment::Stats: return "stats";
    case Experiment::Bounds: return "bounds";
    case Experiment::Nevai: return "nevai";
    case Experiment::Universality: return "universality";
    case Experiment::Report: return "report";
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& s) {
  for (auto e : {Experiment::Sample, Experiment::Stats, Experiment::Bounds, Experiment::Nevai,
                 Experiment::Universality, Experiment::Report})
    if (experiment_name(e) == s) return e;
  throw ConfigurationError("unknown experiment '" + s + "'");
}

MeasurePtr ExperimentConfig::measure_at(std::size_t n) const {
  if (track_rank) return Measure::varying_gaussian(n, measure.value("depth", std::size_t{64}));
  if (!fixed_measure_) throw ConfigurationError("configuration has no measure");
  return fixed_measure_;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ConfigurationError("configuration must be a JSON object");
    for (const auto& [k, v] : j.items())
      if (!kKnownKeys.count(k)) throw ConfigurationError("unknown configuration key '" + k + "'");
    ExperimentConfig c;
    c.raw = j;
    if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion)
      throw ConfigurationError("unsupported schema_version (expected 1)");
    if (j.contains("experiment")) c.experiment = parse_experiment(j.at("experiment").get<std::string>());

    if (!j.contains("n_grid")) throw ConfigurationError("'n_grid' is required");
    const auto& ng = j.at("n_grid");
    if (!ng.is_array() || ng.empty()) throw ConfigurationError("'n_grid' must be a nonempty array");
    for (const auto& v : ng) {
      if (!v.is_number_integer() || v.get<long long>() < 1)
        throw ConfigurationError("'n_grid' entries must be positive integers");
      const auto n = v.get<std::size_t>();
      if (!c.n_grid.empty() && n <= c.n_grid.back())
        throw ConfigurationError("'n_grid' must be strictly increasing");
      c.n_grid.push_back(n);
    }

    if (!j.contains("measure")) throw ConfigurationError("'measure' is required");
    c.measure = j.at("measure");
    if (!c.measure.is_object() || !c.measure.contains("family"))
      throw ConfigurationError("'measure' must be an object with a 'family'");
    const auto params = c.measure.value("params", nlohmann::json::object());
    c.track_rank = c.measure.at("family") == "varying_gaussian" && !params.contains("n");
    if (c.track_rank)
      Measure::varying_gaussian(c.n_grid.front(), c.measure.value("depth", std::size_t{64}));
    else
      c.fixed_measure_ = Measure::from_json(c.measure);

    if (!j.contains("statistic")) throw ConfigurationError("'statistic' is required");
    c.statistic = ScaledStatistic::from_json(j.at("statistic"));

    if (j.contains("replicas")) {
      const auto& r = j.at("replicas");
      if (!r.is_number_integer() || r.get<long long>() < 1)
        throw ConfigurationError("'replicas' must be an integer >= 1");
      c.replicas = r.get<std::size_t>();
    }
    if (j.contains("seed")) {
      const auto& s = j.at("seed");
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        throw ConfigurationError("'seed' must be an unsigned 64-bit integer");
      c.seed = s.get<std::uint64_t>();
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("eps_grid")) c.eps_grid = number_array(j.at("eps_grid"), "eps_grid", true);
    if (j.contains("deltas")) c.deltas = number_array(j.at("deltas"), "deltas", true);
    if (j.contains("s_grid")) c.s_grid = number_array(j.at("s_grid"), "s_grid", false);
    if (j.contains("point")) {
      if (!j.at("point").is_number()) throw ConfigurationError("'point' must be a number");
      c.point = j.at("point").get<double>();
    }
    if (j.contains("box")) {
      const auto b = number_array(j.at("box"), "box", false);
      if (b.size() != 2 || !(b[0] <= b[1]) || b[1] - b[0] > 5.0)
        throw ConfigurationError("'box' must be [lo, hi] with side at most 5");
      c.box = {b[0], b[1]};
    }
    if (j.contains("box_grid")) {
      if (!j.at("box_grid").is_number_integer() || j.at("box_grid").get<long long>() < 1)
        throw ConfigurationError("'box_grid' must be a positive integer");
      c.box_grid = j.at("box_grid").get<std::size_t>();
    }
    if (j.contains("totik_interval")) c.totik_interval = pair_interval(j.at("totik_interval"), "totik_interval");
    if (j.contains("totik_grid")) {
      if (!j.at("totik_grid").is_number_integer() || j.at("totik_grid").get<long long>() < 1)
        throw ConfigurationError("'totik_grid' must be a positive integer");
      c.totik_grid = j.at("totik_grid").get<std::size_t>();
    }
    validate_for(c, c.experiment);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("malformed configuration: ") + e.what());
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["experiment"] = experiment_name(experiment);
  j["measure"] = measure;
  j["n_grid"] = n_grid;
  j["statistic"] = statistic.to_json();
  j["replicas"] = replicas;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["method"] = method_name(method);
  j["eps_grid"] = eps_grid;
  j["deltas"] = deltas;
  j["s_grid"] = s_grid;
  j["point"] = point;
  j["box"] = {box.lo, box.hi};
  j["box_grid"] = box_grid;
  j["totik_interval"] = {totik_interval.lo, totik_interval.hi};
  j["totik_grid"] = totik_grid;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read configuration file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("configuration is not valid JSON: ") + e.what());
  }
  return ExperimentConfig::from_json(j);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = "opestat";
  j["version"] = version;
  j["config"] = config;
  j["constant_A"] = {{"value", constant.value},
                     {"terms_used", constant.terms_used},
                     {"tail_bound", constant.tail_bound}};
  nlohmann::json st = nlohmann::json::array();
  for (const auto& [name, s] : stage_seconds) st.push_back({{"stage", name}, {"seconds", s}});
  j["stages"] = st;
  nlohmann::json fl = nlohmann::json::array();
  for (const auto& f : files) fl.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["files"] = fl;
  return j;
}

RunManifest run(ExperimentConfig config, const RunOptions& options) {
  if (options.seed) config.seed = *options.seed;
  if (options.output_dir) config.output_dir = *options.output_dir;
  validate_for(config, config.experiment);
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);

  RunManifest manifest;
  manifest.version = OPESTAT_VERSION;
  manifest.constant = constant_A();
  manifest.config = config.to_json();
  Writer writer(dir, manifest);
  Runner runner(config, std::max(1u, options.threads), writer);

  auto stage = [&](const std::string& name, auto&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    manifest.stage_seconds.emplace_back(
        name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  };
  switch (config.experiment) {
    case Experiment::Sample: stage("sample", [&] { runner.sample(); }); break;
    case Experiment::Stats: stage("stats", [&] { runner.stats(); }); break;
    case Experiment::Bounds: stage("bounds", [&] { runner.bounds(); }); break;
    case Experiment::Nevai: stage("nevai", [&] { runner.nevai(); }); break;
    case Experiment::Universality: stage("universality", [&] { runner.universality(); }); break;
    case Experiment::Report:
      stage("stats", [&] { runner.stats(); });
      stage("bounds", [&] { runner.bounds(); });
      stage("nevai", [&] { runner.nevai(); });
      stage("universality", [&] { runner.universality(); });
      break;
  }
  std::ofstream out(dir / "manifest.json");
  out << manifest.to_json().dump(2) << '\n';
  if (!out) throw Error("failed writing manifest.json");
  return manifest;
}

nlohmann::json validate_config_file(const std::string& path) {
  try {
    const auto c = load_config(path);
    return {{"valid", true}, {"experiment", experiment_name(c.experiment)}, {"errors", nlohmann::json::array()}};
  } catch (const Error& e) {
    return {{"valid", false}, {"errors", {e.what()}}};
  }
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path + " for checksum");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-256 initialisation failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

int cli_main(int argc, char** argv) {
  CLI::App app{"opestat: orthogonal polynomial ensemble experiments"};
  app.set_version_flag("--version", std::string(OPESTAT_VERSION));
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  const std::vector<std::pair<std::string, std::string>> subs{
      {"sample", "draw ensemble configurations to CSV"},
      {"stats", "exact means and variances of the statistic"},
      {"bounds", "concentration bounds and Monte Carlo tail frequencies"},
      {"nevai", "Nevai, alpha-Nevai, scaled variance and concentration diagnostics"},
      {"universality", "sine-kernel and density convergence errors"},
      {"report", "stats, bounds, nevai and universality in one run"}};
  std::vector<CLI::App*> run_cmds;
  std::vector<CLI::Option*> seed_opts, out_opts;
  for (const auto& [name, desc] : subs) {
    auto* sc = app.add_subcommand(name, desc);
    sc->add_option("--config", config_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    out_opts.push_back(sc->add_option("--out", out_dir, "output directory")->envname("OPESTAT_OUT"));
    seed_opts.push_back(sc->add_option("--seed", seed, "override the configured seed"));
    sc->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    run_cmds.push_back(sc);
  }
  auto* validate = app.add_subcommand("validate", "check a configuration without running it");
  validate->add_option("--config", config_path, "experiment configuration (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report_error("usage", "ParseError", e.what());
    return 2;
  }

  if (validate->parsed()) {
    std::ifstream probe(config_path);
    nlohmann::json parsed;
    try {
      if (!probe) throw ConfigurationError("cannot read configuration file " + config_path);
      probe >> parsed;
    } catch (const nlohmann::json::exception& e) {
      report_error("usage", "ConfigurationError", std::string("configuration is not valid JSON: ") + e.what());
      return 2;
    } catch (const ConfigurationError& e) {
      report_error("usage", "ConfigurationError", e.what());
      return 2;
    }
    const auto rep = validate_config_file(config_path);
    std::cout << rep.dump(2) << std::endl;
    return rep.at("valid").get<bool>() ? 0 : 2;
  }

  std::size_t which = 0;
  for (std::size_t i = 0; i < run_cmds.size(); ++i)
    if (run_cmds[i]->parsed()) which = i;
  RunOptions opts;
  opts.threads = threads;
  if (seed_opts[which]->count() > 0) opts.seed = seed;
  if (!out_dir.empty()) opts.output_dir = out_dir;

  ExperimentConfig config;
  try {
    config = load_config(config_path);
    config.experiment = parse_experiment(subs[which].first);
  } catch (const Error& e) {
    report_error("usage", error_type(e), e.what());
    return 2;
  }
  try {
    const auto manifest = run(config, opts);
    nlohmann::json summary{{"status", "ok"},
                           {"experiment", subs[which].first},
                           {"output_dir", manifest.config.at("output_dir")},
                           {"files", manifest.files.size()}};
    std::cout << summary.dump() << std::endl;
    return 0;
  } catch (const ConfigurationError& e) {
    report_error("usage", "ConfigurationError", e.what());
    return 2;
  } catch (const Error& e) {
    report_error("computation", error_type(e), e.what());
    return 3;
  } catch (const std::exception& e) {
    report_error("computation", "Exception", e.what());
    return 3;
  }
}

}  // namespace ope
