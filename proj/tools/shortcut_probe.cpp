// shortcut-probe command-line front end.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sprobe/corruption/corrupt.hpp"
#include "sprobe/csv.hpp"
#include "sprobe/dataset/manifest.hpp"
#include "sprobe/error.hpp"
#include "sprobe/gateway/contract.hpp"
#include "sprobe/gateway/mock.hpp"
#include "sprobe/image_io.hpp"
#include "sprobe/metrics/metrics.hpp"
#include "sprobe/orchestrator/experiments.hpp"
#include "sprobe/taskvector/taskvector.hpp"

namespace fs = std::filesystem;
using namespace sprobe;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAborted = 3;

nlohmann::json read_json_file(const fs::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

void emit(const nlohmann::ordered_json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    orchestrator::write_json(out, j);
  }
}

void emit_text(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + out);
    f << text;
  }
}

int column_or_throw(const csv::Table& t, std::string_view name, const std::string& file) {
  const int c = t.column(name);
  if (c < 0) throw Error(ErrorCode::ConfigError, file + " needs a '" + std::string(name) + "' column");
  return c;
}

const std::string& cell(const std::vector<std::string>& row, int c) {
  static const std::string empty;
  return static_cast<std::size_t>(c) < row.size() ? row[static_cast<std::size_t>(c)] : empty;
}

bool parse_bool_cell(const std::string& s) {
  return s == "1" || s == "true" || s == "known" || s == "yes";
}

gateway::EstimatorHandle handle_for(const std::string& endpoint, const std::string& model_id) {
  gateway::EstimatorHandle h;
  h.endpoint = endpoint;
  h.model_id = model_id;
  h.validate();
  return h;
}

// --- corrupt ----------------------------------------------------------------

struct CorruptArgs {
  std::string in, out, kind;
  double severity = 0.5;
  std::uint64_t seed = 0;
  bool serial = false;
};

void cmd_corrupt(const CorruptArgs& a) {
  const auto kind = corruption::parse_kind(a.kind);
  const auto severity = corruption::parse_severity(a.severity);
  const corruption::CorruptionSpec spec{kind, severity, a.seed};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.in)) {
    if (e.is_regular_file() && io::is_image_path(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  fs::create_directories(a.out);
  nlohmann::ordered_json images = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    const Image src = io::read_image(f);
    const Image dst = corruption::apply_corruption(src, spec, a.serial ? Exec::serial : Exec::parallel);
    const auto name = f.stem().string() + ".png";
    io::write_png(dst, fs::path(a.out) / name);
    images.push_back({{"source", f.filename().string()}, {"output", name}});
  }
  orchestrator::write_json(fs::path(a.out) / "corruption.json",
                           nlohmann::ordered_json{{"kind", corruption::kind_name(kind)},
                                                  {"severity", corruption::severity_value(severity)},
                                                  {"seed", a.seed},
                                                  {"params", corruption::resolve_params(kind, severity).to_json()},
                                                  {"images", images}});
  spdlog::info("corrupted {} image(s) with {}", files.size(), corruption::spec_label(kind, severity));
}

// --- manifest ---------------------------------------------------------------

dataset::Demographics load_target(const fs::path& path) {
  if (path.extension() == ".jsonl") return dataset::measure_demographics(dataset::read_manifest(path));
  return dataset::Demographics::from_json(read_json_file(path));
}

void cmd_manifest_identify(const std::string& manifest_path, const std::string& endpoint, const std::string& model_id,
                           const std::string& out) {
  const auto m = dataset::read_manifest(manifest_path);
  gateway::EstimatorClient client(handle_for(endpoint, model_id));
  std::map<std::string, dataset::IdentityResult> results;
  for (const auto& r : m.records()) {
    const Image img = io::read_image(m.resolve(r));
    const auto answer = client.identify(img);
    dataset::IdentityResult res{answer.name, std::nullopt};
    if (!r.identity && answer.name) res.verified = client.verify_identity(img, *answer.name);
    results.emplace(r.id, std::move(res));
  }
  emit(dataset::results_to_json(results), out);
}

// --- metrics ----------------------------------------------------------------

void cmd_metrics_shortcut(const std::string& pairs_file, const std::string& out) {
  const auto t = csv::read(pairs_file);
  const int c_id = column_or_throw(t, "id", pairs_file);
  const int c_f = column_or_throw(t, "f_pred", pairs_file);
  const int c_g = column_or_throw(t, "g_pred", pairs_file);
  const int c_known = column_or_throw(t, "known", pairs_file);
  metrics::PairedPredictions known{{}, metrics::SubsetTag::known, 0};
  metrics::PairedPredictions unknown{{}, metrics::SubsetTag::unknown, 0};
  std::size_t failures = 0;
  for (const auto& row : t.rows) {
    const auto f = gateway::parse_age_response(cell(row, c_f));
    const auto g = gateway::parse_age_response(cell(row, c_g));
    if (!f || !g) {
      ++failures;
      continue;
    }
    (parse_bool_cell(cell(row, c_known)) ? known : unknown).entries.push_back({cell(row, c_id), *f, *g});
  }
  const auto report = metrics::shortcut_impact(metrics::mean_abs_disagreement(known),
                                               metrics::mean_abs_disagreement(unknown), failures);
  emit(report.to_json(), out);
}

void cmd_metrics_robustness(const std::string& records_file, const std::string& out) {
  const auto t = csv::read(records_file);
  const int c_corr = column_or_throw(t, "corruption", records_file);
  const int c_id = column_or_throw(t, "id", records_file);
  const int c_ds = column_or_throw(t, "dataset", records_file);
  const int c_base = column_or_throw(t, "base_pred", records_file);
  const int c_pred = column_or_throw(t, "corrupted_pred", records_file);
  std::vector<metrics::DeviationRecord> records;
  for (const auto& row : t.rows) {
    records.push_back({cell(row, c_corr), cell(row, c_id), cell(row, c_ds), std::stoi(cell(row, c_base)),
                       std::stoi(cell(row, c_pred))});
  }
  emit(metrics::robustness_profile(records).to_json(), out);
}

void cmd_metrics_mae(const std::string& file, const std::string& out) {
  const auto t = csv::read(file);
  const int c_pred = column_or_throw(t, "pred", file);
  const int c_label = column_or_throw(t, "label", file);
  std::vector<std::pair<int, int>> pairs;
  std::size_t failures = 0;
  for (const auto& row : t.rows) {
    const auto pred = gateway::parse_age_response(cell(row, c_pred));
    if (!pred) {
      ++failures;
      continue;
    }
    pairs.emplace_back(*pred, std::stoi(cell(row, c_label)));
  }
  const auto m = metrics::mae(pairs);
  emit(nlohmann::ordered_json{{"mae", m.mean}, {"sem", m.sem}, {"n", m.n}, {"parse_failures", failures}}, out);
}

void cmd_metrics_density(const std::string& file, double bandwidth, const std::string& out_csv,
                         const std::string& out_json) {
  const auto t = csv::read(file);
  const int c = column_or_throw(t, "error", file);
  std::vector<double> errors;
  for (const auto& row : t.rows) errors.push_back(std::stod(cell(row, c)));
  const auto curve = metrics::error_density(errors, bandwidth);
  emit_text(curve.to_csv(), out_csv);
  auto j = curve.to_json();
  j["bimodality_score"] = metrics::bimodality_score(curve);
  if (!out_json.empty()) orchestrator::write_json(out_json, j);
  std::cerr << "bimodality_score " << metrics::bimodality_score(curve) << "\n";
}

// --- task vectors -----------------------------------------------------------

void cmd_tv_build(const std::string& manifest_path, const std::string& endpoint, const std::string& model_id,
                  const std::string& out, bool only_known, bool only_unknown) {
  const auto m = dataset::read_manifest(manifest_path);
  gateway::EstimatorClient client(handle_for(endpoint, model_id));
  const auto info = client.model_info();
  std::vector<tv::TaskVector> vectors;
  for (const auto& r : m.records()) {
    if (only_known && r.known != true) continue;
    if (only_unknown && r.known != false) continue;
    vectors.push_back(tv::build_task_vector(client.activations(io::read_image(m.resolve(r))), info, r.id));
  }
  tv::save_task_vectors(out, vectors, {{"manifest", manifest_path}});
  spdlog::info("wrote {} task vector(s) to {}", vectors.size(), out);
}

void cmd_tv_anchors(const std::string& known, const std::string& unknown, const std::string& out_prefix) {
  const tv::TaskVectorDistribution dk(tv::load_task_vectors(known));
  const tv::TaskVectorDistribution dn(tv::load_task_vectors(unknown));
  auto tk = dk.centroid();
  auto tn = dn.centroid();
  tk.source_id = "t_k:" + known;
  tn.source_id = "t_nk:" + unknown;
  tv::save_task_vectors(out_prefix + "_known.sptv", std::span(&tk, 1), {{"anchor", "t_k"}, {"samples", dk.size()}});
  tv::save_task_vectors(out_prefix + "_unknown.sptv", std::span(&tn, 1), {{"anchor", "t_nk"}, {"samples", dn.size()}});
  std::cout << nlohmann::ordered_json{{"n_known", dk.size()}, {"n_unknown", dn.size()},
                                      {"anchor_distance", tv::distance(tk, tn)}}
                   .dump(2)
            << "\n";
}

void cmd_tv_ratio(const std::string& vectors, const std::string& known, const std::string& unknown, bool empirical,
                  const std::string& out) {
  const auto vs = tv::load_task_vectors(vectors);
  const tv::TaskVectorDistribution dk(tv::load_task_vectors(known));
  const tv::TaskVectorDistribution dn(tv::load_task_vectors(unknown));
  const auto tail = empirical ? tv::TailModel::empirical : tv::TailModel::gaussian;
  const tv::MembershipModel model(dk, dn, tail);
  nlohmann::ordered_json members = nlohmann::ordered_json::array();
  std::size_t count = 0;
  for (const auto& v : vs) {
    const bool member = model.is_member(v);
    count += member ? 1 : 0;
    members.push_back({{"id", v.source_id},
                       {"delta_k", model.project(v)},
                       {"p_known", model.p_known(v)},
                       {"p_unknown", model.p_unknown(v)},
                       {"member", member}});
  }
  emit(nlohmann::ordered_json{{"ratio", vs.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(vs.size())},
                              {"members", count},
                              {"n", vs.size()},
                              {"tail_model", empirical ? "empirical" : "gaussian"},
                              {"vectors", members}},
       out);
}

void cmd_tv_steer(const std::string& known_anchor, const std::string& unknown_anchor, double alpha,
                  const std::string& out) {
  const auto tk = tv::mean_task_vector(tv::load_task_vectors(known_anchor));
  const auto tn = tv::mean_task_vector(tv::load_task_vectors(unknown_anchor));
  auto s = tv::steering_vector(tk, tn, alpha);
  s.provenance = {{"t_k", known_anchor}, {"t_nk", unknown_anchor}};
  tv::save_steering_vector(out, s);
  spdlog::info("wrote steering vector ({} values, alpha {}) to {}", s.direction.size(), alpha, out);
}

// --- mock / contract --------------------------------------------------------

gateway::MockServer* g_server = nullptr;

void cmd_serve_mock(int port, bool no_steering, int layers, int hidden_dim) {
  gateway::MockConfig cfg;
  cfg.supports_steering = !no_steering;
  cfg.num_layers = layers;
  cfg.hidden_dim = hidden_dim;
  gateway::MockServer server(std::make_shared<gateway::MockBackend>(cfg), port);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cout << server.url() << std::endl;
  server.wait();
  g_server = nullptr;
}

int cmd_contract(const std::string& endpoint) {
  std::shared_ptr<gateway::Transport> transport =
      endpoint == "mock" ? gateway::make_transport(gateway::EstimatorHandle{})
                         : std::make_shared<gateway::HttpTransport>(endpoint, std::chrono::milliseconds(30000));
  const auto report = gateway::run_contract_suite(*transport);
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.passed) std::cout << ": " << c.detail;
    std::cout << "\n";
  }
  return report.passed() ? 0 : 1;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidManifest:
    case ErrorCode::UnknownKind:
    case ErrorCode::UnsupportedSeverity:
      return kExitConfig;
    case ErrorCode::RunAborted:
      return kExitAborted;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("shortcut-probe"));
  std::string log_level;
  if (const char* env = std::getenv(orchestrator::kEnvLogLevel)) log_level = env;

  CLI::App app{"shortcut-probe: identity-shortcut evaluation harness for age estimators"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  // run
  auto* run = app.add_subcommand("run", "Run experiments from a TOML config");
  std::string config_path, only;
  orchestrator::Overrides ov;
  run->add_option("--config", config_path, "Experiment config (TOML)")->required()->check(CLI::ExistingFile);
  run->add_option("--only", only, "shortcut|robustness|steering");
  run->add_option("--endpoint", ov.endpoint, "Override every estimator endpoint");
  run->add_option("--output-dir", ov.output_dir);
  run->add_option("--cache-dir", ov.cache_dir);
  run->add_option("--concurrency", ov.concurrency_limit);
  run->add_option("--alpha", ov.alpha);

  // corrupt
  auto* corrupt = app.add_subcommand("corrupt", "Write corrupted copies of a directory of images");
  CorruptArgs ca;
  corrupt->add_option("--in", ca.in)->required()->check(CLI::ExistingDirectory);
  corrupt->add_option("--out", ca.out)->required();
  corrupt->add_option("--kind", ca.kind)->required();
  corrupt->add_option("--severity", ca.severity)->required();
  corrupt->add_option("--seed", ca.seed);
  corrupt->add_flag("--serial", ca.serial, "Use the single-threaded path");

  // manifest
  auto* manifest = app.add_subcommand("manifest", "Dataset manifests");
  manifest->require_subcommand(1);
  std::string m_images, m_labels, m_source = "dataset", m_out, m_manifest, m_target, m_results, m_endpoint = "mock",
                                  m_model = "mock";
  std::uint64_t m_seed = 0;
  auto* m_build = manifest->add_subcommand("build", "Scan an image directory (plus labels CSV)");
  m_build->add_option("--images", m_images)->required()->check(CLI::ExistingDirectory);
  m_build->add_option("--labels", m_labels, "CSV: file,age,gender,identity");
  m_build->add_option("--source", m_source);
  m_build->add_option("--out", m_out)->required();
  auto* m_demo = manifest->add_subcommand("demographics", "Count records per gender and age bin");
  m_demo->add_option("--manifest", m_manifest)->required();
  m_demo->add_option("--out", m_out);
  auto* m_sub = manifest->add_subcommand("subsample", "Subsample to a target demographic");
  m_sub->add_option("--manifest", m_manifest)->required();
  m_sub->add_option("--target", m_target, "Demographics JSON or manifest (.jsonl)")->required();
  m_sub->add_option("--seed", m_seed);
  m_sub->add_option("--out", m_out)->required();
  auto* m_ident = manifest->add_subcommand("identify", "Ask an estimator who is depicted");
  m_ident->add_option("--manifest", m_manifest)->required();
  m_ident->add_option("--endpoint", m_endpoint);
  m_ident->add_option("--model-id", m_model);
  m_ident->add_option("--out", m_out);
  auto* m_split = manifest->add_subcommand("split", "Label records known/unknown from identify results");
  m_split->add_option("--manifest", m_manifest)->required();
  m_split->add_option("--results", m_results)->required();
  m_split->add_option("--out", m_out)->required();

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "Statistics over prediction files");
  metrics_cmd->require_subcommand(1);
  std::string x_in, x_out, x_json;
  double x_bw = 0.0;
  auto* x_short = metrics_cmd->add_subcommand("shortcut", "delta_k from CSV id,f_pred,g_pred,known");
  x_short->add_option("--pairs", x_in)->required();
  x_short->add_option("--out", x_out);
  auto* x_rob = metrics_cmd->add_subcommand("robustness", "Normalized deviations from CSV records");
  x_rob->add_option("--records", x_in)->required();
  x_rob->add_option("--out", x_out);
  auto* x_mae = metrics_cmd->add_subcommand("mae", "MAE from CSV pred,label");
  x_mae->add_option("--predictions", x_in)->required();
  x_mae->add_option("--out", x_out);
  auto* x_den = metrics_cmd->add_subcommand("density", "KDE of CSV column 'error'");
  x_den->add_option("--errors", x_in)->required();
  x_den->add_option("--bandwidth", x_bw);
  x_den->add_option("--out", x_out, "Curve CSV");
  x_den->add_option("--out-json", x_json);

  // tv
  auto* tv_cmd = app.add_subcommand("tv", "Task vectors and steering");
  tv_cmd->require_subcommand(1);
  std::string t_manifest, t_endpoint = "mock", t_model = "mock", t_out, t_known, t_unknown, t_vectors;
  bool t_only_known = false, t_only_unknown = false, t_empirical = false;
  double t_alpha = 3.0;
  auto* t_build = tv_cmd->add_subcommand("build", "Collect task vectors for a manifest");
  t_build->add_option("--manifest", t_manifest)->required();
  t_build->add_option("--endpoint", t_endpoint);
  t_build->add_option("--model-id", t_model);
  t_build->add_option("--out", t_out)->required();
  t_build->add_flag("--known", t_only_known, "Only records labelled known");
  t_build->add_flag("--unknown", t_only_unknown, "Only records labelled unknown");
  auto* t_anchors = tv_cmd->add_subcommand("anchors", "Mean task vectors t_k and t_nk");
  t_anchors->add_option("--known", t_known)->required();
  t_anchors->add_option("--unknown", t_unknown)->required();
  t_anchors->add_option("--out-prefix", t_out)->required();
  auto* t_ratio = tv_cmd->add_subcommand("ratio", "Fraction of vectors using the identity shortcut");
  t_ratio->add_option("--vectors", t_vectors)->required();
  t_ratio->add_option("--known", t_known)->required();
  t_ratio->add_option("--unknown", t_unknown)->required();
  t_ratio->add_flag("--empirical", t_empirical, "Empirical tail instead of the Gaussian fit");
  t_ratio->add_option("--out", t_out);
  auto* t_steer = tv_cmd->add_subcommand("steer", "Steering vector from anchor files");
  t_steer->add_option("--known", t_known)->required();
  t_steer->add_option("--unknown", t_unknown)->required();
  t_steer->add_option("--alpha", t_alpha);
  t_steer->add_option("--out", t_out)->required();

  // mock / contract
  auto* serve = app.add_subcommand("serve-mock", "Serve the mock estimator over HTTP");
  int s_port = 8080, s_layers = 4, s_dim = 8;
  bool s_no_steer = false;
  serve->add_option("--port", s_port);
  serve->add_option("--layers", s_layers);
  serve->add_option("--hidden-dim", s_dim);
  serve->add_flag("--no-steering", s_no_steer);
  auto* contract = app.add_subcommand("contract", "Run the wire-protocol contract suite against an endpoint");
  std::string c_endpoint = "mock";
  contract->add_option("--endpoint", c_endpoint);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (!log_level.empty()) spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) {
      auto cfg = orchestrator::load_config(config_path);
      orchestrator::apply_environment(cfg);
      orchestrator::apply_overrides(cfg, ov);
      orchestrator::Runner runner(std::move(cfg));
      runner.run(only.empty() ? std::nullopt : std::optional<std::string>(only));
    } else if (*corrupt) {
      cmd_corrupt(ca);
    } else if (*m_build) {
      dataset::write_manifest(
          dataset::build_manifest(m_images, m_labels.empty() ? std::nullopt : std::optional<fs::path>(m_labels),
                                  m_source),
          m_out);
    } else if (*m_demo) {
      emit(dataset::measure_demographics(dataset::read_manifest(m_manifest)).to_json(), m_out);
    } else if (*m_sub) {
      const auto m = dataset::read_manifest(m_manifest);
      dataset::write_manifest(dataset::subsample_to_target(m, load_target(m_target), m_seed), m_out);
    } else if (*m_ident) {
      cmd_manifest_identify(m_manifest, m_endpoint, m_model, m_out);
    } else if (*m_split) {
      const auto m = dataset::read_manifest(m_manifest);
      dataset::write_manifest(dataset::split_known_unknown(m, dataset::results_from_json(read_json_file(m_results))),
                              m_out);
    } else if (*x_short) {
      cmd_metrics_shortcut(x_in, x_out);
    } else if (*x_rob) {
      cmd_metrics_robustness(x_in, x_out);
    } else if (*x_mae) {
      cmd_metrics_mae(x_in, x_out);
    } else if (*x_den) {
      cmd_metrics_density(x_in, x_bw, x_out, x_json);
    } else if (*t_build) {
      cmd_tv_build(t_manifest, t_endpoint, t_model, t_out, t_only_known, t_only_unknown);
    } else if (*t_anchors) {
      cmd_tv_anchors(t_known, t_unknown, t_out);
    } else if (*t_ratio) {
      cmd_tv_ratio(t_vectors, t_known, t_unknown, t_empirical, t_out);
    } else if (*t_steer) {
      cmd_tv_steer(t_known, t_unknown, t_alpha, t_out);
    } else if (*serve) {
      cmd_serve_mock(s_port, s_no_steer, s_layers, s_dim);
    } else if (*contract) {
      return cmd_contract(c_endpoint);
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
