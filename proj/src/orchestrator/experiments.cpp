#include "sprobe/orchestrator/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <thread>
#include <tuple>

#include <spdlog/spdlog.h>

#include "sprobe/corruption/corrupt.hpp"
#include "sprobe/csv.hpp"
#include "sprobe/error.hpp"
#include "sprobe/image_io.hpp"
#include "sprobe/rng.hpp"

namespace sprobe::orchestrator {

namespace {

enum class RequestKind { age, activations };

std::string estimator_identity(const EstimatorConfig& e) {
  const auto& h = e.handle;
  nlohmann::json j = {{"name", e.name},
                      {"model_id", h.model_id},
                      {"prompt", h.prompt},
                      {"max_tokens", h.max_tokens},
                      {"temperature", h.temperature}};
  return j.dump();
}

std::string corruption_tag(const std::optional<corruption::CorruptionSpec>& spec) {
  if (!spec) return "clean";
  return corruption::spec_label(spec->kind, spec->severity) + "#" + std::to_string(spec->seed);
}

std::string safe_name(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

std::vector<const dataset::Record*> sorted_records(const dataset::Manifest& m) {
  std::vector<const dataset::Record*> out;
  for (const auto& r : m.records()) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  return out;
}

std::optional<int> answer_age(const nlohmann::json& v) {
  if (!v.contains("age") || v["age"].is_null()) return std::nullopt;
  return v["age"].get<int>();
}

gateway::ActivationDump answer_dump(const nlohmann::json& v) {
  gateway::ActivationDump dump;
  dump.layers = v.at("layers").get<std::vector<std::vector<double>>>();
  dump.token_position = v.value("token_position", 0);
  return dump;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

bool fatal_code(ErrorCode code) {
  return code == ErrorCode::SteeringUnsupported || code == ErrorCode::ConfigError;
}

template <class F>
void run_pool(std::size_t n, int limit, const std::atomic<bool>& stop, F&& fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(limit, 1)), n);
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

}  // namespace

struct Runner::Query {
  Query(const EstimatorConfig* e, const DatasetConfig* d, const dataset::Manifest* m, const dataset::Record* r,
        std::optional<corruption::CorruptionSpec> c = std::nullopt)
      : estimator(e), dataset(d), manifest(m), record(r), corruption(c) {}

  const EstimatorConfig* estimator = nullptr;
  const DatasetConfig* dataset = nullptr;
  const dataset::Manifest* manifest = nullptr;
  const dataset::Record* record = nullptr;
  std::optional<corruption::CorruptionSpec> corruption;
  const gateway::SteeringPayload* steering = nullptr;
  RequestKind kind = RequestKind::age;
};

std::uint64_t image_seed(std::uint64_t run_seed, std::string_view image_key) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : image_key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return rng::mix64(run_seed ^ rng::mix64(h));
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

Runner::Runner(ExperimentConfig config, TransportFactory factory)
    : config_(std::move(config)), factory_(std::move(factory)) {
  config_.validate();
  ensure_output_dir(config_);
  cache_ = std::make_unique<RunCache>(config_.effective_cache_dir());
  if (cache_->dropped_lines() > 0) {
    spdlog::warn("cache: dropped {} torn line(s) from {}", cache_->dropped_lines(), cache_->log_path().string());
  }
}

Runner::~Runner() = default;

std::uint64_t Runner::requests_sent() const {
  std::uint64_t total = 0;
  for (const auto& [name, c] : clients_) total += c->requests_sent();
  return total;
}

gateway::EstimatorClient& Runner::client(const EstimatorConfig& estimator) {
  auto it = clients_.find(estimator.name);
  if (it == clients_.end()) {
    auto transport = factory_ ? factory_(estimator) : gateway::make_transport(estimator.handle);
    it = clients_.emplace(estimator.name, std::make_unique<gateway::EstimatorClient>(estimator.handle, transport)).first;
  }
  return *it->second;
}

const dataset::Manifest& Runner::manifest(const DatasetConfig& ds) {
  const std::string key = std::string(role_name(ds.role)) + "/" + ds.name;
  if (const auto it = manifests_.find(key); it != manifests_.end()) return it->second;
  if (!std::filesystem::exists(ds.path)) {
    throw Error(ErrorCode::ConfigError, "manifest for dataset '" + ds.name + "' not found: " + ds.path.string());
  }
  dataset::Manifest m = dataset::read_manifest(ds.path);
  if (ds.role == DatasetRole::eval) {
    const auto targets = config_.datasets_with(DatasetRole::demographic_target);
    if (!targets.empty()) {
      const auto target = dataset::measure_demographics(manifest(*targets.front()));
      const std::size_t before = m.size();
      m = dataset::subsample_to_target(m, target, config_.subsample_seed);
      spdlog::info("dataset {}: subsampled {} -> {} records", ds.name, before, m.size());
    }
  }
  return manifests_.emplace(key, std::move(m)).first->second;
}

std::vector<Runner::Answer> Runner::execute(const std::vector<Query>& queries) {
  for (const auto& q : queries) client(*q.estimator);  // created up front; the map is not thread-safe

  const std::size_t n = queries.size();
  std::vector<Answer> answers(n);
  std::vector<std::optional<FailureRecord>> failed(n);
  std::atomic<std::size_t> failures{0};
  std::atomic<std::uint64_t> hits{0};
  std::atomic<bool> stop{false};
  std::mutex fatal_mutex;
  std::exception_ptr fatal;
  const double allowed = config_.failure_budget * static_cast<double>(n);

  run_pool(n, config_.concurrency_limit, stop, [&](std::size_t i) {
    const Query& q = queries[i];
    const std::string image_key = q.dataset->name + "/" + q.record->id;
    const std::string key = cache_key({estimator_identity(*q.estimator), image_key, corruption_tag(q.corruption),
                                       steering_fingerprint(q.steering),
                                       q.kind == RequestKind::age ? "age" : "activations"});
    if (auto hit = cache_->get(key)) {
      answers[i] = {true, std::move(*hit)};
      hits.fetch_add(1);
      return;
    }
    try {
      Image image = io::read_image(q.manifest->resolve(*q.record));
      if (q.corruption) image = corruption::apply_corruption(image, *q.corruption);
      const auto& c = *clients_.at(q.estimator->name);
      nlohmann::json value;
      if (q.kind == RequestKind::age) {
        const auto est = c.estimate_age(image, q.steering);
        value = {{"age", est.age ? nlohmann::json(*est.age) : nlohmann::json(nullptr)},
                 {"raw", est.raw_response},
                 {"steered", est.steered}};
      } else {
        const auto dump = c.activations(image);
        value = {{"layers", dump.layers}, {"token_position", dump.token_position}};
      }
      cache_->put(key, value);
      answers[i] = {true, std::move(value)};
    } catch (const Error& e) {
      if (fatal_code(e.code())) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        stop.store(true);
        return;
      }
      failed[i] = FailureRecord{q.estimator->name, q.dataset->name, q.record->id, corruption_tag(q.corruption),
                                q.kind == RequestKind::age ? "age" : "activations", e.what()};
      if (static_cast<double>(failures.fetch_add(1) + 1) > allowed) stop.store(true);
    }
  });

  if (fatal) std::rethrow_exception(fatal);
  stats_.queries += n;
  stats_.cache_hits += hits.load();
  stats_.failures += failures.load();
  for (auto& f : failed) {
    if (f) {
      spdlog::warn("request failed: {} {} {} {}: {}", f->estimator, f->dataset, f->id, f->corruption, f->message);
      failures_.push_back(std::move(*f));
    }
  }
  if (!failures_.empty()) write_failures();
  if (static_cast<double>(failures.load()) > allowed) {
    throw Error(ErrorCode::RunAborted, std::to_string(failures.load()) + " of " + std::to_string(n) +
                                           " requests failed, over the failure budget");
  }
  return answers;
}

void Runner::write_failures() const {
  std::string text;
  for (const auto& f : failures_) {
    text += nlohmann::ordered_json{{"estimator", f.estimator}, {"dataset", f.dataset}, {"id", f.id},
                                   {"corruption", f.corruption}, {"request", f.request}, {"message", f.message}}
                .dump();
    text.push_back('\n');
  }
  write_text(config_.output_dir / "failures.jsonl", text);
}

// --- shortcut ---------------------------------------------------------------

std::vector<ShortcutOutcome> Runner::run_shortcut() {
  const auto fs = config_.estimators_with(EstimatorRole::f);
  const auto gs = config_.estimators_with(EstimatorRole::g);
  if (fs.empty()) throw Error(ErrorCode::ConfigError, "shortcut experiment needs an f estimator");
  if (gs.size() != 1) throw Error(ErrorCode::ConfigError, "shortcut experiment needs exactly one g estimator");
  const auto evals = config_.datasets_with(DatasetRole::eval);
  if (evals.empty()) throw Error(ErrorCode::ConfigError, "shortcut experiment needs an eval dataset");
  const EstimatorConfig& g = *gs.front();

  std::vector<ShortcutOutcome> outcomes;
  for (const DatasetConfig* ds : evals) {
    const auto& m = manifest(*ds);
    const auto records = sorted_records(m);
    std::size_t n_known = 0, n_unknown = 0;
    for (const auto* r : records) {
      if (!r->known) {
        throw Error(ErrorCode::ConfigError,
                    "dataset '" + ds->name + "' has records without a known/unknown label: " + r->id);
      }
      (*r->known ? n_known : n_unknown) += 1;
    }
    if (n_known == 0) throw Error(ErrorCode::ConfigError, "dataset '" + ds->name + "' has an empty known subset");
    if (n_unknown == 0) throw Error(ErrorCode::ConfigError, "dataset '" + ds->name + "' has an empty unknown subset");

    std::vector<Query> queries;
    for (const auto* r : records) queries.push_back({&g, ds, &m, r});
    for (const auto* f : fs) {
      for (const auto* r : records) queries.push_back({f, ds, &m, r});
    }
    spdlog::info("shortcut: dataset {} ({} known, {} unknown), {} queries", ds->name, n_known, n_unknown,
                 queries.size());
    const auto answers = execute(queries);

    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
      metrics::PairedPredictions known{{}, metrics::SubsetTag::known, 0};
      metrics::PairedPredictions unknown{{}, metrics::SubsetTag::unknown, 0};
      std::size_t parse_failures = 0, failed = 0;
      for (std::size_t ri = 0; ri < records.size(); ++ri) {
        const Answer& ga = answers[ri];
        const Answer& fa = answers[(fi + 1) * records.size() + ri];
        if (!ga.ok || !fa.ok) {
          ++failed;
          continue;
        }
        const auto fg = answer_age(fa.value);
        const auto gg = answer_age(ga.value);
        if (!fg || !gg) {
          ++parse_failures;
          continue;
        }
        auto& subset = *records[ri]->known ? known : unknown;
        subset.entries.push_back({records[ri]->id, *fg, *gg});
      }
      if (known.entries.empty() || unknown.entries.empty()) {
        throw Error(ErrorCode::RunAborted, "no usable predictions left in a subset of '" + ds->name + "'");
      }
      ShortcutOutcome out;
      out.estimator_f = fs[fi]->name;
      out.estimator_g = g.name;
      out.dataset = ds->name;
      out.report = metrics::shortcut_impact(metrics::mean_abs_disagreement(known),
                                            metrics::mean_abs_disagreement(unknown), parse_failures);
      out.file = config_.output_dir / "shortcut" / (safe_name(out.estimator_f) + "__" + safe_name(ds->name) + ".json");
      write_json(out.file, nlohmann::ordered_json{{"experiment", "shortcut"},
                                                  {"dataset", ds->name},
                                                  {"estimator_f", out.estimator_f},
                                                  {"estimator_g", out.estimator_g},
                                                  {"failed_requests", failed},
                                                  {"report", out.report.to_json()}});
      outcomes.push_back(std::move(out));
    }
  }
  return outcomes;
}

// --- robustness -------------------------------------------------------------

std::vector<RobustnessOutcome> Runner::run_robustness() {
  const auto fs = config_.estimators_with(EstimatorRole::f);
  if (fs.empty()) throw Error(ErrorCode::ConfigError, "robustness experiment needs an f estimator");
  if (config_.corruptions.empty()) throw Error(ErrorCode::ConfigError, "robustness experiment needs corruptions");
  const auto evals = config_.datasets_with(DatasetRole::eval);
  if (evals.empty()) throw Error(ErrorCode::ConfigError, "robustness experiment needs an eval dataset");

  std::vector<RobustnessOutcome> outcomes;
  for (const EstimatorConfig* f : fs) {
    struct Slot {
      const DatasetConfig* ds;
      const dataset::Record* record;
      std::size_t base;  // query index of the clean request
    };
    std::vector<Query> queries;
    std::vector<Slot> slots;
    for (const DatasetConfig* ds : evals) {
      const auto& m = manifest(*ds);
      for (const auto* r : sorted_records(m)) {
        slots.push_back({ds, r, queries.size()});
        queries.push_back({f, ds, &m, r});
        const auto seed = image_seed(config_.corruption_seed, ds->name + "/" + r->id);
        for (const auto& c : config_.corruptions) {
          queries.push_back({f, ds, &m, r, corruption::CorruptionSpec{c.kind, c.severity, seed}});
        }
      }
    }
    spdlog::info("robustness: estimator {}, {} queries", f->name, queries.size());
    const auto answers = execute(queries);

    RobustnessOutcome out;
    out.estimator = f->name;
    for (const auto& s : slots) {
      const Answer& base = answers[s.base];
      const auto base_age = base.ok ? answer_age(base.value) : std::nullopt;
      for (std::size_t ci = 0; ci < config_.corruptions.size(); ++ci) {
        const Answer& a = answers[s.base + 1 + ci];
        if (!base.ok || !a.ok) continue;
        const auto age = answer_age(a.value);
        if (!base_age || !age) {
          ++out.parse_failures;
          continue;
        }
        const auto& c = config_.corruptions[ci];
        out.records.push_back({corruption::spec_label(c.kind, c.severity), s.record->id, s.ds->name, *base_age, *age});
      }
    }
    std::sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) {
      return std::tie(a.dataset, a.id, a.corruption) < std::tie(b.dataset, b.id, b.corruption);
    });
    if (out.records.empty()) throw Error(ErrorCode::RunAborted, "no usable robustness records");
    out.report = metrics::robustness_profile(out.records);
    for (const auto& z : out.report.zero_normalizer) spdlog::warn("robustness: {} never moved a prediction", z);

    const auto dir = config_.output_dir / "robustness";
    out.file = dir / (safe_name(f->name) + ".json");
    nlohmann::ordered_json labels = nlohmann::ordered_json::array();
    for (const auto& c : config_.corruptions) labels.push_back(corruption::spec_label(c.kind, c.severity));
    nlohmann::ordered_json names = nlohmann::ordered_json::array();
    for (const auto* ds : evals) names.push_back(ds->name);
    write_json(out.file, nlohmann::ordered_json{{"experiment", "robustness"},
                                                {"estimator", f->name},
                                                {"datasets", names},
                                                {"corruptions", labels},
                                                {"corruption_seed", config_.corruption_seed},
                                                {"parse_failures", out.parse_failures},
                                                {"report", out.report.to_json()}});
    std::string text = "dataset,id,corruption,base_pred,corrupted_pred,deviation,normalized_deviation\n";
    for (const auto& r : out.records) {
      const int dev = std::abs(r.base_pred - r.corrupted_pred);
      const auto norm = out.report.normalizers.find(r.corruption);
      const std::string normalized =
          norm == out.report.normalizers.end() ? "" : nlohmann::json(dev / norm->second).dump();
      text += csv::quote(r.dataset) + "," + csv::quote(r.id) + "," + csv::quote(r.corruption) + "," +
              std::to_string(r.base_pred) + "," + std::to_string(r.corrupted_pred) + "," + std::to_string(dev) +
              "," + normalized + "\n";
    }
    write_text(dir / (safe_name(f->name) + "_records.csv"), text);
    outcomes.push_back(std::move(out));
  }
  last_robustness_ = outcomes;
  return outcomes;
}

// --- steering ---------------------------------------------------------------

std::vector<SteeringOutcome> Runner::run_steering() {
  if (!config_.steering_enabled) throw Error(ErrorCode::ConfigError, "steering is not enabled in the config");
  const auto fs = config_.estimators_with(EstimatorRole::f);
  if (fs.empty()) throw Error(ErrorCode::ConfigError, "steering experiment needs an f estimator");
  const auto known_sets = config_.datasets_with(DatasetRole::anchor_known);
  const auto unknown_sets = config_.datasets_with(DatasetRole::anchor_unknown);
  if (known_sets.empty() || unknown_sets.empty()) {
    throw Error(ErrorCode::ConfigError, "steering needs anchor_known and anchor_unknown manifests");
  }
  const auto evals = config_.datasets_with(DatasetRole::eval);
  if (evals.empty()) throw Error(ErrorCode::ConfigError, "steering experiment needs an eval dataset");
  const double alpha = *config_.alpha;

  std::vector<SteeringOutcome> outcomes;
  for (const EstimatorConfig* f : fs) {
    const gateway::ModelInfo info = client(*f).model_info();
    if (!info.supports_steering) {
      throw Error(ErrorCode::SteeringUnsupported, "estimator '" + f->name + "' does not support steering");
    }

    // Anchor activations. A split manifest may serve both roles: known
    // anchors skip records flagged unknown and vice versa.
    std::vector<Query> queries;
    std::vector<bool> is_known;
    for (const auto& [sets, want_known] : {std::pair{known_sets, true}, std::pair{unknown_sets, false}}) {
      for (const DatasetConfig* ds : sets) {
        const auto& m = manifest(*ds);
        for (const auto* r : sorted_records(m)) {
          if (r->known && *r->known != want_known) continue;
          Query q{f, ds, &m, r};
          q.kind = RequestKind::activations;
          queries.push_back(q);
          is_known.push_back(want_known);
        }
      }
    }
    spdlog::info("steering: estimator {}, {} anchor activations", f->name, queries.size());
    const auto answers = execute(queries);
    std::vector<tv::TaskVector> known, unknown;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      if (!answers[i].ok) continue;
      auto t = tv::build_task_vector(answer_dump(answers[i].value), info,
                                     queries[i].dataset->name + "/" + queries[i].record->id);
      (is_known[i] ? known : unknown).push_back(std::move(t));
    }
    if (known.size() < tv::kMinMembershipSamples || unknown.size() < tv::kMinMembershipSamples) {
      throw Error(ErrorCode::AnchorInsufficientSamples,
                  "anchors need at least 10 samples per side, got " + std::to_string(known.size()) + " known and " +
                      std::to_string(unknown.size()) + " unknown");
    }
    const tv::TaskVectorDistribution dist_k(known);
    const tv::TaskVectorDistribution dist_nk(unknown);
    tv::SteeringVector steering = tv::steering_vector(dist_k.centroid(), dist_nk.centroid(), alpha);
    nlohmann::json anchor_names = nlohmann::json::array();
    for (const auto* ds : known_sets) anchor_names.push_back({{"role", "anchor_known"}, {"dataset", ds->name}});
    for (const auto* ds : unknown_sets) anchor_names.push_back({{"role", "anchor_unknown"}, {"dataset", ds->name}});
    steering.provenance = {{"anchors", anchor_names}, {"n_known", known.size()}, {"n_unknown", unknown.size()}};
    const gateway::SteeringPayload payload = steering.payload();

    SteeringOutcome out;
    out.estimator = f->name;
    out.alpha = alpha;
    out.n_known = known.size();
    out.n_unknown = unknown.size();
    for (const auto& t : known) out.projected_known.push_back(tv::delta_k(t, dist_k.centroid(), dist_nk.centroid()));
    for (const auto& t : unknown) {
      out.projected_unknown.push_back(tv::delta_k(t, dist_k.centroid(), dist_nk.centroid()));
    }
    const auto dir = config_.output_dir / "steering";
    std::filesystem::create_directories(dir);
    tv::save_steering_vector(dir / (safe_name(f->name) + "_vector.sptv"), steering);

    nlohmann::ordered_json datasets_json = nlohmann::ordered_json::object();
    for (const DatasetConfig* ds : evals) {
      const auto& m = manifest(*ds);
      const auto records = sorted_records(m);
      std::vector<Query> eval_queries;
      for (const auto* r : records) eval_queries.push_back({f, ds, &m, r});
      for (const auto* r : records) {
        Query q{f, ds, &m, r};
        q.steering = &payload;
        eval_queries.push_back(q);
      }
      const auto eval_answers = execute(eval_queries);

      SteeringDatasetResult res;
      res.dataset = ds->name;
      std::vector<std::pair<int, int>> default_pairs, steered_pairs;
      for (std::size_t i = 0; i < records.size(); ++i) {
        const Answer& d = eval_answers[i];
        const Answer& s = eval_answers[records.size() + i];
        if (!d.ok || !s.ok) continue;
        if (!records[i]->age) {
          ++res.unlabeled;
          continue;
        }
        const auto da = answer_age(d.value);
        const auto sa = answer_age(s.value);
        if (!da || !sa) {
          ++res.parse_failures;
          continue;
        }
        res.samples.push_back({records[i]->id, *records[i]->age, *da, *sa});
        default_pairs.emplace_back(*da, *records[i]->age);
        steered_pairs.emplace_back(*sa, *records[i]->age);
      }
      if (!res.samples.empty()) {
        res.default_mae = metrics::mae(default_pairs);
        res.steered_mae = metrics::mae(steered_pairs);
      }
      nlohmann::ordered_json samples = nlohmann::ordered_json::array();
      for (const auto& s : res.samples) {
        samples.push_back({{"id", s.id},
                           {"label", s.label},
                           {"default", s.default_pred},
                           {"steered", s.steered_pred},
                           {"abs_error_change", std::abs(s.steered_pred - s.label) - std::abs(s.default_pred - s.label)}});
      }
      datasets_json[ds->name] = {
          {"default_mae", {{"mean", res.default_mae.mean}, {"sem", res.default_mae.sem}, {"n", res.default_mae.n}}},
          {"steered_mae", {{"mean", res.steered_mae.mean}, {"sem", res.steered_mae.sem}, {"n", res.steered_mae.n}}},
          {"mae_shift", res.steered_mae.mean - res.default_mae.mean},
          {"parse_failures", res.parse_failures},
          {"unlabeled", res.unlabeled},
          {"samples", samples}};
      out.datasets.push_back(std::move(res));
    }

    double norm_sq = 0.0;
    for (double v : steering.direction) norm_sq += v * v;
    out.file = dir / (safe_name(f->name) + ".json");
    write_json(out.file, nlohmann::ordered_json{{"experiment", "steering"},
                                                {"estimator", f->name},
                                                {"alpha", alpha},
                                                {"model_id", info.model_id},
                                                {"layer_count_used", steering.layer_count_used},
                                                {"per_layer_dim", steering.per_layer_dim},
                                                {"direction_norm", std::sqrt(norm_sq)},
                                                {"anchors", steering.provenance},
                                                {"datasets", datasets_json}});
    outcomes.push_back(std::move(out));
  }
  last_steering_ = outcomes;
  return outcomes;
}

void Runner::run(const std::optional<std::string>& only) {
  if (only && *only != "shortcut" && *only != "robustness" && *only != "steering") {
    throw Error(ErrorCode::ConfigError, "--only must be shortcut, robustness or steering");
  }
  const bool want_shortcut =
      only ? *only == "shortcut" : !config_.estimators_with(EstimatorRole::g).empty();
  const bool want_robustness = only ? *only == "robustness" : !config_.corruptions.empty();
  const bool want_steering = only ? *only == "steering" : config_.steering_enabled;
  if (!want_shortcut && !want_robustness && !want_steering) {
    throw Error(ErrorCode::ConfigError, "config enables no experiment (add a g estimator, corruptions or steering)");
  }
  if (want_shortcut) run_shortcut();
  if (want_robustness) run_robustness();
  if (want_steering) run_steering();

  PlotInputs plots;
  for (const auto& r : last_robustness_) plots.robustness.emplace_back(r.estimator, r.report);
  for (const auto& s : last_steering_) {
    for (const auto& d : s.datasets) {
      std::vector<double> errors;
      for (const auto& smp : d.samples) errors.push_back(std::abs(smp.default_pred - smp.label));
      try {
        plots.densities.emplace_back(s.estimator + "__" + d.dataset + "__errors", metrics::error_density(errors));
      } catch (const Error& e) {
        spdlog::info("no error density for {}/{}: {}", s.estimator, d.dataset, e.what());
      }
    }
    plots.delta_k.emplace_back(s.estimator + "__known", s.projected_known);
    plots.delta_k.emplace_back(s.estimator + "__unknown", s.projected_unknown);
  }
  emit_plot_data(plots, config_.output_dir / "plots");
  spdlog::info("run complete: {} queries, {} cache hits, {} failures, {} requests sent", stats_.queries,
               stats_.cache_hits, stats_.failures, requests_sent());
}

std::vector<ShortcutOutcome> run_shortcut_experiment(const ExperimentConfig& config, TransportFactory factory) {
  return Runner(config, std::move(factory)).run_shortcut();
}

std::vector<RobustnessOutcome> run_robustness_experiment(const ExperimentConfig& config, TransportFactory factory) {
  return Runner(config, std::move(factory)).run_robustness();
}

std::vector<SteeringOutcome> run_steering_experiment(const ExperimentConfig& config, TransportFactory factory) {
  return Runner(config, std::move(factory)).run_steering();
}

// --- plot data --------------------------------------------------------------

std::vector<std::filesystem::path> emit_plot_data(const PlotInputs& inputs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  const auto record = [&](const std::string& name, const std::string& kind, const std::string& text,
                          std::initializer_list<const char*> columns) {
    write_text(dir / name, text);
    written.push_back(dir / name);
    files.push_back({{"file", name}, {"kind", kind}, {"columns", std::vector<std::string>(columns.begin(), columns.end())}});
  };

  for (const auto& [name, report] : inputs.robustness) {
    std::string text = "dataset,severity,mean_normalized_deviation,sem,corruptions\n";
    for (const auto& [dataset, by_corruption] : report.per_corruption) {
      std::map<double, std::vector<double>> by_severity;
      for (const auto& [label, value] : by_corruption) {
        const auto at = label.find('@');
        if (at == std::string::npos) continue;
        by_severity[std::stod(label.substr(at + 1))].push_back(value);
      }
      for (const auto& [severity, values] : by_severity) {
        const auto ms = metrics::mean_sem(values);
        text += csv::quote(dataset) + "," + nlohmann::json(severity).dump() + "," + nlohmann::json(ms.mean).dump() +
                "," + nlohmann::json(ms.sem).dump() + "," + std::to_string(values.size()) + "\n";
      }
    }
    record("robustness_" + safe_name(name) + ".csv", "robustness_vs_severity", text,
           {"dataset", "severity", "mean_normalized_deviation", "sem", "corruptions"});
  }
  for (const auto& [name, curve] : inputs.densities) {
    record("density_" + safe_name(name) + ".csv", "error_density", curve.to_csv(), {"grid", "value"});
  }
  for (const auto& [name, values] : inputs.delta_k) {
    try {
      record("delta_k_" + safe_name(name) + ".csv", "delta_k_density", metrics::error_density(values).to_csv(),
             {"grid", "value"});
    } catch (const Error&) {
      spdlog::info("delta_k series {} has fewer than 2 distinct values; skipped", name);
    }
  }
  write_json(dir / "manifest.json", nlohmann::ordered_json{{"files", files}});
  written.push_back(dir / "manifest.json");
  return written;
}

}  // namespace sprobe::orchestrator
