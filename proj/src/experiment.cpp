#include "cedl/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cedl/error.hpp"

namespace cedl {

using json = nlohmann::json;

namespace {

std::string_view to_string(SourceKind k) {
  switch (k) {
    case SourceKind::Csv: return "csv";
    case SourceKind::Svmlight: return "svmlight";
    case SourceKind::Clusters: return "clusters";
    case SourceKind::SpikeSeries: return "spike_series";
  }
  return "csv";
}

SourceKind parse_source(const std::string& s) {
  if (s == "csv") return SourceKind::Csv;
  if (s == "svmlight") return SourceKind::Svmlight;
  if (s == "clusters") return SourceKind::Clusters;
  if (s == "spike_series") return SourceKind::SpikeSeries;
  throw Error(ErrorKind::Config, "unknown data source '" + s + "'");
}

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Tabular: return "tabular";
    case Modality::Series: return "series";
    case Modality::LabelledClasses: return "labelled_classes";
  }
  return "tabular";
}

Modality parse_modality(const std::string& s) {
  if (s == "tabular") return Modality::Tabular;
  if (s == "series") return Modality::Series;
  if (s == "labelled_classes") return Modality::LabelledClasses;
  throw Error(ErrorKind::Config, "unknown modality '" + s + "'");
}

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Single: return "single";
    case Protocol::Rotation: return "rotation";
    case Protocol::ProportionSweep: return "proportion_sweep";
  }
  return "single";
}

Protocol parse_protocol(const std::string& s) {
  if (s == "single") return Protocol::Single;
  if (s == "rotation") return Protocol::Rotation;
  if (s == "proportion_sweep") return Protocol::ProportionSweep;
  throw Error(ErrorKind::Config, "unknown protocol '" + s + "'");
}

std::string_view to_string(WindowStandardization w) {
  switch (w) {
    case WindowStandardization::TrainStatistics: return "train";
    case WindowStandardization::PerWindow: return "per_window";
    case WindowStandardization::None: return "none";
  }
  return "train";
}

WindowStandardization parse_standardization(const std::string& s) {
  if (s == "train") return WindowStandardization::TrainStatistics;
  if (s == "per_window") return WindowStandardization::PerWindow;
  if (s == "none") return WindowStandardization::None;
  throw Error(ErrorKind::Config, "unknown window standardization '" + s + "'");
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  if (!obj.is_object()) throw Error(ErrorKind::Config, std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::Config, "unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

std::string sanitize(const std::string& id) {
  std::string out = id;
  for (auto& ch : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_';
    if (!ok) ch = '_';
  }
  return out;
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
  json clusters = json::array();
  for (const auto& c : cfg.data.clusters) {
    clusters.push_back({{"mean", c.mean}, {"stdev", c.stdev}, {"count", c.count},
                        {"label", c.label}, {"class", c.class_id}});
  }
  json spikes = json::array();
  for (const auto& s : cfg.data.spikes.spikes) {
    spikes.push_back({{"position", s.position}, {"magnitude", s.magnitude}});
  }
  json data = {
      {"source", to_string(cfg.data.kind)},
      {"path", cfg.data.path.string()},
      {"label_column", cfg.data.csv.label_column},
      {"header", cfg.data.csv.header},
      {"multiclass", cfg.data.csv.multiclass},
      {"clusters", clusters},
      {"series",
       {{"length", cfg.data.spikes.length},
        {"channels", cfg.data.spikes.channels},
        {"spikes", spikes},
        {"noise_stdev", cfg.data.spikes.noise_stdev}}},
  };
  data["generator_seed"] = cfg.data.generator_seed ? json(*cfg.data.generator_seed) : json(nullptr);

  std::vector<std::string> sweep;
  for (auto k : cfg.sweep_objectives) sweep.emplace_back(to_string(k));
  const auto& t = cfg.train;
  const auto& o = t.objective_config;
  return {
      {"id", cfg.id},
      {"data", data},
      {"modality", to_string(cfg.modality)},
      {"encoder",
       {{"hidden", cfg.encoder.hidden},
        {"latent_dim", cfg.encoder.latent_dim},
        {"hidden_activation", to_string(cfg.encoder.hidden_activation)},
        {"output_activation", to_string(cfg.encoder.output_activation)}}},
      {"train",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"seed", t.seed},
        {"objective", to_string(t.objective)},
        {"shuffle", t.shuffle},
        {"sad_eps", t.sad_eps},
        {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"eps", t.adam.eps}}}}},
      {"objective",
       {{"alpha", o.alpha},
        {"w0", o.w0},
        {"w1", o.w1},
        {"centre", o.centre},
        {"centre_mode", to_string(o.centre_mode)},
        {"auto_weight", cfg.auto_weight}}},
      {"split",
       {{"train_fraction", cfg.train_fraction},
        {"unseen_classes", cfg.unseen_classes},
        {"chronological_fraction", cfg.chronological_fraction}}},
      {"window",
       {{"length", cfg.window.window_length},
        {"stride", cfg.window.stride},
        {"standardization", to_string(cfg.window.standardization)}}},
      {"protocol", to_string(cfg.protocol)},
      {"proportions", cfg.proportions},
      {"sweep_objectives", sweep},
      {"output_dir", cfg.output_dir.string()},
      {"record_timing", cfg.record_timing},
  };
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    reject_unknown_keys(j, {"id", "data", "modality", "encoder", "train", "objective", "split", "window",
                            "protocol", "proportions", "sweep_objectives", "output_dir", "record_timing"},
                        "config");
    read_if(j, "id", cfg.id);
    if (auto it = j.find("data"); it != j.end()) {
      const json& d = *it;
      reject_unknown_keys(d, {"source", "path", "label_column", "header", "multiclass", "clusters", "series",
                              "generator_seed"},
                          "data");
      if (d.contains("source")) cfg.data.kind = parse_source(d.at("source").get<std::string>());
      if (d.contains("path")) cfg.data.path = d.at("path").get<std::string>();
      read_if(d, "label_column", cfg.data.csv.label_column);
      read_if(d, "header", cfg.data.csv.header);
      read_if(d, "multiclass", cfg.data.csv.multiclass);
      if (d.contains("generator_seed") && !d.at("generator_seed").is_null()) {
        cfg.data.generator_seed = d.at("generator_seed").get<std::uint64_t>();
      }
      if (auto c = d.find("clusters"); c != d.end()) {
        for (const auto& item : *c) {
          reject_unknown_keys(item, {"mean", "stdev", "count", "label", "class"}, "data.clusters[]");
          ClusterSpec spec;
          spec.mean = item.at("mean").get<Vec>();
          read_if(item, "stdev", spec.stdev);
          read_if(item, "count", spec.count);
          read_if(item, "label", spec.label);
          read_if(item, "class", spec.class_id);
          cfg.data.clusters.push_back(std::move(spec));
        }
      }
      if (auto s = d.find("series"); s != d.end()) {
        reject_unknown_keys(*s, {"length", "channels", "spikes", "noise_stdev"}, "data.series");
        read_if(*s, "length", cfg.data.spikes.length);
        read_if(*s, "channels", cfg.data.spikes.channels);
        read_if(*s, "noise_stdev", cfg.data.spikes.noise_stdev);
        if (auto sp = s->find("spikes"); sp != s->end()) {
          for (const auto& item : *sp) {
            cfg.data.spikes.spikes.push_back(
                {item.at("position").get<std::size_t>(), item.at("magnitude").get<double>()});
          }
        }
      }
    }
    if (j.contains("modality")) cfg.modality = parse_modality(j.at("modality").get<std::string>());
    if (auto it = j.find("encoder"); it != j.end()) {
      reject_unknown_keys(*it, {"hidden", "latent_dim", "hidden_activation", "output_activation"}, "encoder");
      read_if(*it, "hidden", cfg.encoder.hidden);
      read_if(*it, "latent_dim", cfg.encoder.latent_dim);
      if (it->contains("hidden_activation")) {
        cfg.encoder.hidden_activation = parse_activation(it->at("hidden_activation").get<std::string>());
      }
      if (it->contains("output_activation")) {
        cfg.encoder.output_activation = parse_activation(it->at("output_activation").get<std::string>());
      }
    }
    if (auto it = j.find("train"); it != j.end()) {
      reject_unknown_keys(*it, {"epochs", "batch_size", "learning_rate", "seed", "objective", "shuffle",
                                "sad_eps", "adam"},
                          "train");
      auto& t = cfg.train;
      read_if(*it, "epochs", t.epochs);
      read_if(*it, "batch_size", t.batch_size);
      read_if(*it, "learning_rate", t.learning_rate);
      read_if(*it, "seed", t.seed);
      read_if(*it, "shuffle", t.shuffle);
      read_if(*it, "sad_eps", t.sad_eps);
      if (it->contains("objective")) t.objective = parse_objective_kind(it->at("objective").get<std::string>());
      if (auto a = it->find("adam"); a != it->end()) {
        reject_unknown_keys(*a, {"beta1", "beta2", "eps"}, "train.adam");
        read_if(*a, "beta1", t.adam.beta1);
        read_if(*a, "beta2", t.adam.beta2);
        read_if(*a, "eps", t.adam.eps);
      }
    }
    if (auto it = j.find("objective"); it != j.end()) {
      reject_unknown_keys(*it, {"alpha", "w0", "w1", "centre", "centre_mode", "auto_weight"}, "objective");
      auto& o = cfg.train.objective_config;
      read_if(*it, "alpha", o.alpha);
      read_if(*it, "w0", o.w0);
      read_if(*it, "w1", o.w1);
      read_if(*it, "centre", o.centre);
      read_if(*it, "auto_weight", cfg.auto_weight);
      if (it->contains("centre_mode")) o.centre_mode = parse_centre_mode(it->at("centre_mode").get<std::string>());
    }
    if (auto it = j.find("split"); it != j.end()) {
      reject_unknown_keys(*it, {"train_fraction", "unseen_classes", "chronological_fraction"}, "split");
      read_if(*it, "train_fraction", cfg.train_fraction);
      read_if(*it, "unseen_classes", cfg.unseen_classes);
      read_if(*it, "chronological_fraction", cfg.chronological_fraction);
    }
    if (auto it = j.find("window"); it != j.end()) {
      reject_unknown_keys(*it, {"length", "stride", "standardization"}, "window");
      read_if(*it, "length", cfg.window.window_length);
      read_if(*it, "stride", cfg.window.stride);
      if (it->contains("standardization")) {
        cfg.window.standardization = parse_standardization(it->at("standardization").get<std::string>());
      }
    }
    if (j.contains("protocol")) cfg.protocol = parse_protocol(j.at("protocol").get<std::string>());
    read_if(j, "proportions", cfg.proportions);
    if (auto it = j.find("sweep_objectives"); it != j.end()) {
      cfg.sweep_objectives.clear();
      for (const auto& s : *it) cfg.sweep_objectives.push_back(parse_objective_kind(s.get<std::string>()));
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    read_if(j, "record_timing", cfg.record_timing);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  auto cfg = experiment_from_json(j);
  // Relative data paths resolve against the config file's directory.
  if (!cfg.data.path.empty() && cfg.data.path.is_relative() && path.has_parent_path()) {
    auto candidate = path.parent_path() / cfg.data.path;
    if (std::filesystem::exists(candidate)) cfg.data.path = candidate;
  }
  return cfg;
}

std::string config_digest(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a64(j.dump());
  return os.str();
}

void apply_environment(ExperimentConfig& cfg) {
  if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') cfg.output_dir = dir;
}

json to_json(const MetricReport& r) {
  return {{"auroc", r.auroc},
          {"aupr", r.aupr},
          {"best_f1", r.best_f1},
          {"best_threshold", number_or_string(r.best_threshold)},
          {"positives", r.positives},
          {"negatives", r.negatives}};
}

std::string to_json_line(const ResultRecord& r) {
  json j = {
      {"experiment_id", r.experiment_id},
      {"config_digest", r.config_digest},
      {"protocol", r.protocol},
      {"objective", to_string(r.objective)},
      {"seed", r.seed},
      {"metrics", to_json(r.metrics)},
      {"seen", r.seen ? to_json(*r.seen) : json(nullptr)},
      {"unseen", r.unseen ? to_json(*r.unseen) : json(nullptr)},
      {"train_size", r.train_size},
      {"train_anomalies", r.train_anomalies},
      {"realized_anomaly_fraction", r.realized_anomaly_fraction},
      {"requested_anomaly_fraction",
       r.requested_anomaly_fraction ? json(*r.requested_anomaly_fraction) : json(nullptr)},
      {"test_size", r.test_size},
      {"w0", r.w0},
      {"w1", r.w1},
      {"alpha", r.alpha},
      {"best_loss", r.best_loss},
      {"best_epoch", r.best_epoch},
      {"checkpoint", r.checkpoint},
  };
  if (r.wall_time_s) j["wall_time_s"] = *r.wall_time_s;
  return j.dump();
}

void ResultWriter::append(const ResultRecord& record) {
  const std::string line = to_json_line(record);
  std::lock_guard lock(mutex_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorKind::Io, "cannot append to " + path_.string());
  out << line << '\n';
}

namespace {

LabelledSeries series_from_rows(const Dataset& rows) {
  return {rows.features, rows.labels};
}

LabelledSeries load_series(const ExperimentConfig& cfg) {
  switch (cfg.data.kind) {
    case SourceKind::SpikeSeries:
      return gen_spike_series(cfg.data.spikes, cfg.data.generator_seed.value_or(cfg.train.seed));
    case SourceKind::Csv:
      return series_from_rows(load_csv(cfg.data.path, cfg.data.csv));
    default:
      throw Error(ErrorKind::Config, "series modality needs a csv or spike_series source");
  }
}

std::vector<std::size_t> indices_where(const Dataset& ds, auto&& pred) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (pred(i)) out.push_back(i);
  }
  return out;
}

bool contains(std::span<const int> values, int v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

// Wraps module errors with the experiment id.
template <typename F>
auto with_context(const std::string& id, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), "experiment '" + id + "': " + e.message());
  }
}

}  // namespace

Dataset load_source(const ExperimentConfig& cfg) {
  switch (cfg.data.kind) {
    case SourceKind::Csv: return load_csv(cfg.data.path, cfg.data.csv);
    case SourceKind::Svmlight: return load_svmlight(cfg.data.path);
    case SourceKind::Clusters:
      return gen_gaussian_clusters(cfg.data.clusters, cfg.data.generator_seed.value_or(cfg.train.seed));
    case SourceKind::SpikeSeries:
      throw Error(ErrorKind::Config, "spike_series sources need the series modality");
  }
  throw Error(ErrorKind::Config, "unknown source");
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  if (cfg.modality == Modality::Series) {
    const auto series = load_series(cfg);
    auto [head, tail] = chronological_split(series, cfg.chronological_fraction);
    const auto stats = channel_stats(head);
    Dataset train = window_series(head, cfg.window, stats);
    Dataset test = window_series(tail, cfg.window, stats);
    train.provenance = test.provenance = "series_windows";
    return {std::move(train), std::move(test)};
  }

  const Dataset ds = load_source(cfg);
  if (cfg.modality == Modality::Tabular && cfg.unseen_classes.empty()) {
    auto [train, test] = stratified_split(ds, cfg.train_fraction, cfg.train.seed);
    return {std::move(train), std::move(test)};
  }
  auto [train_all, test] = stratified_split_by_class(ds, cfg.train_fraction, cfg.train.seed);
  const auto keep = indices_where(train_all, [&](std::size_t i) {
    return !contains(cfg.unseen_classes, train_all.classes[i]);
  });
  return {train_all.subset(keep), std::move(test)};
}

CellOutcome run_cell(const ExperimentConfig& cfg, const Dataset& train, const Dataset& test,
                     const std::string& cell_id, std::uint64_t seed) {
  const auto started = std::chrono::steady_clock::now();
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  const std::size_t normals = train.count_label(0);
  const std::size_t anomalies = train.count_label(1);
  if (cfg.auto_weight && (needs_both_classes(tc.objective) || anomalies > 0)) {
    tc.objective_config.w0 = 1.0;
    tc.objective_config.w1 = weight_ratio(normals, anomalies);
  }

  SeededRng init_rng(seed, RngStream::Init);
  auto model = init_encoder(mlp_specs(train.width(), cfg.encoder.hidden, cfg.encoder.latent_dim,
                                      cfg.encoder.hidden_activation, cfg.encoder.output_activation),
                            init_rng);
  CellOutcome out;
  out.report = cedl::train(train, std::move(model), tc);
  out.test_scores = score(out.report.best, test.features);

  ScoredSet all{out.test_scores.raw, test.labels};
  auto& rec = out.record;
  rec.metrics = evaluate(all);

  std::set<int> seen;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.labels[i] == 1) seen.insert(train.classes[i]);
  }
  const auto is_unseen = [&](std::size_t i) { return test.labels[i] == 1 && !seen.count(test.classes[i]); };
  const auto is_seen = [&](std::size_t i) { return test.labels[i] == 1 && seen.count(test.classes[i]); };
  const auto pick = [&](auto&& pred) {
    ScoredSet s;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (test.labels[i] == 0 || pred(i)) {
        s.scores.push_back(out.test_scores.raw[i]);
        s.labels.push_back(test.labels[i]);
      }
    }
    return s;
  };
  const auto unseen_set = pick(is_unseen);
  const auto seen_set = pick(is_seen);
  const bool has_normals = test.count_label(0) > 0;
  if (has_normals && std::count(unseen_set.labels.begin(), unseen_set.labels.end(), 1) > 0) {
    rec.unseen = evaluate(unseen_set);
    if (std::count(seen_set.labels.begin(), seen_set.labels.end(), 1) > 0) rec.seen = evaluate(seen_set);
  }

  const std::string file = sanitize(cell_id) + ".ckpt";
  Checkpoint ckpt{out.report.best,
                  {seed, out.report.best_loss, out.report.best_epoch, tc.learning_rate, tc.adam}};
  save_checkpoint(ckpt, cfg.output_dir / file);

  rec.experiment_id = cell_id;
  rec.config_digest = config_digest(cfg);
  rec.protocol = std::string(to_string(cfg.protocol));
  rec.objective = tc.objective;
  rec.seed = seed;
  rec.train_size = train.size();
  rec.train_anomalies = anomalies;
  rec.realized_anomaly_fraction = static_cast<double>(anomalies) / static_cast<double>(train.size());
  rec.test_size = test.size();
  rec.w0 = out.report.best.objective.w0;
  rec.w1 = out.report.best.objective.w1;
  rec.alpha = out.report.best.objective.alpha;
  rec.best_loss = out.report.best_loss;
  rec.best_epoch = out.report.best_epoch;
  rec.checkpoint = file;
  if (cfg.record_timing) {
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return out;
}

std::vector<ResultRecord> run_single(const ExperimentConfig& cfg) {
  return with_context(cfg.id, [&] {
    const auto data = prepare_data(cfg);
    auto outcome = run_cell(cfg, data.train, data.test, cfg.id, cfg.train.seed);
    ResultWriter(cfg.output_dir / "results.jsonl").append(outcome.record);
    return std::vector<ResultRecord>{outcome.record};
  });
}

std::vector<ResultRecord> run_rotation(const ExperimentConfig& cfg) {
  return with_context(cfg.id, [&] {
    const Dataset ds = load_source(cfg);
    const std::set<int> classes(ds.classes.begin(), ds.classes.end());
    if (classes.size() < 3 || !classes.count(0)) {
      throw Error(ErrorKind::Protocol, "rotation needs class 0 plus at least two anomaly classes, found " +
                                           std::to_string(classes.size()) + " classes");
    }
    auto [train_all, test] = stratified_split_by_class(ds, cfg.train_fraction, cfg.train.seed);
    ResultWriter writer(cfg.output_dir / "results.jsonl");
    std::vector<ResultRecord> records;
    for (int k : classes) {
      if (k == 0) continue;
      const auto keep = indices_where(train_all, [&](std::size_t i) {
        return train_all.classes[i] == 0 || train_all.classes[i] == k;
      });
      Dataset train = train_all.subset(keep);
      for (std::size_t i = 0; i < train.size(); ++i) {
        train.labels[i] = train.classes[i] == 0 ? 0 : 1;
      }
      // Leakage guard: no sample of another anomaly class may be trained on.
      std::set<std::size_t> unseen_ids;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.classes[i] != 0 && ds.classes[i] != k) unseen_ids.insert(ds.ids[i]);
      }
      for (std::size_t id : train.ids) {
        if (unseen_ids.count(id)) {
          throw Error(ErrorKind::Protocol, "sample " + std::to_string(id) + " of an unseen class leaked into cell " +
                                               std::to_string(k));
        }
      }
      const std::string cell_id = cfg.id + "/rotation-" + std::to_string(k);
      auto outcome = run_cell(cfg, train, test, cell_id, rotation_cell_seed(cfg.train.seed, k));
      writer.append(outcome.record);
      records.push_back(std::move(outcome.record));
    }
    return records;
  });
}

std::vector<ResultRecord> run_proportion_sweep(const ExperimentConfig& cfg) {
  return with_context(cfg.id, [&] {
    if (cfg.proportions.empty()) throw Error(ErrorKind::Config, "proportion sweep needs proportions");
    const auto data = prepare_data(cfg);

    std::vector<Dataset> subsets;
    for (std::size_t i = 0; i < cfg.proportions.size(); ++i) {
      try {
        subsets.push_back(subsample_anomaly_proportion(data.train, cfg.proportions[i],
                                                       sweep_sampling_seed(cfg.train.seed, i)));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Capacity) throw;
        throw Error(ErrorKind::Capacity, "first infeasible proportion " + format_double(cfg.proportions[i]) +
                                             ": " + e.message());
      }
    }

    ResultWriter writer(cfg.output_dir / "results.jsonl");
    std::vector<ResultRecord> records;
    for (std::size_t i = 0; i < subsets.size(); ++i) {
      for (ObjectiveKind kind : cfg.sweep_objectives) {
        ExperimentConfig cell = cfg;
        cell.train.objective = kind;
        const std::string cell_id =
            cfg.id + "/p" + format_double(cfg.proportions[i]) + "/" + std::string(to_string(kind));
        auto outcome = run_cell(cell, subsets[i], data.test, cell_id, cfg.train.seed);
        outcome.record.requested_anomaly_fraction = cfg.proportions[i];
        writer.append(outcome.record);
        records.push_back(std::move(outcome.record));
      }
    }
    return records;
  });
}

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.protocol) {
    case Protocol::Single: return run_single(cfg);
    case Protocol::Rotation: return run_rotation(cfg);
    case Protocol::ProportionSweep: return run_proportion_sweep(cfg);
  }
  return {};
}

std::string embeddings_csv(const Checkpoint& ckpt, const Dataset& ds) {
  const Detector& det = ckpt.detector;
  if (ds.width() != det.encoder.input_dim()) {
    throw Error(ErrorKind::Dimension, "dataset width " + std::to_string(ds.width()) +
                                          " but checkpoint encoder expects " +
                                          std::to_string(det.encoder.input_dim()));
  }
  const auto scored = score(det, ds.features);
  const std::size_t dim = det.encoder.latent_dim();
  std::string out = "label";
  for (std::size_t j = 0; j < dim; ++j) out += ",r" + std::to_string(j);
  out += ",distance,score\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = scored.representations.row(i);
    out += std::to_string(ds.labels[i]);
    for (double v : r) out += "," + format_double(v);
    out += "," + format_double(l2_distance(r, det.objective.centre));
    out += "," + format_double(scored.probability[i]);
    out += '\n';
  }
  return out;
}

void export_embeddings(const Checkpoint& ckpt, const Dataset& ds, const std::filesystem::path& out_path) {
  const std::string text = embeddings_csv(ckpt, ds);
  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + out_path.string());
  out << text;
}

MetricReport eval_checkpoint(const Checkpoint& ckpt, const Dataset& ds) {
  if (ds.width() != ckpt.detector.encoder.input_dim()) {
    throw Error(ErrorKind::Dimension, "dataset width does not match checkpoint encoder");
  }
  const auto scored = score(ckpt.detector, ds.features);
  return evaluate({scored.raw, ds.labels});
}

}  // namespace cedl
