#include "cedl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "cedl/error.hpp"

namespace cedl {

std::size_t Dataset::count_label(int y) const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), y));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.select_rows(indices);
  out.provenance = provenance;
  out.labels.reserve(indices.size());
  out.classes.reserve(indices.size());
  out.ids.reserve(indices.size());
  for (std::size_t i : indices) {
    out.labels.push_back(labels[i]);
    out.classes.push_back(classes[i]);
    out.ids.push_back(ids[i]);
  }
  return out;
}

void validate(const Dataset& ds) {
  if (ds.size() == 0) throw Error(ErrorKind::Format, "dataset is empty");
  if (ds.features.rows() != ds.size() || ds.classes.size() != ds.size() ||
      ds.ids.size() != ds.size()) {
    throw Error(ErrorKind::Format, "dataset columns have inconsistent lengths");
  }
  if (ds.width() == 0) throw Error(ErrorKind::Format, "dataset has zero feature width");
  if (!all_finite(ds.features.data())) throw Error(ErrorKind::Format, "non-finite feature value");
  for (int y : ds.labels) {
    if (y != 0 && y != 1) throw Error(ErrorKind::Format, "non-binary label " + std::to_string(y));
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_int(std::string_view text, long long& out) {
  double value = 0.0;
  if (!parse_double(text, value) || value != std::floor(value)) return false;
  out = static_cast<long long>(value);
  return true;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

Dataset assemble(std::vector<Vec>& rows, std::vector<int>& labels, std::vector<int>& classes,
                 std::size_t width, std::string provenance) {
  Dataset ds;
  ds.features = Matrix(rows.size(), width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end(), ds.features.row(r).begin());
  }
  ds.labels = std::move(labels);
  ds.classes = std::move(classes);
  ds.ids.resize(ds.labels.size());
  for (std::size_t i = 0; i < ds.ids.size(); ++i) ds.ids[i] = i;
  ds.provenance = std::move(provenance);
  return ds;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  auto in = open_input(path);
  std::vector<Vec> rows;
  std::vector<int> labels;
  std::vector<int> classes;
  std::size_t columns = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && options.header) continue;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (columns == 0) {
      columns = fields.size();
      if (columns < 2) {
        throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) +
                                           ": need at least one feature and a label");
      }
    } else if (fields.size() != columns) {
      throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                         std::to_string(columns) + " columns, found " +
                                         std::to_string(fields.size()));
    }
    const long long signed_col =
        options.label_column < 0 ? static_cast<long long>(columns) + options.label_column
                                 : options.label_column;
    if (signed_col < 0 || signed_col >= static_cast<long long>(columns)) {
      throw Error(ErrorKind::Format, "label column " + std::to_string(options.label_column) +
                                         " outside " + std::to_string(columns) + " columns");
    }
    const auto label_col = static_cast<std::size_t>(signed_col);

    Vec row;
    row.reserve(columns - 1);
    for (std::size_t c = 0; c < columns; ++c) {
      const std::string where =
          path.string() + ":" + std::to_string(line_no) + " column " + std::to_string(c + 1);
      if (c == label_col) {
        long long cls = 0;
        if (!parse_int(fields[c], cls) || cls < 0 || (!options.multiclass && cls > 1)) {
          throw Error(ErrorKind::Format, where + ": bad label '" + std::string(trim(fields[c])) + "'");
        }
        classes.push_back(static_cast<int>(cls));
        labels.push_back(cls != 0 ? 1 : 0);
        continue;
      }
      double value = 0.0;
      if (!parse_double(fields[c], value)) {
        throw Error(ErrorKind::Format, where + ": cannot parse '" + std::string(trim(fields[c])) + "'");
      }
      row.push_back(value);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::Format, path.string() + ": no data rows");
  return assemble(rows, labels, classes, columns - 1, "csv:" + path.string());
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  char buf[64];
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (double v : ds.features.row(r)) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out.put(',');
    }
    out << ds.classes[r] << '\n';
  }
}

Dataset load_svmlight(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::vector<std::pair<std::size_t, double>>> sparse;
  std::vector<int> labels;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    std::istringstream tokens{std::string(trim(view))};
    std::string token;
    if (!(tokens >> token)) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);

    double label_value = 0.0;
    if (!parse_double(token, label_value)) throw Error(ErrorKind::Format, where + ": bad label '" + token + "'");
    int label = 0;
    if (label_value == 1.0) {
      label = 1;
    } else if (label_value != 0.0 && label_value != -1.0) {
      throw Error(ErrorKind::Format, where + ": label '" + token + "' not in {-1,0,1}");
    }

    std::vector<std::pair<std::size_t, double>> entries;
    std::size_t last_index = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      long long index = 0;
      double value = 0.0;
      if (colon == std::string::npos ||
          !parse_int(std::string_view(token).substr(0, colon), index) ||
          !parse_double(std::string_view(token).substr(colon + 1), value)) {
        throw Error(ErrorKind::Format, where + ": malformed pair '" + token + "'");
      }
      if (index < 1 || static_cast<std::size_t>(index) <= last_index) {
        throw Error(ErrorKind::Format, where + ": index " + std::to_string(index) +
                                           " is not 1-based ascending");
      }
      last_index = static_cast<std::size_t>(index);
      entries.emplace_back(last_index, value);
    }
    width = std::max(width, last_index);
    sparse.push_back(std::move(entries));
    labels.push_back(label);
  }
  if (sparse.empty()) throw Error(ErrorKind::Format, path.string() + ": no data lines");
  if (width == 0) throw Error(ErrorKind::Format, path.string() + ": no feature indices");

  std::vector<Vec> rows;
  rows.reserve(sparse.size());
  for (const auto& entries : sparse) {
    Vec row(width, 0.0);
    for (const auto& [index, value] : entries) row[index - 1] = value;
    rows.push_back(std::move(row));
  }
  std::vector<int> classes = labels;
  return assemble(rows, labels, classes, width, "svmlight:" + path.string());
}

namespace {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_key(
    std::span<const int> keys, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::Config, "train fraction must lie in [0,1]");
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < keys.size(); ++i) groups[keys[i]].push_back(i);

  SeededRng rng(seed, RngStream::Split);
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  for (auto& [key, members] : groups) {
    rng.shuffle(members);
    const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

}  // namespace

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double train_fraction,
                                             std::uint64_t seed) {
  if (ds.count_label(0) == 0 || ds.count_label(1) == 0) {
    throw Error(ErrorKind::DegenerateSplit, "stratified split needs both classes");
  }
  auto [train, test] = split_by_key(ds.labels, train_fraction, seed);
  return {ds.subset(train), ds.subset(test)};
}

std::pair<Dataset, Dataset> stratified_split_by_class(const Dataset& ds, double train_fraction,
                                                      std::uint64_t seed) {
  auto [train, test] = split_by_key(ds.classes, train_fraction, seed);
  return {ds.subset(train), ds.subset(test)};
}

std::pair<LabelledSeries, LabelledSeries> chronological_split(const LabelledSeries& series,
                                                              double fraction) {
  const std::size_t length = series.length();
  if (length < 2) throw Error(ErrorKind::DegenerateSplit, "series needs at least 2 timesteps");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::Config, "chronological split fraction must lie in (0,1)");
  }
  const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(length)));
  std::vector<std::size_t> head(cut);
  std::vector<std::size_t> tail(length - cut);
  for (std::size_t i = 0; i < cut; ++i) head[i] = i;
  for (std::size_t i = cut; i < length; ++i) tail[i - cut] = i;

  LabelledSeries train{series.values.select_rows(head),
                       {series.labels.begin(), series.labels.begin() + static_cast<std::ptrdiff_t>(cut)}};
  LabelledSeries test{series.values.select_rows(tail),
                      {series.labels.begin() + static_cast<std::ptrdiff_t>(cut), series.labels.end()}};
  return {std::move(train), std::move(test)};
}

ChannelStats channel_stats(const LabelledSeries& series) {
  const std::size_t length = series.length();
  const std::size_t channels = series.channels();
  if (length == 0) throw Error(ErrorKind::InsufficientData, "empty series");
  ChannelStats stats{Vec(channels, 0.0), Vec(channels, 0.0)};
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t c = 0; c < channels; ++c) stats.mean[c] += series.values(t, c);
  }
  for (auto& m : stats.mean) m /= static_cast<double>(length);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double d = series.values(t, c) - stats.mean[c];
      stats.stdev[c] += d * d;
    }
  }
  for (auto& s : stats.stdev) {
    s = std::sqrt(s / static_cast<double>(length));
    if (s == 0.0) s = 1.0;
  }
  return stats;
}

std::size_t window_count(std::size_t length, std::size_t window_length, std::size_t stride) {
  if (window_length == 0 || stride == 0) throw Error(ErrorKind::Spec, "window length and stride must be >= 1");
  if (length < window_length) return 0;
  return (length - window_length) / stride + 1;
}

Dataset window_series(const LabelledSeries& series, const SeriesWindowSpec& spec,
                      const ChannelStats& stats) {
  const std::size_t length = series.length();
  const std::size_t channels = series.channels();
  if (series.labels.size() != length) throw Error(ErrorKind::Format, "series label count differs from length");
  if (length < spec.window_length) {
    throw Error(ErrorKind::InsufficientData, "series length " + std::to_string(length) +
                                                 " shorter than window " +
                                                 std::to_string(spec.window_length));
  }
  if (spec.standardization == WindowStandardization::TrainStatistics &&
      (stats.mean.size() != channels || stats.stdev.size() != channels)) {
    throw Error(ErrorKind::Dimension, "channel statistics do not match series channels");
  }

  const std::size_t count = window_count(length, spec.window_length, spec.stride);
  Dataset ds;
  ds.features = Matrix(count, spec.window_length * channels);
  ds.labels.resize(count);
  ds.ids.resize(count);
  ds.provenance = "windows";

  Vec mean(channels, 0.0);
  Vec stdev(channels, 1.0);
  if (spec.standardization == WindowStandardization::TrainStatistics) {
    mean = stats.mean;
    stdev = stats.stdev;
    for (auto& s : stdev) if (s == 0.0) s = 1.0;
  }

  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t start = w * spec.stride;
    if (spec.standardization == WindowStandardization::PerWindow) {
      LabelledSeries window{Matrix(spec.window_length, channels), std::vector<int>(spec.window_length)};
      for (std::size_t t = 0; t < spec.window_length; ++t) {
        for (std::size_t c = 0; c < channels; ++c) window.values(t, c) = series.values(start + t, c);
      }
      const auto local = channel_stats(window);
      mean = local.mean;
      stdev = local.stdev;
    }
    auto row = ds.features.row(w);
    int label = 0;
    for (std::size_t t = 0; t < spec.window_length; ++t) {
      for (std::size_t c = 0; c < channels; ++c) {
        row[t * channels + c] = (series.values(start + t, c) - mean[c]) / stdev[c];
      }
      if (series.labels[start + t] == 1) label = 1;
    }
    ds.labels[w] = label;
    ds.ids[w] = w;
  }
  ds.classes = ds.labels;
  return ds;
}

Dataset subsample_anomaly_proportion(const Dataset& train, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::Config, "anomaly proportion must lie in (0,1)");
  std::vector<std::size_t> normals;
  std::vector<std::size_t> anomalies;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (train.labels[i] == 1 ? anomalies : normals).push_back(i);
  }
  const double n_normal = static_cast<double>(normals.size());
  const auto required = static_cast<std::size_t>(std::llround(p * n_normal / (1.0 - p)));
  if (required > anomalies.size()) {
    const double max_p = static_cast<double>(anomalies.size()) /
                         (static_cast<double>(anomalies.size()) + n_normal);
    throw Error(ErrorKind::Capacity, "proportion " + std::to_string(p) + " needs " +
                                         std::to_string(required) + " anomalies, only " +
                                         std::to_string(anomalies.size()) +
                                         " available (max achievable " + std::to_string(max_p) + ")");
  }
  SeededRng rng(seed, RngStream::Sampling);
  rng.shuffle(anomalies);
  anomalies.resize(required);

  std::vector<std::size_t> kept = normals;
  kept.insert(kept.end(), anomalies.begin(), anomalies.end());
  std::sort(kept.begin(), kept.end());
  return train.subset(kept);
}

Dataset gen_gaussian_clusters(std::span<const ClusterSpec> clusters, std::uint64_t seed) {
  if (clusters.empty()) throw Error(ErrorKind::Spec, "no clusters given");
  const std::size_t dim = clusters.front().mean.size();
  std::size_t total = 0;
  for (const auto& c : clusters) {
    if (c.mean.size() != dim || dim == 0) throw Error(ErrorKind::Spec, "cluster means differ in dimension");
    if (!(c.stdev > 0.0)) throw Error(ErrorKind::Spec, "cluster stdev must be positive");
    if (c.label != 0 && c.label != 1) throw Error(ErrorKind::Spec, "cluster label must be 0 or 1");
    total += c.count;
  }
  SeededRng rng(seed, RngStream::Generator);
  Dataset ds;
  ds.features = Matrix(total, dim);
  ds.provenance = "gaussian_clusters";
  std::size_t row = 0;
  for (const auto& c : clusters) {
    for (std::size_t n = 0; n < c.count; ++n, ++row) {
      for (std::size_t j = 0; j < dim; ++j) ds.features(row, j) = c.mean[j] + c.stdev * rng.normal();
      ds.labels.push_back(c.label);
      ds.classes.push_back(c.class_id >= 0 ? c.class_id : c.label);
      ds.ids.push_back(row);
    }
  }
  return ds;
}

LabelledSeries gen_spike_series(const SpikeSeriesSpec& spec, std::uint64_t seed) {
  if (spec.length == 0 || spec.channels == 0) throw Error(ErrorKind::Spec, "series needs positive length and channels");
  if (spec.noise_stdev < 0.0) throw Error(ErrorKind::Spec, "noise stdev must be non-negative");
  for (const auto& s : spec.spikes) {
    if (s.position >= spec.length) {
      throw Error(ErrorKind::Spec, "spike position " + std::to_string(s.position) +
                                       " outside series of length " + std::to_string(spec.length));
    }
  }
  SeededRng rng(seed, RngStream::Generator);
  LabelledSeries series{Matrix(spec.length, spec.channels), std::vector<int>(spec.length, 0)};
  for (std::size_t t = 0; t < spec.length; ++t) {
    for (std::size_t c = 0; c < spec.channels; ++c) series.values(t, c) = spec.noise_stdev * rng.normal();
  }
  for (const auto& s : spec.spikes) {
    for (std::size_t c = 0; c < spec.channels; ++c) series.values(s.position, c) += s.magnitude;
    series.labels[s.position] = 1;
  }
  return series;
}

}  // namespace cedl
