#include "sclifd/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <system_error>

namespace sclifd {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end && !tok.empty();
}

bool parse_int(const std::string& tok, int& out) {
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end && !tok.empty();
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, expected a header row");

  const std::vector<std::string> header = split_csv_line(line);
  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") {
      label_col = c;
      break;
    }
  }
  if (label_col == header.size())
    throw std::runtime_error(path + ": missing 'label' column in header");

  Dataset data;
  data.dim = header.size() - 1;

  std::size_t row = 0;  // 1-based data row in messages
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error(path + ": row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    Sample s;
    s.features.reserve(data.dim);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) {
        if (!parse_int(cells[c], s.label))
          throw std::runtime_error(path + ": row " + std::to_string(row) +
                                   ": label is not an integer: '" + cells[c] + "'");
        if (s.label < 0)
          throw std::runtime_error(path + ": row " + std::to_string(row) + ": negative label " +
                                   std::to_string(s.label));
        continue;
      }
      double v = 0.0;
      if (!parse_double(cells[c], v))
        throw std::runtime_error(path + ": row " + std::to_string(row) + ", column '" + header[c] +
                                 "': not numeric: '" + cells[c] + "'");
      if (!std::isfinite(v))
        throw std::runtime_error(path + ": row " + std::to_string(row) + ", column '" + header[c] +
                                 "': non-finite value '" + cells[c] + "'");
      s.features.push_back(v);
    }
    data.classes.insert(s.label);
    data.samples.push_back(std::move(s));
  }

  if (data.samples.empty()) throw std::runtime_error(path + ": no samples (header only)");
  return data;
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t f = 0; f < data.dim; ++f) out << "f" << f << ",";
  out << "label\n";
  char buf[64];
  for (const Sample& s : data.samples) {
    for (double v : s.features) {
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out.write(buf, res.ptr - buf);
      out.put(',');
    }
    out << s.label << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset synth_blobs(const BlobConfig& cfg) {
  if (cfg.num_classes < 2) throw std::runtime_error("synth_blobs: num_classes must be >= 2");
  if (cfg.dim == 0) throw std::runtime_error("synth_blobs: dim must be positive");
  if (cfg.mean_separation < 0) throw std::runtime_error("synth_blobs: mean_separation must be >= 0");
  if (cfg.within_std <= 0) throw std::runtime_error("synth_blobs: within_std must be > 0");
  if (cfg.samples_per_class == 0) throw std::runtime_error("synth_blobs: samples_per_class must be positive");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  const double min_dist = cfg.mean_separation * cfg.within_std;
  // Typical distance between two N(0, s^2 I) draws is s*sqrt(2d); aim the
  // spread a little above the floor so the separation knob controls the
  // actual class overlap instead of being vacuously satisfied.
  const double base_spread =
      std::max(cfg.within_std, 1.3 * min_dist / std::sqrt(2.0 * static_cast<double>(cfg.dim)));

  std::vector<std::vector<double>> means;
  means.reserve(static_cast<std::size_t>(cfg.num_classes));
  const int max_attempts = 1000;
  for (int c = 0; c < cfg.num_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
      // Spread widens with failed attempts so crowded configurations
      // still terminate.
      const double spread = base_spread * (1.0 + attempt / 50.0);
      std::vector<double> cand(cfg.dim);
      for (double& v : cand) v = spread * unit_normal(rng);
      placed = true;
      for (const auto& mu : means) {
        if (std::sqrt(squared_distance(cand.data(), mu.data(), cfg.dim)) < min_dist) {
          placed = false;
          break;
        }
      }
      if (placed) means.push_back(std::move(cand));
    }
    if (!placed)
      throw std::runtime_error("synth_blobs: infeasible mean placement for class " +
                               std::to_string(c) + " after " + std::to_string(max_attempts) +
                               " attempts");
  }

  Dataset data;
  data.dim = cfg.dim;
  data.samples.reserve(static_cast<std::size_t>(cfg.num_classes) * cfg.samples_per_class);
  for (int c = 0; c < cfg.num_classes; ++c) {
    data.classes.insert(c);
    for (std::size_t i = 0; i < cfg.samples_per_class; ++i) {
      Sample s;
      s.label = c;
      s.features.resize(cfg.dim);
      for (std::size_t f = 0; f < cfg.dim; ++f)
        s.features[f] = means[static_cast<std::size_t>(c)][f] + cfg.within_std * unit_normal(rng);
      data.samples.push_back(std::move(s));
    }
  }
  return data;
}

SessionSchedule make_schedule(const Dataset& data, const std::vector<int>& class_order, int shot,
                              std::size_t normal_train, std::size_t fault_train,
                              std::size_t test_per_class, std::uint64_t seed) {
  if (class_order.empty()) throw std::runtime_error("make_schedule: empty class order");
  if (shot < 1) throw std::runtime_error("make_schedule: shot must be >= 1");
  if (normal_train == 0 || fault_train == 0 || test_per_class == 0)
    throw std::runtime_error("make_schedule: per-class counts must be positive");
  {
    std::set<int> uniq(class_order.begin(), class_order.end());
    if (uniq.size() != class_order.size())
      throw std::runtime_error("make_schedule: duplicate class id in class order");
    for (int c : class_order)
      if (!data.classes.count(c))
        throw std::runtime_error("make_schedule: class " + std::to_string(c) +
                                 " not present in dataset");
  }

  SessionSchedule sched;
  sched.shot = shot;
  for (std::size_t i = 0; i < class_order.size(); i += static_cast<std::size_t>(shot)) {
    std::vector<int> session;
    for (std::size_t j = i; j < std::min(i + static_cast<std::size_t>(shot), class_order.size()); ++j)
      session.push_back(class_order[j]);
    sched.sessions.push_back(std::move(session));
  }

  // Per-class sample rows in dataset order.
  std::map<int, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < data.samples.size(); ++i) rows[data.samples[i].label].push_back(i);

  std::mt19937_64 rng(seed);
  for (int c : class_order) {
    const std::size_t train_need = (c == class_order.front()) ? normal_train : fault_train;
    const std::size_t need = train_need + test_per_class;
    std::vector<std::size_t>& avail = rows[c];
    if (avail.size() < need)
      throw std::runtime_error("make_schedule: insufficient samples for class " +
                               std::to_string(c) + ": need " + std::to_string(need) + ", have " +
                               std::to_string(avail.size()));
    std::vector<std::size_t> shuffled = avail;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    sched.train_count[c] = train_need;
    sched.test_count[c] = test_per_class;
    sched.train_indices[c].assign(shuffled.begin(), shuffled.begin() + train_need);
    sched.test_indices[c].assign(shuffled.begin() + train_need,
                                 shuffled.begin() + need);
  }
  return sched;
}

FeatureScaler fit_scaler(const Dataset& data, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw std::runtime_error("fit_scaler: no rows");
  FeatureScaler sc;
  sc.mean.assign(data.dim, 0.0);
  sc.std.assign(data.dim, 0.0);
  for (std::size_t r : rows)
    for (std::size_t f = 0; f < data.dim; ++f) sc.mean[f] += data.samples[r].features[f];
  for (double& m : sc.mean) m /= static_cast<double>(rows.size());
  for (std::size_t r : rows)
    for (std::size_t f = 0; f < data.dim; ++f) {
      const double d = data.samples[r].features[f] - sc.mean[f];
      sc.std[f] += d * d;
    }
  for (double& v : sc.std) v = std::sqrt(v / static_cast<double>(rows.size()));
  return sc;
}

void apply_scaler(Dataset& data, const FeatureScaler& scaler) {
  if (scaler.mean.size() != data.dim)
    throw std::runtime_error("apply_scaler: dimensionality mismatch");
  for (Sample& s : data.samples)
    for (std::size_t f = 0; f < data.dim; ++f) {
      const double sd = scaler.std[f];
      s.features[f] = (sd > 0.0) ? (s.features[f] - scaler.mean[f]) / sd
                                 : s.features[f] - scaler.mean[f];
    }
}

}  // namespace sclifd
