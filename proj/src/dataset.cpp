#include "koopid/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "koopid/error.hpp"
#include "koopid/random.hpp"

namespace koopid {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                              : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

// Parses "x12" -> 12 for the given prefix; 0 on mismatch.
std::size_t suffix_index(std::string_view field, char prefix) {
  if (field.size() < 2 || field.front() != prefix) return 0;
  std::size_t value = 0;
  const auto* first = field.data() + 1;
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || *first == '0') return 0;
  return value;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_rows(std::ostream& out, std::span<const double> times, const Eigen::MatrixXd& states,
                const Eigen::MatrixXd& inputs) {
  out << 't';
  for (Eigen::Index j = 0; j < states.cols(); ++j) out << ",x" << j + 1;
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) out << ",u" << j + 1;
  out << '\n';
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    out << format_number(times[k]);
    for (Eigen::Index j = 0; j < states.cols(); ++j) out << ',' << format_number(states(r, j));
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) out << ',' << format_number(inputs(r, j));
    out << '\n';
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  return out;
}

Eigen::MatrixXd filter_columns(const Eigen::MatrixXd& signal, std::span<const std::size_t> columns,
                               double window, double ts) {
  Eigen::MatrixXd out = signal;
  if (columns.empty()) return out;
  Eigen::MatrixXd picked(signal.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    picked.col(static_cast<Eigen::Index>(c)) = signal.col(static_cast<Eigen::Index>(columns[c]));
  }
  const Eigen::MatrixXd smoothed = moving_average(picked, window, ts);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.col(static_cast<Eigen::Index>(columns[c])) = smoothed.col(static_cast<Eigen::Index>(c));
  }
  return out;
}

}  // namespace

Trajectory Trajectory::slice(std::size_t begin, std::size_t count) const {
  Trajectory out;
  out.ts = ts;
  out.t0 = time(begin);
  const auto b = static_cast<Eigen::Index>(begin);
  const auto c = static_cast<Eigen::Index>(count);
  out.states = states.middleRows(b, c);
  out.inputs = inputs.middleRows(b, c);
  return out;
}

RawTrial parse_csv(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](ErrorCode code, const std::string& what) -> Error {
    return Error(code, name + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw fail(ErrorCode::kSchemaError, "missing header row");
  // Tolerate a UTF-8 byte-order mark.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = split_fields(line);
  std::ptrdiff_t t_col = -1;
  std::map<std::size_t, std::size_t> x_cols, u_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view h = header[c];
    bool duplicate = false;
    if (h == "t") {
      duplicate = t_col >= 0;
      t_col = static_cast<std::ptrdiff_t>(c);
    } else if (std::size_t i = suffix_index(h, 'x'); i > 0) {
      duplicate = !x_cols.emplace(i, c).second;
    } else if (std::size_t j = suffix_index(h, 'u'); j > 0) {
      duplicate = !u_cols.emplace(j, c).second;
    } else {
      throw fail(ErrorCode::kSchemaError, "unexpected column '" + std::string(h) + "'");
    }
    if (duplicate) throw fail(ErrorCode::kSchemaError, "duplicate column '" + std::string(h) + "'");
  }
  if (t_col < 0) throw fail(ErrorCode::kSchemaError, "missing required column 't'");
  if (x_cols.empty()) throw fail(ErrorCode::kSchemaError, "missing required column 'x1'");
  // Suffixes must be contiguous from 1.
  if (x_cols.rbegin()->first != x_cols.size()) {
    throw fail(ErrorCode::kSchemaError, "state columns must be x1..x" + std::to_string(x_cols.rbegin()->first));
  }
  if (!u_cols.empty() && u_cols.rbegin()->first != u_cols.size()) {
    throw fail(ErrorCode::kSchemaError, "input columns must be u1..u" + std::to_string(u_cols.rbegin()->first));
  }

  const std::size_t n = x_cols.size();
  const std::size_t m = u_cols.size();
  std::vector<double> times;
  std::vector<double> xs, us;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw fail(ErrorCode::kParseError, "expected " + std::to_string(header.size()) + " fields, got " +
                                             std::to_string(fields.size()));
    }
    auto number = [&](std::size_t c) {
      const std::string_view f = fields[c];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw fail(ErrorCode::kParseError, "non-numeric cell '" + std::string(f) + "'");
      }
      return v;
    };
    const double t = number(static_cast<std::size_t>(t_col));
    if (!times.empty() && !(t > times.back())) {
      throw fail(ErrorCode::kMonotonicityError, "timestamps must be strictly increasing");
    }
    times.push_back(t);
    for (const auto& [idx, c] : x_cols) xs.push_back(number(c));
    for (const auto& [idx, c] : u_cols) us.push_back(number(c));
  }

  RawTrial trial;
  trial.name = name;
  trial.timestamps = std::move(times);
  const auto rows = static_cast<Eigen::Index>(trial.timestamps.size());
  trial.states = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      xs.data(), rows, static_cast<Eigen::Index>(n));
  trial.inputs.resize(rows, static_cast<Eigen::Index>(m));
  if (m > 0) {
    trial.inputs = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        us.data(), rows, static_cast<Eigen::Index>(m));
  }
  return trial;
}

RawTrial ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, path.string() + ": cannot open file");
  return parse_csv(in, path.string());
}

void write_csv(std::ostream& out, const Trajectory& traj) {
  std::vector<double> times(traj.samples());
  for (std::size_t k = 0; k < times.size(); ++k) times[k] = traj.time(k);
  write_rows(out, times, traj.states, traj.inputs);
}

void export_csv(const Trajectory& traj, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_csv(out, traj);
}

void export_csv(const RawTrial& trial, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_rows(out, trial.timestamps, trial.states, trial.inputs);
}

std::size_t moving_average_length(double window, double ts) {
  if (!(window > 0.0) || !(ts > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "moving average: window and ts must be positive");
  }
  auto len = static_cast<std::size_t>(std::llround(window / ts));
  if (len % 2 == 0) ++len;
  return len;
}

Eigen::MatrixXd moving_average(const Eigen::MatrixXd& signal, double window, double ts) {
  const std::size_t len = moving_average_length(window, ts);
  if (signal.rows() == 0) throw Error(ErrorCode::kEmptySignal, "moving average: empty signal");
  const Eigen::Index rows = signal.rows();
  const auto half = static_cast<Eigen::Index>(len / 2);

  // Prefix sums make each output O(1) regardless of the window length.
  Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(rows + 1, signal.cols());
  for (Eigen::Index r = 0; r < rows; ++r) prefix.row(r + 1) = prefix.row(r) + signal.row(r);

  Eigen::MatrixXd out(rows, signal.cols());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, r - half);
    const Eigen::Index hi = std::min<Eigen::Index>(rows - 1, r + half);
    out.row(r) = (prefix.row(hi + 1) - prefix.row(lo)) / static_cast<double>(hi - lo + 1);
  }
  return out;
}

Trajectory resample_uniform(const RawTrial& trial, double ts) {
  if (!(ts > 0.0)) throw Error(ErrorCode::kInvalidArgument, "resample: ts must be positive");
  const auto& t = trial.timestamps;
  if (t.size() < 2) throw Error(ErrorCode::kTooFewSamples, "resample: trial needs at least two samples");
  const double span = t.back() - t.front();
  // Grid points within a rounding hair of the last timestamp are kept.
  const auto count = static_cast<std::size_t>(std::floor(span / ts * (1.0 + 1e-12) + 1e-9)) + 1;
  if (count < 2) {
    throw Error(ErrorCode::kTooFewSamples, "resample: sampling period exceeds the trial span");
  }

  Trajectory out;
  out.ts = ts;
  out.t0 = t.front();
  out.states.resize(static_cast<Eigen::Index>(count), trial.states.cols());
  out.inputs.resize(static_cast<Eigen::Index>(count), trial.inputs.cols());
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double tk = std::min(out.time(k), t.back());
    while (seg + 2 < t.size() && t[seg + 1] < tk) ++seg;
    const double alpha = (tk - t[seg]) / (t[seg + 1] - t[seg]);
    const auto r = static_cast<Eigen::Index>(k);
    const auto a = static_cast<Eigen::Index>(seg);
    out.states.row(r) = (1.0 - alpha) * trial.states.row(a) + alpha * trial.states.row(a + 1);
    if (trial.inputs.cols() > 0) {
      out.inputs.row(r) = (1.0 - alpha) * trial.inputs.row(a) + alpha * trial.inputs.row(a + 1);
    }
  }
  return out;
}

Eigen::MatrixXd central_difference(const Eigen::MatrixXd& signal, double ts) {
  const Eigen::Index rows = signal.rows();
  if (rows < 2) throw Error(ErrorCode::kTooFewSamples, "differentiate: need at least two samples");
  Eigen::MatrixXd d(rows, signal.cols());
  d.row(0) = (signal.row(1) - signal.row(0)) / ts;
  d.row(rows - 1) = (signal.row(rows - 1) - signal.row(rows - 2)) / ts;
  for (Eigen::Index r = 1; r + 1 < rows; ++r) d.row(r) = (signal.row(r + 1) - signal.row(r - 1)) / (2.0 * ts);
  return d;
}

Split split_validation(const Trajectory& traj, const SplitSpec& spec) {
  Split split;
  const std::size_t total = traj.samples();
  if (spec.validation_count == 0) {
    split.train.push_back(traj);
    return split;
  }
  if (!(spec.validation_duration > 0.0)) {
    throw Error(ErrorCode::kInfeasibleSplit, "split: validation duration must be positive");
  }
  const auto window = static_cast<std::size_t>(std::llround(spec.validation_duration / traj.ts));
  const std::size_t needed = window * spec.validation_count;
  if (window < 2 || needed > total) {
    throw Error(ErrorCode::kInfeasibleSplit,
                "split: cannot place " + std::to_string(spec.validation_count) + " windows of " +
                    std::to_string(window) + " samples in " + std::to_string(total) + " samples");
  }
  const std::size_t free_samples = total - needed;

  // Gaps between windows are drawn as sorted offsets into the free samples.
  // A one-sample gap would become a training segment too short to use, so
  // such draws are rejected and redrawn from the same stream.
  PortableRng rng(spec.seed);
  std::vector<std::size_t> offsets(spec.validation_count);
  bool ok = false;
  for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
    for (auto& o : offsets) o = static_cast<std::size_t>(rng.uniform_index(free_samples + 1));
    std::sort(offsets.begin(), offsets.end());
    ok = true;
    std::size_t prev = 0;
    for (std::size_t j = 0; j <= offsets.size(); ++j) {
      const std::size_t edge = j < offsets.size() ? offsets[j] : free_samples;
      if (edge - prev == 1) ok = false;
      prev = edge;
    }
  }
  if (!ok) throw Error(ErrorCode::kInfeasibleSplit, "split: no admissible window placement found");

  std::size_t cursor = 0;
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    const std::size_t start = offsets[j] + j * window;
    if (start > cursor) split.train.push_back(traj.slice(cursor, start - cursor));
    split.validation.push_back(traj.slice(start, window));
    cursor = start + window;
  }
  if (cursor < total) split.train.push_back(traj.slice(cursor, total - cursor));
  return split;
}

SnapshotSet build_snapshots(std::span<const Trajectory> segments) {
  if (segments.empty()) throw Error(ErrorCode::kEmptySnapshotSet, "snapshots: no segments");
  const Trajectory& first = segments.front();
  std::size_t pairs = 0;
  for (const Trajectory& seg : segments) {
    if (seg.state_dim() != first.state_dim() || seg.input_dim() != first.input_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "snapshots: segments disagree on state/input dimension");
    }
    if (std::abs(seg.ts - first.ts) > 1e-12 * first.ts) {
      throw Error(ErrorCode::kMixedSamplingPeriod, "snapshots: segments use different sampling periods");
    }
    if (seg.samples() >= 2) pairs += seg.samples() - 1;
  }
  if (pairs == 0) throw Error(ErrorCode::kEmptySnapshotSet, "snapshots: no segment has two samples");

  SnapshotSet set;
  set.ts = first.ts;
  const auto k_total = static_cast<Eigen::Index>(pairs);
  set.x.resize(k_total, first.states.cols());
  set.y.resize(k_total, first.states.cols());
  set.u.resize(k_total, first.inputs.cols());
  Eigen::Index row = 0;
  for (const Trajectory& seg : segments) {
    if (seg.samples() < 2) continue;
    const auto count = static_cast<Eigen::Index>(seg.samples() - 1);
    set.x.middleRows(row, count) = seg.states.topRows(count);
    set.y.middleRows(row, count) = seg.states.bottomRows(count);
    set.u.middleRows(row, count) = seg.inputs.topRows(count);
    row += count;
  }
  return set;
}

Trajectory preprocess(const RawTrial& trial, const PreprocessOptions& options) {
  if (trial.samples() < 2) throw Error(ErrorCode::kTooFewSamples, "preprocess: trial needs two samples");
  RawTrial smoothed = trial;
  if (options.filter_window > 0.0) {
    // Raw timestamps need not be uniform; the window length uses the mean spacing.
    const double mean_dt = (trial.timestamps.back() - trial.timestamps.front()) /
                           static_cast<double>(trial.samples() - 1);
    smoothed.states = moving_average(trial.states, options.filter_window, mean_dt);
  }
  Trajectory traj = resample_uniform(smoothed, options.ts);

  std::vector<std::size_t> velocity = options.velocity_columns;
  if (options.derive_velocity) {
    const Eigen::Index n = traj.states.cols();
    Eigen::MatrixXd widened(traj.states.rows(), 2 * n);
    widened << traj.states, central_difference(traj.states, traj.ts);
    traj.states = std::move(widened);
    for (Eigen::Index j = 0; j < n; ++j) velocity.push_back(static_cast<std::size_t>(n + j));
  }
  for (std::size_t c : velocity) {
    if (c >= traj.state_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "preprocess: velocity column " + std::to_string(c + 1) +
                                                     " exceeds the state dimension");
    }
  }
  if (options.velocity_filter_window > 0.0 && !velocity.empty()) {
    traj.states = filter_columns(traj.states, velocity, options.velocity_filter_window, traj.ts);
  }
  return traj;
}

}  // namespace koopid
