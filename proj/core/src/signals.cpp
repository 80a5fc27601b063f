#include "govid/signals.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "govid/error.hpp"

namespace govid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

// "a=1;b=2" after the metadata tag
std::vector<std::pair<std::string, std::string>> parse_metadata(std::string_view body, std::size_t line) {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto item : split(body, ';')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::MalformedCsv, fmt::format("line {}: metadata entry '{}' lacks '='", line, item));
    }
    out.emplace_back(std::string(trim(item.substr(0, eq))), std::string(trim(item.substr(eq + 1))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Unit unit) noexcept {
  switch (unit) {
    case Unit::pu: return "pu";
    case Unit::MW: return "MW";
    case Unit::V: return "V";
    case Unit::A: return "A";
    case Unit::none: return "none";
  }
  return "none";
}

Unit unit_from_string(std::string_view text) {
  for (Unit u : {Unit::pu, Unit::MW, Unit::V, Unit::A, Unit::none}) {
    if (to_string(u) == text) return u;
  }
  throw Error(Errc::InvalidArgument, fmt::format("unknown unit '{}'", text));
}

TimeSeries::TimeSeries(double dt) : dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(Errc::NonPositiveDt, fmt::format("dt must be positive, got {}", dt));
}

std::size_t TimeSeries::length() const noexcept { return channels_.empty() ? 0 : channels_.front().values.size(); }

std::vector<std::string> TimeSeries::names() const {
  std::vector<std::string> out;
  out.reserve(channels_.size());
  for (const auto& c : channels_) out.push_back(c.name);
  return out;
}

bool TimeSeries::has(std::string_view name) const noexcept {
  return std::any_of(channels_.begin(), channels_.end(), [&](const Channel& c) { return c.name == name; });
}

const Channel& TimeSeries::channel(std::string_view name) const {
  auto it = std::find_if(channels_.begin(), channels_.end(), [&](const Channel& c) { return c.name == name; });
  if (it == channels_.end()) throw Error(Errc::MissingChannel, fmt::format("missing channel '{}'", name));
  return *it;
}

Channel& TimeSeries::channel(std::string_view name) {
  return const_cast<Channel&>(std::as_const(*this).channel(name));
}

void TimeSeries::set(std::string name, std::vector<double> values, Unit unit, double base) {
  if (!channels_.empty() && values.size() != length()) {
    bool only_self = channels_.size() == 1 && channels_.front().name == name;
    if (!only_self) {
      throw Error(Errc::LengthMismatch,
                  fmt::format("channel '{}' has {} samples, series has {}", name, values.size(), length()));
    }
  }
  for (auto& c : channels_) {
    if (c.name == name) {
      c.values = std::move(values);
      c.unit = unit;
      c.base = base;
      return;
    }
  }
  channels_.push_back(Channel{std::move(name), std::move(values), unit, base});
}

void TimeSeries::remove(std::string_view name) {
  std::erase_if(channels_, [&](const Channel& c) { return c.name == name; });
}

TimeSeries TimeSeries::select(std::span<const std::string> names) const {
  TimeSeries out(dt_);
  for (const auto& n : names) {
    const auto& c = channel(n);
    out.channels_.push_back(c);
  }
  return out;
}

TimeSeries TimeSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > length()) {
    throw Error(Errc::InvalidArgument, fmt::format("slice [{}, {}) exceeds length {}", first, first + count, length()));
  }
  TimeSeries out(dt_);
  for (const auto& c : channels_) {
    Channel s = c;
    s.values.assign(c.values.begin() + static_cast<std::ptrdiff_t>(first),
                    c.values.begin() + static_cast<std::ptrdiff_t>(first + count));
    out.channels_.push_back(std::move(s));
  }
  return out;
}

TimeSeries parse_csv(std::string_view text) {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  std::vector<std::pair<std::string, std::string>> units;
  std::vector<std::pair<std::string, std::string>> bases;
  bool any_content = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    any_content = true;
    if (line.front() == '#') {
      auto body = trim(line.substr(1));
      if (body.starts_with("govid-units:")) {
        units = parse_metadata(body.substr(12), line_no);
      } else if (body.starts_with("govid-bases:")) {
        bases = parse_metadata(body.substr(12), line_no);
      }
      continue;
    }
    auto fields = split(line, ',');
    if (header.empty()) {
      if (fields.size() < 2) throw Error(Errc::MalformedCsv, fmt::format("line {}: header needs time and a channel", line_no));
      for (auto f : fields) {
        if (f.empty()) throw Error(Errc::MalformedCsv, fmt::format("line {}: empty column name", line_no));
        header.emplace_back(f);
      }
      columns.resize(header.size());
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(Errc::MalformedCsv,
                  fmt::format("line {}: expected {} fields, found {}", line_no, header.size(), fields.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double v = 0.0;
      if (!parse_double(fields[i], v)) {
        throw Error(Errc::MalformedCsv, fmt::format("line {}: cannot parse '{}'", line_no, fields[i]));
      }
      columns[i].push_back(v);
    }
  }
  if (!any_content || header.empty() || columns.front().empty()) throw Error(Errc::EmptyFile, "no data rows");
  const auto& time = columns.front();
  if (time.size() < 2) throw Error(Errc::MalformedCsv, "at least two samples are required");
  const double dt = time[1] - time[0];
  if (!(dt > 0.0)) throw Error(Errc::NonUniformSampling, "non-increasing time at sample 1");
  for (std::size_t k = 2; k < time.size(); ++k) {
    const double expected = time[0] + static_cast<double>(k) * dt;
    const double tol = 1e-9 * dt + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(time[k]);
    if (std::abs(time[k] - expected) > tol) {
      throw Error(Errc::NonUniformSampling, fmt::format("non-uniform sampling at sample {}", k));
    }
  }
  TimeSeries ts(dt);
  for (std::size_t i = 1; i < header.size(); ++i) ts.set(header[i], std::move(columns[i]));
  for (const auto& [name, unit] : units) {
    if (ts.has(name)) ts.channel(name).unit = unit_from_string(unit);
  }
  for (const auto& [name, base] : bases) {
    double b = 0.0;
    if (!parse_double(base, b)) throw Error(Errc::MalformedCsv, fmt::format("bad base '{}' for {}", base, name));
    if (ts.has(name)) ts.channel(name).base = b;
  }
  return ts;
}

TimeSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, fmt::format("cannot open {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string format_csv(const TimeSeries& ts) {
  std::string out;
  const auto& chans = ts.channels();
  bool non_default = std::any_of(chans.begin(), chans.end(),
                                 [](const Channel& c) { return c.unit != Unit::pu || c.base != 1.0; });
  if (non_default) {
    out += "# govid-units: ";
    for (std::size_t i = 0; i < chans.size(); ++i) {
      out += fmt::format("{}{}={}", i ? ";" : "", chans[i].name, to_string(chans[i].unit));
    }
    out += "\n# govid-bases: ";
    for (std::size_t i = 0; i < chans.size(); ++i) {
      out += fmt::format("{}{}={:.17g}", i ? ";" : "", chans[i].name, chans[i].base);
    }
    out += "\n";
  }
  out += "time_s";
  for (const auto& c : chans) out += "," + c.name;
  out += "\n";
  const auto n = ts.length();
  for (std::size_t k = 0; k < n; ++k) {
    fmt::format_to(std::back_inserter(out), "{:.17g}", static_cast<double>(k) * ts.dt());
    for (const auto& c : chans) fmt::format_to(std::back_inserter(out), ",{:.17g}", c.values[k]);
    out += "\n";
  }
  return out;
}

void write_csv(const TimeSeries& ts, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, fmt::format("cannot write {}", path.string()));
  out << format_csv(ts);
  if (!out) throw Error(Errc::Io, fmt::format("write failed for {}", path.string()));
}

std::vector<Biquad> butterworth_design(double cutoff_hz, int order, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::NonPositiveDt, "dt must be positive");
  if (order < 1) throw Error(Errc::InvalidArgument, fmt::format("filter order {} must be >= 1", order));
  const double nyquist = 0.5 / dt;
  if (!(cutoff_hz > 0.0) || cutoff_hz >= nyquist) {
    throw Error(Errc::CutoffAboveNyquist, fmt::format("cutoff {} Hz not in (0, {}) Hz", cutoff_hz, nyquist));
  }
  const double k = std::tan(std::numbers::pi * cutoff_hz * dt);
  const double k2 = k * k;
  std::vector<Biquad> sections;
  for (int i = 1; i <= order / 2; ++i) {
    const double c = 2.0 * std::sin((2.0 * i - 1.0) * std::numbers::pi / (2.0 * order));
    const double a0 = 1.0 + c * k + k2;
    sections.push_back({{k2 / a0, 2.0 * k2 / a0, k2 / a0}, {1.0, 2.0 * (k2 - 1.0) / a0, (1.0 - c * k + k2) / a0}});
  }
  if (order % 2 == 1) {
    const double g = k / (1.0 + k);
    sections.push_back({{g, g, 0.0}, {1.0, (k - 1.0) / (k + 1.0), 0.0}});
  }
  return sections;
}

std::vector<double> sos_filter(std::span<const Biquad> sections, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  if (y.empty()) return y;
  for (const auto& s : sections) {
    // transposed direct form II, states at rest for a constant input y[0]
    const double u0 = y.front();
    const double dc = (s.b[0] + s.b[1] + s.b[2]) / (s.a[0] + s.a[1] + s.a[2]);
    double z2 = s.b[2] * u0 - s.a[2] * dc * u0;
    double z1 = s.b[1] * u0 - s.a[1] * dc * u0 + z2;
    for (double& v : y) {
      const double u = v;
      const double out = s.b[0] * u + z1;
      z1 = s.b[1] * u - s.a[1] * out + z2;
      z2 = s.b[2] * u - s.a[2] * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return {x.begin(), x.end()};
  const std::size_t pad = std::min<std::size_t>(3 * (2 * sections.size() + 1), n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto fwd = sos_filter(sections, ext);
  std::reverse(fwd.begin(), fwd.end());
  auto back = sos_filter(sections, fwd);
  std::reverse(back.begin(), back.end());
  return {back.begin() + static_cast<std::ptrdiff_t>(pad), back.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

TimeSeries butterworth_lowpass(const TimeSeries& ts, double cutoff_hz, int order, std::span<const std::string> channels) {
  const auto sections = butterworth_design(cutoff_hz, order, ts.dt());
  TimeSeries out = ts;
  for (const auto& c : ts.channels()) {
    if (!channels.empty() && std::find(channels.begin(), channels.end(), c.name) == channels.end()) continue;
    out.channel(c.name).values = filtfilt(sections, c.values);
  }
  for (const auto& name : channels) (void)ts.channel(name);
  return out;
}

TimeSeries per_unitize(const TimeSeries& ts, const std::map<std::string, double, std::less<>>& bases, bool allow_partial) {
  for (const auto& [name, base] : bases) {
    if (!(base > 0.0) || !std::isfinite(base)) {
      throw Error(Errc::NonPositiveBase, fmt::format("base for '{}' must be positive, got {}", name, base));
    }
  }
  TimeSeries out = ts;
  for (const auto& c : ts.channels()) {
    auto it = bases.find(c.name);
    if (it == bases.end()) {
      if (allow_partial) continue;
      throw Error(Errc::MissingBase, fmt::format("no base given for channel '{}'", c.name));
    }
    auto& dst = out.channel(c.name);
    for (double& v : dst.values) v /= it->second;
    dst.base = it->second * c.base;
    dst.unit = Unit::pu;
  }
  return out;
}

TimeSeries de_per_unitize(const TimeSeries& ts, const std::map<std::string, Unit, std::less<>>& units) {
  TimeSeries out = ts;
  for (auto& c : ts.channels()) {
    auto& dst = out.channel(c.name);
    if (c.base == 1.0) continue;
    for (double& v : dst.values) v *= c.base;
    dst.base = 1.0;
    auto it = units.find(c.name);
    dst.unit = it == units.end() ? Unit::none : it->second;
  }
  return out;
}

std::vector<double> square_pulse(double dt, double duration, double period, double duty, double low, double high) {
  if (!(dt > 0.0)) throw Error(Errc::NonPositiveDt, "dt must be positive");
  if (!(duty > 0.0 && duty < 1.0)) throw Error(Errc::DegeneratePeriod, fmt::format("duty {} not in (0, 1)", duty));
  if (!(period >= 2.0 * dt)) throw Error(Errc::DegeneratePeriod, fmt::format("period {} s shorter than 2 dt", period));
  if (!(duration >= 0.0)) throw Error(Errc::InvalidArgument, "duration must be >= 0");
  const auto p = static_cast<std::size_t>(std::llround(period / dt));
  const auto n_high = static_cast<std::size_t>(std::floor(duty * static_cast<double>(p)));
  const auto n_low = p - n_high;
  const auto n = static_cast<std::size_t>(std::llround(duration / dt)) + 1;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = (k % p) < n_low ? low : high;
  return out;
}

TimeSeries square_pulse_series(std::string name, double dt, double duration, double period, double duty, double low,
                               double high) {
  TimeSeries ts(dt);
  ts.set(std::move(name), square_pulse(dt, duration, period, duty, low, high));
  return ts;
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(x.size());
}

TimeSeries add_noise(const TimeSeries& ts, double snr_db, std::uint64_t seed, std::span<const std::string> channels) {
  for (const auto& name : channels) (void)ts.channel(name);
  if (std::isinf(snr_db) && snr_db > 0.0) return ts;
  if (std::isnan(snr_db)) throw Error(Errc::InvalidArgument, "snr_db is NaN");
  TimeSeries out = ts;
  std::mt19937_64 rng(seed);
  for (const auto& c : ts.channels()) {
    if (!channels.empty() && std::find(channels.begin(), channels.end(), c.name) == channels.end()) continue;
    const double var = variance(c.values);
    if (!(var > 0.0)) throw Error(Errc::ConstantChannel, fmt::format("channel '{}' is constant", c.name));
    std::normal_distribution<double> noise(0.0, std::sqrt(var / std::pow(10.0, snr_db / 10.0)));
    for (double& v : out.channel(c.name).values) v += noise(rng);
  }
  return out;
}

}  // namespace govid
