#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace govid {

enum class Unit { pu, MW, V, A, none };

[[nodiscard]] std::string_view to_string(Unit unit) noexcept;
[[nodiscard]] Unit unit_from_string(std::string_view text);

struct Channel {
  std::string name;
  std::vector<double> values;
  Unit unit = Unit::pu;
  double base = 1.0;

  friend bool operator==(const Channel&, const Channel&) = default;
};

/**
 * Uniformly sampled multi-channel record. Channel order is insertion order
 * and is preserved by every operation in this module.
 */
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(double dt);

  [[nodiscard]] double dt() const noexcept { return dt_; }
  /// Samples per channel (0 when empty).
  [[nodiscard]] std::size_t length() const noexcept;
  [[nodiscard]] const std::vector<Channel>& channels() const noexcept { return channels_; }
  [[nodiscard]] std::vector<std::string> names() const;

  [[nodiscard]] bool has(std::string_view name) const noexcept;
  /// Throws MissingChannel.
  [[nodiscard]] const Channel& channel(std::string_view name) const;
  [[nodiscard]] Channel& channel(std::string_view name);
  [[nodiscard]] std::span<const double> values(std::string_view name) const { return channel(name).values; }

  /// Appends or replaces; throws LengthMismatch when lengths disagree.
  void set(std::string name, std::vector<double> values, Unit unit = Unit::pu, double base = 1.0);
  void remove(std::string_view name);

  /// Copy restricted to the named channels, in the given order.
  [[nodiscard]] TimeSeries select(std::span<const std::string> names) const;
  /// Copy of samples [first, first + count).
  [[nodiscard]] TimeSeries slice(std::size_t first, std::size_t count) const;

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  double dt_ = 0.0;
  std::vector<Channel> channels_;
};

/**
 * CSV layout: a header row `time_s,<channel>,...`, one row per sample,
 * `#` comment lines anywhere. Two optional comment lines carry metadata:
 *   # govid-units: name=pu;other=MW
 *   # govid-bases: name=1;other=160
 * Values are written with 17 significant digits so a write/load cycle is exact.
 */
[[nodiscard]] TimeSeries load_csv(const std::filesystem::path& path);
[[nodiscard]] TimeSeries parse_csv(std::string_view text);
void write_csv(const TimeSeries& ts, const std::filesystem::path& path);
[[nodiscard]] std::string format_csv(const TimeSeries& ts);

/// One biquad in direct form, a[0] = 1.
struct Biquad {
  double b[3];
  double a[3];
};

/// Digital Butterworth low-pass as cascaded sections (a first-order section
/// is stored as a biquad with b[2] = a[2] = 0).
[[nodiscard]] std::vector<Biquad> butterworth_design(double cutoff_hz, int order, double dt);
/// Single forward pass through the sections, starting at rest for x[0].
[[nodiscard]] std::vector<double> sos_filter(std::span<const Biquad> sections, std::span<const double> x);
/// Forward-backward (zero-phase) pass with odd-extension padding.
[[nodiscard]] std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x);

/// Zero-phase Butterworth applied to `channels` (all when empty).
[[nodiscard]] TimeSeries butterworth_lowpass(const TimeSeries& ts, double cutoff_hz, int order = 2,
                                             std::span<const std::string> channels = {});

/// Divides each listed channel by its base; channels absent from `bases`
/// raise MissingBase unless `allow_partial`.
[[nodiscard]] TimeSeries per_unitize(const TimeSeries& ts, const std::map<std::string, double, std::less<>>& bases,
                                     bool allow_partial = false);
/// Restores engineering units recorded by per_unitize.
[[nodiscard]] TimeSeries de_per_unitize(const TimeSeries& ts, const std::map<std::string, Unit, std::less<>>& units);

/**
 * Square wave starting in the low phase. Each period has P = round(period/dt)
 * samples, the first P - floor(duty*P) low and the remaining floor(duty*P)
 * high. Length is round(duration/dt) + 1.
 */
[[nodiscard]] std::vector<double> square_pulse(double dt, double duration, double period, double duty, double low,
                                               double high);
[[nodiscard]] TimeSeries square_pulse_series(std::string name, double dt, double duration, double period,
                                             double duty, double low, double high);

/// Additive white Gaussian noise with variance var(x) / 10^(snr_db/10) per
/// channel. An infinite snr_db returns the input unchanged.
[[nodiscard]] TimeSeries add_noise(const TimeSeries& ts, double snr_db, std::uint64_t seed,
                                   std::span<const std::string> channels = {});

[[nodiscard]] double variance(std::span<const double> x);

}  // namespace govid
