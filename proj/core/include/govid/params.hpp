#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace govid {

enum class ModelKind { GGOV1, ST6B };

[[nodiscard]] std::string_view to_string(ModelKind kind) noexcept;
/// Accepts "GGOV1"/"ST6B" in any case; throws InvalidArgument otherwise.
[[nodiscard]] ModelKind model_kind_from_string(std::string_view text);

struct ParamSpec {
  std::string name;
  double value = 0.0;
  double min = 0.0;
  double max = 0.0;
  bool free = false;

  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

/// Ordered, named parameter table with bounds and free/fixed flags.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(ModelKind kind, std::vector<ParamSpec> entries);

  [[nodiscard]] ModelKind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::vector<ParamSpec>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

  [[nodiscard]] bool contains(std::string_view name) const;
  [[nodiscard]] const ParamSpec& at(std::string_view name) const;
  [[nodiscard]] ParamSpec& at(std::string_view name);
  [[nodiscard]] double value(std::string_view name) const { return at(name).value; }
  void set_value(std::string_view name, double value) { at(name).value = value; }

  [[nodiscard]] std::vector<std::string> free_names() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  ModelKind kind_ = ModelKind::GGOV1;
  std::vector<ParamSpec> entries_;
};

/// Steady operating point the plant models start from.
struct OperatingPoint {
  double p_e0 = 0.75;   // electrical power, pu
  double speed = 1.0;   // pu
  double v_t = 1.0;     // terminal voltage, pu
  double efd0 = 2.0;    // field voltage, pu
  double terminal_time_constant = 1.0;  // s, lag from E_FD to V_C when V_C is not supplied
  std::optional<double> exhaust_temp0;  // defaults to p_e0 (the proxy used when no channel is given)
};

/// Typed GGOV1 view. Flags are stored in the ParamVector as 0/1 entries.
struct Ggov1Params {
  double r, T_pelec, K_pgov, K_igov, K_dgov, T_dgov, T_act, K_turb, W_fnl, T_b, T_c, T_eng;
  double T_fload, K_pload, K_iload, L_dref, Dm, K_imw, P_mwset, K_a, T_a, a_set, V_max, V_min;
  bool accel_enabled;

  /// Throws InvalidParams naming the first violated invariant.
  [[nodiscard]] static Ggov1Params from(const ParamVector& params);
  void validate() const;
};

struct St6bParams {
  double K_PA, K_IA, K_M, K_FF, K_LR, K_CI, I_LR, K_G, T_G, V_AMAX, V_AMIN, V_RMAX, V_RMIN, K_VB;
  bool limiter_enabled;

  [[nodiscard]] static St6bParams from(const ParamVector& params);
  void validate() const;
};

/// Identified values used as ground truth, with default bounds and free flags.
[[nodiscard]] ParamVector default_ggov1_params();
[[nodiscard]] ParamVector default_st6b_params();
[[nodiscard]] ParamVector default_params(ModelKind kind);

}  // namespace govid
