#include "govid/params.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "govid/error.hpp"

namespace govid {

namespace {

void require(bool ok, std::string_view what) {
  if (!ok) throw Error(Errc::InvalidParams, std::string(what));
}

void require_finite(const ParamVector& params) {
  for (const auto& p : params.entries()) {
    if (!std::isfinite(p.value)) throw Error(Errc::InvalidParams, fmt::format("{} is not finite", p.name));
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  return kind == ModelKind::GGOV1 ? "GGOV1" : "ST6B";
}

ModelKind model_kind_from_string(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "GGOV1") return ModelKind::GGOV1;
  if (upper == "ST6B") return ModelKind::ST6B;
  throw Error(Errc::InvalidArgument, fmt::format("unknown model kind '{}'", text));
}

ParamVector::ParamVector(ModelKind kind, std::vector<ParamSpec> entries)
    : kind_(kind), entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (entries_[i].name == entries_[j].name) {
        throw Error(Errc::InvalidParams, fmt::format("duplicate parameter {}", entries_[i].name));
      }
    }
  }
}

bool ParamVector::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const ParamSpec& p) { return p.name == name; });
}

const ParamSpec& ParamVector::at(std::string_view name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const ParamSpec& p) { return p.name == name; });
  if (it == entries_.end()) {
    throw Error(Errc::InvalidParams, fmt::format("{} has no parameter {}", to_string(kind_), name));
  }
  return *it;
}

ParamSpec& ParamVector::at(std::string_view name) {
  return const_cast<ParamSpec&>(std::as_const(*this).at(name));
}

std::vector<std::string> ParamVector::free_names() const {
  std::vector<std::string> out;
  for (const auto& p : entries_) {
    if (p.free) out.push_back(p.name);
  }
  return out;
}

Ggov1Params Ggov1Params::from(const ParamVector& params) {
  if (params.kind() != ModelKind::GGOV1) throw Error(Errc::WrongModelKind, "expected GGOV1 parameters");
  require_finite(params);
  const auto v = [&](std::string_view n) { return params.value(n); };
  Ggov1Params p{v("r"),       v("T_pelec"), v("K_pgov"),  v("K_igov"), v("K_dgov"), v("T_dgov"), v("T_act"),
                v("K_turb"),  v("W_fnl"),   v("T_b"),     v("T_c"),    v("T_eng"),  v("T_fload"), v("K_pload"),
                v("K_iload"), v("L_dref"),  v("Dm"),      v("K_imw"),  v("P_mwset"), v("K_a"),    v("T_a"),
                v("a_set"),   v("V_max"),   v("V_min"),   v("accel_enabled") != 0.0};
  p.validate();
  return p;
}

void Ggov1Params::validate() const {
  require(r > 0.0, fmt::format("r = {} must be > 0", r));
  require(W_fnl >= 0.0 && W_fnl < 1.0, fmt::format("W_fnl = {} must lie in [0, 1)", W_fnl));
  require(T_act > 0.0, fmt::format("T_act = {} must be > 0", T_act));
  require(T_b > 0.0, fmt::format("T_b = {} must be > 0", T_b));
  require(T_pelec > 0.0, fmt::format("T_pelec = {} must be > 0", T_pelec));
  require(T_fload > 0.0, fmt::format("T_fload = {} must be > 0", T_fload));
  require(T_c >= 0.0, fmt::format("T_c = {} must be >= 0", T_c));
  require(T_dgov >= 0.0, fmt::format("T_dgov = {} must be >= 0", T_dgov));
  require(T_eng >= 0.0, fmt::format("T_eng = {} must be >= 0", T_eng));
  require(!(K_dgov != 0.0 && T_dgov == 0.0), "K_dgov != 0 requires T_dgov > 0");
  require(V_min < V_max, fmt::format("V_min = {} must be < V_max = {}", V_min, V_max));
  require(!accel_enabled || T_a > 0.0, fmt::format("T_a = {} must be > 0 with the acceleration loop on", T_a));
}

St6bParams St6bParams::from(const ParamVector& params) {
  if (params.kind() != ModelKind::ST6B) throw Error(Errc::WrongModelKind, "expected ST6B parameters");
  require_finite(params);
  const auto v = [&](std::string_view n) { return params.value(n); };
  St6bParams p{v("K_PA"),   v("K_IA"),   v("K_M"),    v("K_FF"),   v("K_LR"), v("K_CI"), v("I_LR"),
               v("K_G"),    v("T_G"),    v("V_AMAX"), v("V_AMIN"), v("V_RMAX"), v("V_RMIN"), v("K_VB"),
               v("limiter_enabled") != 0.0};
  p.validate();
  return p;
}

void St6bParams::validate() const {
  require(T_G >= 0.0, fmt::format("T_G = {} must be >= 0", T_G));
  require(V_AMIN < V_AMAX, fmt::format("V_AMIN = {} must be < V_AMAX = {}", V_AMIN, V_AMAX));
  require(V_RMIN < V_RMAX, fmt::format("V_RMIN = {} must be < V_RMAX = {}", V_RMIN, V_RMAX));
  require(K_VB > 0.0, fmt::format("K_VB = {} must be > 0", K_VB));
}

ParamVector default_ggov1_params() {
  return ParamVector(ModelKind::GGOV1, {
      {"r", 0.05, 0.01, 0.2, true},
      {"T_pelec", 1.10, 0.01, 5.0, true},
      {"K_pgov", 3.10, 0.0, 20.0, true},
      {"K_igov", 0.90, 0.0, 5.0, true},
      {"K_dgov", 0.0, 0.0, 5.0, true},
      {"T_dgov", 0.0, 0.0, 2.0, true},
      {"T_act", 1.83, 0.05, 5.0, true},
      {"K_turb", 0.31, 0.05, 2.0, true},
      {"W_fnl", 0.43, 0.0, 0.99, true},
      {"T_b", 0.79, 0.05, 5.0, true},
      {"T_c", 0.0, 0.0, 5.0, true},
      {"T_eng", 0.10, 0.0, 0.5, true},
      {"T_fload", 3.0, 0.1, 10.0, true},
      {"K_pload", 25.01, 0.0, 50.0, true},
      {"K_iload", 0.10, 0.0, 2.0, true},
      {"L_dref", 0.90, 0.5, 1.5, true},
      {"Dm", 0.0, -1.0, 1.0, false},
      {"K_imw", 0.0, 0.0, 1.0, false},
      {"P_mwset", 0.75, 0.0, 2.0, false},
      {"K_a", 10.0, 0.0, 100.0, false},
      {"T_a", 0.1, 0.01, 1.0, false},
      {"a_set", 0.01, -1.0, 1.0, false},
      {"V_max", 5.0, 0.0, 10.0, false},
      {"V_min", 0.0, -10.0, 1.0, false},
      {"accel_enabled", 0.0, 0.0, 1.0, false},
  });
}

ParamVector default_st6b_params() {
  return ParamVector(ModelKind::ST6B, {
      {"K_PA", 3.95, 0.0, 20.0, true},
      {"K_IA", 2.84, 0.0, 20.0, true},
      {"K_M", 1.10, 0.0, 5.0, true},
      {"K_FF", 1.30, 0.0, 5.0, true},
      {"K_LR", 17.33, 0.0, 100.0, false},
      {"K_CI", 1.0577, 0.0, 5.0, false},
      {"I_LR", 4.164, 0.0, 10.0, false},
      {"K_G", 1.0, 0.0, 5.0, false},
      {"T_G", 0.02, 0.0, 1.0, false},
      {"V_AMAX", 4.81, -10.0, 10.0, false},
      {"V_AMIN", -3.85, -10.0, 10.0, false},
      {"V_RMAX", 4.81, -10.0, 10.0, false},
      {"V_RMIN", -3.85, -10.0, 10.0, false},
      {"K_VB", 1.0, 0.0, 5.0, false},
      {"limiter_enabled", 0.0, 0.0, 1.0, false},
  });
}

ParamVector default_params(ModelKind kind) {
  return kind == ModelKind::GGOV1 ? default_ggov1_params() : default_st6b_params();
}

}  // namespace govid
