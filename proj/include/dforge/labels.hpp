#pragma once

// The three conditioning label families and the control vector they form.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "dforge/error.hpp"

namespace dforge {

enum class Region {
  MsaGeneral,
  Egyptian,
  LevantineNorth,
  LevantineSouth,
  Gulf,
  Iraqi,
  Libyan,
  Moroccan,
  Algerian,
};

enum class Context { General, Restaurant, Education, Hospital, Tourist };

enum class Register { Formal, Informal };

inline constexpr std::array<Region, 9> kAllRegions = {
    Region::MsaGeneral, Region::Egyptian, Region::LevantineNorth,
    Region::LevantineSouth, Region::Gulf, Region::Iraqi,
    Region::Libyan, Region::Moroccan, Region::Algerian,
};

inline constexpr std::array<Region, 8> kDialectRegions = {
    Region::Egyptian, Region::LevantineNorth, Region::LevantineSouth, Region::Gulf,
    Region::Iraqi,    Region::Libyan,         Region::Moroccan,       Region::Algerian,
};

inline constexpr std::array<Context, 5> kAllContexts = {
    Context::General, Context::Restaurant, Context::Education, Context::Hospital,
    Context::Tourist,
};

inline constexpr std::array<Register, 2> kAllRegisters = {Register::Formal, Register::Informal};

/// Input-only spellings and the canonical label each resolves to.
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 2> kLabelAliases = {{
    {"Levantine", "Levantine-North"},
    {"Medical", "Hospital"},
}};

inline constexpr std::string_view to_string(Region r) {
  switch (r) {
    case Region::MsaGeneral: return "MSA-General";
    case Region::Egyptian: return "Egyptian";
    case Region::LevantineNorth: return "Levantine-North";
    case Region::LevantineSouth: return "Levantine-South";
    case Region::Gulf: return "Gulf";
    case Region::Iraqi: return "Iraqi";
    case Region::Libyan: return "Libyan";
    case Region::Moroccan: return "Moroccan";
    case Region::Algerian: return "Algerian";
  }
  return "?";
}

inline constexpr std::string_view to_string(Context c) {
  switch (c) {
    case Context::General: return "General";
    case Context::Restaurant: return "Restaurant";
    case Context::Education: return "Education";
    case Context::Hospital: return "Hospital";
    case Context::Tourist: return "Tourist";
  }
  return "?";
}

inline constexpr std::string_view to_string(Register r) {
  return r == Register::Formal ? "Formal" : "Informal";
}

inline constexpr std::size_t index_of(Region r) { return static_cast<std::size_t>(r); }
inline constexpr std::size_t index_of(Context c) { return static_cast<std::size_t>(c); }
inline constexpr std::size_t index_of(Register r) { return static_cast<std::size_t>(r); }

namespace detail {

inline std::string_view resolve_alias(std::string_view label) {
  for (const auto& [alias, canonical] : kLabelAliases) {
    if (label == alias) return canonical;
  }
  return label;
}

template <typename Enum, std::size_t N>
std::optional<Enum> find_label(const std::array<Enum, N>& all, std::string_view label) {
  label = resolve_alias(label);
  for (Enum e : all) {
    if (to_string(e) == label) return e;
  }
  return std::nullopt;
}

}  // namespace detail

inline std::optional<Region> try_parse_region(std::string_view s) {
  return detail::find_label(kAllRegions, s);
}
inline std::optional<Context> try_parse_context(std::string_view s) {
  return detail::find_label(kAllContexts, s);
}
inline std::optional<Register> try_parse_register(std::string_view s) {
  return detail::find_label(kAllRegisters, s);
}

inline Region parse_region(std::string_view s) {
  if (auto r = try_parse_region(s)) return *r;
  throw UnknownLabel(std::string(s), "Region");
}
inline Context parse_context(std::string_view s) {
  if (auto c = try_parse_context(s)) return *c;
  throw UnknownLabel(std::string(s), "Context");
}
inline Register parse_register(std::string_view s) {
  if (auto r = try_parse_register(s)) return *r;
  throw UnknownLabel(std::string(s), "Register");
}

/// The (dialect, domain, register) triple that conditions generation.
struct ControlVector {
  Region region = Region::MsaGeneral;
  Context context = Context::General;
  Register register_ = Register::Formal;

  friend bool operator==(const ControlVector&, const ControlVector&) = default;
};

}  // namespace dforge
