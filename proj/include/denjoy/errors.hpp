#pragma once

#include <stdexcept>
#include <string>

namespace denjoy {

// Exit-code categories used by the CLI: 2 = usage/config, 3 = numeric
// failure, 1 = certification failure (not an exception, a verdict).

struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& m) : std::runtime_error(m) {}
};

struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& m) : std::runtime_error(m) {}
};

// derivative order beyond the supported symbolic depth
struct capability_error : numeric_error {
  explicit capability_error(const std::string& m) : numeric_error(m) {}
};

// grid refinement exhausted before the requested agreement was reached
struct refinement_error : numeric_error {
  explicit refinement_error(const std::string& m) : numeric_error(m) {}
};

// rho_compare could not separate the map from a rational after the full
// refinement budget; carries the best displacement enclosure seen
struct undecidable_error : numeric_error {
  undecidable_error(const std::string& m, double lo, double hi)
      : numeric_error(m), disp_lo(lo), disp_hi(hi) {}
  double disp_lo, disp_hi;
};

struct budget_exceeded : numeric_error {
  explicit budget_exceeded(const std::string& m) : numeric_error(m) {}
};

struct geometry_error : numeric_error {
  explicit geometry_error(const std::string& m) : numeric_error(m) {}
};

// critical-value orbit failed to re-enter the flat interval within the cap
struct non_return_error : numeric_error {
  explicit non_return_error(const std::string& m) : numeric_error(m) {}
};

struct scan_failure : numeric_error {
  explicit scan_failure(const std::string& m) : numeric_error(m) {}
};

struct parse_error : std::runtime_error {
  explicit parse_error(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace denjoy
