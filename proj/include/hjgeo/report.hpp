#pragma once

/// Uniform pass/fail reporting for validation sweeps: every check carries a
/// measured residual, the tolerance it was judged against, and an optional
/// note (offending indices, sample counts, ...).

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hjgeo {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

class Report {
 public:
  /// Records a residual-style check; passes iff residual <= tolerance and is
  /// finite.
  void add(std::string name, double residual, double tolerance,
           std::string note = "") {
    const bool ok = std::isfinite(residual) && residual <= tolerance;
    checks_.push_back(
        {std::move(name), residual, tolerance, ok, std::move(note)});
  }

  /// Records a boolean check (no meaningful residual).
  void add_flag(std::string name, bool ok, std::string note = "") {
    checks_.push_back({std::move(name), ok ? 0.0 : 1.0, 0.0, ok,
                       std::move(note)});
  }

  void merge(const Report& other, const std::string& prefix = "") {
    for (const auto& check : other.checks_) {
      CheckResult copy = check;
      copy.name = prefix + copy.name;
      checks_.push_back(std::move(copy));
    }
  }

  bool all_pass() const {
    for (const auto& check : checks_) {
      if (!check.pass) return false;
    }
    return true;
  }

  double max_residual() const {
    double worst = 0.0;
    for (const auto& check : checks_) {
      if (check.residual > worst) worst = check.residual;
    }
    return worst;
  }

  const CheckResult* find(std::string_view name) const {
    for (const auto& check : checks_) {
      if (check.name == name) return &check;
    }
    return nullptr;
  }

  const std::vector<CheckResult>& checks() const { return checks_; }

  void print(std::ostream& out) const {
    std::size_t width = 4;
    for (const auto& check : checks_) {
      width = std::max(width, check.name.size());
    }
    for (const auto& check : checks_) {
      char line[256];
      std::snprintf(line, sizeof(line), "%-*s  %s  residual=%.3e  tol=%.3e",
                    static_cast<int>(width), check.name.c_str(),
                    check.pass ? "pass" : "FAIL", check.residual,
                    check.tolerance);
      out << line;
      if (!check.note.empty()) out << "  [" << check.note << "]";
      out << '\n';
    }
  }

 private:
  std::vector<CheckResult> checks_;
};

}  // namespace hjgeo
