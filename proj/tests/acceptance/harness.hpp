#pragma once

#include <chrono>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace chorus::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::chrono::seconds budget;  // exceeding it fails the criterion
  std::function<Outcome()> run;
};

/// Collects failed expectations and measured values for one criterion.
class Verdict {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  template <typename T>
  void note(const std::string& key, const T& value) {
    std::ostringstream s;
    s << key << '=' << value;
    notes_.push_back(s.str());
  }
  Outcome outcome() const {
    std::string detail;
    for (const auto& n : notes_) detail += (detail.empty() ? "" : " ") + n;
    for (const auto& f : failures_) detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + f;
    return {failures_.empty(), detail};
  }

 private:
  std::vector<std::string> notes_;
  std::vector<std::string> failures_;
};

std::vector<Criterion> learning_criteria();
std::vector<Criterion> system_criteria();

}  // namespace chorus::acceptance
