#include <cstring>
#include <exception>
#include <iomanip>
#include <iostream>

#include "harness.hpp"

// Runs every acceptance criterion, or those whose name contains argv[1], and
// prints one PASS or FAIL line per criterion. Exits non-zero on any failure.
int main(int argc, char** argv) {
  using namespace chorus::acceptance;
  auto all = learning_criteria();
  for (auto& c : system_criteria()) all.push_back(std::move(c));
  int failed = 0;
  int ran = 0;
  for (const auto& c : all) {
    if (argc > 1 && c.name.find(argv[1]) == std::string::npos) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
    if (elapsed > c.budget) {
      out.pass = false;
      out.detail += "; over the " + std::to_string(c.budget.count()) + " s budget";
    }
    failed += out.pass ? 0 : 1;
    std::cout << (out.pass ? "PASS " : "FAIL ") << c.name << " [" << std::fixed << std::setprecision(2)
              << elapsed.count() << " s] " << out.detail << std::endl;
  }
  if (ran == 0) {
    std::cerr << "no criterion matches " << argv[1] << '\n';
    return 2;
  }
  std::cout << (ran - failed) << '/' << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
