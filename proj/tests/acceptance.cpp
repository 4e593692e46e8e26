// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <iostream>
#include <string>

#include "erlab/checks.hpp"

int main(int argc, char** argv) {
  erlab::CheckOptions opt;
  opt.output_dir = "acceptance_out";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--jobs" && i + 1 < argc) opt.jobs = std::stoi(argv[++i]);
    else if (arg == "--only" && i + 1 < argc) opt.only.push_back(std::stoi(argv[++i]));
    else if (arg == "--output-dir" && i + 1 < argc) opt.output_dir = argv[++i];
  }
  bool all = true;
  erlab::run_checks(opt, [&](const erlab::CheckResult& r) {
    all = all && r.passed;
    std::cout << erlab::format_check_line(r) << std::endl;
  });
  return all ? 0 : 1;
}
