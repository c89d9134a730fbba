// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cdconv {

// Seeded property suites behind `cdconv verify`.
//   dual      streaming vs batch event convolution       tol 1e-9
//   gradcheck conv/event-conv backward vs central diffs  tol 1e-5
//   sampling  separation, coverage, prefix, IFP equality tol 0 violations
//   oracle    conv_forward (both orders) vs all-pairs sum tol 1e-12
struct VerifyOptions {
  std::uint64_t seed = 1;
  std::size_t trials = 20;
  // Test hook: added to each trial's measured error so callers can confirm
  // that a failing comparison is reported as a failure.
  double perturb = 0.0;
};

struct TrialReport {
  std::size_t trial = 0;
  double error = 0.0;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  double tolerance = 0.0;
  std::vector<TrialReport> trials;
  double max_error = 0.0;
  bool passed = true;
};

const std::vector<std::string>& verify_suite_names();

// Throws Error(kArgument) for an unknown suite name.
SuiteReport run_verify_suite(std::string_view suite, const VerifyOptions& options);

}  // namespace cdconv
