#pragma once

#include <cstdint>

#include "dn/ad.hpp"
#include "dn/diffcalc.hpp"
#include "dn/eval.hpp"

namespace dn {

struct CheckConfig {
  int n = 50;                // accepted samples requested per program
  double h = 1e-5;           // central-difference step
  double tol = 1e-4;         // relative tolerance for pass/fail
  double cross_tol = 1e-9;   // forward vs reverse agreement
  long long fuel = 1'000'000;
  uint64_t seed = 0;
  int depth = 6;             // shape enumeration depth for mu-types
  double box_lo = -2.0;      // sampling box
  double box_hi = 2.0;
  int retry_cap = 100;       // resampling attempts per accepted sample
  SignMode sign_mode = SignMode::Naive;
  const Registry* registry = &Registry::builtins();
};

// A program prepared for checking: parsed, desugared, typed as a function
// between first-order data types, and AD-transformed.
struct Program {
  std::string name;
  TermPtr source;        // as parsed
  TermPtr core;          // desugared (if/fst/snd removed)
  TermPtr dual;          // ad_transform(core)
  TypePtr in_type, out_type;
};

// Throws std::runtime_error when the term does not type as data -> data.
Program prepare_program(const TermPtr& t, std::string name,
                        SignMode mode = SignMode::Naive,
                        const Registry& registry = Registry::builtins());

enum class SampleStatus { Pass, Fail, Rejected };

struct SampleRecord {
  Point x;
  ShapePath in_path;
  SampleStatus status = SampleStatus::Rejected;
  double max_rel_err = 0.0;
  std::string note;
};

struct CheckReport {
  std::string program;
  std::string mode;  // forward | reverse | cross
  CheckConfig cfg;
  std::vector<SampleRecord> samples;
  int pass_count = 0;
  int fail_count = 0;
  int rejected_count = 0;
  std::string error;  // nonempty when the check could not run at all

  bool ok() const { return error.empty() && fail_count == 0; }
};

// Forward mode: evaluate D[t] on basis-1 duals under k=1 and compare the
// output tangents against central-difference directional derivatives.
CheckReport check_forward(const Program& p, const CheckConfig& cfg);

// Reverse mode (inputs real^s only): evaluate D[t] composed with the
// basis-seeding wrapper under k=infinity; each output slot's tangent,
// projected to s coefficients, is compared against the corresponding row of
// the central-difference Jacobian.
CheckReport check_reverse(const Program& p, const CheckConfig& cfg);

// Cross-consistency: the Jacobian assembled from k=1 forward passes over
// basis directions agrees with the reverse-assembled one within cross_tol.
CheckReport check_cross(const Program& p, const CheckConfig& cfg);

// Deterministic sampling in the configured box; points rejected by `accept`
// are redrawn up to the retry cap (short result when the domain is thin).
std::vector<Point> sample_points(const FlatShape& shape, int n,
                                 uint64_t seed,
                                 const std::function<bool(const Point&)>&
                                     accept,
                                 const CheckConfig& cfg);

// Relative discrepancy |a-b| / max(1, |a|, |b|).
double rel_err(double a, double b);

// JSON rendering of a report (stable field order; identical seeds give
// byte-identical output).
std::string report_json(const CheckReport& r);

}  // namespace dn
