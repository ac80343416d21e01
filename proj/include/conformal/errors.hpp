#pragma once

#include <stdexcept>
#include <string>

namespace conformal {

// Base class for every error the library raises on purpose.  The `code`
// string is stable and is what the CLI puts into reports.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct SyntaxError : Error {
  SyntaxError(std::size_t offset, const std::string& what)
      : Error("SyntaxError",
              "at byte " + std::to_string(offset) + ": " + what),
        offset(offset) {}
  std::size_t offset;
};

struct UnknownIdentifier : Error {
  explicit UnknownIdentifier(const std::string& name)
      : Error("UnknownIdentifier", name), name(name) {}
  std::string name;
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error("DomainError", what) {}
};

struct OrderTooLarge : Error {
  explicit OrderTooLarge(const std::string& what)
      : Error("OrderTooLarge", what) {}
};

struct OrderTooLow : Error {
  explicit OrderTooLow(const std::string& what) : Error("OrderTooLow", what) {}
};

struct DegenerateTangent : Error {
  explicit DegenerateTangent(const std::string& what)
      : Error("DegenerateTangent", what) {}
};

struct OutsideCollar : Error {
  explicit OutsideCollar(const std::string& what)
      : Error("OutsideCollar", what) {}
};

struct NotConstantOnBoundary : Error {
  explicit NotConstantOnBoundary(const std::string& what)
      : Error("NotConstantOnBoundary", what) {}
};

struct BoundaryJetNotFlat : Error {
  BoundaryJetNotFlat(int normal_order, const std::string& what)
      : Error("BoundaryJetNotFlat",
              "normal order " + std::to_string(normal_order) + ": " + what),
        normal_order(normal_order) {}
  int normal_order;
};

struct NonpositiveConformalFactor : Error {
  explicit NonpositiveConformalFactor(const std::string& what)
      : Error("NonpositiveConformalFactor", what) {}
};

struct FieldVanishesOnCurve : Error {
  FieldVanishesOnCurve(double x, double y, const std::string& what)
      : Error("FieldVanishesOnCurve", what), x(x), y(y) {}
  double x, y;  // witness location
};

struct NonIsolatedZeros : Error {
  explicit NonIsolatedZeros(const std::string& what)
      : Error("NonIsolatedZeros", what) {}
};

struct BudgetExceeded : Error {
  explicit BudgetExceeded(const std::string& what)
      : Error("BudgetExceeded", what) {}
};

struct UnguaranteedInput : Error {
  explicit UnguaranteedInput(const std::string& what)
      : Error("UnguaranteedInput", what) {}
};

struct StepFailure : Error {
  explicit StepFailure(const std::string& what) : Error("StepFailure", what) {}
};

struct NotSymplecticAtProbe : Error {
  explicit NotSymplecticAtProbe(const std::string& what)
      : Error("NotSymplecticAtProbe", what) {}
};

struct NewtonDivergence : Error {
  NewtonDivergence(double x, double y, const std::string& what)
      : Error("NewtonDivergence", what), x(x), y(y) {}
  double x, y;
};

struct ClosednessViolation : Error {
  explicit ClosednessViolation(const std::string& what)
      : Error("ClosednessViolation", what) {}
};

struct BoundaryIdentityViolation : Error {
  explicit BoundaryIdentityViolation(const std::string& what)
      : Error("BoundaryIdentityViolation", what) {}
};

struct DegenerateDenominator : Error {
  explicit DegenerateDenominator(const std::string& what)
      : Error("DegenerateDenominator", what) {}
};

struct SeamZero : Error {
  explicit SeamZero(const std::string& what) : Error("SeamZero", what) {}
};

struct IOError : Error {
  explicit IOError(const std::string& what) : Error("IOError", what) {}
};

}  // namespace conformal
