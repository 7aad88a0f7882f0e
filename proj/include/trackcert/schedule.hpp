#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trackcert {

// Function class of the finite-sum components.
enum class FnClass { Smooth, SmoothConvex, StronglyConvexSmooth };

enum class AnalysisTag {
  ExactOgd,
  InexactOgdAbs,
  InexactOgdRel,
  ViOgd,
  StochOgdIid,
  FiniteSum,
  IpOgd,
  BiasedSgd,
};

// Which certified analysis is run. fn_class is set iff tag == FiniteSum.
class AnalysisKind {
 public:
  constexpr AnalysisKind(AnalysisTag tag) : tag_(tag) {}  // NOLINT: implicit on purpose
  static AnalysisKind finite_sum(FnClass cls);

  AnalysisTag tag() const { return tag_; }
  std::optional<FnClass> fn_class() const { return fn_class_; }
  FnClass fn_class_or_throw() const;

  std::string name() const;
  bool stochastic() const { return tag_ == AnalysisTag::StochOgdIid || tag_ == AnalysisTag::FiniteSum; }

  friend bool operator==(const AnalysisKind&, const AnalysisKind&) = default;

 private:
  AnalysisTag tag_;
  std::optional<FnClass> fn_class_;
};

std::string to_string(AnalysisTag tag);
std::string to_string(FnClass cls);
AnalysisTag parse_analysis_tag(std::string_view s);
FnClass parse_fn_class(std::string_view s);

// All eight analyses, finite-sum with the given class.
std::vector<AnalysisKind> all_analyses(FnClass finite_sum_class = FnClass::StronglyConvexSmooth);

// A per-step sequence; a single stored value broadcasts over every step.
class Series {
 public:
  Series() = default;
  Series(double constant) : values_{constant} {}  // NOLINT
  Series(std::vector<double> values) : values_(std::move(values)) {}  // NOLINT

  double at(std::size_t t) const { return values_.size() == 1 ? values_[0] : values_.at(t); }
  bool is_constant() const;
  std::size_t stored() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_{0.0};
};

// Problem and algorithm parameters at one step.
struct StepParams {
  double m = 1.0;
  double L = 1.0;
  double alpha = 0.0;
  double sigma = 0.0;
  double c = 0.0;
  double delta = 0.0;
  double G = 0.0;
  double Lg = 0.0;
};

struct ParamTrack {
  std::size_t horizon = 0;
  Series m{1.0};
  Series L{1.0};
  Series alpha{0.0};
  Series sigma{0.0};
  Series c{0.0};
  Series delta{0.0};
  Series G{0.0};
  double Lg = 0.0;
  double U0 = 0.0;

  StepParams at(std::size_t t) const;
  // True when every series is stored once (or is constant).
  bool is_constant() const;
  // Throws Error(BadConfig) on length mismatches, non-finite entries, or sign violations;
  // Error(BadModuli) when m_t <= 0 or m_t > L_t.
  void check() const;
};

// Contraction factor of exact gradient steps on F(m, L).
double mu(double m, double L, double alpha);

// Stepsize cap of the finite-sum analysis for the given component class.
double finite_sum_alpha_bar(FnClass cls, double m, double L);

struct StepValidity {
  std::size_t t = 0;
  bool ok = true;
  std::string violation;
};

struct ValidityReport {
  std::vector<StepValidity> steps;

  bool passed() const;
  std::optional<StepValidity> first_failure() const;
};

// First violated hypothesis of the analysis at one step, or nullopt. Zero-tolerance comparisons.
std::optional<std::string> check_step(const AnalysisKind& kind, const StepParams& p);

ValidityReport validate(const AnalysisKind& kind, const ParamTrack& track);

}  // namespace trackcert
