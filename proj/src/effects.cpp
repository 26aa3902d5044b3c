#include "metaratio/effects.hpp"

#include <cmath>

namespace metaratio {

namespace {

// s^2 / (n * mean^2): squared sample CV over arm size.
double cv_term(const ArmSummary& arm) {
  return (arm.sd * arm.sd) / (arm.n * arm.mean * arm.mean);
}

}  // namespace

EffectRow lrr(const StudySummary& study) {
  validate_study(study);
  EffectRow row;
  row.estimate = std::log(study.treatment.mean / study.control.mean);
  row.variance = cv_term(study.treatment) + cv_term(study.control);
  if (!(row.variance > 0.0)) {
    throw Error(ErrorCode::ZeroVariance, "study '" + study.id + "' has zero variance in both arms");
  }
  return row;
}

EffectRow lrr_bias_corrected(const StudySummary& study, Eq3Sign sign) {
  EffectRow row = lrr(study);
  const double t = cv_term(study.treatment);
  const double c = cv_term(study.control);
  row.estimate += 0.5 * (t - c);
  const double bracket = sign == Eq3Sign::AsPrinted ? t * t - c * c : t * t + c * c;
  const double corrected = row.variance + 0.5 * bracket;
  row.corrected = true;
  if (corrected > 0.0) {
    row.variance = corrected;
  } else {
    row.variance_floored = true;
  }
  return row;
}

std::vector<EffectRow> compute_effects(std::span<const StudySummary> studies, Pipeline pipeline,
                                       Eq3Sign sign) {
  std::vector<EffectRow> rows;
  rows.reserve(studies.size());
  for (const auto& s : studies) {
    rows.push_back(pipeline == Pipeline::Usual ? lrr(s) : lrr_bias_corrected(s, sign));
  }
  return rows;
}

}  // namespace metaratio
