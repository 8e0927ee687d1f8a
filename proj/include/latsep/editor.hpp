#pragma once

#include <latsep/classifier.hpp>
#include <latsep/flow.hpp>
#include <latsep/types.hpp>

namespace latsep {

enum class Space { kOriginal, kProxy };

struct EditRequest {
  enum class Mode { kFixedStep, kToTargetDistance };
  int attribute = 0;
  Mode mode = Mode::kFixedStep;
  double amount = 0.0;  // step alpha, or target signed distance tau
  Space space = Space::kOriginal;
};

// Translates every row along the unit hyperplane normal: w + alpha * d.
Mat edit_original(const Mat& codes, const SvmHyperplane& h, double alpha);

// Edits in the proxy space and maps back: T^-1(T(w) + alpha * d).
Mat edit_proxy(const FlowModel& model, const Mat& codes, const SvmHyperplane& proxy_h,
               double alpha);

// Per row, steps by alpha = tau - current signed distance, measured in the
// editing space, so every row lands at signed distance tau.
Mat edit_to_target(const FlowModel* model, const Mat& codes, const SvmHyperplane& h, double tau,
                   Space space);

Mat apply_edit(const FlowModel* model, const Mat& codes, const SvmHyperplane& h,
               const EditRequest& request);

}  // namespace latsep
