#include <latsep/editor.hpp>

#include <stdexcept>

namespace latsep {

Mat edit_original(const Mat& codes, const SvmHyperplane& h, double alpha) {
  const Vec d = h.unit_normal();
  if (codes.cols() != d.size())
    throw std::invalid_argument("edit: code width does not match hyperplane dimension");
  return codes.rowwise() + (alpha * d).transpose();
}

Mat edit_proxy(const FlowModel& model, const Mat& codes, const SvmHyperplane& proxy_h,
               double alpha) {
  return model.inverse(edit_original(model.forward(codes), proxy_h, alpha));
}

Mat edit_to_target(const FlowModel* model, const Mat& codes, const SvmHyperplane& h, double tau,
                   Space space) {
  const Vec d = h.unit_normal();
  if (space == Space::kOriginal) {
    const Vec dist = h.signed_distances(codes);
    Mat out = codes;
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) += (tau - dist(i)) * d.transpose();
    return out;
  }
  if (model == nullptr) throw std::invalid_argument("edit: proxy-space edit needs a flow model");
  Mat proxy = model->forward(codes);
  const Vec dist = h.signed_distances(proxy);
  for (Eigen::Index i = 0; i < proxy.rows(); ++i) proxy.row(i) += (tau - dist(i)) * d.transpose();
  return model->inverse(proxy);
}

Mat apply_edit(const FlowModel* model, const Mat& codes, const SvmHyperplane& h,
               const EditRequest& request) {
  if (request.mode == EditRequest::Mode::kToTargetDistance)
    return edit_to_target(model, codes, h, request.amount, request.space);
  if (request.space == Space::kOriginal) return edit_original(codes, h, request.amount);
  if (model == nullptr) throw std::invalid_argument("edit: proxy-space edit needs a flow model");
  return edit_proxy(*model, codes, h, request.amount);
}

}  // namespace latsep
