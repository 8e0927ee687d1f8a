#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <latsep/autodiff.hpp>
#include <latsep/types.hpp>

namespace latsep {

inline constexpr double kLeakyReluSlope = 0.01;

// One fully connected layer, applied to row batches as x * weight + bias.
struct AffineLayer {
  Mat weight;  // in x out
  Mat bias;    // 1 x out
};

// Three affine layers with leaky-relu hidden activations. The scale net of a
// coupling layer runs its output through tanh so log-scales stay in (-1, 1);
// the translation net leaves it linear.
struct SubNet {
  AffineLayer l1, l2, l3;
  bool tanh_output = false;
};

struct CouplingLayer {
  int parity = 0;  // 0: first half passive, 1: second half passive
  SubNet scale_net;
  SubNet translation_net;
};

// Invertible map between the original and the proxy latent space, as a stack
// of affine coupling layers with alternating parities. No batch
// normalization anywhere.
class FlowModel {
 public:
  FlowModel() = default;
  FlowModel(int dim, int hidden, std::vector<CouplingLayer> layers);

  int dim() const { return dim_; }
  int hidden() const { return hidden_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const std::vector<CouplingLayer>& layers() const { return layers_; }
  std::vector<CouplingLayer>& layers() { return layers_; }

  // Maps a row batch of original codes to proxy codes; per-row log-determinant
  // of the Jacobian is accumulated into *logdet when given.
  Mat forward(const Mat& w, Vec* logdet = nullptr) const;
  // Exact inverse, layers applied in reverse order.
  Mat inverse(const Mat& wstar, Vec* logdet = nullptr) const;

  std::size_t parameter_count() const;
  // Visits every parameter matrix in the declared (serialization) order:
  // per layer, scale net then translation net, each as l1.w, l1.b, ..., l3.b.
  void visit_parameters(const std::function<void(Mat&)>& fn);
  void visit_parameters(const std::function<void(const Mat&)>& fn) const;

 private:
  int dim_ = 0;
  int hidden_ = 0;
  std::vector<CouplingLayer> layers_;
};

// Seeded model whose hidden weights are uniform on (-1/sqrt(fan_in),
// +1/sqrt(fan_in)) and whose final subnet layers are zero, so the fresh flow
// is exactly the identity. hidden <= 0 selects hidden = dim.
FlowModel init_flow(int dim, int num_layers, int hidden, std::uint64_t seed);

// Tape handles for every flow parameter, in visit_parameters order.
struct FlowBinding {
  std::vector<ad::Var> params;
};

FlowBinding bind_flow(ad::Tape& tape, const FlowModel& model);

// Taped counterparts of forward/inverse, built from the bound parameters so
// gradients reach the flow. logdet_rows, when given, receives the per-row
// log-determinant node of the forward pass.
ad::Var taped_forward(const FlowModel& model, const FlowBinding& binding, ad::Var input,
                      ad::Var* logdet_rows = nullptr);
ad::Var taped_inverse(const FlowModel& model, const FlowBinding& binding, ad::Var input);

}  // namespace latsep
