#pragma once

// Raw forward/backward kernels for the U-Net operator set.
//
// unet::kernels holds the OpenMP implementations used by the network;
// unet::reference holds straightforward serial loops kept as the test oracle
// and benchmark baseline. Both are instantiated for float and double.
//
// Every parallel kernel assigns each output element to exactly one thread and
// accumulates it in a fixed order (input channel, then kernel row, then kernel
// column), so results do not depend on the thread count.

#include <cstdint>
#include <vector>

#include "unet/tensor.hpp"

namespace unet {

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

struct PoolIndices {
  /// Flat index inside the input plane of the element that won each output cell.
  std::vector<std::uint32_t> argmax;
};

template <typename T>
struct PoolResult {
  Tensor<T> output;
  PoolIndices indices;
};

namespace kernels {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                             const Tensor<T>& grad_output);

template <typename T>
Tensor<T> upconv2x2_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);
template <typename T>
ConvGrads<T> upconv2x2_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                                const Tensor<T>& grad_output);

template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& input);
template <typename T>
Tensor<T> maxpool2x2_backward(const Shape& input_shape, const PoolIndices& indices,
                              const Tensor<T>& grad_output);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_output);

/// Center-crops `skip` to the spatial size of `up` and stacks skip channels first.
template <typename T>
Tensor<T> crop_concat_forward(const Tensor<T>& skip, const Tensor<T>& up);
template <typename T>
void crop_concat_backward(const Tensor<T>& grad_output, const Shape& skip_shape,
                          const Shape& up_shape, Tensor<T>& grad_skip, Tensor<T>& grad_up);

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& logits);

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& p) {
  return conv2d_forward(input, p.weights, p.bias);
}
template <typename T>
Tensor<T> upconv2x2_forward(const Tensor<T>& input, const ConvParams<T>& p) {
  return upconv2x2_forward(input, p.weights, p.bias);
}

}  // namespace kernels

namespace reference {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                             const Tensor<T>& grad_output);
template <typename T>
Tensor<T> upconv2x2_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);
template <typename T>
ConvGrads<T> upconv2x2_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                                const Tensor<T>& grad_output);
template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& input);

}  // namespace reference

/// Shape checks shared by both kernel families. Each returns the output shape
/// the forward kernel allocates, or throws PreconditionError.
Shape check_conv_shapes(const Shape& input, const Shape& weights, const Shape& bias);
Shape check_upconv_shapes(const Shape& input, const Shape& weights, const Shape& bias);
Shape check_pool_shape(const Shape& input);
Shape check_crop_concat_shapes(const Shape& skip, const Shape& up);

/// Sets the OpenMP thread count used by the kernels; 0 restores the runtime default.
void set_num_threads(int threads);
int num_threads();

}  // namespace unet
