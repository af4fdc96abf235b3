#pragma once

#include "gvf/classifier.hpp"
#include "gvf/video.hpp"

namespace gvf {

// Gradient-weighted class activation map for the conv3d backbone. Channel
// weights are the spatiotemporal mean of the target-class gradient at the
// last conv block; the heatmap is the ReLU of the weighted activation sum,
// min-max normalized to [0,1] and trilinearly upsampled to the input size.
// Throws for feature-mlp models (no spatial maps to attribute).
VideoTensor grad_cam(const Classifier& model, const VideoTensor& video,
                     std::size_t target_class);

}  // namespace gvf
