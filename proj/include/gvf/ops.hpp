#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gvf/tape.hpp"

namespace gvf::ad {

using Var = Tape::Var;

namespace detail {
inline void require(bool cond, const std::string& op, const std::string& what) {
    if (!cond) throw std::invalid_argument(op + ": " + what);
}
inline void require_same_shape(const Tape& t, const std::string& op, Var a, Var b) {
    require(t.value(a).same_shape(t.value(b)), op,
            "shape mismatch " + t.value(a).shape_str() + " vs " + t.value(b).shape_str());
}
}  // namespace detail

// ---- elementwise -----------------------------------------------------------

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var relu(Tape& t, Var a);
Var tanh_op(Tape& t, Var a);
// Elementwise 1/x; caller keeps x away from 0.
Var reciprocal(Tape& t, Var a);

// ---- layers -----------------------------------------------------------------

// x:[I] or [B,I], w:[O,I], b:[O] -> [O] or [B,O]
Var affine(Tape& t, Var x, Var w, Var b);

// x:[B,C,H,W], k:[OC,IC,KH,KW], bias:[OC]; zero padding, stride 1, odd kernels.
Var conv2d(Tape& t, Var x, Var k, Var bias);

// x:[C,T,H,W], k:[OC,IC,KT,KH,KW], bias:[OC]; zero padding, stride 1.
Var conv3d(Tape& t, Var x, Var k, Var bias);

// 2x2 (or 2x2x2) mean pooling over trailing spatial dims; extents must be even.
Var avgpool2d(Tape& t, Var x);
Var avgpool3d(Tape& t, Var x);

// x:[B,C,H,W], b:[C] -> adds b[c] to every (h,w) of channel c.
Var add_channel_bias(Tape& t, Var x, Var b);

// Per-channel mean over (T,H,W): x:[C,T,H,W] -> [C].
Var channel_mean3d(Tape& t, Var x);

// a:[B,C1,H,W] ++ b:[B,C2,H,W] -> [B,C1+C2,H,W]
Var concat_channels(Tape& t, Var a, Var b);

// Depthwise 1D mixing across the leading (frame) axis, zero padded:
// x:[T,C,H,W], w:[K] (K odd) -> same shape.
Var temporal_mix(Tape& t, Var x, Var w);

Var flatten(Tape& t, Var x);

// Same data, new shape; element count must match.
Var reshape(Tape& t, Var x, std::vector<std::size_t> shape);

// Scalar x[flat_index].
Var select(Tape& t, Var x, std::size_t flat_index);

// ---- reductions & losses ----------------------------------------------------

Var sum(Tape& t, Var x);
Var mean(Tape& t, Var x);
// Sum of |x_i| with subgradient 0 at 0.
Var l1_norm(Tape& t, Var x);
// sqrt(sum x_i^2) with gradient 0 at the origin.
Var l2_norm(Tape& t, Var x);
// Mean of (a-b)^2 over all elements.
Var mse(Tape& t, Var a, Var b);
// Mean over batch of softmax cross-entropy; logits:[B,K].
Var cross_entropy(Tape& t, Var logits, const std::vector<int>& labels);

// Plain softmax on a logits vector (not taped).
std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace gvf::ad
