/*
 * Copyright 2026 the stacknet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef STACKNET_AUGMENT_HPP
#define STACKNET_AUGMENT_HPP

#include <utility>

#include "stacknet/rng.hpp"
#include "stacknet/tensor.hpp"

namespace stacknet {

/// One affine draw: rotation (degrees), shear factor, isotropic zoom.
struct AugmentParams {
    double rotation_deg = 0.0;
    double shear = 0.0;
    double zoom = 1.0;
};

struct AugmentRanges {
    double max_rotation_deg = 15.0; ///< rotation ~ U[-max, max]
    double max_shear = 0.1;         ///< shear ~ U[-max, max]
    double zoom_lo = 0.9;           ///< zoom ~ U[lo, hi]
    double zoom_hi = 1.1;
};

AugmentParams draw_augment(Rng& rng, const AugmentRanges& ranges);

/// Applies one affine transform about the slice center to image (bilinear)
/// and mask (nearest) identically. Out-of-bounds samples are 0; the mask
/// stays exactly binary. image is (1,C,H,W), mask is (1,1,H,W) with equal
/// spatial dims.
std::pair<Tensorf, Tensorf> augment_sample(const Tensorf& image, const Tensorf& mask,
                                           const AugmentParams& params);

std::pair<Tensorf, Tensorf> augment_sample(const Tensorf& image, const Tensorf& mask,
                                           Rng& rng, const AugmentRanges& ranges = {});

} // namespace stacknet

#endif // STACKNET_AUGMENT_HPP
