// Copyright (c) 2026, The bcstage Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "bcstage/models/registry.hpp"

namespace bcstage::models::arch {

Classifier make_resnet18(int64_t num_classes);
Classifier make_resnet50(int64_t num_classes);
Classifier make_resnet152(int64_t num_classes);
Classifier make_wide_resnet101_2(int64_t num_classes);
Classifier make_resnext101_32x8d(int64_t num_classes);
Classifier make_vgg16(int64_t num_classes);
Classifier make_efficientnet_v2_m(int64_t num_classes);
Classifier make_convnext_base(int64_t num_classes);
Classifier make_regnet_x_32gf(int64_t num_classes);
Classifier make_swin_b(int64_t num_classes);
Classifier make_maxvit_t(int64_t num_classes, int64_t input_size);
Classifier make_tiny_test_cnn(int64_t num_classes);

}  // namespace bcstage::models::arch
