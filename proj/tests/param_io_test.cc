// Copyright 2026 The FlashMHF Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>

#include "flashmhf/errors.h"
#include "flashmhf/param_io.h"

namespace flashmhf {
namespace {

TEST(Container, ExactByteLayout) {
  const std::string bytes =
      encode_container({{"ab", TensorF({1, 2}, std::vector<float>{1.0f, -2.0f})}});
  const std::string expect = std::string("FMHFPAR1") +
                             std::string("\x01\x00\x00\x00", 4) +   // count
                             std::string("\x02\x00\x00\x00", 4) +   // name_len
                             "ab" + std::string("\x00", 1) +        // f32
                             std::string("\x02\x00\x00\x00", 4) +   // rank
                             std::string("\x01\0\0\0\0\0\0\0", 8) +
                             std::string("\x02\0\0\0\0\0\0\0", 8) +
                             std::string("\x00\x00\x80\x3f", 4) +   // 1.0f
                             std::string("\x00\x00\x00\xc0", 4);    // -2.0f
  EXPECT_EQ(bytes, expect);
}

TEST(Container, RoundTripsBothPrecisions) {
  const TensorD d({2, 3}, {1.5, -0.25, 3e-300, 7, 8, 9});
  const TensorF f({3}, {1.0f, 2.5f, -1e30f});
  const auto back = decode_container(encode_container({{"d", d}, {"f", f}}));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].name, "d");
  EXPECT_EQ(std::get<TensorD>(back[0].tensor), d);
  EXPECT_EQ(std::get<TensorF>(back[1].tensor), f);
}

TEST(Container, RejectsCorruptInput) {
  const std::string good = encode_container({{"x", TensorD({2}, {1, 2})}});
  EXPECT_THROW(decode_container("NOTMAGIC" + good.substr(8)), FileError);
  EXPECT_THROW(decode_container(good.substr(0, good.size() - 1)), FileError);
  EXPECT_THROW(decode_container(good + "x"), FileError);
  std::string bad_tag = good;
  bad_tag[8 + 4 + 4 + 1] = 7;
  EXPECT_THROW(decode_container(bad_tag), FileError);
}

TEST(Container, FileRoundTripAndMissingFile) {
  const auto path = std::filesystem::temp_directory_path() / "flashmhf_io_test.fmhf";
  const FlashDims dims{HeadLayout{2, 2}, 3, 4};
  const auto p = init_params(dims, 9);
  write_container(path, to_container(p));
  const auto q = params_from_container(read_container(path), dims);
  EXPECT_EQ(q.k, p.k);
  EXPECT_EQ(q.w_gate, p.w_gate);
  std::filesystem::remove(path);
  EXPECT_THROW(read_container(path), FileError);
}

TEST(Container, ParamsNeedEveryTensorWithMatchingShape) {
  const FlashDims dims{HeadLayout{2, 2}, 3, 4};
  auto tensors = to_container(init_params(dims, 1));
  EXPECT_THROW(params_from_container(tensors, FlashDims{HeadLayout{2, 2}, 2, 4}),
               DimensionError);
  tensors.pop_back();
  EXPECT_THROW(params_from_container(tensors, dims), FileError);
}

TEST(Container, FloatEntriesAreWidened) {
  const FlashDims dims{HeadLayout{1, 2}, 1, 2};
  const auto p = init_params(dims, 2);
  std::vector<NamedTensor> tensors;
  for (const auto& nt : to_container(p)) {
    tensors.push_back({nt.name, std::get<TensorD>(nt.tensor).cast<float>()});
  }
  const auto q = params_from_container(tensors, dims);
  EXPECT_EQ(q.w_in, p.w_in.cast<float>().cast<double>());
}

}  // namespace
}  // namespace flashmhf
