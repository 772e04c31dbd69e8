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

#include "flashmhf/param_io.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace flashmhf {

namespace {

constexpr char kMagic[8] = {'F', 'M', 'H', 'F', 'P', 'A', 'R', '1'};
constexpr std::uint32_t kMaxRank = 16;

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get_le() {
    need(sizeof(U));
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i]))
               << (8 * i);
    }
    pos_ += sizeof(U);
    return value;
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FileError("parameter container truncated at byte " +
                      std::to_string(pos_));
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

template <Real T>
void encode_tensor(std::string& out, const Tensor<T>& t) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape()) put_le<std::uint64_t>(out, e);
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  for (T x : t.data()) put_le<Bits>(out, std::bit_cast<Bits>(x));
}

template <Real T>
Tensor<T> decode_tensor(Reader& in) {
  const auto rank = in.get_le<std::uint32_t>();
  if (rank > kMaxRank) {
    throw FileError("parameter container: implausible rank " +
                    std::to_string(rank));
  }
  Shape shape(rank);
  for (auto& e : shape) e = static_cast<std::size_t>(in.get_le<std::uint64_t>());
  for (std::size_t e : shape) {
    if (e == 0) throw FileError("parameter container: zero extent");
  }
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  std::vector<T> data(Tensor<T>::element_count(shape));
  for (auto& x : data) x = std::bit_cast<T>(in.get_le<Bits>());
  return Tensor<T>(std::move(shape), std::move(data));
}

}  // namespace

std::string encode_container(const std::vector<NamedTensor>& tensors) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& nt : tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(nt.name.size()));
    out += nt.name;
    std::visit(
        [&](const auto& t) {
          using T = typename std::decay_t<decltype(t)>::value_type;
          out.push_back(static_cast<char>(sizeof(T) == 4 ? 0 : 1));
          encode_tensor(out, t);
        },
        nt.tensor);
  }
  return out;
}

std::vector<NamedTensor> decode_container(const std::string& bytes) {
  Reader in(bytes);
  if (in.get_bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw FileError("not a parameter container (bad magic)");
  }
  const auto count = in.get_le<std::uint32_t>();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name = in.get_bytes(in.get_le<std::uint32_t>());
    const auto precision = in.get_le<std::uint8_t>();
    if (precision == 0) {
      nt.tensor = decode_tensor<float>(in);
    } else if (precision == 1) {
      nt.tensor = decode_tensor<double>(in);
    } else {
      throw FileError("parameter container: unknown precision tag " +
                      std::to_string(precision) + " for '" + nt.name + "'");
    }
    out.push_back(std::move(nt));
  }
  if (!in.done()) throw FileError("parameter container: trailing bytes");
  return out;
}

void write_container(const std::filesystem::path& path,
                     const std::vector<NamedTensor>& tensors) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FileError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_container(tensors);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FileError("write failed: " + path.string());
}

std::vector<NamedTensor> read_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FileError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_container(ss.str());
}

std::vector<NamedTensor> to_container(const FlashMHFParams<double>& p) {
  return {{"w_in", p.w_in},     {"k", p.k}, {"u", p.u}, {"v", p.v},
          {"w_gate", p.w_gate}, {"w_out", p.w_out}};
}

FlashMHFParams<double> params_from_container(
    const std::vector<NamedTensor>& tensors, const FlashDims& dims) {
  auto find = [&](const std::string& name) -> TensorD {
    for (const NamedTensor& nt : tensors) {
      if (nt.name != name) continue;
      return std::visit(
          [](const auto& t) { return t.template cast<double>(); }, nt.tensor);
    }
    throw FileError("parameter container has no tensor named '" + name + "'");
  };
  FlashMHFParams<double> p{find("w_in"), find("k"),      find("u"),
                           find("v"),    find("w_gate"), find("w_out")};
  p.check(dims);
  return p;
}

}  // namespace flashmhf
