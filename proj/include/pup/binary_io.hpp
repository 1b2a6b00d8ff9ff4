// Copyright (c) 2026 The PUP Authors. All Rights Reserved.
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

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "pup/error.hpp"

// Little helpers for the checkpoint formats. Values are written in host byte
// order; every supported target is little-endian.
namespace pup::binio {

template <class T>
inline void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
inline T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("truncated binary file");
  return value;
}

inline void write_u64(std::ostream& out, std::uint64_t v) { write_pod(out, v); }
inline void write_i32(std::ostream& out, std::int32_t v) { write_pod(out, v); }
inline void write_f64(std::ostream& out, double v) { write_pod(out, v); }
inline std::uint64_t read_u64(std::istream& in) { return read_pod<std::uint64_t>(in); }
inline std::int32_t read_i32(std::istream& in) { return read_pod<std::int32_t>(in); }
inline double read_f64(std::istream& in) { return read_pod<double>(in); }

}  // namespace pup::binio
