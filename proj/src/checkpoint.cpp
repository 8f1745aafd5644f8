// Copyright 2026 The Colo Authors.
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

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "colo/autodiff.hpp"
#include "colo/common.hpp"
#include "json.hpp"

namespace colo::ad {
namespace {

constexpr char kMagic[8] = {'C', 'O', 'L', 'O', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void WriteU64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t ReadU64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

[[noreturn]] void Corrupt(const std::string& path, const std::string& what) {
  Fail(ErrorCode::kParse, "checkpoint " + path + ": " + what);
}

}  // namespace

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  nlohmann::json header;
  header["format"] = "colo-checkpoint";
  header["version"] = kCheckpointVersion;
  header["dtype"] = "f32";
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& nt : checkpoint.tensors) {
    if (!nt.tensor.defined()) {
      Fail(ErrorCode::kInvalidArgument, "checkpoint: tensor " + nt.name +
                                            " is undefined");
    }
    entries.push_back({{"name", nt.name}, {"shape", nt.tensor.shape()}});
  }
  header["tensors"] = std::move(entries);
  try {
    header["meta"] = nlohmann::json::parse(checkpoint.meta_json);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument,
         std::string("checkpoint: metadata is not JSON: ") + e.what());
  }
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write checkpoint " + path);
  os.write(kMagic, sizeof(kMagic));
  WriteU64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::vector<float> buf;
  for (const auto& nt : checkpoint.tensors) {
    auto data = nt.tensor.data();
    buf.assign(data.begin(), data.end());
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!os) Fail(ErrorCode::kIo, "short write to checkpoint " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorCode::kIo, "cannot open checkpoint " + path);
  char magic[sizeof(kMagic)] = {};
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    Corrupt(path, "bad magic");
  }
  const std::uint64_t len = ReadU64(is);
  if (!is || len > (1u << 26)) Corrupt(path, "bad header length");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) Corrupt(path, "truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Corrupt(path, std::string("header is not JSON: ") + e.what());
  }
  Checkpoint out;
  try {
    if (header.at("version").get<int>() != kCheckpointVersion) {
      Corrupt(path, "unsupported version " + header.at("version").dump());
    }
    if (header.at("dtype").get<std::string>() != "f32") {
      Corrupt(path, "unsupported dtype " + header.at("dtype").dump());
    }
    out.meta_json = header.value("meta", nlohmann::json::object()).dump();
    std::vector<float> buf;
    for (const auto& entry : header.at("tensors")) {
      NamedTensor nt;
      nt.name = entry.at("name").get<std::string>();
      Shape shape = entry.at("shape").get<Shape>();
      buf.resize(NumElements(shape));
      is.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
      if (!is) Corrupt(path, "truncated data for " + nt.name);
      nt.tensor = Tensor::FromData(std::move(shape),
                                   std::vector<Real>(buf.begin(), buf.end()));
      out.tensors.push_back(std::move(nt));
    }
  } catch (const nlohmann::json::exception& e) {
    Corrupt(path, std::string("malformed header: ") + e.what());
  }
  return out;
}

void RestoreTensors(const Checkpoint& source, std::span<NamedTensor> targets) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& nt : source.tensors) by_name[nt.name] = &nt.tensor;
  for (auto& target : targets) {
    auto it = by_name.find(target.name);
    if (it == by_name.end()) {
      Fail(ErrorCode::kState, "checkpoint lacks tensor " + target.name);
    }
    if (it->second->shape() != target.tensor.shape()) {
      Fail(ErrorCode::kState,
           "checkpoint tensor " + target.name + " has shape " +
               ShapeString(it->second->shape()) + ", model expects " +
               ShapeString(target.tensor.shape()));
    }
    auto src = it->second->data();
    auto dst = target.tensor.mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace colo::ad
