// Copyright (c) 2026 The fovea-detect Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fovea/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace fovea {

void save_checkpoint(const std::string& path, const std::vector<Param>& params,
                     const nlohmann::json& hyper, std::uint64_t seed) {
  nlohmann::json header;
  header["format"] = "fovea-ckpt-v1";
  header["seed"] = seed;
  header["hyper"] = hyper;
  nlohmann::json tensors = nlohmann::json::array();
  for (const Param& p : params) {
    tensors.push_back({{"name", p.name}, {"shape", p.t.shape}});
  }
  header["tensors"] = tensors;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << header.dump() << '\n';
  for (const Param& p : params) {
    out.write(reinterpret_cast<const char*>(p.t.v.data()),
              static_cast<std::streamsize>(p.t.v.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("checkpoint missing header: " + path);
  nlohmann::json header = nlohmann::json::parse(line);
  if (header.value("format", "") != "fovea-ckpt-v1")
    throw std::runtime_error("unrecognized checkpoint format in " + path);

  LoadedCheckpoint ck;
  ck.hyper = header.value("hyper", nlohmann::json::object());
  ck.seed = header.value("seed", std::uint64_t{0});
  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const std::vector<int> shape = t.at("shape").get<std::vector<int>>();
    Tensor tensor(shape);
    in.read(reinterpret_cast<char*>(tensor.v.data()),
            static_cast<std::streamsize>(tensor.v.size() * sizeof(double)));
    if (!in)
      throw std::runtime_error("checkpoint truncated at tensor " + name +
                               " in " + path);
    ck.names.push_back(name);
    ck.tensors.push_back(std::move(tensor));
  }
  return ck;
}

}  // namespace fovea
