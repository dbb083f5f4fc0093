#pragma once

// Checkpoint formats for Mlp parameters.
//
// Binary layout (little-endian):
//   char[8]  magic "CWYCMLP1"
//   u32      number of widths L+1
//   u32[L+1] widths (input first)
//   u8[L-1]  hidden activations (0 identity, 1 tanh, 2 relu)
//   f64[P]   parameters, layer by layer: W row-major (out x in), then b
//
// JSON layout: {"widths": [...], "activations": ["tanh", ...], "params": [...]}
// with params in the same order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cwyc/numerics/mlp.hpp"

namespace cwyc {

static_assert(std::endian::native == std::endian::little, "binary checkpoints assume little-endian hosts");

namespace detail {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace detail

inline constexpr char kMlpMagic[8] = {'C', 'W', 'Y', 'C', 'M', 'L', 'P', '1'};

inline void write_binary(std::ostream& os, const Mlp& net) {
  os.write(kMlpMagic, sizeof(kMlpMagic));
  detail::write_pod(os, static_cast<std::uint32_t>(net.widths().size()));
  for (auto w : net.widths()) detail::write_pod(os, static_cast<std::uint32_t>(w));
  for (auto a : net.hidden_activations()) detail::write_pod(os, static_cast<std::uint8_t>(a));
  os.write(reinterpret_cast<const char*>(net.params().data()),
           static_cast<std::streamsize>(net.num_params() * sizeof(double)));
}

inline Mlp read_binary(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMlpMagic, sizeof(magic)) != 0) throw std::runtime_error("not an Mlp checkpoint");
  const auto n = detail::read_pod<std::uint32_t>(is);
  if (n < 2 || n > 1024) throw std::runtime_error("corrupt Mlp checkpoint header");
  std::vector<std::size_t> widths(n);
  for (auto& w : widths) w = detail::read_pod<std::uint32_t>(is);
  std::vector<Activation> acts(n - 2);
  for (auto& a : acts) {
    const auto code = detail::read_pod<std::uint8_t>(is);
    if (code > 2) throw std::runtime_error("corrupt Mlp activation code");
    a = static_cast<Activation>(code);
  }
  Mlp net(widths, acts);
  is.read(reinterpret_cast<char*>(net.params().data()), static_cast<std::streamsize>(net.num_params() * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return net;
}

inline nlohmann::json to_json(const Mlp& net) {
  nlohmann::json j;
  j["widths"] = net.widths();
  auto& acts = j["activations"] = nlohmann::json::array();
  for (auto a : net.hidden_activations()) acts.push_back(to_string(a));
  j["params"] = std::vector<double>(net.params().data(), net.params().data() + net.params().size());
  return j;
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  auto widths = j.at("widths").get<std::vector<std::size_t>>();
  std::vector<Activation> acts;
  for (const auto& a : j.at("activations")) acts.push_back(activation_from_string(a.get<std::string>()));
  Mlp net(widths, acts);
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.num_params()) throw std::runtime_error("Mlp json: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) net.params()[static_cast<Eigen::Index>(i)] = params[i];
  return net;
}

}  // namespace cwyc
