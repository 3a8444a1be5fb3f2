// JSON checkpoints of named parameter tensors. The scoring vector a is
// persisted as one array of length 2*d_out (destination half first), matching
// the layer<t>.k<k>.head<h>.{W,a} naming scheme; GRAND adds encoder.* and
// decoder.* entries.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "hoga/attention.hpp"

namespace hoga {

namespace detail {

inline nlohmann::json tensor_json(const Tensor& t) {
  return {{"shape", t.shape}, {"values", t.v()}};
}

inline Tensor tensor_from_json(const nlohmann::json& j) {
  return Tensor(j.at("shape").get<std::vector<std::int64_t>>(),
                j.at("values").get<std::vector<double>>());
}

inline nlohmann::json attn_vector_json(const AttentionHeadParams& p) {
  std::vector<double> a = p.attn_dst.v();
  a.insert(a.end(), p.attn_src.v().begin(), p.attn_src.v().end());
  return {{"shape", std::vector<std::int64_t>{static_cast<std::int64_t>(a.size())}},
          {"values", a}};
}

inline void load_attn_vector(const nlohmann::json& j, AttentionHeadParams& p) {
  auto vals = j.at("values").get<std::vector<double>>();
  const auto d = static_cast<std::size_t>(p.attn_dst.size());
  if (vals.size() != 2 * d)
    throw error("checkpoint: attention vector length mismatch");
  p.attn_dst = Tensor(p.attn_dst.shape, {vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(d)});
  p.attn_src = Tensor(p.attn_src.shape, {vals.begin() + static_cast<std::ptrdiff_t>(d), vals.end()});
}

inline void assign_checked(Tensor& dst, const nlohmann::json& j, const std::string& name) {
  Tensor t = tensor_from_json(j);
  if (t.shape != dst.shape) throw error("checkpoint: shape mismatch for " + name);
  dst = std::move(t);
}

inline std::string head_key(int layer, int k, int h) {
  return "layer" + std::to_string(layer) + ".k" + std::to_string(k) + ".head" +
         std::to_string(h);
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path,
                            const HogaGatModel& m) {
  nlohmann::json params;
  for (std::size_t l = 0; l < m.layers.size(); ++l)
    for (std::size_t k = 0; k < m.layers[l].size(); ++k)
      for (std::size_t h = 0; h < m.layers[l][k].size(); ++h) {
        auto key = detail::head_key(static_cast<int>(l), static_cast<int>(k) + 1,
                                    static_cast<int>(h));
        params[key + ".W"] = detail::tensor_json(m.layers[l][k][h].weight);
        params[key + ".a"] = detail::attn_vector_json(m.layers[l][k][h]);
      }
  nlohmann::json j{{"model", "hoga-gat"}, {"params", params}};
  std::ofstream out(path);
  if (!out) throw error("save_checkpoint: cannot open " + path.string());
  out << j.dump(2) << '\n';
}

inline void load_checkpoint(const std::filesystem::path& path, HogaGatModel& m) {
  std::ifstream in(path);
  if (!in) throw error("load_checkpoint: cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  const auto& params = j.at("params");
  for (std::size_t l = 0; l < m.layers.size(); ++l)
    for (std::size_t k = 0; k < m.layers[l].size(); ++k)
      for (std::size_t h = 0; h < m.layers[l][k].size(); ++h) {
        auto key = detail::head_key(static_cast<int>(l), static_cast<int>(k) + 1,
                                    static_cast<int>(h));
        detail::assign_checked(m.layers[l][k][h].weight, params.at(key + ".W"),
                               key + ".W");
        detail::load_attn_vector(params.at(key + ".a"), m.layers[l][k][h]);
      }
}

inline void save_checkpoint(const std::filesystem::path& path,
                            const HogaGrandModel& m) {
  nlohmann::json params;
  params["encoder.W"] = detail::tensor_json(m.enc_w);
  params["encoder.b"] = detail::tensor_json(m.enc_b);
  for (std::size_t k = 0; k < m.attn.size(); ++k)
    for (std::size_t h = 0; h < m.attn[k].size(); ++h) {
      auto key = "k" + std::to_string(k + 1) + ".head" + std::to_string(h);
      params[key + ".W"] = detail::tensor_json(m.attn[k][h].weight);
      params[key + ".a"] = detail::attn_vector_json(m.attn[k][h]);
    }
  params["decoder.W"] = detail::tensor_json(m.dec_w);
  params["decoder.b"] = detail::tensor_json(m.dec_b);
  nlohmann::json j{{"model", "hoga-grand"}, {"params", params}};
  std::ofstream out(path);
  if (!out) throw error("save_checkpoint: cannot open " + path.string());
  out << j.dump(2) << '\n';
}

inline void load_checkpoint(const std::filesystem::path& path, HogaGrandModel& m) {
  std::ifstream in(path);
  if (!in) throw error("load_checkpoint: cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  const auto& params = j.at("params");
  detail::assign_checked(m.enc_w, params.at("encoder.W"), "encoder.W");
  detail::assign_checked(m.enc_b, params.at("encoder.b"), "encoder.b");
  for (std::size_t k = 0; k < m.attn.size(); ++k)
    for (std::size_t h = 0; h < m.attn[k].size(); ++h) {
      auto key = "k" + std::to_string(k + 1) + ".head" + std::to_string(h);
      detail::assign_checked(m.attn[k][h].weight, params.at(key + ".W"), key + ".W");
      detail::load_attn_vector(params.at(key + ".a"), m.attn[k][h]);
    }
  detail::assign_checked(m.dec_w, params.at("decoder.W"), "decoder.W");
  detail::assign_checked(m.dec_b, params.at("decoder.b"), "decoder.b");
}

}  // namespace hoga
