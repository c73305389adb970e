#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swsfno/core.hpp"
#include "swsfno/sht.hpp"

namespace swsfno {

// Identity exists for linearized tests.
enum class Activation { GELU, ReLU, Identity };

// How spectral weights act on coefficient a_lm of input channel c:
//   RealPerDegree   real w[c][c'][l], shared across m
//   ComplexPerMode  complex w[c][c'][(l, m)]
// Both commute with rotations in longitude.
enum class SpectralWeights { RealPerDegree, ComplexPerMode };

NLOHMANN_JSON_SERIALIZE_ENUM(Activation, {{Activation::GELU, "gelu"},
                                          {Activation::ReLU, "relu"},
                                          {Activation::Identity, "identity"}})
NLOHMANN_JSON_SERIALIZE_ENUM(SpectralWeights, {{SpectralWeights::RealPerDegree, "real_per_degree"},
                                               {SpectralWeights::ComplexPerMode, "complex_per_mode"}})

struct SfnoConfig {
  std::size_t n_layers = 4;
  std::size_t hidden = 64;
  std::size_t l_max = 110;
  std::size_t m_max = 64;
  std::size_t in_channels = 1;
  std::size_t out_channels = 139;
  std::size_t mlp_ratio = 2;
  Activation activation = Activation::GELU;
  SpectralWeights spectral = SpectralWeights::RealPerDegree;
  bool use_position_embedding = true;
  std::uint64_t seed = 0;

  std::size_t embed_channels() const { return use_position_embedding ? 2 : 0; }
  std::size_t encoder_inputs() const { return in_channels + embed_channels(); }
  std::size_t mlp_hidden() const { return hidden * mlp_ratio; }

  void validate() const {
    if (n_layers < 1) throw InvalidArgument("SfnoConfig: n_layers must be >= 1");
    if (hidden < 1) throw InvalidArgument("SfnoConfig: hidden must be >= 1");
    if (out_channels < 1) throw InvalidArgument("SfnoConfig: out_channels must be >= 1");
    if (in_channels < 1) throw InvalidArgument("SfnoConfig: in_channels must be >= 1");
    if (mlp_ratio < 1) throw InvalidArgument("SfnoConfig: mlp_ratio must be >= 1");
  }

  bool operator==(const SfnoConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const SfnoConfig& c) {
  j = {{"n_layers", c.n_layers},     {"hidden", c.hidden},
       {"l_max", c.l_max},           {"m_max", c.m_max},
       {"in_channels", c.in_channels}, {"out_channels", c.out_channels},
       {"mlp_ratio", c.mlp_ratio},   {"activation", c.activation},
       {"spectral_weights", c.spectral},
       {"use_position_embedding", c.use_position_embedding},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, SfnoConfig& c) {
  j.at("n_layers").get_to(c.n_layers);
  j.at("hidden").get_to(c.hidden);
  j.at("l_max").get_to(c.l_max);
  j.at("m_max").get_to(c.m_max);
  j.at("in_channels").get_to(c.in_channels);
  j.at("out_channels").get_to(c.out_channels);
  j.at("mlp_ratio").get_to(c.mlp_ratio);
  j.at("activation").get_to(c.activation);
  j.at("spectral_weights").get_to(c.spectral);
  j.at("use_position_embedding").get_to(c.use_position_embedding);
  j.at("seed").get_to(c.seed);
}

/// A named contiguous run of parameters inside the flat vector.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  enum class Kind { Weight, Bias, Spectral, Skip } kind = Kind::Weight;
};

/// Offsets of every parameter block in canonical order:
///   encoder.w1 [hidden][in+embed], encoder.b1, encoder.w2 [hidden][hidden], encoder.b2,
///   per block k: block{k}.spectral, block{k}.mlp.w1 [hidden*r][hidden], block{k}.mlp.b1,
///                block{k}.mlp.w2 [hidden][hidden*r], block{k}.mlp.b2, block{k}.skip,
///   decoder.w1 [hidden*r][hidden], decoder.b1, decoder.w2 [out][hidden*r], decoder.b2.
/// Dense weights are row-major [out][in]. Spectral weights are [c_in][c_out][l]
/// (real) or [c_in][c_out][coef][re, im] (complex per mode).
struct ParamLayout {
  struct Linear {
    std::size_t w = 0, b = 0, n_out = 0, n_in = 0;
  };
  struct Block {
    std::size_t spectral = 0;
    Linear mlp1, mlp2;
    std::size_t skip = 0;
  };

  Linear enc1, enc2, dec1, dec2;
  std::vector<Block> blocks;
  std::vector<ParamBlock> entries;
  std::size_t total = 0;
  std::size_t spectral_size = 0;

  static ParamLayout build(const SfnoConfig& cfg) {
    cfg.validate();
    ParamLayout L;
    auto push = [&](const std::string& name, std::size_t size, ParamBlock::Kind kind,
                    std::size_t fan_in, std::size_t fan_out) {
      L.entries.push_back({name, L.total, size, fan_in, fan_out, kind});
      L.total += size;
      return L.entries.back().offset;
    };
    auto linear = [&](const std::string& name, std::size_t n_in, std::size_t n_out) {
      Linear lin;
      lin.n_in = n_in;
      lin.n_out = n_out;
      lin.w = push(name + ".w", n_in * n_out, ParamBlock::Kind::Weight, n_in, n_out);
      lin.b = push(name + ".b", n_out, ParamBlock::Kind::Bias, n_in, n_out);
      return lin;
    };
    const std::size_t H = cfg.hidden, R = cfg.mlp_hidden();
    L.spectral_size = cfg.spectral == SpectralWeights::RealPerDegree
                          ? H * H * (cfg.l_max + 1)
                          : H * H * triangular_size(cfg.l_max, cfg.m_max) * 2;
    L.enc1 = linear("encoder.l1", cfg.encoder_inputs(), H);
    L.enc2 = linear("encoder.l2", H, H);
    for (std::size_t k = 0; k < cfg.n_layers; ++k) {
      const std::string p = "block" + std::to_string(k);
      Block b;
      b.spectral = push(p + ".spectral", L.spectral_size, ParamBlock::Kind::Spectral, H, H);
      b.mlp1 = linear(p + ".mlp.l1", H, R);
      b.mlp2 = linear(p + ".mlp.l2", R, H);
      b.skip = push(p + ".skip", 1, ParamBlock::Kind::Skip, 1, 1);
      L.blocks.push_back(b);
    }
    L.dec1 = linear("decoder.l1", H, R);
    L.dec2 = linear("decoder.l2", R, cfg.out_channels);
    return L;
  }
};

struct SfnoParams {
  SfnoConfig config;
  ParamLayout layout;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  const double* data(std::size_t offset) const { return values.data() + offset; }
  double* data(std::size_t offset) { return values.data() + offset; }

  bool operator==(const SfnoParams& o) const {
    return config == o.config && values == o.values;
  }
};

inline double spectral_init_scale(const SfnoConfig& cfg) {
  return 1.0 / std::sqrt(static_cast<double>(cfg.hidden) * static_cast<double>(cfg.l_max + 1));
}

/// Deterministic in config.seed. Dense weights uniform in
/// +-sqrt(6 / (fan_in + fan_out)), spectral weights uniform in
/// +-1/sqrt(hidden (l_max + 1)), biases zero, skip scales one.
inline SfnoParams init_params(const SfnoConfig& cfg) {
  SfnoParams p;
  p.config = cfg;
  p.layout = ParamLayout::build(cfg);
  p.values.assign(p.layout.total, 0.0);
  Rng rng(cfg.seed);
  for (const auto& e : p.layout.entries) {
    double* w = p.values.data() + e.offset;
    switch (e.kind) {
      case ParamBlock::Kind::Weight: {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(e.fan_in + e.fan_out));
        for (std::size_t i = 0; i < e.size; ++i) w[i] = rng.uniform(-bound, bound);
        break;
      }
      case ParamBlock::Kind::Spectral: {
        const double bound = spectral_init_scale(cfg);
        for (std::size_t i = 0; i < e.size; ++i) w[i] = rng.uniform(-bound, bound);
        break;
      }
      case ParamBlock::Kind::Bias:
        break;
      case ParamBlock::Kind::Skip:
        w[0] = 1.0;
        break;
    }
  }
  return p;
}

}  // namespace swsfno
