#pragma once

// Reference classifier: hashed bag-of-tokens features with one utterance of
// context, a d -> h -> r tanh network, softmax output and the soft-target
// cross-entropy with exact gradients.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hcl/corpus.hpp"
#include "hcl/error.hpp"
#include "hcl/random.hpp"

namespace hcl {

using FeatureVector = std::vector<double>;

// 64-bit FNV-1a. Fixed so hashed features are identical on every platform.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

inline void hashed_bag(std::string_view text, std::span<double> out) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    if (end > pos) out[fnv1a64(text.substr(pos, end - pos)) % out.size()] += 1.0;
    pos = end;
  }
  double norm = 0.0;
  for (double v : out) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : out) v /= norm;
  }
}

// Writes the representation of `u` into `out`; out.size() fixes the width.
inline void utterance_block(const Utterance& u, std::span<double> out) {
  if (u.features) {
    if (u.features->size() != out.size())
      throw DataError("featurize: precomputed feature dimension " +
                      std::to_string(u.features->size()) + " != " + std::to_string(out.size()));
    std::copy(u.features->begin(), u.features->end(), out.begin());
  } else {
    hashed_bag(u.text, out);
  }
}

}  // namespace detail

// [current block | previous block | speaker-changed indicator]. Each block is
// the utterance's precomputed features when present, otherwise an
// L2-normalized hashed token count vector of width hash_dim.
inline FeatureVector featurize(const Utterance& u, const Utterance* prev, std::size_t hash_dim) {
  if (hash_dim < 1) throw ConfigError("hash_dim must be >= 1");
  const std::size_t block = u.features ? u.features->size() : hash_dim;
  if (prev && prev->features.has_value() != u.features.has_value())
    throw DataError("featurize: utterance and context disagree on precomputed features");
  FeatureVector x(2 * block + 1, 0.0);
  std::span<double> xs(x);
  detail::utterance_block(u, xs.subspan(0, block));
  if (prev) {
    detail::utterance_block(*prev, xs.subspan(block, block));
    x.back() = prev->speaker != u.speaker ? 1.0 : 0.0;
  }
  return x;
}

// Features for every utterance of a conversation, in order.
inline std::vector<FeatureVector> featurize(const Conversation& conv, std::size_t hash_dim) {
  std::vector<FeatureVector> out;
  out.reserve(conv.size());
  for (std::size_t i = 0; i < conv.size(); ++i)
    out.push_back(featurize(conv.utterances[i], i ? &conv.utterances[i - 1] : nullptr, hash_dim));
  return out;
}

// Parameters of the d -> h -> r network, stored contiguously:
// [w1 (h x d) | b1 (h) | w2 (r x h) | b2 (r)], row-major.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(std::size_t d, std::size_t h, std::size_t r)
      : d_(d), h_(h), r_(r), data_(h * d + h + r * h + r, 0.0) {
    if (d == 0 || h == 0 || r == 0) throw ConfigError("model dimensions must be positive");
  }

  std::size_t d() const noexcept { return d_; }
  std::size_t h() const noexcept { return h_; }
  std::size_t r() const noexcept { return r_; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<double> w1() noexcept { return data().subspan(0, h_ * d_); }
  std::span<double> b1() noexcept { return data().subspan(h_ * d_, h_); }
  std::span<double> w2() noexcept { return data().subspan(h_ * d_ + h_, r_ * h_); }
  std::span<double> b2() noexcept { return data().subspan(h_ * d_ + h_ + r_ * h_, r_); }
  std::span<const double> w1() const noexcept { return data().subspan(0, h_ * d_); }
  std::span<const double> b1() const noexcept { return data().subspan(h_ * d_, h_); }
  std::span<const double> w2() const noexcept { return data().subspan(h_ * d_ + h_, r_ * h_); }
  std::span<const double> b2() const noexcept {
    return data().subspan(h_ * d_ + h_ + r_ * h_, r_);
  }

  bool same_shape(const ModelParams& o) const noexcept {
    return d_ == o.d_ && h_ == o.h_ && r_ == o.r_;
  }

  bool operator==(const ModelParams&) const = default;

 private:
  std::size_t d_ = 0, h_ = 0, r_ = 0;
  std::vector<double> data_;
};

// Weights uniform in [-0.1, 0.1], biases zero.
inline ModelParams init_params(std::size_t d, std::size_t h, std::size_t r, Engine& rng) {
  ModelParams p(d, h, r);
  for (double& w : p.w1()) w = uniform(rng, -0.1, 0.1);
  for (double& w : p.w2()) w = uniform(rng, -0.1, 0.1);
  return p;
}

struct Activations {
  std::vector<double> hidden;      // tanh(w1 x + b1)
  std::vector<double> log_probs;   // log softmax(w2 hidden + b2)
};

inline Activations forward_activations(const ModelParams& p, std::span<const double> x) {
  if (x.size() != p.d())
    throw DataError("forward: input dimension " + std::to_string(x.size()) + " != " +
                    std::to_string(p.d()));
  Activations a;
  a.hidden.resize(p.h());
  const auto w1 = p.w1();
  const auto b1 = p.b1();
  for (std::size_t i = 0; i < p.h(); ++i) {
    double z = b1[i];
    const double* row = w1.data() + i * p.d();
    for (std::size_t j = 0; j < p.d(); ++j) z += row[j] * x[j];
    a.hidden[i] = std::tanh(z);
  }
  a.log_probs.resize(p.r());
  const auto w2 = p.w2();
  const auto b2 = p.b2();
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < p.r(); ++k) {
    double z = b2[k];
    const double* row = w2.data() + k * p.h();
    for (std::size_t i = 0; i < p.h(); ++i) z += row[i] * a.hidden[i];
    a.log_probs[k] = z;
    max_logit = std::max(max_logit, z);
  }
  double sum = 0.0;
  for (double z : a.log_probs) sum += std::exp(z - max_logit);
  const double lse = max_logit + std::log(sum);
  for (double& z : a.log_probs) z -= lse;
  return a;
}

// Softmax distribution over the r labels.
inline std::vector<double> forward(const ModelParams& p, std::span<const double> x) {
  auto a = forward_activations(p, x);
  for (double& v : a.log_probs) v = std::exp(v);
  return std::move(a.log_probs);
}

inline std::size_t predict(const ModelParams& p, std::span<const double> x) {
  const auto a = forward_activations(p, x);
  return static_cast<std::size_t>(
      std::max_element(a.log_probs.begin(), a.log_probs.end()) - a.log_probs.begin());
}

struct Example {
  std::span<const double> x;
  std::span<const double> target;  // distribution over the r labels
};

enum class Reduction { sum, mean };

struct LossGrad {
  double loss = 0.0;
  ModelParams grads;
};

inline void check_target(std::span<const double> t, std::size_t r) {
  if (t.size() != r) throw DataError("loss: target width != number of labels");
  double sum = 0.0;
  for (double v : t) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DataError("loss: target has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DataError("loss: target row does not sum to 1");
}

// Soft-target cross-entropy -sum_k t[k] log P[k] over the batch and its exact
// gradient. Reduction::mean divides both by the batch size.
inline LossGrad loss_and_grad(const ModelParams& p, std::span<const Example> batch,
                              Reduction reduction = Reduction::sum) {
  LossGrad out{0.0, ModelParams(p.d(), p.h(), p.r())};
  auto gw1 = out.grads.w1();
  auto gb1 = out.grads.b1();
  auto gw2 = out.grads.w2();
  auto gb2 = out.grads.b2();
  const auto w2 = p.w2();
  std::vector<double> dlogits(p.r()), dhidden(p.h());

  for (const auto& ex : batch) {
    check_target(ex.target, p.r());
    const auto a = forward_activations(p, ex.x);
    for (std::size_t k = 0; k < p.r(); ++k) {
      if (ex.target[k] > 0.0) out.loss -= ex.target[k] * a.log_probs[k];
      // d/dz of -sum t log softmax(z) with sum t = 1.
      dlogits[k] = std::exp(a.log_probs[k]) - ex.target[k];
    }
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (std::size_t k = 0; k < p.r(); ++k) {
      gb2[k] += dlogits[k];
      double* grow = gw2.data() + k * p.h();
      const double* wrow = w2.data() + k * p.h();
      for (std::size_t i = 0; i < p.h(); ++i) {
        grow[i] += dlogits[k] * a.hidden[i];
        dhidden[i] += dlogits[k] * wrow[i];
      }
    }
    for (std::size_t i = 0; i < p.h(); ++i) {
      const double dz = dhidden[i] * (1.0 - a.hidden[i] * a.hidden[i]);
      gb1[i] += dz;
      if (dz == 0.0) continue;
      double* grow = gw1.data() + i * p.d();
      for (std::size_t j = 0; j < p.d(); ++j) grow[j] += dz * ex.x[j];
    }
  }
  if (reduction == Reduction::mean && !batch.empty()) {
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (double& g : out.grads.data()) g *= inv;
  }
  return out;
}

inline void sgd_step(ModelParams& p, const ModelParams& grads, double lr) {
  if (!p.same_shape(grads)) throw DataError("sgd_step: gradient shape mismatch");
  if (lr < 0.0) throw ConfigError("learning rate must be >= 0");
  auto w = p.data();
  auto g = grads.data();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
}

// ---------------------------------------------------------------------------
// Checkpoints: one JSON document,
//   {"format":"hcl-checkpoint","version":1,"d":..,"h":..,"r":..,"seed":..,
//    "hash_dim":..,"labels":[..],"w1":[..],"b1":[..],"w2":[..],"b2":[..]}
// Doubles are written with round-trip precision.

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  std::size_t hash_dim = 0;
  std::vector<std::string> labels;

  bool operator==(const Checkpoint&) const = default;
};

inline nlohmann::json to_json(const Checkpoint& c) {
  const auto& p = c.params;
  auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
  return nlohmann::json{{"format", "hcl-checkpoint"},
                        {"version", kCheckpointVersion},
                        {"d", p.d()},
                        {"h", p.h()},
                        {"r", p.r()},
                        {"seed", c.seed},
                        {"hash_dim", c.hash_dim},
                        {"labels", c.labels},
                        {"w1", vec(p.w1())},
                        {"b1", vec(p.b1())},
                        {"w2", vec(p.w2())},
                        {"b2", vec(p.b2())}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "hcl-checkpoint")
      throw DataError("checkpoint: wrong format tag");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw DataError("checkpoint: unsupported version");
    Checkpoint c;
    c.params = ModelParams(j.at("d").get<std::size_t>(), j.at("h").get<std::size_t>(),
                           j.at("r").get<std::size_t>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.hash_dim = j.at("hash_dim").get<std::size_t>();
    c.labels = j.at("labels").get<std::vector<std::string>>();
    if (c.labels.size() != c.params.r()) throw DataError("checkpoint: label count != r");
    auto fill = [&](const char* key, std::span<double> dst) {
      const auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != dst.size()) throw DataError(std::string("checkpoint: bad size for ") + key);
      std::copy(v.begin(), v.end(), dst.begin());
    };
    fill("w1", c.params.w1());
    fill("b1", c.params.b1());
    fill("w2", c.params.w2());
    fill("b2", c.params.b2());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& c, std::ostream& out) {
  out << to_json(c).dump() << '\n';
}

inline Checkpoint load_checkpoint(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace hcl
