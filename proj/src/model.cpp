#include "rgae/model.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>

#include "rgae/errors.hpp"
#include "rgae/kernels.hpp"

namespace rgae {

namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed) + 1;
}

DenseMatrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  DenseMatrix w(fan_in, fan_out);
  for (double& v : w.values()) v = rng.uniform(-limit, limit);
  return w;
}

nlohmann::json matrix_json(const DenseMatrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

DenseMatrix matrix_from_json(const nlohmann::json& j) {
  return DenseMatrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                     j.at("data").get<std::vector<double>>());
}

nlohmann::json adam_json(const AdamState& s) {
  return {{"step", s.step}, {"m", matrix_json(s.first_moment)}, {"v", matrix_json(s.second_moment)}};
}

AdamState adam_from_json(const nlohmann::json& j, const AdamConfig& cfg) {
  AdamState s;
  s.config = cfg;
  s.step = j.at("step").get<std::uint64_t>();
  s.first_moment = matrix_from_json(j.at("m"));
  s.second_moment = matrix_from_json(j.at("v"));
  return s;
}

}  // namespace

std::string to_string(Arch arch) {
  switch (arch) {
    case Arch::gae: return "gae";
    case Arch::vgae: return "vgae";
    case Arch::dgae: return "dgae";
  }
  return "gae";
}

Arch parse_arch(const std::string& name) {
  if (name == "gae") return Arch::gae;
  if (name == "vgae") return Arch::vgae;
  if (name == "dgae") return Arch::dgae;
  throw ConfigError("unknown model '" + name + "' (expected gae, vgae or dgae)");
}

EncoderInput::EncoderInput(SparseMatrix propagation, const DenseMatrix& features)
    : a_prop(std::move(propagation)), x(SparseMatrix::from_dense(features)), x_t(x.transpose()) {
  if (a_prop.rows() != a_prop.cols() || a_prop.rows() != x.rows())
    throw ShapeError("EncoderInput: adjacency and feature rows disagree");
}

EncoderInput EncoderInput::from_graph(const AttributedGraph& graph) {
  return EncoderInput(normalize_adjacency(graph, AdjacencyMode::propagation).matrix, graph.features());
}

std::vector<double> ThetaGrad::flatten() const {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return out;
}

ThetaGrad& ThetaGrad::operator+=(const ThetaGrad& other) {
  if (parts.empty()) {
    parts = other.parts;
    return *this;
  }
  if (other.parts.size() != parts.size()) throw ShapeError("ThetaGrad: part count mismatch");
  for (std::size_t k = 0; k < parts.size(); ++k) axpy(1.0, other.parts[k], parts[k]);
  return *this;
}

GaeModel::GaeModel(Arch arch, std::size_t input_dim, std::uint64_t seed, AdamConfig adam, std::size_t hidden_dim,
                   std::size_t embed_dim)
    : arch_(arch),
      input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      embed_dim_(embed_dim),
      seed_(seed),
      adam_(adam),
      rng_(seed),
      version_(next_version()) {
  if (input_dim == 0 || hidden_dim == 0 || embed_dim == 0) throw ShapeError("GaeModel: dimensions must be positive");
  weights_.push_back(glorot_uniform(input_dim, hidden_dim, rng_));
  weights_.push_back(glorot_uniform(hidden_dim, embed_dim, rng_));
  if (arch == Arch::vgae) weights_.push_back(glorot_uniform(hidden_dim, embed_dim, rng_));
  reset_optimizer();
}

std::vector<std::string> GaeModel::weight_names() const {
  if (arch_ == Arch::vgae) return {"W1", "W_mu", "W_logvar"};
  return {"W1", "W2"};
}

void GaeModel::set_weights(std::vector<DenseMatrix> weights) {
  if (weights.size() != weights_.size()) throw ShapeError("set_weights: wrong number of matrices");
  for (std::size_t k = 0; k < weights.size(); ++k)
    if (weights[k].rows() != weights_[k].rows() || weights[k].cols() != weights_[k].cols())
      throw ShapeError("set_weights: shape mismatch for " + weight_names()[k]);
  weights_ = std::move(weights);
  version_ = next_version();
}

std::size_t GaeModel::theta_size() const {
  std::size_t n = 0;
  for (const auto& w : weights_) n += w.size();
  return n;
}

std::vector<double> GaeModel::flat_theta() const {
  std::vector<double> out;
  out.reserve(theta_size());
  for (const auto& w : weights_) out.insert(out.end(), w.values().begin(), w.values().end());
  return out;
}

void GaeModel::set_flat_theta(std::span<const double> theta) {
  if (theta.size() != theta_size()) throw ShapeError("set_flat_theta: length mismatch");
  std::size_t off = 0;
  for (auto& w : weights_) {
    auto v = w.values();
    std::copy(theta.begin() + static_cast<std::ptrdiff_t>(off),
              theta.begin() + static_cast<std::ptrdiff_t>(off + v.size()), v.begin());
    off += v.size();
  }
  version_ = next_version();
}

void GaeModel::set_centers(DenseMatrix centers) {
  if (centers.cols() != embed_dim_) throw ShapeError("set_centers: centre dimension != embedding dimension");
  centers_ = std::move(centers);
  center_state_ = AdamState(adam_, centers_.rows(), centers_.cols());
  version_ = next_version();
}

void GaeModel::reset_optimizer() {
  weight_states_.clear();
  for (const auto& w : weights_) weight_states_.emplace_back(adam_, w.rows(), w.cols());
  if (!centers_.empty()) center_state_ = AdamState(adam_, centers_.rows(), centers_.cols());
}

void GaeModel::forward(const EncoderInput& input, EncoderCache& cache) const {
  if (input.input_dim() != input_dim_)
    throw StateError("encode: feature dimension " + std::to_string(input.input_dim()) + " does not match model input " +
                     std::to_string(input_dim_));
  cache.version = version_;
  cache.input = &input;
  cache.h1_pre = kernels::spmm(input.a_prop, kernels::spmm(input.x, weights_[0]));
  DenseMatrix h1 = cache.h1_pre;
  for (double& v : h1.values()) v = v > 0.0 ? v : 0.0;
  cache.ah1 = kernels::spmm(input.a_prop, h1);
  if (arch_ == Arch::vgae) {
    cache.mu = kernels::gemm(cache.ah1, weights_[1]);
    cache.logvar = kernels::gemm(cache.ah1, weights_[2]);
  } else {
    cache.z = kernels::gemm(cache.ah1, weights_[1]);
  }
}

EncoderCache GaeModel::encode(const EncoderInput& input, EncodeMode mode) {
  EncoderCache cache;
  forward(input, cache);
  if (arch_ == Arch::vgae) {
    if (mode == EncodeMode::train) {
      cache.eps = DenseMatrix(cache.mu.rows(), cache.mu.cols());
      for (double& e : cache.eps.values()) e = rng_.normal();
      cache.z = cache.mu;
      auto z = cache.z.values();
      auto lv = cache.logvar.values();
      auto e = cache.eps.values();
      for (std::size_t k = 0; k < z.size(); ++k) z[k] += std::exp(0.5 * lv[k]) * e[k];
    } else {
      cache.z = cache.mu;
    }
  }
  if (!cache.z.all_finite()) throw NumericsError("encode: non-finite embeddings");
  return cache;
}

EncoderCache GaeModel::encode_eval(const EncoderInput& input) const {
  EncoderCache cache;
  forward(input, cache);
  if (arch_ == Arch::vgae) cache.z = cache.mu;
  if (!cache.z.all_finite()) throw NumericsError("encode: non-finite embeddings");
  return cache;
}

DenseMatrix GaeModel::embed(const EncoderInput& input) const {
  EncoderCache cache;
  forward(input, cache);
  DenseMatrix z = arch_ == Arch::vgae ? std::move(cache.mu) : std::move(cache.z);
  if (!z.all_finite()) throw NumericsError("embed: non-finite embeddings");
  return z;
}

ThetaGrad GaeModel::backprop_theta(const EncoderCache& cache, const HeadGrads& grads) const {
  if (cache.version != version_ || cache.input == nullptr)
    throw StateError("backprop_theta: cache was produced by different parameters");
  const EncoderInput& in = *cache.input;
  const std::size_t n = cache.ah1.rows();
  auto check = [&](const DenseMatrix& g) {
    if (!g.empty() && (g.rows() != n || g.cols() != embed_dim_)) throw ShapeError("backprop_theta: gradient shape");
  };
  check(grads.z);
  check(grads.mu);
  check(grads.logvar);

  ThetaGrad out;
  DenseMatrix d_ah1;
  if (arch_ == Arch::vgae) {
    DenseMatrix d_mu(n, embed_dim_);
    DenseMatrix d_lv(n, embed_dim_);
    if (!grads.z.empty()) {
      axpy(1.0, grads.z, d_mu);
      if (!cache.eps.empty()) {
        auto gz = grads.z.values();
        auto lv = cache.logvar.values();
        auto e = cache.eps.values();
        auto dl = d_lv.values();
        for (std::size_t k = 0; k < dl.size(); ++k) dl[k] += gz[k] * e[k] * 0.5 * std::exp(0.5 * lv[k]);
      }
    }
    if (!grads.mu.empty()) axpy(1.0, grads.mu, d_mu);
    if (!grads.logvar.empty()) axpy(1.0, grads.logvar, d_lv);
    out.parts.resize(3);
    out.parts[1] = kernels::gemm_tn(cache.ah1, d_mu);
    out.parts[2] = kernels::gemm_tn(cache.ah1, d_lv);
    d_ah1 = kernels::gemm_nt(d_mu, weights_[1]);
    axpy(1.0, kernels::gemm_nt(d_lv, weights_[2]), d_ah1);
  } else {
    const DenseMatrix gz = grads.z.empty() ? DenseMatrix(n, embed_dim_) : grads.z;
    out.parts.resize(2);
    out.parts[1] = kernels::gemm_tn(cache.ah1, gz);
    d_ah1 = kernels::gemm_nt(gz, weights_[1]);
  }
  // the propagation matrix is symmetric, so it is its own transpose
  DenseMatrix d_h1 = kernels::spmm(in.a_prop, d_ah1);
  auto pre = cache.h1_pre.values();
  auto dh = d_h1.values();
  for (std::size_t k = 0; k < dh.size(); ++k)
    if (!(pre[k] > 0.0)) dh[k] = 0.0;
  out.parts[0] = kernels::spmm(in.x_t, kernels::spmm(in.a_prop, d_h1));
  return out;
}

void GaeModel::apply_gradients(const ThetaGrad& grad, const DenseMatrix& center_grad) {
  if (grad.parts.size() != weights_.size()) throw ShapeError("apply_gradients: part count mismatch");
  for (const auto& g : grad.parts)
    if (!g.all_finite()) throw NumericsError("apply_gradients: non-finite gradient");
  if (!center_grad.empty() && !center_grad.all_finite()) throw NumericsError("apply_gradients: non-finite centre gradient");
  for (std::size_t k = 0; k < weights_.size(); ++k) adam_step(weight_states_[k], weights_[k], grad.parts[k]);
  if (!center_grad.empty()) {
    if (centers_.empty()) throw StateError("apply_gradients: model has no centres");
    adam_step(center_state_, centers_, center_grad);
  }
  version_ = next_version();
}

nlohmann::json GaeModel::to_json() const {
  nlohmann::json j;
  j["format"] = "rgae-checkpoint";
  j["format_version"] = 1;
  j["arch"] = to_string(arch_);
  j["input_dim"] = input_dim_;
  j["hidden_dim"] = hidden_dim_;
  j["embed_dim"] = embed_dim_;
  j["seed"] = seed_;
  j["adam"] = {{"learning_rate", adam_.learning_rate},
               {"beta1", adam_.beta1},
               {"beta2", adam_.beta2},
               {"epsilon", adam_.epsilon}};
  const auto names = weight_names();
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    nlohmann::json w = matrix_json(weights_[k]);
    w["name"] = names[k];
    w["adam"] = adam_json(weight_states_[k]);
    j["weights"].push_back(std::move(w));
  }
  if (centers_.empty()) {
    j["centers"] = nullptr;
  } else {
    j["centers"] = matrix_json(centers_);
    j["centers"]["adam"] = adam_json(center_state_);
  }
  j["rng_state"] = rng_.state();
  return j;
}

GaeModel GaeModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "rgae-checkpoint") throw FormatError("checkpoint: unknown format tag");
    if (j.at("format_version").get<int>() != 1) throw FormatError("checkpoint: unsupported format_version");
    GaeModel m;
    m.arch_ = parse_arch(j.at("arch").get<std::string>());
    m.input_dim_ = j.at("input_dim").get<std::size_t>();
    m.hidden_dim_ = j.at("hidden_dim").get<std::size_t>();
    m.embed_dim_ = j.at("embed_dim").get<std::size_t>();
    m.seed_ = j.at("seed").get<std::uint64_t>();
    const auto& a = j.at("adam");
    m.adam_ = {a.at("learning_rate").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
               a.at("epsilon").get<double>()};
    for (const auto& w : j.at("weights")) {
      m.weights_.push_back(matrix_from_json(w));
      m.weight_states_.push_back(adam_from_json(w.at("adam"), m.adam_));
    }
    const std::size_t expected = m.arch_ == Arch::vgae ? 3 : 2;
    if (m.weights_.size() != expected) throw FormatError("checkpoint: wrong number of weight matrices");
    if (m.weights_[0].rows() != m.input_dim_ || m.weights_[0].cols() != m.hidden_dim_)
      throw FormatError("checkpoint: W1 shape disagrees with declared dimensions");
    for (std::size_t k = 1; k < m.weights_.size(); ++k)
      if (m.weights_[k].rows() != m.hidden_dim_ || m.weights_[k].cols() != m.embed_dim_)
        throw FormatError("checkpoint: layer-2 shape disagrees with declared dimensions");
    if (!j.at("centers").is_null()) {
      m.centers_ = matrix_from_json(j.at("centers"));
      m.center_state_ = adam_from_json(j.at("centers").at("adam"), m.adam_);
    }
    m.rng_.set_state(j.at("rng_state").get<std::string>());
    m.version_ = next_version();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void GaeModel::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << to_json().dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

GaeModel GaeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

bool GaeModel::operator==(const GaeModel& o) const {
  return arch_ == o.arch_ && input_dim_ == o.input_dim_ && hidden_dim_ == o.hidden_dim_ &&
         embed_dim_ == o.embed_dim_ && seed_ == o.seed_ && weights_ == o.weights_ &&
         weight_states_ == o.weight_states_ && centers_ == o.centers_ && center_state_ == o.center_state_ &&
         rng_ == o.rng_ && adam_.learning_rate == o.adam_.learning_rate && adam_.beta1 == o.adam_.beta1 &&
         adam_.beta2 == o.adam_.beta2 && adam_.epsilon == o.adam_.epsilon;
}

std::uint64_t weights_hash(const GaeModel& model) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(model.arch()));
  for (const auto& w : model.weights()) {
    mix(w.rows());
    mix(w.cols());
    for (double v : w.values()) mix(std::bit_cast<std::uint64_t>(v));
  }
  for (double v : model.centers().values()) mix(std::bit_cast<std::uint64_t>(v));
  return h;
}

}  // namespace rgae
