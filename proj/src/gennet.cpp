#include "demix/gennet.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "demix/errors.hpp"
#include "demix/io.hpp"

namespace demix {

double Activation::lipschitz() const noexcept { return kind == ActivationKind::sigmoid ? 0.25 : 1.0; }

double Activation::apply(double x) const noexcept {
  switch (kind) {
    case ActivationKind::relu:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::tanh:
      return std::tanh(x);
    case ActivationKind::identity:
      return x;
  }
  return x;
}

double Activation::derivative(double x) const noexcept {
  switch (kind) {
    case ActivationKind::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case ActivationKind::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::identity:
      return 1.0;
  }
  return 1.0;
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::relu:
      return "relu";
    case ActivationKind::sigmoid:
      return "sigmoid";
    case ActivationKind::tanh:
      return "tanh";
    case ActivationKind::identity:
      return "identity";
  }
  return "?";
}

Activation Activation::parse(std::string_view name) {
  if (name == "relu") return {ActivationKind::relu};
  if (name == "sigmoid") return {ActivationKind::sigmoid};
  if (name == "tanh") return {ActivationKind::tanh};
  if (name == "identity") return {ActivationKind::identity};
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

LatentPoint::LatentPoint(Vector c, std::optional<double> radius)
    : coords(std::move(c)), radius_bound(radius) {
  if (radius_bound) {
    if (!(*radius_bound > 0.0)) throw std::invalid_argument("latent radius bound must be positive");
    if (norm2(coords) > *radius_bound * (1.0 + 1e-12)) {
      throw std::invalid_argument("latent point lies outside its radius bound");
    }
  }
}

GeneratorNet::GeneratorNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw StructuralError("generator needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    const std::string where = "layer " + std::to_string(i);
    if (layer.weights.rows() == 0 || layer.weights.cols() == 0) {
      throw StructuralError(where + ": empty weight matrix");
    }
    if (layer.bias.size() != layer.weights.rows()) {
      throw StructuralError(where + ": bias length " + std::to_string(layer.bias.size()) +
                            " does not match " + std::to_string(layer.weights.rows()) + " rows");
    }
    if (i > 0 && layer.weights.cols() != layers_[i - 1].weights.rows()) {
      throw StructuralError(where + ": expects input dim " + std::to_string(layer.weights.cols()) +
                            " but previous layer outputs " +
                            std::to_string(layers_[i - 1].weights.rows()));
    }
  }
}

GeneratorNet GeneratorNet::affine(DenseMatrix weights, Vector bias) {
  if (bias.empty()) bias.assign(weights.rows(), 0.0);
  std::vector<DenseLayer> layers;
  layers.push_back({std::move(weights), std::move(bias), {ActivationKind::identity}});
  return GeneratorNet(std::move(layers));
}

GeneratorNet GeneratorNet::identity(std::size_t dim) { return affine(DenseMatrix::identity(dim)); }

GeneratorNet GeneratorNet::zero(std::size_t latent_dim, std::size_t output_dim) {
  return affine(DenseMatrix(output_dim, latent_dim));
}

bool GeneratorNet::is_affine() const noexcept {
  for (const auto& l : layers_)
    if (l.activation.kind != ActivationKind::identity) return false;
  return true;
}

Vector GeneratorNet::forward(std::span<const double> u) const {
  if (u.size() != latent_dim()) {
    throw DimensionError("forward: latent has length " + std::to_string(u.size()) + ", net expects " +
                         std::to_string(latent_dim()));
  }
  Vector h(u.begin(), u.end());
  for (const auto& layer : layers_) {
    Vector z = matvec(layer.weights, h);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = layer.activation.apply(z[i] + layer.bias[i]);
    h = std::move(z);
  }
  return h;
}

Vector GeneratorNet::latent_gradient(std::span<const double> u, std::span<const double> cotangent) const {
  if (u.size() != latent_dim()) {
    throw DimensionError("latent_gradient: latent has length " + std::to_string(u.size()) +
                         ", net expects " + std::to_string(latent_dim()));
  }
  if (cotangent.size() != output_dim()) {
    throw DimensionError("latent_gradient: cotangent has length " + std::to_string(cotangent.size()) +
                         ", net outputs " + std::to_string(output_dim()));
  }
  // Forward pass keeping pre-activations.
  std::vector<Vector> pre;
  pre.reserve(layers_.size());
  Vector h(u.begin(), u.end());
  for (const auto& layer : layers_) {
    Vector z = matvec(layer.weights, h);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
    h.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) h[i] = layer.activation.apply(z[i]);
    pre.push_back(std::move(z));
  }
  Vector g(cotangent.begin(), cotangent.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& layer = layers_[li];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= layer.activation.derivative(pre[li][i]);
    g = matvec_transposed(layer.weights, g);
  }
  return g;
}

double GeneratorNet::lipschitz_bound() const {
  double bound = 1.0;
  for (const auto& layer : layers_) bound *= spectral_norm(layer.weights) * layer.activation.lipschitz();
  return bound;
}

GeneratorNet pad_with_identity_layers(const GeneratorNet& net, std::span<const Activation> activations) {
  std::vector<DenseLayer> layers = net.layers();
  bool nonnegative = false;
  {
    const auto k = layers.back().activation.kind;
    nonnegative = k == ActivationKind::relu || k == ActivationKind::sigmoid;
  }
  for (const auto& act : activations) {
    const std::size_t idx = layers.size();
    if (act.kind == ActivationKind::relu) {
      if (!nonnegative) {
        throw StructuralError("layer " + std::to_string(idx) +
                              ": cannot pad with an exact relu layer, net output may be negative");
      }
    } else if (act.kind != ActivationKind::identity) {
      throw StructuralError("layer " + std::to_string(idx) + ": cannot pad with an exact " + act.name() +
                            " layer");
    }
    const std::size_t d = layers.back().weights.rows();
    layers.push_back({DenseMatrix::identity(d), Vector(d, 0.0), act});
  }
  return GeneratorNet(std::move(layers));
}

GeneratorNet merge_block_diag(const GeneratorNet& g_in, const GeneratorNet& h_in, MergeMode mode) {
  if (mode == MergeMode::sum && g_in.output_dim() != h_in.output_dim()) {
    throw StructuralError("sum merge needs equal output dims (" + std::to_string(g_in.output_dim()) +
                          " vs " + std::to_string(h_in.output_dim()) + ")");
  }
  auto pad_tail = [](const GeneratorNet& shallow, const GeneratorNet& deep) {
    std::vector<Activation> acts;
    for (std::size_t i = shallow.depth(); i < deep.depth(); ++i) acts.push_back(deep.layers()[i].activation);
    return pad_with_identity_layers(shallow, acts);
  };
  const GeneratorNet g = g_in.depth() < h_in.depth() ? pad_tail(g_in, h_in) : g_in;
  const GeneratorNet h = h_in.depth() < g_in.depth() ? pad_tail(h_in, g_in) : h_in;

  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < g.depth(); ++i) {
    const auto& lg = g.layers()[i];
    const auto& lh = h.layers()[i];
    if (!(lg.activation == lh.activation)) {
      throw StructuralError("layer " + std::to_string(i) + ": activation " + lg.activation.name() +
                            " does not match " + lh.activation.name());
    }
    layers.push_back({block_diag(lg.weights, lh.weights), concat(lg.bias, lh.bias), lg.activation});
  }
  if (mode == MergeMode::sum) {
    const std::size_t n = g.output_dim();
    layers.push_back({hconcat(DenseMatrix::identity(n), DenseMatrix::identity(n)), Vector(n, 0.0),
                      {ActivationKind::identity}});
  }
  return GeneratorNet(std::move(layers));
}

GeneratorNet random_dense_net(std::span<const std::size_t> dims, std::span<const Activation> activations,
                              RngSeed seed, double weight_scale, double bias_scale) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw StructuralError("random_dense_net: need one activation per layer");
  }
  RngStream rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t in = dims[i];
    const std::size_t out = dims[i + 1];
    const double sd = weight_scale / std::sqrt(static_cast<double>(in));
    std::vector<double> w(out * in);
    for (double& x : w) x = sd * rng.normal();
    Vector b(out);
    for (double& x : b) x = bias_scale * rng.normal();
    layers.push_back({DenseMatrix(out, in, std::move(w)), std::move(b), activations[i]});
  }
  return GeneratorNet(std::move(layers));
}

// ---------------------------------------------------------------------------
// Interchange format

nlohmann::json weights_to_json(const GeneratorNet& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"weights", {{"rows", l.weights.rows()}, {"cols", l.weights.cols()}, {"data", l.weights.data()}}},
                      {"bias", l.bias},
                      {"activation", l.activation.name()}});
  }
  nlohmann::json doc = {{"format_version", 1},
                        {"latent_dim", net.latent_dim()},
                        {"output_dim", net.output_dim()},
                        {"layers", std::move(layers)}};
  if (net.lipschitz_hint) doc["lipschitz_hint"] = *net.lipschitz_hint;
  return doc;
}

namespace {

std::size_t positive_int(const nlohmann::json& obj, const char* key, const std::string& path) {
  const std::string here = path + "." + key;
  if (!obj.contains(key)) throw ParseError(here, "missing");
  const auto& v = obj[key];
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
    throw ParseError(here, "expected a positive integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

GeneratorNet weights_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("$", "expected a JSON object");
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
    throw ParseError("$.format_version", "missing or not an integer");
  }
  if (const auto ver = doc["format_version"].get<long long>(); ver != 1) {
    throw UnsupportedVersionError("$.format_version", "unsupported format version " + std::to_string(ver) +
                                                          " (this build reads version 1)");
  }
  const std::size_t latent = positive_int(doc, "latent_dim", "$");
  const std::size_t output = positive_int(doc, "output_dim", "$");
  if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].empty()) {
    throw ParseError("$.layers", "expected a non-empty array");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < doc["layers"].size(); ++i) {
    const auto& node = doc["layers"][i];
    const std::string path = "$.layers[" + std::to_string(i) + "]";
    if (!node.is_object()) throw ParseError(path, "expected an object");
    if (!node.contains("weights") || !node["weights"].is_object()) {
      throw ParseError(path + ".weights", "missing or not an object");
    }
    const auto& w = node["weights"];
    const std::size_t rows = positive_int(w, "rows", path + ".weights");
    const std::size_t cols = positive_int(w, "cols", path + ".weights");
    if (!w.contains("data")) throw ParseError(path + ".weights.data", "missing");
    Vector data = number_array(w["data"], path + ".weights.data");
    if (data.size() != rows * cols) {
      throw StructuralError(path + ".weights.data: has " + std::to_string(data.size()) +
                            " entries, expected rows*cols = " + std::to_string(rows * cols));
    }
    if (!node.contains("bias")) throw ParseError(path + ".bias", "missing");
    Vector bias = number_array(node["bias"], path + ".bias");
    if (!node.contains("activation") || !node["activation"].is_string()) {
      throw ParseError(path + ".activation", "missing or not a string");
    }
    Activation act;
    try {
      act = Activation::parse(node["activation"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ParseError(path + ".activation", e.what());
    }
    layers.push_back({DenseMatrix(rows, cols, std::move(data)), std::move(bias), act});
  }
  GeneratorNet net(std::move(layers));
  if (net.latent_dim() != latent) {
    throw StructuralError("latent_dim " + std::to_string(latent) + " does not match first layer cols " +
                          std::to_string(net.latent_dim()));
  }
  if (net.output_dim() != output) {
    throw StructuralError("output_dim " + std::to_string(output) + " does not match last layer rows " +
                          std::to_string(net.output_dim()));
  }
  if (doc.contains("lipschitz_hint")) {
    if (!doc["lipschitz_hint"].is_number()) throw ParseError("$.lipschitz_hint", "expected a number");
    net.lipschitz_hint = doc["lipschitz_hint"].get<double>();
  }
  return net;
}

void save_weights(const GeneratorNet& net, const std::filesystem::path& path) {
  write_text_atomic(path, weights_to_json(net).dump() + "\n");
}

GeneratorNet load_weights(const std::filesystem::path& path) { return weights_from_json(read_json(path)); }

ParityReport check_parity(const GeneratorNet& net, const std::filesystem::path& parity_path) {
  const auto doc = read_json(parity_path);
  if (!doc.contains("cases") || !doc["cases"].is_array()) throw ParseError("$.cases", "expected an array");
  ParityReport report;
  if (doc.contains("tolerance")) report.tolerance = doc["tolerance"].get<double>();
  for (std::size_t i = 0; i < doc["cases"].size(); ++i) {
    const std::string path = "$.cases[" + std::to_string(i) + "]";
    const auto& c = doc["cases"][i];
    const Vector latent = number_array(c.at("latent"), path + ".latent");
    const Vector expected = number_array(c.at("output"), path + ".output");
    const Vector got = net.forward(latent);
    require_same_length(got, expected, "parity output");
    for (std::size_t j = 0; j < got.size(); ++j) {
      report.max_abs_error = std::max(report.max_abs_error, std::abs(got[j] - expected[j]));
    }
    ++report.cases;
  }
  return report;
}

}  // namespace demix
