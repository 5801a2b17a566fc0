#include <marlrank/serialize.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace marlrank {
namespace {

constexpr std::array<char, 8> kMagic = {'M', 'R', 'L', 'K', 'P', 'R', 'M', 'S'};

template <class U>
void put(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

void put_real(std::ostream& out, Real v) { put(out, std::bit_cast<std::uint64_t>(v)); }

template <class U>
U get(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw DataError("checkpoint truncated");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

Real get_real(std::istream& in) { return std::bit_cast<Real>(get<std::uint64_t>(in)); }

void put_layer(std::ostream& out, const nn::LayerParams<Real>& layer) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(layer.weights.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(layer.weights.cols()));
  for (Index i = 0; i < layer.weights.size(); ++i) put_real(out, layer.weights.data()[i]);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(layer.bias.size()));
  for (Index i = 0; i < layer.bias.size(); ++i) put_real(out, layer.bias(i));
}

constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 24;

Index get_dim(std::istream& in) {
  const auto v = get<std::uint64_t>(in);
  if (v > kMaxDim) throw DataError("checkpoint dimension " + std::to_string(v) + " out of range");
  return static_cast<Index>(v);
}

nn::LayerParams<Real> get_layer(std::istream& in) {
  nn::LayerParams<Real> layer;
  const Index rows = get_dim(in);
  const Index cols = get_dim(in);
  layer.weights.resize(rows, cols);
  for (Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = get_real(in);
  layer.bias.resize(get_dim(in));
  for (Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = get_real(in);
  return layer;
}

}  // namespace

void save_params(std::ostream& out, const nn::ModelParams<Real>& p) {
  nn::check_shape(p);
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.shape.feature_dim));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.shape.neighbors));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.shape.hidden));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.shape.activation));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.shape.encoding));
  put_layer(out, p.similarity);
  put_layer(out, p.hidden1);
  put_layer(out, p.hidden2);
  put_layer(out, p.output);
  if (!out) throw Error("failed writing checkpoint");
}

nn::ModelParams<Real> load_params(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size())) throw DataError("checkpoint truncated");
  if (magic != kMagic) throw DataError("not a checkpoint file (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }

  nn::ModelParams<Real> p;
  p.shape.feature_dim = get_dim(in);
  p.shape.neighbors = get_dim(in);
  p.shape.hidden = get_dim(in);
  const auto act = get<std::uint32_t>(in);
  const auto enc = get<std::uint32_t>(in);
  if (act > 1 || enc > 1) throw DataError("checkpoint has unknown activation/encoding tag");
  p.shape.activation = static_cast<nn::Activation>(act);
  p.shape.encoding = static_cast<nn::ActionEncoding>(enc);
  p.similarity = get_layer(in);
  p.hidden1 = get_layer(in);
  p.hidden2 = get_layer(in);
  p.output = get_layer(in);
  nn::check_shape(p);
  return p;
}

void save_params(const std::filesystem::path& file, const nn::ModelParams<Real>& params) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  save_params(out, params);
}

nn::ModelParams<Real> load_params(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + file.string());
  return load_params(in);
}

}  // namespace marlrank
