// NGW1 weight files: an ASCII header followed by little-endian float32
// tensor payloads in header order.
//
//   NGW1
//   hyper <dL> <dC> <iters> <nL> <nC> <nP> <dropout> <slope> <eps> <value_head>
//   tensor <name> <ndims> <dims...>
//   ...
//   data
//   <payload>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "neuroglue/net.hpp"

namespace neuroglue {

namespace {

constexpr const char* kMagic = "NGW1";

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

void save_weights(const std::string& path, const NetParams& p, const HyperParams& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << kMagic << '\n';
  out << "hyper " << h.literal_dim << ' ' << h.clause_dim << ' ' << h.iterations << ' '
      << h.literal_layers << ' ' << h.clause_layers << ' ' << h.policy_layers << ' '
      << format_double(h.dropout) << ' ' << format_double(h.leaky_slope) << ' '
      << format_double(h.ln_eps) << ' ' << (h.value_head ? 1 : 0) << '\n';
  const auto tensors = tensor_views(p);
  for (const auto& t : tensors) {
    out << "tensor " << t.name << ' ' << t.dims.size();
    for (int dim : t.dims) out << ' ' << dim;
    out << '\n';
  }
  out << "data\n";
  for (const auto& t : tensors) {
    for (double v : t.data) {
      const auto f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      bits = to_little_endian(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  if (!out) throw Error("write failed: " + path);
}

std::pair<NetParams, HyperParams> load_weights(const std::string& path,
                                               const std::optional<HyperParams>& require) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw Error(path + ": bad magic");

  HyperParams h;
  {
    if (!std::getline(in, line)) throw Error(path + ": truncated header");
    std::istringstream s(line);
    std::string word;
    int value_head = 0;
    s >> word >> h.literal_dim >> h.clause_dim >> h.iterations >> h.literal_layers >>
        h.clause_layers >> h.policy_layers >> h.dropout >> h.leaky_slope >> h.ln_eps >>
        value_head;
    if (!s || word != "hyper") throw Error(path + ": malformed hyper line");
    h.value_head = value_head != 0;
    h.validate();
  }
  if (require && !require->same_architecture(h)) {
    throw Error(path + ": architecture does not match the requested hyperparameters");
  }

  NetParams p = NetParams::zeros(h);
  auto tensors = tensor_views(p);
  std::size_t index = 0;
  while (true) {
    if (!std::getline(in, line)) throw Error(path + ": truncated header");
    if (line == "data") break;
    std::istringstream s(line);
    std::string word, name;
    std::size_t ndims = 0;
    s >> word >> name >> ndims;
    if (!s || word != "tensor") throw Error(path + ": malformed tensor line");
    std::vector<int> dims(ndims);
    for (auto& d : dims) s >> d;
    if (!s) throw Error(path + ": malformed tensor line");
    if (index >= tensors.size() || tensors[index].name != name || tensors[index].dims != dims) {
      throw Error(path + ": tensor '" + name + "' does not match the header shape");
    }
    ++index;
  }
  if (index != tensors.size()) throw Error(path + ": missing tensors");

  for (auto& t : tensors) {
    for (double& v : t.data) {
      std::uint32_t bits;
      if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
        throw Error(path + ": truncated tensor data");
      }
      bits = to_little_endian(bits);
      float f;
      std::memcpy(&f, &bits, sizeof f);
      v = static_cast<double>(f);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(path + ": trailing data");
  return {std::move(p), h};
}

}  // namespace neuroglue
