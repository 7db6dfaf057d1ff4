#include "cedl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "cedl/error.hpp"

namespace cedl {

using json = nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

constexpr int kFormatVersion = 1;

void put_f64(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_f64(std::string_view in, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const Detector& det = ckpt.detector;
  const std::size_t dim = det.encoder.latent_dim();
  if (det.objective.centre.size() != dim) {
    throw Error(ErrorKind::Dimension, "checkpoint centre length does not match latent dimension");
  }
  const bool has_head = det.kind == ObjectiveKind::Bce;
  if (has_head && det.head.u.size() != dim) {
    throw Error(ErrorKind::Dimension, "checkpoint head length does not match latent dimension");
  }

  std::string payload;
  for (double c : det.objective.centre) put_f64(payload, c);
  if (has_head) {
    for (double u : det.head.u) put_f64(payload, u);
    put_f64(payload, det.head.b);
  }
  for (double p : det.encoder.parameters()) put_f64(payload, p);

  json layers = json::array();
  for (const auto& s : det.encoder.specs()) {
    layers.push_back({{"in", s.in_dim}, {"out", s.out_dim}, {"activation", to_string(s.activation)}});
  }
  const auto& prov = ckpt.provenance;
  json header = {
      {"version", kFormatVersion},
      {"objective", to_string(det.kind)},
      {"layers", layers},
      {"alpha", det.objective.alpha},
      {"w0", det.objective.w0},
      {"w1", det.objective.w1},
      {"centre_mode", to_string(det.objective.centre_mode)},
      {"latent_dim", dim},
      {"head", has_head},
      {"parameter_count", det.encoder.parameter_count()},
      {"optimizer",
       {{"name", "adam"},
        {"learning_rate", prov.learning_rate},
        {"beta1", prov.adam.beta1},
        {"beta2", prov.adam.beta2},
        {"eps", prov.adam.eps}}},
      {"seed", prov.seed},
      {"best_loss", prov.best_loss},
      {"best_epoch", prov.best_epoch},
      {"payload_bytes", payload.size()},
      {"payload_fnv1a64", hex64(fnv1a64(payload))},
  };

  std::string out(kCheckpointMagic);
  out.push_back('\n');
  out += header.dump();
  out.push_back('\n');
  out += payload;
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  const auto magic_end = bytes.find('\n');
  if (magic_end == std::string_view::npos || bytes.substr(0, magic_end) != kCheckpointMagic) {
    throw Error(ErrorKind::Format, "not a CEDL1 checkpoint (bad magic)");
  }
  const auto header_end = bytes.find('\n', magic_end + 1);
  if (header_end == std::string_view::npos) throw Error(ErrorKind::Integrity, "checkpoint header truncated");

  json header;
  try {
    header = json::parse(bytes.substr(magic_end + 1, header_end - magic_end - 1));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("checkpoint header: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    if (header.at("version").get<int>() != kFormatVersion) {
      throw Error(ErrorKind::Format, "unsupported checkpoint version " + header.at("version").dump());
    }
    std::vector<LayerSpec> specs;
    for (const auto& l : header.at("layers")) {
      specs.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                       parse_activation(l.at("activation").get<std::string>())});
    }
    Detector& det = ckpt.detector;
    det.encoder = EncoderModel(std::move(specs));
    det.kind = parse_objective_kind(header.at("objective").get<std::string>());
    det.objective.alpha = header.at("alpha").get<double>();
    det.objective.w0 = header.at("w0").get<double>();
    det.objective.w1 = header.at("w1").get<double>();
    det.objective.centre_mode = parse_centre_mode(header.at("centre_mode").get<std::string>());

    const auto& opt = header.at("optimizer");
    ckpt.provenance.learning_rate = opt.at("learning_rate").get<double>();
    ckpt.provenance.adam = {opt.at("beta1").get<double>(), opt.at("beta2").get<double>(),
                            opt.at("eps").get<double>()};
    ckpt.provenance.seed = header.at("seed").get<std::uint64_t>();
    ckpt.provenance.best_loss = header.at("best_loss").get<double>();
    ckpt.provenance.best_epoch = header.at("best_epoch").get<std::size_t>();

    const std::size_t dim = header.at("latent_dim").get<std::size_t>();
    const bool has_head = header.at("head").get<bool>();
    const std::size_t params = header.at("parameter_count").get<std::size_t>();
    const std::size_t payload_bytes = header.at("payload_bytes").get<std::size_t>();
    if (dim != det.encoder.latent_dim() || params != det.encoder.parameter_count()) {
      throw Error(ErrorKind::Format, "checkpoint header disagrees with its layer specs");
    }
    const std::size_t expected = 8 * (dim + (has_head ? dim + 1 : 0) + params);
    if (payload_bytes != expected) throw Error(ErrorKind::Format, "checkpoint payload size field inconsistent");

    const std::string_view payload = bytes.substr(header_end + 1);
    if (payload.size() != payload_bytes) {
      throw Error(ErrorKind::Integrity, "checkpoint payload has " + std::to_string(payload.size()) +
                                            " bytes, header promises " + std::to_string(payload_bytes));
    }
    if (hex64(fnv1a64(payload)) != header.at("payload_fnv1a64").get<std::string>()) {
      throw Error(ErrorKind::Integrity, "checkpoint payload checksum mismatch");
    }

    std::size_t offset = 0;
    det.objective.centre.resize(dim);
    for (auto& c : det.objective.centre) { c = get_f64(payload, offset); offset += 8; }
    if (has_head) {
      det.head.u.resize(dim);
      for (auto& u : det.head.u) { u = get_f64(payload, offset); offset += 8; }
      det.head.b = get_f64(payload, offset);
      offset += 8;
    }
    for (auto& p : det.encoder.mutable_parameters()) { p = get_f64(payload, offset); offset += 8; }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("checkpoint header: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace cedl
