#include <bit>
#include <cstring>
#include <fstream>

#include "hiepar/encoder.hpp"

namespace hiepar::encoder {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian hosts");

namespace {

constexpr char kMagic[8] = {'H', 'I', 'E', 'P', 'A', 'R', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("checkpoint: truncated file");
  return value;
}

}  // namespace

void save_model(std::ostream& out, const ModelParams& params) {
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kFormatVersion);
  for (Index d : {params.dims.vocab, params.dims.embed, params.dims.hidden, params.dims.attention,
                  params.dims.labels}) {
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  }
  const auto tensors = params.tensors();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols));
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  }
  if (!out) throw Error("checkpoint: write failed");
}

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot write " + path.string());
  save_model(out, params);
}

ModelParams load_model(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error("checkpoint: bad magic");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw Error("checkpoint: unsupported format version " + std::to_string(version));
  }
  ModelDims dims;
  for (Index* d : {&dims.vocab, &dims.embed, &dims.hidden, &dims.attention, &dims.labels}) {
    *d = static_cast<Index>(read_pod<std::uint64_t>(in));
  }
  ModelParams params = ModelParams::zeros(dims);
  auto tensors = params.tensors();
  const auto count = read_pod<std::uint32_t>(in);
  if (count != tensors.size()) throw Error("checkpoint: tensor count mismatch");
  for (auto& t : tensors) {
    const auto name_length = read_pod<std::uint32_t>(in);
    std::string name(name_length, '\0');
    in.read(name.data(), name_length);
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    if (!in || name != t.name || rows != static_cast<std::uint64_t>(t.rows) ||
        cols != static_cast<std::uint64_t>(t.cols)) {
      throw Error("checkpoint: unexpected tensor '" + name + "' (expected '" + t.name + "')");
    }
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    if (!in) throw Error("checkpoint: truncated tensor '" + t.name + "'");
  }
  return params;
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: path not found: " + path.string());
  return load_model(in);
}

}  // namespace hiepar::encoder
