#include "ldon/container.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "ldon/error.hpp"

namespace ldon {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'D', 'O', 'N'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 0;
constexpr std::uint8_t kDtypeBytes = 1;

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void check_name(const std::string& name) {
  if (name.empty() || name.size() > kMaxTensorName) {
    throw ArtifactError("container: tensor name '" + name + "' must be 1.." + std::to_string(kMaxTensorName) + " bytes");
  }
  for (unsigned char ch : name) {
    if (ch < 0x20 || ch > 0x7e) throw ArtifactError("container: tensor name '" + name + "' is not printable ASCII");
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  [[noreturn]] void fail(const std::string& msg) const { fail_at(pos_, msg); }
  [[noreturn]] static void fail_at(std::size_t offset, const std::string& msg) {
    throw ArtifactError("container: " + msg + " at offset " + std::to_string(offset));
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) fail(std::string("truncated while reading ") + what);
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor& TensorContainer::get(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw ArtifactError("container: no tensor named '" + name + "'");
}

bool TensorContainer::contains(const std::string& name) const {
  for (const auto& entry : tensors) {
    if (entry.first == name) return true;
  }
  return false;
}

std::vector<std::uint8_t> encode_container(const TensorContainer& c) {
  std::set<std::string> seen;
  for (const auto& [name, t] : c.tensors) {
    check_name(name);
    if (name == kManifestName) throw ArtifactError("container: '__manifest' is reserved");
    if (!seen.insert(name).second) throw ArtifactError("container: duplicate tensor name '" + name + "'");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint16_t>(out, 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.tensors.size() + 1));
  for (const auto& [name, t] : c.tensors) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint8_t>(out, kDtypeF64);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (auto e : t.shape()) put<std::uint64_t>(out, e);
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.data().data());
    out.insert(out.end(), p, p + t.size() * sizeof(double));
  }
  const std::string mname = kManifestName;
  put<std::uint16_t>(out, static_cast<std::uint16_t>(mname.size()));
  out.insert(out.end(), mname.begin(), mname.end());
  put<std::uint8_t>(out, kDtypeBytes);
  put<std::uint8_t>(out, 1);
  put<std::uint64_t>(out, c.manifest.size());
  out.insert(out.end(), c.manifest.begin(), c.manifest.end());

  const auto crc = crc32(0L, out.data() + 4, static_cast<uInt>(out.size() - 4));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(crc));
  return out;
}

TensorContainer decode_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw ArtifactError("container: bad magic at offset 0");
  }
  if (bytes.size() < 16) r.fail("truncated file (" + std::to_string(bytes.size()) + " bytes)");
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  const auto crc = static_cast<std::uint32_t>(crc32(0L, bytes.data() + 4, static_cast<uInt>(bytes.size() - 8)));

  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion) Reader::fail_at(4, "unsupported version " + std::to_string(version));
  const auto flags = r.get<std::uint16_t>("flags");
  if (flags != 0) Reader::fail_at(6, "unsupported flags " + std::to_string(flags));
  if (crc != stored) {
    throw ArtifactError("container: checksum mismatch at offset " + std::to_string(bytes.size() - 4));
  }
  const auto count = r.get<std::uint32_t>("entry count");

  TensorContainer c;
  bool have_manifest = false;
  std::set<std::string> seen;
  const std::size_t end = bytes.size() - 4;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t entry_at = r.pos();
    const auto len = r.get<std::uint16_t>("name length");
    auto nb = r.take(len, "name");
    std::string name(nb.begin(), nb.end());
    if (!seen.insert(name).second) r.fail("duplicate entry '" + name + "' (entry starts " + std::to_string(entry_at) + ")");
    const auto dtype = r.get<std::uint8_t>("dtype");
    const auto rank = r.get<std::uint8_t>("rank");
    if (rank > 4) r.fail("rank " + std::to_string(rank) + " exceeds 4");
    Shape shape;
    std::uint64_t elems = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      const auto e = r.get<std::uint64_t>("extent");
      if (e > end) r.fail("extent " + std::to_string(e) + " larger than the file");
      shape.push_back(static_cast<std::size_t>(e));
      elems *= e;
    }
    if (dtype == kDtypeBytes) {
      if (name != kManifestName || rank != 1) r.fail("byte payload only allowed for a rank-1 '__manifest'");
      auto payload = r.take(static_cast<std::size_t>(elems), "manifest payload");
      c.manifest.assign(payload.begin(), payload.end());
      have_manifest = true;
    } else if (dtype == kDtypeF64) {
      if (elems > end / 8) r.fail("payload of " + std::to_string(elems) + " values larger than the file");
      auto payload = r.take(static_cast<std::size_t>(elems) * 8, "payload");
      std::vector<double> values(static_cast<std::size_t>(elems));
      std::memcpy(values.data(), payload.data(), payload.size());
      try {
        c.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
      } catch (const ShapeError& e) {
        r.fail(std::string("invalid tensor: ") + e.what());
      }
    } else {
      r.fail("unknown dtype " + std::to_string(dtype));
    }
    if (r.pos() > end) r.fail("entry runs into the checksum");
  }
  if (r.pos() != end) r.fail("trailing bytes before the checksum");
  if (!have_manifest) r.fail("missing '__manifest' entry");
  return c;
}

void write_tensor_container(const std::filesystem::path& path, const TensorContainer& c) {
  const auto bytes = encode_container(c);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ArtifactError("cannot open " + tmp.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ArtifactError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TensorContainer read_tensor_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingArtifact(path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return decode_container(bytes);
  } catch (const ArtifactError& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

std::string format_manifest(const std::map<std::string, std::string>& entries) {
  std::string out;
  for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_manifest(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

}  // namespace ldon
