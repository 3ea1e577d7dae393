#include "gustrl/policy_file.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gustrl/error.hpp"
#include "gustrl/seed.hpp"

namespace gustrl {

namespace {

constexpr std::uint8_t kMagic[4] = {'G', 'R', 'L', 'P'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8;
constexpr std::size_t kDigestBytes = 32;

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  std::vector<std::uint8_t> out;

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + at_), n);
    at_ += n;
    return s;
  }
  bool done() const { return at_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - at_ < n) throw PolicyTruncatedError("policy payload ends before its declared contents");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[at_ + i]) << (8 * i);
    at_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> data_;
  std::size_t at_ = 0;
};

void write_doubles(Writer& w, std::span<const double> values) {
  for (double v : values) w.f64(v);
}

std::vector<double> read_doubles(Reader& r, std::uint64_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.f64();
  return v;
}

}  // namespace

std::vector<std::uint8_t> save_networks(const NetworkArchive& archive) {
  Writer payload;
  payload.u32(static_cast<std::uint32_t>(archive.config_hash.size()));
  payload.bytes(archive.config_hash.data(), archive.config_hash.size());
  payload.u32(static_cast<std::uint32_t>(archive.networks.size()));
  for (const auto& entry : archive.networks) {
    const auto& s = entry.network.spec();
    for (int v : {s.input_channels, s.input_length, s.kernel, s.filters, s.hidden, s.outputs}) payload.i32(v);
    const auto params = entry.network.parameters();
    payload.u64(params.size());
    write_doubles(payload, params);
    const auto& opt = entry.optimizer;
    if (opt.first_moment.size() != params.size() || opt.second_moment.size() != params.size())
      throw SpecMismatchError("save_networks: optimizer state does not match parameter count");
    payload.f64(opt.learning_rate);
    payload.f64(opt.beta1);
    payload.f64(opt.beta2);
    payload.f64(opt.epsilon);
    payload.u64(opt.step);
    write_doubles(payload, opt.first_moment);
    write_doubles(payload, opt.second_moment);
  }

  Writer file;
  file.bytes(kMagic, sizeof kMagic);
  file.u32(kPolicyFormatVersion);
  file.u64(payload.out.size());
  file.bytes(payload.out.data(), payload.out.size());
  const auto digest = sha256(file.out);
  file.bytes(digest.data(), digest.size());
  return std::move(file.out);
}

NetworkArchive load_networks(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw PolicyTruncatedError("policy file shorter than its header");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
    throw PolicyFormatError("not a policy file (bad magic bytes)");
  Reader header(bytes.subspan(4, kHeaderBytes - 4));
  const std::uint32_t version = header.u32();
  if (version != kPolicyFormatVersion)
    throw PolicyVersionError("policy format version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(kPolicyFormatVersion) + ")");
  const std::uint64_t payload_bytes = header.u64();
  if (bytes.size() - kHeaderBytes < kDigestBytes || bytes.size() - kHeaderBytes - kDigestBytes < payload_bytes)
    throw PolicyTruncatedError("policy file is truncated");
  if (bytes.size() != kHeaderBytes + payload_bytes + kDigestBytes)
    throw PolicyFormatError("policy file has trailing bytes");

  const auto body = bytes.first(kHeaderBytes + payload_bytes);
  const auto digest = sha256(body);
  if (!std::equal(digest.begin(), digest.end(), bytes.begin() + static_cast<std::ptrdiff_t>(body.size())))
    throw PolicyChecksumError("policy file checksum mismatch (file is corrupted)");

  Reader r(bytes.subspan(kHeaderBytes, payload_bytes));
  NetworkArchive archive;
  archive.config_hash = r.str(r.u32());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NetworkSpec spec;
    spec.input_channels = r.i32();
    spec.input_length = r.i32();
    spec.kernel = r.i32();
    spec.filters = r.i32();
    spec.hidden = r.i32();
    spec.outputs = r.i32();
    Network net(spec, 0);
    const std::uint64_t n = r.u64();
    if (n != net.parameters().size()) throw PolicyFormatError("parameter count does not match the stored spec");
    const auto params = read_doubles(r, n);
    std::copy(params.begin(), params.end(), net.parameters().begin());
    AdamState opt;
    opt.learning_rate = r.f64();
    opt.beta1 = r.f64();
    opt.beta2 = r.f64();
    opt.epsilon = r.f64();
    opt.step = r.u64();
    opt.first_moment = read_doubles(r, n);
    opt.second_moment = read_doubles(r, n);
    archive.networks.push_back({std::move(net), std::move(opt)});
  }
  if (!r.done()) throw PolicyFormatError("policy payload has unread bytes");
  return archive;
}

std::vector<std::uint8_t> save_network(const Network& network, const AdamState& optimizer,
                                       const std::string& config_hash) {
  NetworkArchive archive;
  archive.config_hash = config_hash;
  archive.networks.push_back({network, optimizer});
  return save_networks(archive);
}

TrainedNetwork load_network(std::span<const std::uint8_t> bytes, std::optional<NetworkSpec> expected) {
  auto archive = load_networks(bytes);
  if (archive.networks.size() != 1) throw PolicyFormatError("expected exactly one network in the archive");
  auto entry = std::move(archive.networks.front());
  if (expected && !(entry.network.spec() == *expected)) {
    throw SpecMismatchError("stored network has " + std::to_string(entry.network.spec().input_channels) +
                            " input channels and " + std::to_string(entry.network.spec().outputs) +
                            " outputs; expected " + std::to_string(expected->input_channels) + " and " +
                            std::to_string(expected->outputs));
  }
  return entry;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                        text.size()));
}

}  // namespace gustrl
