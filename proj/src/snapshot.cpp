#include "nsv/snapshot.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "nsv/error.hpp"

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace nsv {

namespace {

constexpr char kFieldNames[3][8] = {{'u', '1'}, {'u', '2'}, {'f'}};

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ull;
  }
  return h;
}

class Writer {
 public:
  template <class T>
  void put(const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  void doubles(const std::vector<double>& v) { bytes(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)); }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}

  template <class T>
  T get(const char* what) {
    T v;
    take(reinterpret_cast<char*>(&v), sizeof(T), what);
    return v;
  }
  void take(char* out, std::size_t n, const char* what) {
    if (n > end_ - pos_) fail(ErrorCode::format, std::string("snapshot truncated while reading ") + what);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::vector<double> doubles(std::size_t n, const char* what) {
    if (n > (end_ - pos_) / sizeof(double)) fail(ErrorCode::format, std::string("snapshot truncated while reading ") + what);
    std::vector<double> v(n);
    take(reinterpret_cast<char*>(v.data()), n * sizeof(double), what);
    return v;
  }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_snapshot(const std::string& path, const Snapshot& snap) {
  const SimState& s = snap.state;
  const PhaseGrid& pg = *s.f.grid;
  Writer w;
  w.bytes(kSnapshotMagic, sizeof kSnapshotMagic);
  w.put(kSnapshotVersion);
  w.put(std::uint32_t{sizeof(double)});
  w.put(std::uint32_t{3});
  for (const auto& name : kFieldNames) w.bytes(name, 8);
  w.put(std::int32_t{pg.space->n()});
  w.put(std::int32_t{pg.n_v});
  w.put(pg.space->length());
  w.put(pg.v_max);
  w.put(s.t);
  w.put(std::uint64_t{snap.config_text.size()});
  w.bytes(snap.config_text.data(), snap.config_text.size());

  const auto& e = snap.ledger.energy;
  w.put(snap.ledger.windows);
  for (double v : {e.t0, e.e0, e.last_t, e.last_rates.viscous, e.last_rates.drag, e.visc, e.drag}) w.put(v);
  w.put(std::uint64_t{e.started ? 1u : 0u});
  const auto& r = snap.ledger.reference;
  for (double v : {r.t, r.mass, r.linf, r.l2, r.m6, r.momentum.x1, r.momentum.x2}) w.put(v);

  w.doubles(s.u.u1());
  w.doubles(s.u.u2());
  w.doubles(s.f.values);
  const std::uint64_t sum = fnv1a(w.buffer().data(), w.buffer().size());
  w.put(sum);

  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) fail(ErrorCode::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) fail(ErrorCode::io, "cannot move snapshot into place at " + path + ": " + ec.message());
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open snapshot " + path);
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof kSnapshotMagic || std::memcmp(buf.data(), kSnapshotMagic, sizeof kSnapshotMagic) != 0)
    fail(ErrorCode::format, path + ": not a snapshot (bad magic)");
  if (buf.size() < sizeof kSnapshotMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t))
    fail(ErrorCode::format, path + ": snapshot truncated in header");

  Reader rd(buf, buf.size() - sizeof(std::uint64_t));
  char magic[8];
  rd.take(magic, 8, "magic");
  const auto version = rd.get<std::uint32_t>("version");
  if (version != kSnapshotVersion)
    fail(ErrorCode::format, path + ": snapshot version " + std::to_string(version) + " is not supported (expected " +
                                std::to_string(kSnapshotVersion) + ")");
  const auto width = rd.get<std::uint32_t>("element width");
  const auto nfields = rd.get<std::uint32_t>("field count");
  if (width != sizeof(double) || nfields != 3) fail(ErrorCode::format, path + ": unsupported payload layout");
  for (const auto& name : kFieldNames) {
    char got[8];
    rd.take(got, 8, "field descriptor");
    if (std::memcmp(got, name, 8) != 0) fail(ErrorCode::format, path + ": unexpected field order");
  }
  const auto n = rd.get<std::int32_t>("grid");
  const auto nv = rd.get<std::int32_t>("grid");
  const auto length = rd.get<double>("grid");
  const auto vmax = rd.get<double>("grid");
  const auto t = rd.get<double>("time");
  const auto clen = rd.get<std::uint64_t>("config length");
  if (clen > rd.remaining()) fail(ErrorCode::format, path + ": snapshot truncated while reading config");
  Snapshot snap;
  snap.config_text.resize(clen);
  rd.take(snap.config_text.data(), clen, "config");

  auto& e = snap.ledger.energy;
  snap.ledger.windows = rd.get<std::uint64_t>("ledger");
  for (double* v : {&e.t0, &e.e0, &e.last_t, &e.last_rates.viscous, &e.last_rates.drag, &e.visc, &e.drag})
    *v = rd.get<double>("ledger");
  e.started = rd.get<std::uint64_t>("ledger") != 0;
  auto& r = snap.ledger.reference;
  for (double* v : {&r.t, &r.mass, &r.linf, &r.l2, &r.m6, &r.momentum.x1, &r.momentum.x2}) *v = rd.get<double>("ledger");

  if (n < 4 || n % 2 != 0 || nv < 2 || !(length > 0.0) || !(vmax > 0.0))
    fail(ErrorCode::format, path + ": invalid grid parameters in snapshot");
  const std::size_t nx2 = static_cast<std::size_t>(n) * n;
  const std::size_t nf = nx2 * static_cast<std::size_t>(nv) * nv;
  VectorField w{nullptr, {rd.doubles(nx2, "u1"), rd.doubles(nx2, "u2")}};
  std::vector<double> f = rd.doubles(nf, "f");
  if (rd.remaining() != 0) fail(ErrorCode::format, path + ": trailing bytes after payload");

  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - sizeof stored, sizeof stored);
  if (stored != fnv1a(buf.data(), buf.size() - sizeof stored)) fail(ErrorCode::format, path + ": checksum mismatch");

  const GridPtr g = SpectralGrid::create(n, length);
  const PhaseGridPtr pg = PhaseGrid::create(g, nv, vmax);
  w.grid = g;
  VelocityField u;
  try {
    u = VelocityField::checked(std::move(w), 1e-8);
  } catch (const Error& err) {
    fail(ErrorCode::format, path + ": " + err.what());
  }
  snap.state = SimState::make(std::move(u), DistributionFunction{pg, std::move(f), t}, t);
  return snap;
}

}  // namespace nsv
