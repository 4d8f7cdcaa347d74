#include "increlora/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "increlora/errors.hpp"

namespace increlora {
namespace {

constexpr char kMagic[4] = {'I', 'R', 'L', 'C'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  void raw(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, b_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > b_.size()) throw Error("checkpoint: truncated at byte " + std::to_string(pos_));
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

ComponentRecord record_of(const Component& c) { return {c.lambda, c.a, c.b}; }

Component component_of(const ComponentRecord& r) {
  Component c;
  c.lambda = r.lambda;
  c.a = r.a;
  c.b = r.b;
  return c;
}

void write_component(Writer& w, const ComponentRecord& c) {
  w.f64(c.lambda);
  for (double v : c.a) w.f64(v);
  for (double v : c.b) w.f64(v);
}

ComponentRecord read_component(Reader& r, std::uint32_t in, std::uint32_t out) {
  ComponentRecord c;
  c.lambda = r.f64();
  c.a.resize(in);
  c.b.resize(out);
  for (double& v : c.a) v = r.f64();
  for (double& v : c.b) v = r.f64();
  return c;
}

}  // namespace

Checkpoint capture(const Backbone& net, std::uint64_t config_hash, std::uint64_t step, Phase phase) {
  Checkpoint ck;
  ck.config_hash = config_hash;
  ck.step = step;
  ck.phase = phase;
  for (std::size_t k = 0; k < net.size(); ++k) {
    const SvdAdapter& ad = net.adapter(k);
    ModuleRecord m;
    m.id = static_cast<std::uint32_t>(k);
    m.in = static_cast<std::uint32_t>(ad.in_dim());
    m.out = static_cast<std::uint32_t>(ad.out_dim());
    for (const auto& c : ad.active()) m.active.push_back(record_of(c));
    if (ad.reserve()) m.reserve = record_of(*ad.reserve());
    ck.modules.push_back(std::move(m));
  }
  return ck;
}

void restore_adapters(const Checkpoint& ckpt, Backbone& net, double adapter_scale) {
  if (ckpt.modules.size() != net.size()) {
    throw Error("checkpoint has " + std::to_string(ckpt.modules.size()) +
                " modules, network has " + std::to_string(net.size()));
  }
  for (std::size_t k = 0; k < net.size(); ++k) {
    const ModuleRecord& m = ckpt.modules[k];
    SvdAdapter& ad = net.adapter(k);
    if (m.id != k || m.in != ad.in_dim() || m.out != ad.out_dim()) {
      throw Error("checkpoint module " + std::to_string(m.id) + " [" + std::to_string(m.out) +
                  "x" + std::to_string(m.in) + "] does not match layer " + std::to_string(k) +
                  " [" + std::to_string(ad.out_dim()) + "x" + std::to_string(ad.in_dim()) + "]");
    }
    std::vector<Component> active;
    for (const auto& c : m.active) active.push_back(component_of(c));
    std::optional<Component> reserve;
    if (m.reserve) reserve = component_of(*m.reserve);
    const bool advance = ad.advance_learning();
    ad = SvdAdapter::from_parts(m.in, m.out, std::move(active), std::move(reserve), adapter_scale);
    ad.set_advance_learning(advance);
  }
}

std::vector<std::uint8_t> encode(const Checkpoint& ck) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(ck.version);
  w.u64(ck.config_hash);
  w.u64(ck.step);
  w.u8(ck.phase == Phase::Closed ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(ck.modules.size()));
  for (const auto& m : ck.modules) {
    w.u32(m.id);
    w.u32(m.in);
    w.u32(m.out);
    w.u32(static_cast<std::uint32_t>(m.active.size()));
    for (const auto& c : m.active) {
      if (c.a.size() != m.in || c.b.size() != m.out) throw Error("checkpoint: component shape mismatch");
      write_component(w, c);
    }
    w.u8(m.reserve ? 1 : 0);
    if (m.reserve) write_component(w, *m.reserve);
  }
  return w.take();
}

Checkpoint decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error("checkpoint: bad magic");
  Checkpoint ck;
  ck.version = r.u32();
  if (ck.version != kCheckpointVersion) {
    throw Error("checkpoint: unsupported version " + std::to_string(ck.version));
  }
  ck.config_hash = r.u64();
  ck.step = r.u64();
  const std::uint8_t phase = r.u8();
  if (phase > 1) throw Error("checkpoint: bad phase byte");
  ck.phase = phase == 1 ? Phase::Closed : Phase::Allocating;
  const std::uint32_t modules = r.u32();
  for (std::uint32_t k = 0; k < modules; ++k) {
    ModuleRecord m;
    m.id = r.u32();
    m.in = r.u32();
    m.out = r.u32();
    const std::uint32_t active = r.u32();
    for (std::uint32_t i = 0; i < active; ++i) m.active.push_back(read_component(r, m.in, m.out));
    const std::uint8_t has_reserve = r.u8();
    if (has_reserve > 1) throw Error("checkpoint: bad reserve flag");
    if (has_reserve == 1) m.reserve = read_component(r, m.in, m.out);
    ck.modules.push_back(std::move(m));
  }
  if (!r.done()) throw Error("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const auto bytes = encode(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace increlora
