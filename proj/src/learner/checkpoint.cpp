#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "echolab/learner/trainer.hpp"

// Binary layout, little-endian throughout:
//   "ECHOQNET" u32 version
//   u32 n, i32 sizes[n], f64 dropout, u8 target_style
//   str optimizer, str generator (u32 length + bytes), u64 seed
//   trainer state (counters, lr/best/bad_steps, three streams as key/counter)
//   u64 count, f64 online[count], f64 target[count]

namespace echolab {
namespace {

constexpr char kMagic[8] = {'E', 'C', 'H', 'O', 'Q', 'N', 'E', 'T'};

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void stream(const RandomStream& r) {
        u64(r.key());
        u64(r.counter());
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}
    std::uint8_t u8() {
        const int c = in_.get();
        if (c == std::char_traits<char>::eof()) throw std::runtime_error("checkpoint: truncated file");
        return static_cast<std::uint8_t>(c);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        if (n > (1u << 20)) throw std::runtime_error("checkpoint: string field too long");
        std::string s(n, '\0');
        for (auto& c : s) c = static_cast<char>(u8());
        return s;
    }
    RandomStream stream() {
        const std::uint64_t key = u64();
        const std::uint64_t counter = u64();
        return RandomStream(key, counter);
    }

private:
    std::istream& in_;
};

}  // namespace

Checkpoint make_checkpoint(const Trainer& trainer) {
    Checkpoint c;
    c.sizes = trainer.online().sizes();
    c.dropout = trainer.online().dropout();
    c.target_style = trainer.config().target_style;
    c.generator = std::string(kGeneratorId);
    c.seed = trainer.seed();
    c.state = trainer.state();
    c.online = trainer.online();
    c.target = trainer.target();
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
    Writer w(out);
    out.write(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(ckpt.sizes.size()));
    for (int s : ckpt.sizes) w.u32(static_cast<std::uint32_t>(s));
    w.f64(ckpt.dropout);
    w.u8(static_cast<std::uint8_t>(ckpt.target_style));
    w.str(ckpt.optimizer);
    w.str(ckpt.generator);
    w.u64(ckpt.seed);

    const TrainerState& s = ckpt.state;
    w.i64(s.days_completed);
    w.u64(s.env_steps);
    w.u64(s.optimizer_steps);
    w.u64(s.eps_events);
    w.u64(s.sample_calls);
    w.f64(s.lr);
    w.f64(s.best_loss);
    w.i64(s.bad_steps);
    w.stream(s.explore);
    w.stream(s.replay);
    w.stream(s.dropout);

    const auto online = ckpt.online.flatten();
    const auto target = ckpt.target.flatten();
    if (online.size() != target.size()) throw std::invalid_argument("checkpoint: online and target shapes differ");
    w.u64(online.size());
    for (double v : online) w.f64(v);
    for (double v : target) w.f64(v);
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
    Reader r(in);
    char magic[sizeof kMagic];
    for (auto& c : magic) c = static_cast<char>(r.u8());
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw std::runtime_error("checkpoint: bad magic in " + path.string());
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint c;
    const std::uint32_t layers = r.u32();
    if (layers < 2 || layers > 16) throw std::runtime_error("checkpoint: implausible layer count");
    for (std::uint32_t i = 0; i < layers; ++i) c.sizes.push_back(static_cast<int>(r.u32()));
    c.dropout = r.f64();
    const std::uint8_t style = r.u8();
    if (style > 1) throw std::runtime_error("checkpoint: unknown target style");
    c.target_style = static_cast<TargetStyle>(style);
    c.optimizer = r.str();
    c.generator = r.str();
    c.seed = r.u64();

    TrainerState& s = c.state;
    s.days_completed = static_cast<int>(r.i64());
    s.env_steps = r.u64();
    s.optimizer_steps = r.u64();
    s.eps_events = r.u64();
    s.sample_calls = r.u64();
    s.lr = r.f64();
    s.best_loss = r.f64();
    s.bad_steps = static_cast<int>(r.i64());
    s.explore = r.stream();
    s.replay = r.stream();
    s.dropout = r.stream();

    c.online = ValueNetwork(c.sizes, c.dropout);
    c.target = ValueNetwork(c.sizes, c.dropout);
    const std::uint64_t count = r.u64();
    if (count != c.online.flatten().size()) throw std::runtime_error("checkpoint: parameter count does not match shape");
    std::vector<double> params(count);
    for (auto& v : params) v = r.f64();
    c.online.unflatten(params);
    for (auto& v : params) v = r.f64();
    c.target.unflatten(params);
    if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("checkpoint: trailing bytes");
    return c;
}

}  // namespace echolab
