#pragma once

/// @file checkpoint.hpp
/// @brief Binary checkpoints of an evolution run.
///
/// Layout, little-endian:
///   8 bytes  magic "NMLABCKP"
///   1 byte   format version
///   u64      config hash, u64 master seed, u64 generations completed
///   u64 n, then n length-prefixed genotype texts (population)
///   length-prefixed champion genotype text
///   u64 m, then m generation rows

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "evolution.hpp"
#include "serialize.hpp"

namespace nmlab {

inline constexpr char kCheckpointMagic[8] = {'N', 'M', 'L', 'A', 'B', 'C', 'K', 'P'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;
    EvolutionState state;
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class ByteWriter {
public:
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void text(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    const std::string& bytes() const noexcept { return out_; }

private:
    std::string out_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view in) : in_(in) {}
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        raw(&v, sizeof v);
        return v;
    }
    std::string text() {
        const auto n = u64();
        if (n > in_.size() - pos_) throw CheckpointError("checkpoint truncated");
        std::string s(in_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    void raw(void* p, std::size_t n) {
        if (n > in_.size() - pos_) throw CheckpointError("checkpoint truncated");
        std::memcpy(p, in_.data() + pos_, n);
        pos_ += n;
    }
    bool done() const noexcept { return pos_ == in_.size(); }

private:
    std::string_view in_;
    std::size_t pos_ = 0;
};

inline void write_row(ByteWriter& w, const GenerationRow& r) {
    w.u64(r.generation);
    w.f64(r.best_fitness);
    w.f64(r.mean_fitness);
    w.u64(r.focal.generation);
    w.f64(r.focal.regular);
    w.f64(r.focal.nm_only);
    w.f64(r.focal.rl_only);
    w.f64(r.focal.rl_weight_change_l1);
    w.f64(r.focal.nm_weight_change_l1);
    w.u64(r.focal.profile.size());
    for (double v : r.focal.profile) w.f64(v);
    w.f64(r.champion_global_rl_rate);
    w.u64(r.champion_active_columns);
    w.u64(r.champion_active_activatory);
    w.u64(r.champion_active_modulatory);
    w.u64(r.diverged_instances);
    w.u64(r.guided_fits);
    w.u64(r.guided_accepted);
}

inline GenerationRow read_row(ByteReader& rd) {
    GenerationRow r;
    r.generation = rd.u64();
    r.best_fitness = rd.f64();
    r.mean_fitness = rd.f64();
    r.focal.generation = rd.u64();
    r.focal.regular = rd.f64();
    r.focal.nm_only = rd.f64();
    r.focal.rl_only = rd.f64();
    r.focal.rl_weight_change_l1 = rd.f64();
    r.focal.nm_weight_change_l1 = rd.f64();
    const auto n = rd.u64();
    if (n > (1u << 24)) throw CheckpointError("checkpoint profile length out of range");
    r.focal.profile.resize(n);
    for (double& v : r.focal.profile) v = rd.f64();
    r.champion_global_rl_rate = rd.f64();
    r.champion_active_columns = rd.u64();
    r.champion_active_activatory = rd.u64();
    r.champion_active_modulatory = rd.u64();
    r.diverged_instances = rd.u64();
    r.guided_fits = rd.u64();
    r.guided_accepted = rd.u64();
    return r;
}

} // namespace detail

inline std::string encode_checkpoint(const Checkpoint& c) {
    detail::ByteWriter w;
    w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
    w.raw(&kCheckpointVersion, 1);
    w.u64(c.config_hash);
    w.u64(c.master_seed);
    w.u64(c.state.generation);
    w.u64(c.state.population.size());
    for (const auto& g : c.state.population) w.text(serialize_genotype(g));
    w.text(serialize_genotype(c.state.champion));
    w.u64(c.state.history.size());
    for (const auto& r : c.state.history) detail::write_row(w, r);
    return w.bytes();
}

inline Checkpoint decode_checkpoint(std::string_view bytes) {
    detail::ByteReader rd(bytes);
    char magic[sizeof kCheckpointMagic];
    rd.raw(magic, sizeof magic);
    if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw CheckpointError("not an nmlab checkpoint");
    std::uint8_t version = 0;
    rd.raw(&version, 1);
    if (version != kCheckpointVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    c.config_hash = rd.u64();
    c.master_seed = rd.u64();
    c.state.generation = rd.u64();
    const auto n = rd.u64();
    if (n > (1u << 20)) throw CheckpointError("checkpoint population size out of range");
    try {
        for (std::uint64_t k = 0; k < n; ++k) c.state.population.push_back(parse_genotype(rd.text()));
        c.state.champion = parse_genotype(rd.text());
    } catch (const ParseError& e) {
        throw CheckpointError(std::string("corrupt genotype in checkpoint: ") + e.what());
    }
    const auto m = rd.u64();
    if (m > (1u << 24)) throw CheckpointError("checkpoint history length out of range");
    for (std::uint64_t k = 0; k < m; ++k) c.state.history.push_back(detail::read_row(rd));
    if (!rd.done()) throw CheckpointError("trailing bytes after checkpoint");
    return c;
}

/// Write atomically: a temporary file is renamed over the target.
inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot write checkpoint '" + tmp + "'");
        const auto bytes = encode_checkpoint(c);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw CheckpointError("failed writing checkpoint '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw CheckpointError("cannot rename checkpoint into '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return decode_checkpoint(ss.str());
}

} // namespace nmlab
