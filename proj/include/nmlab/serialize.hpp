#pragma once

/// @file serialize.hpp
/// @brief Versioned text format for genotypes.
///
/// Layout (whitespace-separated tokens, floats as C99 hex literals so the
/// round trip is bit-exact):
///
///     nmlab-genotype 1
///     global_rl_rate <f>
///     columns 7
///     column <id> <role> <activation> <size>          x7
///     activatory <n>
///     projection <pre> <post> <rows> <cols> local_rl_rate <f>
///     <rows*cols floats, row-major; last column is the bias>
///     modulatory <n>
///     modulation <m> <pre> <post> priority <f>
///     mlp fm <in> <hidden> <out>  w1 <f...> b1 <f...> w2 <f...> b2 <f...>
///     mlp fg <in> <hidden> <out>  w1 <f...> b1 <f...> w2 <f...> b2 <f...>
///     end

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "genotype.hpp"
#include "rng.hpp"

namespace nmlab {

inline constexpr int kGenotypeFormatVersion = 1;

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

inline std::string hex_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline std::string_view to_string(ColumnRole r) noexcept {
    switch (r) {
    case ColumnRole::input: return "input";
    case ColumnRole::hidden: return "hidden";
    case ColumnRole::action_output: return "action_output";
    case ColumnRole::value_output: return "value_output";
    }
    return "hidden";
}

inline std::string_view to_string(Activation a) noexcept {
    switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
    case Activation::action_composite: return "action_composite";
    }
    return "identity";
}

namespace detail {

inline void write_values(std::ostream& os, const std::vector<double>& v, std::size_t per_line) {
    for (std::size_t k = 0; k < v.size(); ++k) {
        os << hex_double(v[k]);
        os << (((k + 1) % per_line == 0 || k + 1 == v.size()) ? '\n' : ' ');
    }
}

inline void write_mlp(std::ostream& os, std::string_view name, const Mlp& m) {
    os << "mlp " << name << ' ' << m.input_size() << ' ' << m.hidden_size() << ' ' << m.output_size() << '\n';
    os << "w1\n";
    write_values(os, m.w1.data, std::max<std::size_t>(1, m.w1.cols));
    os << "b1\n";
    write_values(os, m.b1, std::max<std::size_t>(1, m.b1.size()));
    os << "w2\n";
    write_values(os, m.w2.data, std::max<std::size_t>(1, m.w2.cols));
    os << "b2\n";
    write_values(os, m.b2, 16);
}

class Tokenizer {
public:
    explicit Tokenizer(std::string_view text) : text_(text) {}

    std::string_view next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        last_ = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return text_.substr(last_, pos_ - last_);
    }

    void expect(std::string_view word) {
        const auto tok = next();
        if (tok != word) fail("expected '" + std::string(word) + "', found '" + std::string(tok) + "'");
    }

    long integer() {
        const auto tok = next();
        std::string s(tok);
        char* end = nullptr;
        const long v = std::strtol(s.c_str(), &end, 10);
        if (end == s.c_str() || *end != '\0') fail("expected integer, found '" + s + "'");
        return v;
    }

    std::size_t count(std::size_t limit) {
        const long v = integer();
        if (v < 0 || static_cast<std::size_t>(v) > limit) fail("count out of range");
        return static_cast<std::size_t>(v);
    }

    double real() {
        const auto tok = next();
        std::string s(tok);
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') fail("expected number, found '" + s + "'");
        return v;
    }

    void values(std::vector<double>& out, std::size_t n) {
        out.resize(n);
        for (auto& v : out) v = real();
    }

    bool at_end() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return pos_ >= text_.size();
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, last_); }
    std::size_t last_offset() const noexcept { return last_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t last_ = 0;
};

inline Mlp read_mlp(Tokenizer& tk, std::string_view name) {
    tk.expect("mlp");
    tk.expect(name);
    const std::size_t in = tk.count(1 << 16), hidden = tk.count(1 << 16), out = tk.count(1 << 16);
    Mlp m = Mlp::zeros(in, hidden, out);
    tk.expect("w1");
    tk.values(m.w1.data, hidden * in);
    tk.expect("b1");
    tk.values(m.b1, hidden);
    tk.expect("w2");
    tk.values(m.w2.data, out * hidden);
    tk.expect("b2");
    tk.values(m.b2, out);
    return m;
}

} // namespace detail

inline void write_genotype(std::ostream& os, const Genotype& g) {
    os << "nmlab-genotype " << kGenotypeFormatVersion << '\n';
    os << "global_rl_rate " << hex_double(g.global_rl_rate) << '\n';
    os << "columns " << g.columns.size() << '\n';
    for (const auto& c : g.columns) {
        os << "column " << c.id << ' ' << to_string(c.role) << ' ' << to_string(c.activation) << ' ' << c.size << '\n';
    }
    os << "activatory " << g.activatory.size() << '\n';
    for (const auto& p : g.activatory) {
        os << "projection " << p.pre << ' ' << p.post << ' ' << p.weights.rows << ' ' << p.weights.cols
           << " local_rl_rate " << hex_double(p.local_rl_rate) << '\n';
        detail::write_values(os, p.weights.data, std::max<std::size_t>(1, p.weights.cols));
    }
    os << "modulatory " << g.modulatory.size() << '\n';
    for (const auto& q : g.modulatory) {
        os << "modulation " << q.modulating << ' ' << q.target_pre << ' ' << q.target_post << " priority "
           << hex_double(q.priority) << '\n';
        detail::write_mlp(os, "fm", q.fm);
        detail::write_mlp(os, "fg", q.fg);
    }
    os << "end\n";
}

inline std::string serialize_genotype(const Genotype& g) {
    std::ostringstream os;
    write_genotype(os, g);
    return os.str();
}

/// Parse a genotype. Throws ParseError (with byte offset) on malformed input
/// or when the result violates a structural invariant.
inline Genotype parse_genotype(std::string_view text) {
    detail::Tokenizer tk(text);
    tk.expect("nmlab-genotype");
    const long version = tk.integer();
    if (version != kGenotypeFormatVersion) tk.fail("unsupported genotype format version " + std::to_string(version));
    Genotype g;
    tk.expect("global_rl_rate");
    g.global_rl_rate = tk.real();
    tk.expect("columns");
    if (tk.count(64) != static_cast<std::size_t>(kNumColumns)) tk.fail("expected 7 columns");
    for (auto& c : g.columns) {
        tk.expect("column");
        const long id = tk.integer();
        const std::string role(tk.next());
        const std::string act(tk.next());
        const std::size_t size = tk.count(1 << 16);
        if (id != c.id || role != to_string(c.role) || act != to_string(c.activation) || size != c.size)
            tk.fail("column " + std::to_string(id) + " does not match the fixed layout");
    }
    tk.expect("activatory");
    const std::size_t n_act = tk.count(64);
    for (std::size_t k = 0; k < n_act; ++k) {
        tk.expect("projection");
        ActivatoryProjection p;
        p.pre = static_cast<int>(tk.integer());
        p.post = static_cast<int>(tk.integer());
        if (p.pre < 0 || p.pre >= kNumColumns || p.post < 0 || p.post >= kNumColumns) tk.fail("column id out of range");
        const std::size_t rows = tk.count(1 << 16), cols = tk.count(1 << 16);
        tk.expect("local_rl_rate");
        p.local_rl_rate = tk.real();
        p.weights = Matrix(rows, cols);
        tk.values(p.weights.data, rows * cols);
        g.activatory.push_back(std::move(p));
    }
    tk.expect("modulatory");
    const std::size_t n_mod = tk.count(1 << 12);
    for (std::size_t k = 0; k < n_mod; ++k) {
        tk.expect("modulation");
        ModulatoryProjection q;
        q.modulating = static_cast<int>(tk.integer());
        q.target_pre = static_cast<int>(tk.integer());
        q.target_post = static_cast<int>(tk.integer());
        tk.expect("priority");
        q.priority = tk.real();
        q.fm = detail::read_mlp(tk, "fm");
        q.fg = detail::read_mlp(tk, "fg");
        g.modulatory.push_back(std::move(q));
    }
    tk.expect("end");
    const std::size_t end_offset = tk.last_offset();
    if (auto err = validate(g, /*bottlenecked=*/false)) {
        // Bottlenecked genotypes modulate from the value column; accept those too.
        if (auto err2 = validate(g, /*bottlenecked=*/true)) throw ParseError("invalid genotype: " + *err, end_offset);
    }
    return g;
}

inline std::uint64_t genotype_hash(const Genotype& g) { return detail::fnv1a(serialize_genotype(g)); }

inline Genotype load_genotype(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open genotype file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_genotype(ss.str());
}

inline void save_genotype(const std::string& path, const Genotype& g) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write genotype file '" + path + "'");
    write_genotype(out, g);
}

} // namespace nmlab
