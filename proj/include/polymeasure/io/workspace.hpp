#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "../measuring.hpp"

namespace pm::io {

// ---------------------------------------------------------------------------------------------
// Builtin expressions: name or name(arg, ...)

struct Call {
    std::string name;
    std::vector<Call> args;
    bool applied = false;

    std::string str() const {
        if (!applied) return name;
        std::string out = name + "(";
        for (std::size_t i = 0; i < args.size(); ++i) out += (i ? "," : "") + args[i].str();
        return out + ")";
    }
};

namespace detail {

class CallParser {
public:
    explicit CallParser(std::string_view s) : s_(s) {}

    Call parse_all() {
        Call c = parse();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters");
        return c;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg + " in expression '" + std::string(s_) + "'", 1, pos_ + 1);
    }
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }
    static bool atom_char(char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == '_' || c == '\'' || c == '-' || c == '.' || u >= 0x80;
    }
    Call parse() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && atom_char(s_[pos_])) ++pos_;
        if (start == pos_) fail("expected a name");
        Call c{std::string(s_.substr(start, pos_ - start)), {}, false};
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '(') {
            ++pos_;
            c.applied = true;
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == ')') {
                ++pos_;
                return c;
            }
            while (true) {
                c.args.push_back(parse());
                skip_ws();
                if (pos_ < s_.size() && s_[pos_] == ',') {
                    ++pos_;
                    continue;
                }
                if (pos_ < s_.size() && s_[pos_] == ')') {
                    ++pos_;
                    break;
                }
                fail("expected ',' or ')'");
            }
        }
        return c;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

inline std::size_t call_nat(const Call& c) {
    if (c.applied || c.name.empty() || !std::all_of(c.name.begin(), c.name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
        throw std::invalid_argument("expected a number, got '" + c.str() + "'");
    return std::stoul(c.name);
}

inline void arity(const Call& c, std::size_t n) {
    if (c.args.size() != n)
        throw std::invalid_argument(c.name + " takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s") +
                                    ", got " + std::to_string(c.args.size()));
}

} // namespace detail

inline Call parse_call(std::string_view s) { return detail::CallParser(s).parse_all(); }

using FunctorLookup = std::function<FunctorRef(const Call&)>;

// unit, id, maybe, const(M), list(M), bintree(M), bounded_tree(M,K), automaton(a,...), compose(G,F)
inline FunctorRef builtin_functor(const Call& c, const FunctorLookup& sub) {
    using detail::arity;
    const std::string& n = c.name;
    if (n == "unit" || n == "id" || n == "maybe") {
        if (c.applied) arity(c, 0);
        return n == "unit" ? unit_f() : n == "id" ? id_f() : maybe_f();
    }
    if (n == "const" || n == "list" || n == "bintree") {
        arity(c, 1);
        const CommMonoid m = monoid_by_name(c.args[0].str());
        return n == "const" ? const_monoid_f(m) : n == "list" ? list_f(m) : bintree_f(m);
    }
    if (n == "bounded_tree") {
        arity(c, 2);
        return bounded_tree_f(monoid_by_name(c.args[0].str()), detail::call_nat(c.args[1]));
    }
    if (n == "automaton") {
        std::vector<Label> sigma;
        for (const Call& a : c.args) sigma.push_back(Label::parse(a.str()));
        return automaton_f(Carrier(std::move(sigma)));
    }
    if (n == "compose") {
        arity(c, 2);
        return compose(sub(c.args[0]), sub(c.args[1]));
    }
    throw std::invalid_argument("unknown functor '" + c.str() + "'");
}

inline FunctorRef builtin_functor(const Call& c) {
    return builtin_functor(c, [](const Call& x) { return builtin_functor(x); });
}

// std_alg(n), list_alg(M,n), length_alg(M,n), tree_alg(F,n), and with a functor:
// truncated(n), terminal, power_terminal(k), random(n,seed)
inline Algebra builtin_algebra(const Call& c, const FunctorRef& hint, const FunctorLookup& fl) {
    using detail::arity;
    using detail::call_nat;
    const std::string& n = c.name;
    auto need = [&]() -> const FunctorRef& {
        if (!hint) throw std::invalid_argument(n + " needs a functor");
        return hint;
    };
    if (n == "std_alg") return arity(c, 1), std_alg(call_nat(c.args[0]));
    if (n == "list_alg") return arity(c, 2), list_alg(monoid_by_name(c.args[0].str()), call_nat(c.args[1]));
    if (n == "length_alg") return arity(c, 2), length_alg(monoid_by_name(c.args[0].str()), call_nat(c.args[1]));
    if (n == "tree_alg") return arity(c, 2), tree_alg(fl(c.args[0]), call_nat(c.args[1]));
    if (n == "truncated") return arity(c, 1), truncated_algebra(need(), call_nat(c.args[0]));
    if (n == "terminal") return terminal_algebra(need());
    if (n == "power_terminal") return arity(c, 1), power_terminal_algebra(need(), call_nat(c.args[0]));
    if (n == "random") {
        arity(c, 2);
        std::mt19937_64 rng(call_nat(c.args[1]));
        return random_algebra(need(), call_nat(c.args[0]), rng);
    }
    throw std::invalid_argument("unknown algebra '" + c.str() + "'");
}

// std_coalg(n), nat_inf(k), list_coalg(M,n), tree_coalg(F,n), and with a functor:
// truncated(n), unit, empty, random(n,seed)
inline Coalgebra builtin_coalgebra(const Call& c, const FunctorRef& hint, const FunctorLookup& fl) {
    using detail::arity;
    using detail::call_nat;
    const std::string& n = c.name;
    auto need = [&]() -> const FunctorRef& {
        if (!hint) throw std::invalid_argument(n + " needs a functor");
        return hint;
    };
    if (n == "std_coalg") return arity(c, 1), std_coalg(call_nat(c.args[0]));
    if (n == "nat_inf") return arity(c, 1), nat_inf_truncation(call_nat(c.args[0]));
    if (n == "list_coalg") return arity(c, 2), list_coalg(monoid_by_name(c.args[0].str()), call_nat(c.args[1]));
    if (n == "tree_coalg") return arity(c, 2), tree_coalg(fl(c.args[0]), call_nat(c.args[1]));
    if (n == "truncated") return arity(c, 1), truncated_coalgebra(need(), call_nat(c.args[0]));
    if (n == "unit") return unit_coalgebra(need());
    if (n == "empty") return empty_coalgebra(need());
    if (n == "random") {
        arity(c, 2);
        std::mt19937_64 rng(call_nat(c.args[1]));
        return random_coalgebra(need(), call_nat(c.args[0]), rng);
    }
    throw std::invalid_argument("unknown coalgebra '" + c.str() + "'");
}

// ---------------------------------------------------------------------------------------------
// Workspace documents
//
//   # comment
//   [functor F]           builtin = list(Z2)   or   positions/unit/spec keys plus mul:, fibers:, zip: tables
//   [algebra A]           functor = F, then builtin = ...   or   carrier = [..] plus structure: table
//   [coalgebra C]         same shape as algebras
//   [measuring phi]       C = .., A = .., B = .., table: entries (c,a) -> b
//   [commands]            one CLI command per line
//
// Table entries are `lhs -> rhs` lines following a `name:` line. Definitions must precede their uses.

struct Located {
    std::string text;
    std::size_t line = 0;
    std::size_t column = 0;
};

struct Entry {
    Located lhs;
    Located rhs;
};

struct Section {
    std::string kind;
    std::string name;
    std::size_t line = 0;
    std::map<std::string, Located> keys;
    std::map<std::string, std::vector<Entry>> tables;
};

struct NamedMeasuring {
    std::string c, a, b;
    Measuring measuring;
};

class Workspace {
public:
    Workspace() = default;

    static Workspace parse(std::string_view text) {
        Workspace ws;
        for (const Section& s : split(text)) ws.ingest(s);
        return ws;
    }

    static Workspace load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open workspace '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    FunctorRef functor(std::string_view ref) const { return functor_call(parse_call(ref)); }

    Algebra algebra(std::string_view ref, const FunctorRef& hint = nullptr) const {
        if (auto it = algebras_.find(std::string(ref)); it != algebras_.end()) return it->second;
        return builtin_algebra(parse_call(ref), hint, lookup());
    }

    Coalgebra coalgebra(std::string_view ref, const FunctorRef& hint = nullptr) const {
        if (auto it = coalgebras_.find(std::string(ref)); it != coalgebras_.end()) return it->second;
        return builtin_coalgebra(parse_call(ref), hint, lookup());
    }

    const NamedMeasuring& measuring(const std::string& name) const {
        if (auto it = measurings_.find(name); it != measurings_.end()) return it->second;
        throw std::invalid_argument("unknown measuring '" + name + "'");
    }

    bool has_functor(const std::string& n) const { return functors_.count(n) > 0; }
    bool has_algebra(const std::string& n) const { return algebras_.count(n) > 0; }
    bool has_coalgebra(const std::string& n) const { return coalgebras_.count(n) > 0; }
    bool has_measuring(const std::string& n) const { return measurings_.count(n) > 0; }

    const std::map<std::string, FunctorRef>& functors() const noexcept { return functors_; }
    const std::map<std::string, Algebra>& algebras() const noexcept { return algebras_; }
    const std::map<std::string, Coalgebra>& coalgebras() const noexcept { return coalgebras_; }
    const std::vector<Located>& commands() const noexcept { return commands_; }

private:
    FunctorLookup lookup() const {
        return [this](const Call& c) { return functor_call(c); };
    }

    FunctorRef functor_call(const Call& c) const {
        if (!c.applied)
            if (auto it = functors_.find(c.name); it != functors_.end()) return it->second;
        return builtin_functor(c, lookup());
    }

    [[noreturn]] static void fail_at(const Located& at, const std::string& msg, std::size_t offset = 1) {
        throw ParseError("line " + std::to_string(at.line) + ", column " + std::to_string(at.column + offset - 1) +
                             ": " + msg,
                         at.line, at.column + offset - 1);
    }

    static Label label_at(const Located& v) {
        try {
            return Label::parse(v.text);
        } catch (const ParseError& e) {
            fail_at(v, e.what(), e.column());
        }
    }

    static std::vector<Section> split(std::string_view text) {
        std::vector<Section> out;
        std::optional<std::string> table;
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            std::string line(text.substr(start, end - start));
            ++line_no;
            start = end + 1;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            // strip comments outside quoted symbols
            bool quoted = false;
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
                if (line[i] == '#' && !quoted) {
                    line.resize(i);
                    break;
                }
            }
            const std::size_t first = line.find_first_not_of(" \t");
            if (first == std::string::npos) continue;
            const std::size_t last = line.find_last_not_of(" \t");
            const std::string body = line.substr(first, last - first + 1);
            const Located here{body, line_no, first + 1};

            if (body.front() == '[' && body.back() == ']' && body.find("->") == std::string::npos) {
                std::istringstream hs(body.substr(1, body.size() - 2));
                Section s;
                s.line = line_no;
                hs >> s.kind >> s.name;
                std::string extra;
                if (s.kind.empty() || (hs >> extra)) fail_at(here, "malformed section header");
                if (s.kind != "commands" && s.name.empty()) fail_at(here, "section '" + s.kind + "' needs a name");
                out.push_back(std::move(s));
                table.reset();
                continue;
            }
            if (out.empty()) fail_at(here, "content before the first section");
            Section& s = out.back();
            if (s.kind == "commands") {
                s.tables["lines"].push_back(Entry{here, {}});
                continue;
            }
            if (const std::size_t arrow = body.find("->"); arrow != std::string::npos) {
                if (!table) fail_at(here, "table entry outside a table");
                const std::string lhs = body.substr(0, arrow);
                const std::string rhs = body.substr(arrow + 2);
                const std::size_t l1 = lhs.find_last_not_of(" \t");
                const std::size_t r0 = rhs.find_first_not_of(" \t");
                if (l1 == std::string::npos || r0 == std::string::npos) fail_at(here, "entry needs both sides of '->'");
                s.tables[*table].push_back(Entry{Located{lhs.substr(0, l1 + 1), line_no, first + 1},
                                                 Located{rhs.substr(r0), line_no, first + arrow + 3 + r0}});
                continue;
            }
            if (const std::size_t eq = body.find('='); eq != std::string::npos) {
                std::string key = body.substr(0, eq);
                key.erase(key.find_last_not_of(" \t") + 1);
                const std::string rest = body.substr(eq + 1);
                const std::size_t v0 = rest.find_first_not_of(" \t");
                if (key.empty() || v0 == std::string::npos) fail_at(here, "expected 'key = value'");
                if (s.keys.count(key)) fail_at(here, "duplicate key '" + key + "'");
                s.keys[key] = Located{rest.substr(v0), line_no, first + eq + 2 + v0};
                table.reset();
                continue;
            }
            if (body.back() == ':' && body.find_first_of(" \t") == std::string::npos) {
                const std::string key = body.substr(0, body.size() - 1);
                if (s.tables.count(key)) fail_at(here, "duplicate table '" + key + "'");
                s.tables[key];
                table = key;
                continue;
            }
            fail_at(here, "expected a section header, 'key = value', 'table:' or 'lhs -> rhs'");
        }
        return out;
    }

    const Located& key(const Section& s, const std::string& k) const {
        if (auto it = s.keys.find(k); it != s.keys.end()) return it->second;
        fail_at(Located{s.kind, s.line, 1}, s.kind + " '" + s.name + "' is missing '" + k + "'");
    }

    template <class Fn>
    static auto at(const Located& where, Fn&& fn) -> decltype(fn()) {
        try {
            return fn();
        } catch (const ParseError& e) {
            if (e.line() > 1 || std::string_view(e.what()).rfind("line ", 0) == 0) throw;
            fail_at(where, e.what(), e.column());
        } catch (const GuardError&) {
            throw;
        } catch (const std::exception& e) {
            fail_at(where, e.what());
        }
    }

    void claim(const Section& s) {
        if (functors_.count(s.name) || algebras_.count(s.name) || coalgebras_.count(s.name) ||
            measurings_.count(s.name))
            fail_at(Located{s.name, s.line, 1}, "name '" + s.name + "' is already defined");
    }

    void ingest(const Section& s) {
        if (s.kind == "commands") {
            if (auto it = s.tables.find("lines"); it != s.tables.end())
                for (const Entry& e : it->second) commands_.push_back(e.lhs);
            return;
        }
        claim(s);
        if (s.kind == "functor") {
            functors_.emplace(s.name, read_functor(s));
        } else if (s.kind == "algebra") {
            algebras_.emplace(s.name, read_algebra(s));
        } else if (s.kind == "coalgebra") {
            coalgebras_.emplace(s.name, read_coalgebra(s));
        } else if (s.kind == "measuring") {
            measurings_.emplace(s.name, read_measuring(s));
        } else {
            fail_at(Located{s.kind, s.line, 2}, "unknown section kind '" + s.kind + "'");
        }
    }

    const std::vector<Entry>& table(const Section& s, const std::string& k) const {
        static const std::vector<Entry> none;
        if (auto it = s.tables.find(k); it != s.tables.end()) return it->second;
        return none;
    }

    FunctorRef read_functor(const Section& s) const {
        if (auto b = s.keys.find("builtin"); b != s.keys.end())
            return at(b->second, [&] { return functor_call(parse_call(b->second.text)); });
        const Located& pv = key(s, "positions");
        const Label pl = label_at(pv);
        if (pl.kind() != Label::Kind::Tuple) fail_at(pv, "positions must be a list [..]");
        const Carrier positions = at(pv, [&] { return Carrier(pl.children()); });
        const std::size_t n = positions.size();
        auto pos_index = [&](const Located& where, const Label& l) {
            return at(where, [&] { return positions.index_of(l); });
        };
        const Located& uv = key(s, "unit");
        const std::size_t unit = pos_index(uv, label_at(uv));

        std::vector<std::size_t> mul(n * n, SIZE_MAX);
        for (const Entry& e : table(s, "mul")) {
            const Label l = label_at(e.lhs);
            if (l.kind() != Label::Kind::Pair) fail_at(e.lhs, "mul entries are (c,d) -> e");
            const std::size_t i = pos_index(e.lhs, l.first()) * n + pos_index(e.lhs, l.second());
            if (mul[i] != SIZE_MAX) fail_at(e.lhs, "duplicate mul entry");
            mul[i] = pos_index(e.rhs, label_at(e.rhs));
        }
        for (std::size_t i = 0; i < n * n; ++i)
            if (mul[i] == SIZE_MAX)
                fail_at(Located{s.name, s.line, 1}, "mul has no entry for (" + positions[i / n].str() + "," +
                                                        positions[i % n].str() + ")");

        std::vector<Carrier> fibers(n);
        for (const Entry& e : table(s, "fibers")) {
            const std::size_t p = pos_index(e.lhs, label_at(e.lhs));
            const Label f = label_at(e.rhs);
            if (f.kind() != Label::Kind::Tuple) fail_at(e.rhs, "a fiber is a list [..]");
            fibers[p] = at(e.rhs, [&] { return Carrier(f.children()); });
        }
        std::vector<ZipTable> zips(n * n);
        for (std::size_t i = 0; i < n * n; ++i) zips[i].assign(fibers[mul[i]].size(), {SIZE_MAX, SIZE_MAX});
        for (const Entry& e : table(s, "zip")) {
            const Label l = label_at(e.lhs);
            if (l.kind() != Label::Kind::Pair || l.first().kind() != Label::Kind::Pair)
                fail_at(e.lhs, "zip entries are ((c,d),k) -> (i,j)");
            const std::size_t c = pos_index(e.lhs, l.first().first()), d = pos_index(e.lhs, l.first().second());
            const std::size_t cd = c * n + d;
            const std::size_t k = at(e.lhs, [&] { return fibers[mul[cd]].index_of(l.second()); });
            const Label r = label_at(e.rhs);
            if (r.kind() != Label::Kind::Pair) fail_at(e.rhs, "zip values are pairs (i,j)");
            zips[cd][k] = {at(e.rhs, [&] { return fibers[c].index_of(r.first()); }),
                           at(e.rhs, [&] { return fibers[d].index_of(r.second()); })};
        }
        for (std::size_t i = 0; i < n * n; ++i)
            for (std::size_t k = 0; k < zips[i].size(); ++k)
                if (zips[i][k].first == SIZE_MAX)
                    fail_at(Located{s.name, s.line, 1}, "zip has no entry for ((" + positions[i / n].str() + "," +
                                                            positions[i % n].str() + ")," +
                                                            fibers[mul[i]][k].str() + ")");
        std::string spec = s.name;
        if (auto sp = s.keys.find("spec"); sp != s.keys.end()) spec = sp->second.text;
        return at(Located{s.name, s.line, 1}, [&] {
            return std::make_shared<const PolyFunctor>(spec, positions, mul, unit, fibers, zips);
        });
    }

    FunctorRef section_functor(const Section& s) const {
        if (auto f = s.keys.find("functor"); f != s.keys.end())
            return at(f->second, [&] { return functor_call(parse_call(f->second.text)); });
        return nullptr;
    }

    Carrier read_carrier(const Section& s) const {
        const Located& cv = key(s, "carrier");
        const Label cl = label_at(cv);
        if (cl.kind() != Label::Kind::Tuple) fail_at(cv, "carrier must be a list [..]");
        return at(cv, [&] { return Carrier(cl.children()); });
    }

    Algebra read_algebra(const Section& s) const {
        const FunctorRef f = section_functor(s);
        Algebra a = [&] {
            if (auto b = s.keys.find("builtin"); b != s.keys.end())
                return at(b->second, [&] { return builtin_algebra(parse_call(b->second.text), f, lookup()); });
            if (!f) fail_at(Located{s.name, s.line, 1}, "algebra '" + s.name + "' needs a functor");
            const Carrier carrier = read_carrier(s);
            const FLayout layout(*f, carrier.size());
            std::vector<std::size_t> st(layout.size(), SIZE_MAX);
            for (const Entry& e : table(s, "structure")) {
                const Label l = label_at(e.lhs);
                const FElem u = at(e.lhs, [&] { return felem_from_label(*f, carrier, l); });
                const std::size_t i = layout.encode(u);
                if (st[i] != SIZE_MAX) fail_at(e.lhs, "duplicate structure entry");
                st[i] = at(e.rhs, [&] { return carrier.index_of(label_at(e.rhs)); });
            }
            for (std::size_t i = 0; i < st.size(); ++i)
                if (st[i] == SIZE_MAX)
                    fail_at(Located{s.name, s.line, 1},
                            "structure has no entry for " + felem_label(*f, carrier, layout.decode(i)).str());
            return Algebra(f, carrier, std::move(st));
        }();
        if (f && !(a.functor() == *f))
            fail_at(Located{s.name, s.line, 1}, "builtin algebra is over " + a.functor().spec() + ", not " + f->spec());
        a.set_name(s.name);
        return a;
    }

    Coalgebra read_coalgebra(const Section& s) const {
        const FunctorRef f = section_functor(s);
        Coalgebra c = [&] {
            if (auto b = s.keys.find("builtin"); b != s.keys.end())
                return at(b->second, [&] { return builtin_coalgebra(parse_call(b->second.text), f, lookup()); });
            if (!f) fail_at(Located{s.name, s.line, 1}, "coalgebra '" + s.name + "' needs a functor");
            const Carrier carrier = read_carrier(s);
            std::vector<std::optional<FElem>> st(carrier.size());
            for (const Entry& e : table(s, "structure")) {
                const std::size_t x = at(e.lhs, [&] { return carrier.index_of(label_at(e.lhs)); });
                if (st[x]) fail_at(e.lhs, "duplicate structure entry");
                const Label r = label_at(e.rhs);
                st[x] = at(e.rhs, [&] { return felem_from_label(*f, carrier, r); });
            }
            std::vector<FElem> steps;
            for (std::size_t x = 0; x < st.size(); ++x) {
                if (!st[x]) fail_at(Located{s.name, s.line, 1}, "structure has no entry for " + carrier[x].str());
                steps.push_back(*st[x]);
            }
            return Coalgebra(f, carrier, std::move(steps));
        }();
        if (f && !(c.functor() == *f))
            fail_at(Located{s.name, s.line, 1}, "builtin coalgebra is over " + c.functor().spec() + ", not " + f->spec());
        c.set_name(s.name);
        return c;
    }

    NamedMeasuring read_measuring(const Section& s) const {
        const Located& cv = key(s, "C");
        const Located& av = key(s, "A");
        const Located& bv = key(s, "B");
        const FunctorRef f = section_functor(s);
        const Algebra a = at(av, [&] { return algebra(av.text, f); });
        const Algebra b = at(bv, [&] { return algebra(bv.text, a.functor_ref()); });
        const Coalgebra c = at(cv, [&] { return coalgebra(cv.text, a.functor_ref()); });
        std::vector<std::size_t> t(c.size() * a.size(), SIZE_MAX);
        for (const Entry& e : table(s, "table")) {
            const Label l = label_at(e.lhs);
            if (l.kind() != Label::Kind::Pair) fail_at(e.lhs, "table entries are (c,a) -> b");
            const std::size_t i = at(e.lhs, [&] { return c.carrier().index_of(l.first()) * a.size() + a.carrier().index_of(l.second()); });
            if (t[i] != SIZE_MAX) fail_at(e.lhs, "duplicate table entry");
            t[i] = at(e.rhs, [&] { return b.carrier().index_of(label_at(e.rhs)); });
        }
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] == SIZE_MAX)
                fail_at(Located{s.name, s.line, 1}, "table has no entry for (" + c.carrier()[i / a.size()].str() +
                                                        "," + a.carrier()[i % a.size()].str() + ")");
        return NamedMeasuring{cv.text, av.text, bv.text, Measuring{c, a, b, std::move(t)}};
    }

    std::map<std::string, FunctorRef> functors_;
    std::map<std::string, Algebra> algebras_;
    std::map<std::string, Coalgebra> coalgebras_;
    std::map<std::string, NamedMeasuring> measurings_;
    std::vector<Located> commands_;
};

// ---------------------------------------------------------------------------------------------
// Serialization back into workspace sections

inline std::string write_functor(const std::string& name, const PolyFunctor& f) {
    const Carrier& P = f.positions();
    const std::size_t n = P.size();
    std::string out = "[functor " + name + "]\nspec = " + f.spec() + "\npositions = " +
                      Label::tuple({P.begin(), P.end()}).str() + "\nunit = " + P[f.unit()].str() + "\nmul:\n";
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d)
            out += "  " + Label::pair(P[c], P[d]).str() + " -> " + P[f.mul(c, d)].str() + "\n";
    out += "fibers:\n";
    for (std::size_t p = 0; p < n; ++p)
        out += "  " + P[p].str() + " -> " + Label::tuple({f.fiber(p).begin(), f.fiber(p).end()}).str() + "\n";
    out += "zip:\n";
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d) {
            const Carrier& fib = f.fiber(f.mul(c, d));
            for (std::size_t k = 0; k < fib.size(); ++k) {
                const auto [i, j] = f.zip(c, d)[k];
                out += "  " + Label::pair(Label::pair(P[c], P[d]), fib[k]).str() + " -> " +
                       Label::pair(f.fiber(c)[i], f.fiber(d)[j]).str() + "\n";
            }
        }
    return out;
}

inline std::string write_algebra(const std::string& name, const std::string& functor_ref, const Algebra& a) {
    std::string out = "[algebra " + name + "]\nfunctor = " + functor_ref + "\ncarrier = " +
                      Label::tuple({a.carrier().begin(), a.carrier().end()}).str() + "\nstructure:\n";
    for (std::size_t i = 0; i < a.layout().size(); ++i)
        out += "  " + felem_label(a.functor(), a.carrier(), a.layout().decode(i)).str() + " -> " +
               a.carrier()[a.structure()[i]].str() + "\n";
    return out;
}

inline std::string write_coalgebra(const std::string& name, const std::string& functor_ref, const Coalgebra& c) {
    std::string out = "[coalgebra " + name + "]\nfunctor = " + functor_ref + "\ncarrier = " +
                      Label::tuple({c.carrier().begin(), c.carrier().end()}).str() + "\nstructure:\n";
    for (std::size_t x = 0; x < c.size(); ++x)
        out += "  " + c.carrier()[x].str() + " -> " + felem_label(c.functor(), c.carrier(), c.step(x)).str() + "\n";
    return out;
}

inline std::string write_measuring(const std::string& name, const std::string& c_ref, const std::string& a_ref,
                                   const std::string& b_ref, const Measuring& m) {
    std::string out = "[measuring " + name + "]\nC = " + c_ref + "\nA = " + a_ref + "\nB = " + b_ref + "\ntable:\n";
    for (std::size_t c = 0; c < m.C.size(); ++c)
        for (std::size_t a = 0; a < m.A.size(); ++a)
            out += "  " + Label::pair(m.C.carrier()[c], m.A.carrier()[a]).str() + " -> " +
                   m.B.carrier()[m(c, a)].str() + "\n";
    return out;
}

} // namespace pm::io
