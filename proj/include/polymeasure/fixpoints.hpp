#pragma once

#include <bit>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "polymeasure/detail/csp.hpp"
#include "polymeasure/polyfunctor.hpp"

namespace pm {

// (A, α: FA → A) with α stored as a table over FLayout(F, |A|).
class Algebra {
public:
    Algebra(FunctorRef f, Carrier carrier, std::vector<std::size_t> structure, std::string name = {})
        : f_(std::move(f)), carrier_(std::move(carrier)), layout_(*f_, carrier_.size()),
          structure_(std::move(structure)), name_(std::move(name)) {
        if (structure_.size() != layout_.size())
            throw std::invalid_argument("algebra structure must be total on F(A): expected " +
                                        std::to_string(layout_.size()) + " entries, got " +
                                        std::to_string(structure_.size()));
        for (std::size_t v : structure_)
            if (v >= carrier_.size()) throw std::invalid_argument("algebra structure leaves the carrier");
    }

    static Algebra from_map(FunctorRef f, const Map& alpha, std::string name = {}) {
        if (!(alpha.dom() == apply_to_set(*f, alpha.cod())))
            throw std::invalid_argument("structure map domain is not F(carrier)");
        return Algebra(std::move(f), alpha.cod(), {alpha.table().begin(), alpha.table().end()}, std::move(name));
    }

    const PolyFunctor& functor() const noexcept { return *f_; }
    const FunctorRef& functor_ref() const noexcept { return f_; }
    const Carrier& carrier() const noexcept { return carrier_; }
    std::size_t size() const noexcept { return carrier_.size(); }
    const FLayout& layout() const noexcept { return layout_; }
    std::span<const std::size_t> structure() const noexcept { return structure_; }
    const std::string& name() const noexcept { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

    std::size_t act(std::size_t p, std::span<const std::size_t> args) const {
        return structure_[layout_.encode(p, args)];
    }
    std::size_t act(const FElem& e) const { return act(e.position, e.args); }

    Map structure_map() const { return Map(apply_to_set(*f_, carrier_), carrier_, structure_); }

    friend bool operator==(const Algebra& a, const Algebra& b) {
        return *a.f_ == *b.f_ && a.carrier_ == b.carrier_ && a.structure_ == b.structure_;
    }

private:
    FunctorRef f_;
    Carrier carrier_;
    FLayout layout_;
    std::vector<std::size_t> structure_;
    std::string name_;
};

// (C, χ: C → FC)
class Coalgebra {
public:
    Coalgebra(FunctorRef f, Carrier carrier, std::vector<FElem> structure, std::string name = {})
        : f_(std::move(f)), carrier_(std::move(carrier)), structure_(std::move(structure)), name_(std::move(name)) {
        if (structure_.size() != carrier_.size())
            throw std::invalid_argument("coalgebra structure must be total on the carrier");
        for (const FElem& e : structure_) {
            if (e.position >= f_->position_count()) throw std::invalid_argument("coalgebra step has no position");
            if (e.args.size() != f_->arity(e.position))
                throw std::invalid_argument("coalgebra step has wrong arity at position " +
                                            f_->positions()[e.position].str());
            for (std::size_t a : e.args)
                if (a >= carrier_.size()) throw std::invalid_argument("coalgebra step leaves the carrier");
        }
    }

    static Coalgebra from_map(FunctorRef f, const Map& chi, std::string name = {}) {
        if (!(chi.cod() == apply_to_set(*f, chi.dom())))
            throw std::invalid_argument("structure map codomain is not F(carrier)");
        const FLayout l(*f, chi.dom().size());
        std::vector<FElem> s;
        for (std::size_t v : chi.table()) s.push_back(l.decode(v));
        return Coalgebra(std::move(f), chi.dom(), std::move(s), std::move(name));
    }

    const PolyFunctor& functor() const noexcept { return *f_; }
    const FunctorRef& functor_ref() const noexcept { return f_; }
    const Carrier& carrier() const noexcept { return carrier_; }
    std::size_t size() const noexcept { return carrier_.size(); }
    const FElem& step(std::size_t c) const { return structure_[c]; }
    std::span<const FElem> structure() const noexcept { return structure_; }
    const std::string& name() const noexcept { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

    Map structure_map() const {
        const FLayout l(*f_, carrier_.size());
        std::vector<std::size_t> t;
        for (const FElem& e : structure_) t.push_back(l.encode(e));
        return Map(carrier_, apply_to_set(*f_, carrier_), std::move(t));
    }

    friend bool operator==(const Coalgebra& a, const Coalgebra& b) {
        return *a.f_ == *b.f_ && a.carrier_ == b.carrier_ && a.structure_ == b.structure_;
    }

private:
    FunctorRef f_;
    Carrier carrier_;
    std::vector<FElem> structure_;
    std::string name_;
};

// ---------------------------------------------------------------------------------------------
// Terms

using TermId = std::size_t;

struct TermNode {
    std::size_t position = 0;
    std::vector<TermId> children;
    std::optional<Label> variable;
};

// Hash-consed finite F-terms; equal terms share an id.
class TermStore {
public:
    explicit TermStore(FunctorRef f) : f_(std::move(f)) {}

    const PolyFunctor& functor() const noexcept { return *f_; }
    const FunctorRef& functor_ref() const noexcept { return f_; }

    TermId make(std::size_t position, std::span<const TermId> children) {
        if (children.size() != f_->arity(position))
            throw std::invalid_argument("term node arity does not match fiber of " + f_->positions()[position].str());
        std::vector<std::size_t> key{position};
        key.insert(key.end(), children.begin(), children.end());
        if (auto it = index_.find(key); it != index_.end()) return it->second;
        std::size_t h = 0;
        for (TermId c : children) h = std::max(h, heights_[c] + 1);
        nodes_.push_back(TermNode{position, {children.begin(), children.end()}, std::nullopt});
        heights_.push_back(h);
        index_.emplace(std::move(key), nodes_.size() - 1);
        return nodes_.size() - 1;
    }

    TermId variable(const Label& name) {
        if (auto it = vars_.find(name); it != vars_.end()) return it->second;
        nodes_.push_back(TermNode{0, {}, name});
        heights_.push_back(0);
        vars_.emplace(name, nodes_.size() - 1);
        return nodes_.size() - 1;
    }

    const TermNode& node(TermId t) const { return nodes_.at(t); }
    std::size_t height(TermId t) const { return heights_.at(t); }
    std::size_t size() const noexcept { return nodes_.size(); }

    bool closed(TermId t) const {
        const TermNode& n = nodes_.at(t);
        if (n.variable) return false;
        for (TermId c : n.children)
            if (!closed(c)) return false;
        return true;
    }

    // (position, [children]) or var:name
    Label label(TermId t) const {
        const TermNode& n = nodes_.at(t);
        if (n.variable) return Label::tagged("var", *n.variable);
        std::vector<Label> kids;
        for (TermId c : n.children) kids.push_back(label(c));
        return Label::pair(f_->positions()[n.position], Label::tuple(std::move(kids)));
    }

    TermId from_label(const Label& l) {
        if (l.kind() == Label::Kind::Tagged && l.text() == "var") return variable(l.inner());
        if (l.kind() != Label::Kind::Pair || l.second().kind() != Label::Kind::Tuple)
            throw std::invalid_argument("not a term label: " + l.str());
        const std::size_t p = f_->positions().index_of(l.first());
        std::vector<TermId> kids;
        for (const Label& c : l.second().children()) kids.push_back(from_label(c));
        return make(p, kids);
    }

    // position(child, child) with nullary nodes printed bare
    std::string render(TermId t) const {
        const TermNode& n = nodes_.at(t);
        if (n.variable) return "$" + n.variable->str();
        std::string out = f_->positions()[n.position].str();
        if (n.children.empty()) return out;
        out += '(';
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (i) out += ", ";
            out += render(n.children[i]);
        }
        return out + ')';
    }

private:
    FunctorRef f_;
    std::vector<TermNode> nodes_;
    std::vector<std::size_t> heights_;
    std::map<std::vector<std::size_t>, TermId> index_;
    std::map<Label, TermId> vars_;
};

// Bottom-up evaluation; variables are looked up in env (empty env means the term must be closed).
inline std::size_t cata(const TermStore& store, TermId t, const Algebra& a,
                        const std::map<Label, std::size_t>& env = {}) {
    require_same_functor(store.functor(), a.functor());
    std::unordered_map<TermId, std::size_t> memo;
    std::function<std::size_t(TermId)> go = [&](TermId u) -> std::size_t {
        if (auto it = memo.find(u); it != memo.end()) return it->second;
        const TermNode& n = store.node(u);
        std::size_t r;
        if (n.variable) {
            auto it = env.find(*n.variable);
            if (it == env.end()) throw std::invalid_argument("cata: free variable " + n.variable->str());
            r = it->second;
        } else {
            std::vector<std::size_t> args;
            for (TermId c : n.children) args.push_back(go(c));
            r = a.act(n.position, args);
        }
        memo.emplace(u, r);
        return r;
    };
    return go(t);
}

// ---------------------------------------------------------------------------------------------
// Behaviours

struct Behavior {
    bool cut = false;
    std::size_t position = 0;
    std::vector<Behavior> children;
    friend bool operator==(const Behavior&, const Behavior&) = default;
};

inline Behavior unfold(const Coalgebra& c, std::size_t state, std::size_t depth) {
    if (depth == 0) return Behavior{true, 0, {}};
    const FElem& e = c.step(state);
    Behavior b{false, e.position, {}};
    for (std::size_t a : e.args) b.children.push_back(unfold(c, a, depth - 1));
    return b;
}

inline bool is_total(const Behavior& b) {
    if (b.cut) return false;
    for (const Behavior& c : b.children)
        if (!is_total(c)) return false;
    return true;
}

inline std::string render(const PolyFunctor& f, const Behavior& b) {
    if (b.cut) return "...";
    std::string out = f.positions()[b.position].str();
    if (b.children.empty()) return out;
    out += '(';
    for (std::size_t i = 0; i < b.children.size(); ++i) {
        if (i) out += ", ";
        out += render(f, b.children[i]);
    }
    return out + ')';
}

inline std::size_t maybe_position(const PolyFunctor& f, const char* which) {
    if (f.spec() != "maybe") throw std::invalid_argument("index is only defined for the maybe functor, got " + f.spec());
    return f.positions().index_of(Label::symbol(which));
}

// Index in ℕ∞ of a state of a 1 + X coalgebra; nullopt means ∞ (the state sequence cycles).
inline std::optional<std::size_t> maybe_index(const Coalgebra& c, std::size_t state) {
    const std::size_t zero = maybe_position(c.functor(), "zero");
    std::vector<char> seen(c.size(), 0);
    std::size_t steps = 0;
    while (true) {
        const FElem& e = c.step(state);
        if (e.position == zero) return steps;
        if (seen[state]) return std::nullopt;
        seen[state] = 1;
        state = e.args[0];
        ++steps;
    }
}

inline std::string index_str(const std::optional<std::size_t>& i) { return i ? std::to_string(*i) : "inf"; }

// ---------------------------------------------------------------------------------------------
// Homomorphisms

// Returns the first F-element u with h(α(u)) ≠ β(F h(u)).
inline std::optional<FElem> algebra_hom_violation(const Algebra& a, const Algebra& b, std::span<const std::size_t> h) {
    require_same_functor(a.functor(), b.functor());
    for (std::size_t i = 0; i < a.layout().size(); ++i) {
        const FElem u = a.layout().decode(i);
        if (h[a.structure()[i]] != b.act(apply_to_elem(u, h))) return u;
    }
    return std::nullopt;
}

inline bool is_algebra_hom(const Algebra& a, const Algebra& b, std::span<const std::size_t> h) {
    return !algebra_hom_violation(a, b, h);
}

inline std::optional<std::size_t> coalgebra_hom_violation(const Coalgebra& c, const Coalgebra& d,
                                                          std::span<const std::size_t> h) {
    require_same_functor(c.functor(), d.functor());
    for (std::size_t x = 0; x < c.size(); ++x)
        if (!(d.step(h[x]) == apply_to_elem(c.step(x), h))) return x;
    return std::nullopt;
}

inline bool is_coalgebra_hom(const Coalgebra& c, const Coalgebra& d, std::span<const std::size_t> h) {
    return !coalgebra_hom_violation(c, d, h);
}

namespace detail {

inline std::vector<std::size_t> distinct_vars(std::vector<std::size_t> vars, std::vector<std::size_t>& slot) {
    std::vector<std::size_t> uniq;
    slot.resize(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) {
        auto it = std::find(uniq.begin(), uniq.end(), vars[i]);
        slot[i] = static_cast<std::size_t>(it - uniq.begin());
        if (it == uniq.end()) uniq.push_back(vars[i]);
    }
    return uniq;
}

} // namespace detail

// All algebra homomorphisms A → B in lexicographic order of their tables.
inline std::vector<std::vector<std::size_t>> algebra_homs(const Algebra& a, const Algebra& b,
                                                          std::size_t limit = SIZE_MAX) {
    require_same_functor(a.functor(), b.functor());
    detail::Csp csp(std::vector<std::size_t>(a.size(), b.size()));
    for (std::size_t i = 0; i < a.layout().size(); ++i) {
        const FElem u = a.layout().decode(i);
        std::vector<std::size_t> raw{a.structure()[i]};
        raw.insert(raw.end(), u.args.begin(), u.args.end());
        std::vector<std::size_t> slot;
        std::vector<std::size_t> vars = detail::distinct_vars(raw, slot);
        csp.add(vars, [&b, slot, p = u.position](std::span<const std::size_t> v) {
            std::vector<std::size_t> args(slot.size() - 1);
            for (std::size_t k = 1; k < slot.size(); ++k) args[k - 1] = v[slot[k]];
            return v[slot[0]] == b.act(p, args);
        });
    }
    return csp.all(limit);
}

inline std::vector<std::vector<std::size_t>> coalgebra_homs(const Coalgebra& c, const Coalgebra& d,
                                                            std::size_t limit = SIZE_MAX) {
    require_same_functor(c.functor(), d.functor());
    detail::Csp csp(std::vector<std::size_t>(c.size(), d.size()));
    for (std::size_t x = 0; x < c.size(); ++x) {
        const FElem& e = c.step(x);
        std::vector<std::size_t> raw{x};
        raw.insert(raw.end(), e.args.begin(), e.args.end());
        std::vector<std::size_t> slot;
        std::vector<std::size_t> vars = detail::distinct_vars(raw, slot);
        csp.add(vars, [&d, slot, p = e.position](std::span<const std::size_t> v) {
            const FElem& target = d.step(v[slot[0]]);
            if (target.position != p) return false;
            for (std::size_t k = 1; k < slot.size(); ++k)
                if (target.args[k - 1] != v[slot[k]]) return false;
            return true;
        });
    }
    return csp.all(limit);
}

// ---------------------------------------------------------------------------------------------
// Enumeration of small algebras and coalgebras on {0..n-1}

inline double algebra_count(const PolyFunctor& f, std::size_t n) {
    return power(static_cast<double>(n), static_cast<double>(FLayout(f, n).size()));
}

inline double coalgebra_count(const PolyFunctor& f, std::size_t n) {
    return power(static_cast<double>(FLayout(f, n).size()), static_cast<double>(n));
}

// Calls fn for every algebra on n points until fn returns false.
inline void for_each_algebra(const FunctorRef& f, std::size_t n, const std::function<bool(const Algebra&)>& fn) {
    check_guard("algebras on " + std::to_string(n) + " points", algebra_count(*f, n), guards().brute);
    const FLayout l(*f, n);
    const Carrier c = Carrier::range(n);
    if (n == 0) {
        if (l.size() == 0) fn(Algebra(f, c, {}));
        return;
    }
    std::vector<std::size_t> s(l.size(), 0);
    while (true) {
        if (!fn(Algebra(f, c, s))) return;
        std::size_t i = s.size();
        while (i > 0 && ++s[i - 1] == n) s[--i] = 0;
        if (i == 0) return;
    }
}

inline void for_each_coalgebra(const FunctorRef& f, std::size_t n,
                               const std::function<bool(const Coalgebra&)>& fn) {
    check_guard("coalgebras on " + std::to_string(n) + " points", coalgebra_count(*f, n), guards().brute);
    const FLayout l(*f, n);
    const Carrier c = Carrier::range(n);
    std::vector<std::size_t> s(n, 0);
    if (n > 0 && l.size() == 0) return;
    while (true) {
        std::vector<FElem> st;
        for (std::size_t v : s) st.push_back(l.decode(v));
        if (!fn(Coalgebra(f, c, std::move(st)))) return;
        std::size_t i = s.size();
        while (i > 0 && ++s[i - 1] == l.size()) s[--i] = 0;
        if (i == 0) return;
    }
}

inline Algebra random_algebra(const FunctorRef& f, std::size_t n, std::mt19937_64& rng) {
    const FLayout l(*f, n);
    if (n == 0 && l.size() > 0) throw std::invalid_argument("no algebra on the empty set for " + f->spec());
    std::uniform_int_distribution<std::size_t> pick(0, n == 0 ? 0 : n - 1);
    std::vector<std::size_t> s(l.size());
    for (auto& v : s) v = pick(rng);
    return Algebra(f, Carrier::range(n), std::move(s));
}

inline Coalgebra random_coalgebra(const FunctorRef& f, std::size_t n, std::mt19937_64& rng) {
    const FLayout l(*f, n);
    if (n > 0 && l.size() == 0) throw std::invalid_argument("no coalgebra on a nonempty set for " + f->spec());
    std::uniform_int_distribution<std::size_t> pick(0, l.size() == 0 ? 0 : l.size() - 1);
    std::vector<FElem> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(l.decode(pick(rng)));
    return Coalgebra(f, Carrier::range(n), std::move(s));
}

// ---------------------------------------------------------------------------------------------
// Adámek sequences

enum class Direction { Forward, Backward };

struct AdamekResult {
    Direction direction = Direction::Forward;
    std::vector<Carrier> stages;
    // forward: stage k → stage k+1; backward: stage k+1 → stage k
    std::vector<Map> connecting;
    std::optional<std::size_t> stable_stage;
    std::string stop_reason;
    std::optional<Algebra> initial;
    std::optional<Coalgebra> terminal;

    bool stabilized() const noexcept { return stable_stage.has_value(); }
    std::vector<std::size_t> stage_sizes() const {
        std::vector<std::size_t> s;
        for (const Carrier& c : stages) s.push_back(c.size());
        return s;
    }
};

inline AdamekResult adamek(const FunctorRef& f, Direction dir, std::size_t budget) {
    AdamekResult r;
    r.direction = dir;
    const bool fwd = dir == Direction::Forward;
    r.stages.push_back(fwd ? Carrier() : one());
    try {
        r.stages.push_back(apply_to_set(*f, r.stages[0]));
        if (fwd)
            r.connecting.emplace_back(r.stages[0], r.stages[1], std::vector<std::size_t>{});
        else
            r.connecting.emplace_back(r.stages[1], r.stages[0], std::vector<std::size_t>(r.stages[1].size(), 0));
        for (std::size_t k = 0;; ++k) {
            const Map& m = r.connecting[k];
            const MapClass mc = classify_map(m);
            if (mc.injective && mc.surjective) {
                r.stable_stage = k;
                r.stop_reason = "connecting map " + std::to_string(k) + " is bijective";
                std::vector<std::size_t> inverse(m.cod().size());
                for (std::size_t i = 0; i < m.dom().size(); ++i) inverse[m(i)] = i;
                if (fwd) {
                    r.initial.emplace(f, r.stages[k], std::move(inverse), "initial");
                } else {
                    const FLayout l(*f, r.stages[k].size());
                    std::vector<FElem> st;
                    for (std::size_t v : inverse) st.push_back(l.decode(v));
                    r.terminal.emplace(f, r.stages[k], std::move(st), "terminal");
                }
                return r;
            }
            if (k + 1 >= budget) {
                r.stop_reason = "truncated: budget of " + std::to_string(budget) + " steps exhausted";
                return r;
            }
            r.stages.push_back(apply_to_set(*f, r.stages.back()));
            r.connecting.push_back(apply_to_map(*f, m));
        }
    } catch (const GuardError& e) {
        r.stop_reason = "truncated at stage " + std::to_string(r.stages.size()) + ": " + e.what();
    }
    return r;
}

// F^k 1 with structure F^{k+1}1 → F^k 1, the k-th stage of the backward sequence.
inline Algebra power_terminal_algebra(const FunctorRef& f, std::size_t k) {
    Carrier stage = one();
    Map conn(apply_to_set(*f, stage), stage, std::vector<std::size_t>(apply_to_set(*f, stage).size(), 0));
    for (std::size_t i = 0; i < k; ++i) {
        stage = conn.dom();
        conn = apply_to_map(*f, conn);
    }
    return Algebra(f, stage, {conn.table().begin(), conn.table().end()}, "F^" + std::to_string(k) + "1");
}

struct LambekReport {
    bool injective = false;
    bool surjective = false;
    bool unique = true;
    std::size_t checked_up_to = 0;
    std::string witness;
    bool ok() const noexcept { return injective && surjective && unique; }
};

// Structure bijective plus exactly one hom into every algebra on at most k points.
inline LambekReport lambek_check(const Algebra& a, std::size_t k) {
    LambekReport r;
    const MapClass mc = classify_map(a.structure_map());
    r.injective = mc.injective;
    r.surjective = mc.surjective;
    if (!mc.surjective) {
        std::vector<char> hit(a.size(), 0);
        for (std::size_t v : a.structure()) hit[v] = 1;
        for (std::size_t x = 0; x < a.size(); ++x)
            if (!hit[x]) {
                r.witness = "structure map misses " + a.carrier()[x].str();
                break;
            }
    } else if (!mc.injective) {
        std::vector<std::size_t> first(a.size(), SIZE_MAX);
        for (std::size_t i = 0; i < a.layout().size(); ++i) {
            const std::size_t v = a.structure()[i];
            if (first[v] != SIZE_MAX) {
                const Carrier fa = apply_to_set(a.functor(), a.carrier());
                r.witness = "structure map identifies " + fa[first[v]].str() + " and " + fa[i].str();
                break;
            }
            first[v] = i;
        }
    }
    if (!r.injective || !r.surjective) return r;
    for (std::size_t n = 0; n <= k && r.unique; ++n) {
        for_each_algebra(a.functor_ref(), n, [&](const Algebra& b) {
            const std::size_t count = algebra_homs(a, b, 2).size();
            if (count != 1) {
                r.unique = false;
                r.witness = std::to_string(count) + " homs into algebra on " + std::to_string(n) + " points";
                return false;
            }
            return true;
        });
        r.checked_up_to = n;
    }
    return r;
}

inline LambekReport lambek_check(const Coalgebra& c, std::size_t k) {
    LambekReport r;
    const MapClass mc = classify_map(c.structure_map());
    r.injective = mc.injective;
    r.surjective = mc.surjective;
    if (!r.injective || !r.surjective) {
        r.witness = mc.injective ? "structure map is not surjective" : "structure map is not injective";
        return r;
    }
    for (std::size_t n = 0; n <= k && r.unique; ++n) {
        for_each_coalgebra(c.functor_ref(), n, [&](const Coalgebra& d) {
            const std::size_t count = coalgebra_homs(d, c, 2).size();
            if (count != 1) {
                r.unique = false;
                r.witness = std::to_string(count) + " homs from coalgebra on " + std::to_string(n) + " points";
                return false;
            }
            return true;
        });
        r.checked_up_to = n;
    }
    return r;
}

inline LambekReport lambek_check(const AdamekResult& run, std::size_t k) {
    if (!run.stabilized()) throw std::invalid_argument("lambek_check needs a stabilized Adamek run");
    return run.initial ? lambek_check(*run.initial, k) : lambek_check(*run.terminal, k);
}

// ---------------------------------------------------------------------------------------------
// Reachability and preinitial algebras

struct Reachability {
    std::vector<std::size_t> order;         // reached elements, by round then canonical order
    std::vector<char> reached;
    std::vector<std::optional<FElem>> via;  // generating F-element of each reached element
    std::vector<std::size_t> height;

    bool all() const {
        for (char c : reached)
            if (!c) return false;
        return true;
    }
    std::optional<std::size_t> first_unreached() const {
        for (std::size_t i = 0; i < reached.size(); ++i)
            if (!reached[i]) return i;
        return std::nullopt;
    }
};

// Least S with α(F S) ⊆ S, built in rounds so that each element gets a witness of minimal height.
inline Reachability reachability(const Algebra& a) {
    const PolyFunctor& f = a.functor();
    Reachability r;
    r.reached.assign(a.size(), 0);
    r.via.assign(a.size(), std::nullopt);
    r.height.assign(a.size(), SIZE_MAX);
    std::vector<std::size_t> pool;  // reached so far, in discovery order
    std::size_t round = 0;
    std::size_t previous_pool = SIZE_MAX;
    while (pool.size() != previous_pool) {
        previous_pool = pool.size();
        std::vector<std::pair<std::size_t, FElem>> fresh;
        for (std::size_t p = 0; p < f.position_count(); ++p) {
            const std::size_t k = f.arity(p);
            if (k > 0 && pool.empty()) continue;
            std::vector<std::size_t> idx(k, 0);
            while (true) {
                FElem u{p, std::vector<std::size_t>(k)};
                bool touches_new = round == 0;
                for (std::size_t i = 0; i < k; ++i) {
                    u.args[i] = pool[idx[i]];
                    if (r.height[u.args[i]] + 1 == round) touches_new = true;
                }
                if (touches_new) {
                    const std::size_t v = a.act(u);
                    if (!r.reached[v]) {
                        r.reached[v] = 1;
                        r.height[v] = round;
                        r.via[v] = u;
                        fresh.emplace_back(v, u);
                    }
                }
                std::size_t i = k;
                while (i > 0 && ++idx[i - 1] == pool.size()) idx[--i] = 0;
                if (i == 0) break;
            }
        }
        std::sort(fresh.begin(), fresh.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        for (const auto& [v, u] : fresh) {
            pool.push_back(v);
            r.order.push_back(v);
        }
        ++round;
    }
    return r;
}

inline std::vector<std::size_t> reachable_set(const Algebra& a) {
    const Reachability r = reachability(a);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (r.reached[i]) out.push_back(i);
    return out;
}

inline bool is_preinitial(const Algebra& a) { return reachability(a).all(); }

// The canonical closed term denoting a reached element.
inline TermId witness_term(const Reachability& r, std::size_t element, TermStore& store) {
    if (!r.reached.at(element)) throw std::invalid_argument("element is not reachable");
    const FElem& u = *r.via[element];
    std::vector<TermId> kids;
    for (std::size_t c : u.args) kids.push_back(witness_term(r, c, store));
    return store.make(u.position, kids);
}

// ---------------------------------------------------------------------------------------------
// Bisimulation and subterminal coalgebras

struct Partition {
    std::vector<std::size_t> class_of;
    std::vector<std::vector<std::size_t>> classes;
    bool discrete() const noexcept { return classes.size() == class_of.size(); }
};

// Coarsest bisimulation. Class ids are assigned in order of first member.
inline Partition bisim_partition(const Coalgebra& c) {
    const std::size_t n = c.size();
    std::vector<std::size_t> cls(n, 0);
    std::size_t count = n == 0 ? 0 : 1;
    while (true) {
        std::map<std::vector<std::size_t>, std::size_t> ids;
        std::vector<std::size_t> next(n);
        for (std::size_t x = 0; x < n; ++x) {
            const FElem& e = c.step(x);
            std::vector<std::size_t> sig{cls[x], e.position};
            for (std::size_t a : e.args) sig.push_back(cls[a]);
            next[x] = ids.emplace(std::move(sig), ids.size()).first->second;
        }
        cls = std::move(next);
        if (ids.size() == count) break;
        count = ids.size();
    }
    Partition p;
    p.class_of = cls;
    p.classes.resize(count);
    for (std::size_t x = 0; x < n; ++x) p.classes[cls[x]].push_back(x);
    return p;
}

inline bool is_subterminal(const Coalgebra& c) { return bisim_partition(c).discrete(); }

inline bool is_bisimulation(const Coalgebra& c, std::span<const std::pair<std::size_t, std::size_t>> relation) {
    std::set<std::pair<std::size_t, std::size_t>> r(relation.begin(), relation.end());
    for (auto [x, y] : relation) {
        const FElem& ex = c.step(x);
        const FElem& ey = c.step(y);
        if (ex.position != ey.position) return false;
        for (std::size_t i = 0; i < ex.args.size(); ++i)
            if (!r.count({ex.args[i], ey.args[i]})) return false;
    }
    return true;
}

inline Coalgebra coproduct_coalgebra(const Coalgebra& c, const Coalgebra& d) {
    require_same_functor(c.functor(), d.functor());
    const Coproduct cp = mk_coproduct(c.carrier(), d.carrier());
    std::vector<FElem> st(cp.carrier.size());
    for (std::size_t x = 0; x < c.size(); ++x) st[cp.inl(x)] = apply_to_elem(c.step(x), cp.inl.table());
    for (std::size_t y = 0; y < d.size(); ++y) st[cp.inr(y)] = apply_to_elem(d.step(y), cp.inr.table());
    return Coalgebra(c.functor_ref(), cp.carrier, std::move(st), c.name() + "+" + d.name());
}

// ---------------------------------------------------------------------------------------------
// Subcoalgebras and quotient algebras

struct Subcoalgebra {
    std::vector<std::size_t> members;
    Coalgebra coalgebra;
};

inline Coalgebra restrict_coalgebra(const Coalgebra& c, std::span<const std::size_t> members) {
    std::vector<std::size_t> pos(c.size(), SIZE_MAX);
    std::vector<Label> labels;
    for (std::size_t i = 0; i < members.size(); ++i) {
        pos[members[i]] = i;
        labels.push_back(c.carrier()[members[i]]);
    }
    std::vector<FElem> st;
    for (std::size_t m : members) {
        FElem e = c.step(m);
        for (auto& a : e.args) {
            if (pos[a] == SIZE_MAX) throw std::invalid_argument("subset is not closed under the structure map");
            a = pos[a];
        }
        st.push_back(std::move(e));
    }
    return Coalgebra(c.functor_ref(), Carrier(std::move(labels)), std::move(st));
}

// All χ-closed subsets, ordered by size and then lexicographically.
inline std::vector<Subcoalgebra> subcoalgebras(const Coalgebra& c) {
    const std::size_t n = c.size();
    check_guard("subcoalgebra carrier size", static_cast<double>(n), guards().subcoalgebras);
    std::vector<std::uint32_t> succ(n, 0);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t a : c.step(x).args) succ[x] |= std::uint32_t{1} << a;
    std::vector<std::uint32_t> closed;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        const auto m = static_cast<std::uint32_t>(mask);
        bool ok = true;
        for (std::size_t x = 0; x < n && ok; ++x)
            if ((m >> x & 1) && (succ[x] & ~m)) ok = false;
        if (ok) closed.push_back(m);
    }
    auto members_of = [n](std::uint32_t m) {
        std::vector<std::size_t> v;
        for (std::size_t x = 0; x < n; ++x)
            if (m >> x & 1) v.push_back(x);
        return v;
    };
    std::sort(closed.begin(), closed.end(), [&](std::uint32_t a, std::uint32_t b) {
        const int pa = std::popcount(a), pb = std::popcount(b);
        if (pa != pb) return pa < pb;
        return members_of(a) < members_of(b);
    });
    std::vector<Subcoalgebra> out;
    for (std::uint32_t m : closed) {
        std::vector<std::size_t> mem = members_of(m);
        Coalgebra sub = restrict_coalgebra(c, mem);
        out.push_back(Subcoalgebra{std::move(mem), std::move(sub)});
    }
    return out;
}

struct Quotient {
    Algebra algebra;
    Map projection;
};

// Smallest congruence containing the pairs; classes are named by their least member.
inline Quotient quotient_algebra(const Algebra& a, std::span<const std::pair<std::size_t, std::size_t>> pairs) {
    DisjointSets ds(a.size());
    for (auto [x, y] : pairs) ds.unite(x, y);
    bool changed = true;
    while (changed) {
        changed = false;
        std::map<std::vector<std::size_t>, std::size_t> seen;
        for (std::size_t i = 0; i < a.layout().size(); ++i) {
            const FElem u = a.layout().decode(i);
            std::vector<std::size_t> key{u.position};
            for (std::size_t x : u.args) key.push_back(ds.find(x));
            const std::size_t v = a.structure()[i];
            auto [it, fresh] = seen.emplace(std::move(key), v);
            if (!fresh && ds.find(it->second) != ds.find(v)) {
                ds.unite(it->second, v);
                changed = true;
            }
        }
    }
    std::vector<std::size_t> rep_index(a.size(), SIZE_MAX);
    std::vector<Label> labels;
    std::vector<std::size_t> reps;
    for (std::size_t x = 0; x < a.size(); ++x)
        if (ds.find(x) == x) {
            rep_index[x] = labels.size();
            labels.push_back(a.carrier()[x]);
            reps.push_back(x);
        }
    Carrier qc(labels);  // representatives are already in canonical order
    std::vector<std::size_t> proj(a.size());
    for (std::size_t x = 0; x < a.size(); ++x) proj[x] = rep_index[ds.find(x)];
    const FLayout ql(a.functor(), qc.size());
    std::vector<std::size_t> st(ql.size());
    for (std::size_t i = 0; i < ql.size(); ++i) {
        FElem u = ql.decode(i);
        for (auto& x : u.args) x = reps[x];
        st[i] = proj[a.act(u)];
    }
    Algebra q(a.functor_ref(), qc, std::move(st), a.name() + "/~");
    return Quotient{std::move(q), Map(a.carrier(), qc, std::move(proj))};
}

// ---------------------------------------------------------------------------------------------
// Relabelling along a bijection of carriers

inline Algebra relabel(const Algebra& a, const std::function<Label(const Label&)>& rename, std::string name = {}) {
    std::vector<Label> labels;
    for (const Label& l : a.carrier()) labels.push_back(rename(l));
    const Carrier c(labels);
    std::vector<std::size_t> to(a.size());
    for (std::size_t x = 0; x < a.size(); ++x) to[x] = c.index_of(labels[x]);
    std::vector<std::size_t> from(a.size());
    for (std::size_t x = 0; x < a.size(); ++x) from[to[x]] = x;
    const FLayout l(a.functor(), c.size());
    std::vector<std::size_t> st(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) st[i] = to[a.act(apply_to_elem(l.decode(i), from))];
    return Algebra(a.functor_ref(), c, std::move(st), name.empty() ? a.name() : std::move(name));
}

inline Coalgebra relabel(const Coalgebra& co, const std::function<Label(const Label&)>& rename, std::string name = {}) {
    std::vector<Label> labels;
    for (const Label& l : co.carrier()) labels.push_back(rename(l));
    const Carrier c(labels);
    std::vector<std::size_t> to(co.size());
    for (std::size_t x = 0; x < co.size(); ++x) to[x] = c.index_of(labels[x]);
    std::vector<FElem> st(co.size());
    for (std::size_t x = 0; x < co.size(); ++x) st[to[x]] = apply_to_elem(co.step(x), to);
    return Coalgebra(co.functor_ref(), c, std::move(st), name.empty() ? co.name() : std::move(name));
}

// ---------------------------------------------------------------------------------------------
// Stock objects

// 𝕟 = {0..n}, zero ↦ 0, succ i ↦ min(i+1, n)
inline Algebra std_alg(std::size_t n) {
    const FunctorRef f = maybe_f();
    const std::size_t zero = maybe_position(*f, "zero"), succ = maybe_position(*f, "succ");
    const Carrier c = Carrier::range(n + 1);
    const FLayout l(*f, c.size());
    std::vector<std::size_t> st(l.size());
    st[l.encode(zero, {})] = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        const std::size_t arg[] = {i};
        st[l.encode(succ, arg)] = std::min(i + 1, n);
    }
    return Algebra(f, c, std::move(st), "std_alg(" + std::to_string(n) + ")");
}

// 𝕟° = {0..n}, 0 ↦ zero, i ↦ succ(i-1)
inline Coalgebra std_coalg(std::size_t n) {
    const FunctorRef f = maybe_f();
    const std::size_t zero = maybe_position(*f, "zero"), succ = maybe_position(*f, "succ");
    std::vector<FElem> st;
    st.push_back(FElem{zero, {}});
    for (std::size_t i = 1; i <= n; ++i) st.push_back(FElem{succ, {i - 1}});
    return Coalgebra(f, Carrier::range(n + 1), std::move(st), "std_coalg(" + std::to_string(n) + ")");
}

// {0..K} ∪ {inf}: the predecessor chain up to K with a self-looping inf
inline Coalgebra nat_inf_truncation(std::size_t k) {
    const FunctorRef f = maybe_f();
    const std::size_t zero = maybe_position(*f, "zero"), succ = maybe_position(*f, "succ");
    std::vector<Label> labels;
    for (std::size_t i = 0; i <= k; ++i) labels.push_back(Label::nat(i));
    labels.push_back(Label::symbol("inf"));
    const Carrier c(labels);
    std::vector<FElem> st(c.size());
    for (std::size_t i = 0; i <= k; ++i)
        st[c.index_of(Label::nat(i))] = i == 0 ? FElem{zero, {}} : FElem{succ, {c.index_of(Label::nat(i - 1))}};
    const std::size_t inf = c.index_of(Label::symbol("inf"));
    st[inf] = FElem{succ, {inf}};
    return Coalgebra(f, c, std::move(st), "nat_inf(" + std::to_string(k) + ")");
}

// 𝕀 with structure η
inline Coalgebra unit_coalgebra(const FunctorRef& f) {
    return Coalgebra(f, one(), {eta_elem(*f)}, "unit");
}

inline Coalgebra empty_coalgebra(const FunctorRef& f) { return Coalgebra(f, Carrier(), {}, "empty"); }

inline Algebra terminal_algebra(const FunctorRef& f) {
    return Algebra(f, one(), std::vector<std::size_t>(FLayout(*f, 1).size(), 0), "terminal");
}

// Absorbing nullary position, the "empty" constructor of 1 + ... functors.
inline std::optional<std::size_t> absorbing_zero(const PolyFunctor& f) {
    for (std::size_t z = 0; z < f.position_count(); ++z) {
        if (f.arity(z) != 0) continue;
        bool absorbs = true;
        for (std::size_t q = 0; q < f.position_count() && absorbs; ++q)
            absorbs = f.mul(z, q) == z && f.mul(q, z) == z;
        if (absorbs) return z;
    }
    return std::nullopt;
}

namespace detail {

inline std::size_t require_zero(const PolyFunctor& f) {
    auto z = absorbing_zero(f);
    if (!z) throw std::invalid_argument(f.spec() + " has no absorbing nullary position to truncate at");
    return *z;
}

inline Label truncate_term(const PolyFunctor& f, const Label& zero_term, const Label& t, std::size_t depth) {
    if (t == zero_term) return t;
    if (depth == 0) return zero_term;
    std::vector<Label> kids;
    for (const Label& c : t.second().children()) kids.push_back(truncate_term(f, zero_term, c, depth - 1));
    return Label::pair(t.first(), Label::tuple(std::move(kids)));
}

inline std::vector<Label> terms_up_to(const PolyFunctor& f, std::size_t zero, std::size_t depth) {
    const Label zero_term = Label::pair(f.positions()[zero], Label::tuple({}));
    std::vector<Label> level{zero_term};
    for (std::size_t d = 0; d < depth; ++d) {
        std::vector<Label> next{zero_term};
        for (std::size_t p = 0; p < f.position_count(); ++p) {
            if (p == zero) continue;
            const std::size_t k = f.arity(p);
            check_size("depth-" + std::to_string(d + 1) + " terms",
                       static_cast<double>(next.size()) +
                           power(static_cast<double>(level.size()), static_cast<double>(k)));
            const FunctionCodec codec(k, level.size());
            for (std::size_t code = 0; code < codec.count(); ++code)
                next.push_back(Label::pair(f.positions()[p], function_label(Carrier(level), codec.decode(code))));
        }
        level = std::move(next);
    }
    return level;
}

} // namespace detail

// Terms of depth ≤ n with structure "build, then cut back to depth n" (𝕟, X*ₙ, T_{X,n}, S_{X,n}).
inline Algebra truncated_algebra(const FunctorRef& f, std::size_t n) {
    const std::size_t zero = detail::require_zero(*f);
    const Label zero_term = Label::pair(f->positions()[zero], Label::tuple({}));
    const Carrier c(detail::terms_up_to(*f, zero, n));
    const FLayout l(*f, c.size());
    std::vector<std::size_t> st(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) {
        const FElem u = l.decode(i);
        const Label built = Label::pair(f->positions()[u.position], function_label(c, u.args));
        st[i] = c.index_of(detail::truncate_term(*f, zero_term, built, n));
    }
    return Algebra(f, c, std::move(st), "trunc_alg(" + std::to_string(n) + ")");
}

// The same carrier with the destructor as structure: the dual subterminal coalgebra.
inline Coalgebra truncated_coalgebra(const FunctorRef& f, std::size_t n) {
    const std::size_t zero = detail::require_zero(*f);
    const Carrier c(detail::terms_up_to(*f, zero, n));
    std::vector<FElem> st;
    for (const Label& t : c) {
        FElem e{f->positions().index_of(t.first()), {}};
        for (const Label& kid : t.second().children()) e.args.push_back(c.index_of(kid));
        st.push_back(std::move(e));
    }
    return Coalgebra(f, c, std::move(st), "trunc_coalg(" + std::to_string(n) + ")");
}

// The element s_n: unit position all the way down to depth n, then zero.
inline Label spine_term(const PolyFunctor& f, std::size_t n) {
    const std::size_t zero = detail::require_zero(f);
    Label t = Label::pair(f.positions()[zero], Label::tuple({}));
    for (std::size_t k = 0; k < n; ++k)
        t = Label::pair(f.positions()[f.unit()], Label::tuple(std::vector<Label>(f.arity(f.unit()), t)));
    return t;
}

namespace detail {

// list term label → [x1, ..., xk]
inline Label list_term_to_tuple(const Label& t) {
    std::vector<Label> items;
    const Label* cur = &t;
    while (cur->first().kind() == Label::Kind::Tagged) {
        items.push_back(cur->first().inner());
        cur = &cur->second().children()[0];
    }
    return Label::tuple(std::move(items));
}

} // namespace detail

// X*ₙ: lists of length ≤ n, α(x, xs) = take n (x : xs)
inline Algebra list_alg(const CommMonoid& m, std::size_t n) {
    return relabel(truncated_algebra(list_f(m), n), detail::list_term_to_tuple,
                   "list_alg(" + m.name + "," + std::to_string(n) + ")");
}

inline Coalgebra list_coalg(const CommMonoid& m, std::size_t n) {
    return relabel(truncated_coalgebra(list_f(m), n), detail::list_term_to_tuple,
                   "list_coalg(" + m.name + "," + std::to_string(n) + ")");
}

inline Algebra tree_alg(const FunctorRef& f, std::size_t n) {
    Algebra a = truncated_algebra(f, n);
    a.set_name("tree_alg(" + f->spec() + "," + std::to_string(n) + ")");
    return a;
}

inline Coalgebra tree_coalg(const FunctorRef& f, std::size_t n) {
    Coalgebra c = truncated_coalgebra(f, n);
    c.set_name("tree_coalg(" + f->spec() + "," + std::to_string(n) + ")");
    return c;
}

// Lengths {0..n}: nil ↦ 0, cons(x, l) ↦ min(l+1, n)
inline Algebra length_alg(const CommMonoid& m, std::size_t n) {
    const FunctorRef f = list_f(m);
    const Carrier c = Carrier::range(n + 1);
    const FLayout l(*f, c.size());
    std::vector<std::size_t> st(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) {
        const FElem u = l.decode(i);
        st[i] = u.args.empty() ? 0 : std::min(u.args[0] + 1, n);
    }
    return Algebra(f, c, std::move(st), "length_alg(" + m.name + "," + std::to_string(n) + ")");
}

} // namespace pm
