#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "polymeasure/measuring.hpp"

namespace pm {

// ---------------------------------------------------------------------------------------------
// Subcoalgebras of the terminal 1 + X coalgebra ℕ∞, i.e. predecessor-closed index sets.

struct MaybeSubterminal {
    std::size_t chain = 0;    // finite indices 0..chain-1
    bool all_finite = false;  // every finite index (chain is then ignored)
    bool infinity = false;

    static MaybeSubterminal empty() { return {}; }
    static MaybeSubterminal standard(std::size_t n) { return {n + 1, false, false}; }
    static MaybeSubterminal unit_inf() { return {0, false, true}; }
    static MaybeSubterminal naturals() { return {0, true, false}; }
    static MaybeSubterminal terminal() { return {0, true, true}; }

    bool contains(const std::optional<std::size_t>& index) const {
        if (!index) return infinity;
        return all_finite || *index < chain;
    }
    bool finite() const noexcept { return !all_finite; }
    std::size_t size() const {
        if (all_finite) throw std::logic_error("infinite subterminal has no size");
        return chain + (infinity ? 1 : 0);
    }

    // empty | chain | unit | chain+unit | naturals | terminal
    std::string family() const {
        if (all_finite) return infinity ? "terminal" : "naturals";
        if (chain == 0) return infinity ? "unit" : "empty";
        return infinity ? "chain+unit" : "chain";
    }

    std::string name() const {
        if (all_finite) return infinity ? "Ninf" : "N-";
        std::string out;
        if (chain > 0) out = "std_coalg(" + std::to_string(chain - 1) + ")";
        if (infinity) out += out.empty() ? "I_inf" : "+I_inf";
        return out.empty() ? "empty" : out;
    }

    // Finite members as coalgebras on {0..chain-1} ∪ {inf}.
    Coalgebra realize() const {
        if (all_finite) throw std::invalid_argument(name() + " is infinite and has no finite carrier");
        const FunctorRef f = maybe_f();
        const std::size_t zero = maybe_position(*f, "zero"), succ = maybe_position(*f, "succ");
        std::vector<Label> labels;
        for (std::size_t i = 0; i < chain; ++i) labels.push_back(Label::nat(i));
        if (infinity) labels.push_back(Label::symbol("inf"));
        const Carrier c(labels);
        std::vector<FElem> st(c.size());
        for (std::size_t i = 0; i < chain; ++i)
            st[c.index_of(Label::nat(i))] = i == 0 ? FElem{zero, {}} : FElem{succ, {c.index_of(Label::nat(i - 1))}};
        if (infinity) {
            const std::size_t inf = c.index_of(Label::symbol("inf"));
            st[inf] = FElem{succ, {inf}};
        }
        return Coalgebra(f, c, std::move(st), name());
    }

    friend bool operator==(const MaybeSubterminal& a, const MaybeSubterminal& b) {
        if (a.all_finite != b.all_finite || a.infinity != b.infinity) return false;
        return a.all_finite || a.chain == b.chain;
    }
};

inline bool maybe_leq(const MaybeSubterminal& x, const MaybeSubterminal& y) {
    const bool finite_part = x.all_finite ? y.all_finite : (y.all_finite || x.chain <= y.chain);
    return finite_part && (!x.infinity || y.infinity);
}

// The index set of a subterminal 1 + X coalgebra.
inline MaybeSubterminal classify_maybe_subterminal(const Coalgebra& c) {
    if (!is_subterminal(c)) throw std::invalid_argument(c.name() + " is not subterminal");
    MaybeSubterminal s;
    for (std::size_t x = 0; x < c.size(); ++x) {
        const auto i = maybe_index(c, x);
        if (i)
            s.chain = std::max(s.chain, *i + 1);
        else
            s.infinity = true;
    }
    return s;
}

// ---------------------------------------------------------------------------------------------
// Functions on a Maybe subterminal and the convolution algebra [S, B] for infinite S.

// Values at indices 0..prefix-1, then `tail` at every further finite index, then `at_inf`.
struct MaybeFunction {
    std::vector<std::size_t> prefix;
    std::optional<std::size_t> tail;
    std::optional<std::size_t> at_inf;
    friend bool operator==(const MaybeFunction&, const MaybeFunction&) = default;
};

class MaybeConvolution {
public:
    MaybeConvolution(MaybeSubterminal domain, const Algebra& b)
        : dom_(domain), b_(b), zero_(maybe_position(b.functor(), "zero")), succ_(maybe_position(b.functor(), "succ")) {}

    const MaybeSubterminal& domain() const noexcept { return dom_; }

    std::size_t zero_b() const { return b_.act(zero_, {}); }
    std::size_t succ_b(std::size_t y) const {
        const std::size_t arg[] = {y};
        return b_.act(succ_, arg);
    }

    std::size_t at(const MaybeFunction& g, const std::optional<std::size_t>& index) const {
        if (!dom_.contains(index)) throw std::out_of_range("index outside the domain");
        if (!index) return *g.at_inf;
        return *index < g.prefix.size() ? g.prefix[*index] : *g.tail;
    }

    // 0 of [S,B]: the constant 0_B
    MaybeFunction zero() const {
        return tabulate([&](const std::optional<std::size_t>&) { return zero_b(); }, 0);
    }

    // succ of [S,B]: c ↦ 0_B at index 0, s_B(g(c-1)) elsewhere, s_B(g(∞)) at ∞
    MaybeFunction succ(const MaybeFunction& g) const {
        const std::size_t horizon = g.prefix.size() + 1;
        return tabulate(
            [&](const std::optional<std::size_t>& i) {
                if (!i) return succ_b(at(g, std::nullopt));
                return *i == 0 ? zero_b() : succ_b(at(g, *i - 1));
            },
            horizon);
    }

    MaybeFunction numeral(std::size_t n) const {
        MaybeFunction g = zero();
        for (std::size_t k = 0; k < n; ++k) g = succ(g);
        return g;
    }

    // g must be constant on the finite indices ≥ horizon.
    MaybeFunction tabulate(const std::function<std::size_t(const std::optional<std::size_t>&)>& g,
                           std::size_t horizon) const {
        MaybeFunction out;
        const std::size_t n = dom_.all_finite ? horizon : dom_.chain;
        for (std::size_t i = 0; i < n; ++i) out.prefix.push_back(g(i));
        if (dom_.all_finite) {
            out.tail = g(horizon);
            while (!out.prefix.empty() && out.prefix.back() == *out.tail) out.prefix.pop_back();
        }
        if (dom_.infinity) out.at_inf = g(std::nullopt);
        return out;
    }

    std::string show(const MaybeFunction& g) const {
        std::string out = "[";
        for (std::size_t i = 0; i < g.prefix.size(); ++i) {
            if (i) out += ", ";
            out += b_.carrier()[g.prefix[i]].str();
        }
        if (g.tail) out += std::string(g.prefix.empty() ? "" : ", ") + b_.carrier()[*g.tail].str() + "...";
        out += "]";
        if (g.at_inf) out += " inf:" + b_.carrier()[*g.at_inf].str();
        return out;
    }

private:
    MaybeSubterminal dom_;
    const Algebra& b_;
    std::size_t zero_;
    std::size_t succ_;
};

// k_B = s_B^k(0_B)
inline std::size_t maybe_numeral(const Algebra& b, std::size_t k) {
    const std::size_t zero = maybe_position(b.functor(), "zero"), succ = maybe_position(b.functor(), "succ");
    std::size_t v = b.act(zero, {});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t arg[] = {v};
        v = b.act(succ, arg);
    }
    return v;
}

// ---------------------------------------------------------------------------------------------
// Subterminal descriptors

struct TerminalSymbol {
    FunctorRef functor;
};

using Subterminal = std::variant<MaybeSubterminal, Coalgebra, TerminalSymbol>;

inline std::string subterminal_name(const Subterminal& s) {
    if (const auto* m = std::get_if<MaybeSubterminal>(&s)) return m->name();
    if (const auto* c = std::get_if<Coalgebra>(&s)) return c->name();
    return "terminal";
}

inline std::size_t max_height(const Reachability& r) {
    std::size_t h = 0;
    for (std::size_t i = 0; i < r.height.size(); ++i)
        if (r.reached[i]) h = std::max(h, r.height[i]);
    return h;
}

inline Reachability require_preinitial(const Algebra& a) {
    Reachability r = reachability(a);
    if (!r.all())
        throw std::invalid_argument(a.name() + " is not preinitial (element " +
                                    a.carrier()[*r.first_unreached()].str() +
                                    " is unreachable); use verify_universal with an explicit candidate");
    return r;
}

namespace detail {

// Per-state truth of the measuring square.
template <class Target>
std::vector<char> good_states(const Coalgebra& c, const Algebra& a, const Target& b,
                              std::span<const typename Target::value_type> table) {
    const PolyFunctor& f = a.functor();
    auto phi = [&](std::size_t x, std::size_t y) { return table[x * a.size() + y]; };
    std::vector<char> good(c.size(), 1);
    for (std::size_t x = 0; x < c.size(); ++x) {
        const FElem& step = c.step(x);
        for (std::size_t i = 0; i < a.layout().size() && good[x]; ++i) {
            const FElem u = a.layout().decode(i);
            good[x] = phi(x, a.structure()[i]) == b.act(f.mul(step.position, u.position), measuring_args(f, step, u, phi));
        }
    }
    return good;
}

// Forced rows φ(k, -) of a 1 + X measuring along the indices of ℕ∞.
template <class Target>
struct MaybeRows {
    using V = typename Target::value_type;
    std::vector<std::vector<V>> rows;  // k = 0..H+2; constant from H+1 on
    std::vector<char> good;            // square at index k
    std::vector<V> inf_row;
    bool inf_good = false;
};

template <class Target>
MaybeRows<Target> maybe_rows(const Algebra& a, const Target& b, const Reachability& r) {
    using V = typename Target::value_type;
    const PolyFunctor& f = a.functor();
    const FElem at_zero{maybe_position(f, "zero"), {}};
    const FElem at_succ{maybe_position(f, "succ"), {0}};

    // prev == nullptr: the predecessor is the row itself (the index ∞)
    auto row_from = [&](const FElem& step, const std::vector<V>* prev) {
        std::vector<std::optional<V>> cur(a.size());
        auto phi = [&](std::size_t, std::size_t z) { return prev ? (*prev)[z] : *cur[z]; };
        for (std::size_t y : r.order) {
            const FElem& u = *r.via[y];
            cur[y] = b.act(f.mul(step.position, u.position), measuring_args(f, step, u, phi));
        }
        std::vector<V> out;
        for (auto& v : cur) out.push_back(*v);
        return out;
    };
    auto holds = [&](const FElem& step, const std::vector<V>& row, const std::vector<V>& prev) {
        auto phi = [&](std::size_t, std::size_t z) { return prev[z]; };
        for (std::size_t i = 0; i < a.layout().size(); ++i) {
            const FElem u = a.layout().decode(i);
            if (!(row[a.structure()[i]] == b.act(f.mul(step.position, u.position), measuring_args(f, step, u, phi))))
                return false;
        }
        return true;
    };

    MaybeRows<Target> out;
    const std::size_t last = max_height(r) + 2;
    out.rows.push_back(row_from(at_zero, nullptr));
    out.good.push_back(holds(at_zero, out.rows[0], out.rows[0]));
    for (std::size_t k = 1; k <= last; ++k) {
        out.rows.push_back(row_from(at_succ, &out.rows[k - 1]));
        out.good.push_back(holds(at_succ, out.rows[k], out.rows[k - 1]));
    }
    out.inf_row = row_from(at_succ, nullptr);
    out.inf_good = holds(at_succ, out.inf_row, out.inf_row);
    return out;
}

template <class Target>
MaybeSubterminal maximal_maybe(const MaybeRows<Target>& rows) {
    MaybeSubterminal s;
    const auto bad = std::find(rows.good.begin(), rows.good.end(), 0);
    if (bad == rows.good.end())
        s.all_finite = true;
    else
        s.chain = static_cast<std::size_t>(bad - rows.good.begin());
    s.infinity = rows.inf_good;
    if (s.all_finite && !s.infinity) throw std::logic_error("every finite index measures but infinity does not");
    return s;
}

template <class Target>
bool measures_into(const Subterminal& s, const Algebra& a, const Target& b, const Reachability& r) {
    if (const auto* m = std::get_if<MaybeSubterminal>(&s)) {
        const MaybeRows<Target> rows = maybe_rows(a, b, r);
        if (m->infinity && !rows.inf_good) return false;
        const std::size_t upto = m->all_finite ? rows.good.size() : std::min(m->chain, rows.good.size());
        for (std::size_t k = 0; k < upto; ++k)
            if (!rows.good[k]) return false;
        // indices beyond H+2 behave like H+2
        return m->all_finite || m->chain <= rows.good.size() || rows.good.back();
    }
    if (const auto* c = std::get_if<Coalgebra>(&s)) return forced_measuring(*c, a, b, r).ok();
    // a behaviour only matters down to depth H+2
    return forced_measuring(truncated_coalgebra(a.functor_ref(), max_height(r) + 2), a, b, r).ok();
}

} // namespace detail

// x ⊑ y: x embeds into y as a subcoalgebra of the terminal coalgebra.
inline bool subterminal_leq(const Subterminal& x, const Subterminal& y) {
    if (std::holds_alternative<TerminalSymbol>(y)) return true;
    if (const auto* ym = std::get_if<MaybeSubterminal>(&y)) {
        if (const auto* xm = std::get_if<MaybeSubterminal>(&x)) return maybe_leq(*xm, *ym);
        if (const auto* xc = std::get_if<Coalgebra>(&x)) return maybe_leq(classify_maybe_subterminal(*xc), *ym);
        return ym->all_finite && ym->infinity;
    }
    const Coalgebra& yc = std::get<Coalgebra>(y);
    if (const auto* xm = std::get_if<MaybeSubterminal>(&x))
        return xm->finite() && !coalgebra_homs(xm->realize(), yc, 1).empty();
    if (const auto* xc = std::get_if<Coalgebra>(&x)) return !coalgebra_homs(*xc, yc, 1).empty();
    return false;
}

// ---------------------------------------------------------------------------------------------
// Universal measuring coalgebra for a preinitial domain

struct UniversalResult {
    Subterminal universal;
    std::vector<char> measures;          // per universe member
    std::optional<std::size_t> member;   // index of the chosen member, if a universe was searched
};

// Chain of truncations X_0° ⊑ X_1° ⊑ ... ⊑ X_depth° plus the terminal coalgebra.
inline std::vector<Subterminal> truncation_universe(const FunctorRef& f, std::size_t depth) {
    std::vector<Subterminal> u;
    for (std::size_t k = 0; k <= depth; ++k) u.emplace_back(truncated_coalgebra(f, k));
    u.emplace_back(TerminalSymbol{f});
    return u;
}

template <class Target>
UniversalResult universal_measuring_into(const Algebra& a, const Target& b, const std::vector<Subterminal>& universe) {
    const Reachability r = require_preinitial(a);
    UniversalResult out{Subterminal(MaybeSubterminal::empty()), {}, std::nullopt};
    for (const Subterminal& s : universe) out.measures.push_back(detail::measures_into(s, a, b, r));
    for (std::size_t i = 0; i < universe.size(); ++i) {
        if (!out.measures[i]) continue;
        bool top = true;
        for (std::size_t j = 0; j < universe.size() && top; ++j)
            if (out.measures[j] && j != i) top = subterminal_leq(universe[j], universe[i]);
        if (top) {
            out.member = i;
            out.universal = universe[i];
            return out;
        }
    }
    if (std::find(out.measures.begin(), out.measures.end(), 1) != out.measures.end())
        throw std::runtime_error("the measuring members of the universe have no maximum");
    out.universal = Subterminal(empty_coalgebra(a.functor_ref()));
    return out;
}

// Maybe: exact maximum over all subterminals. Functors with an absorbing zero: the truncation chain
// up to depth H+2 and the terminal coalgebra.
template <class Target>
UniversalResult universal_measuring_into(const Algebra& a, const Target& b) {
    if (a.functor().spec() == "maybe") {
        const Reachability r = require_preinitial(a);
        return UniversalResult{Subterminal(detail::maximal_maybe(detail::maybe_rows(a, b, r))), {}, std::nullopt};
    }
    if (!absorbing_zero(a.functor()))
        throw std::invalid_argument("no default subterminal universe for " + a.functor().spec() +
                                    "; pass one explicitly");
    const Reachability r = require_preinitial(a);
    return universal_measuring_into(a, b, truncation_universe(a.functor_ref(), max_height(r) + 2));
}

inline UniversalResult universal_measuring(const Algebra& a, const Algebra& b) {
    return universal_measuring_into(a, FiniteTarget{b});
}

inline UniversalResult universal_measuring(const Algebra& a, const Algebra& b, const std::vector<Subterminal>& universe) {
    return universal_measuring_into(a, FiniteTarget{b}, universe);
}

// ---------------------------------------------------------------------------------------------
// Terminality check against all small coalgebras

struct UniversalVerification {
    bool ok = true;
    std::size_t coalgebras = 0;
    std::size_t measurings = 0;
    std::string counterexample;
};

inline std::string show_coalgebra(const Coalgebra& c) {
    std::string out = "{";
    for (std::size_t x = 0; x < c.size(); ++x) {
        if (x) out += ", ";
        out += c.carrier()[x].str() + " -> " + felem_label(c.functor(), c.carrier(), c.step(x)).str();
    }
    return out + "}";
}

inline std::string show_measuring(const Coalgebra& c, const Algebra& a, const Algebra& b,
                                  std::span<const std::size_t> table) {
    std::string out = "{";
    for (std::size_t x = 0; x < c.size(); ++x)
        for (std::size_t y = 0; y < a.size(); ++y) {
            if (x || y) out += ", ";
            out += "(" + c.carrier()[x].str() + "," + a.carrier()[y].str() + ") -> " +
                   b.carrier()[table[x * a.size() + y]].str();
        }
    return out + "}";
}

namespace detail {

inline std::vector<std::vector<std::size_t>> all_measurings(const Coalgebra& c, const Algebra& a, const Algebra& b,
                                                            const Reachability& r) {
    if (r.all()) {
        auto forced = forced_measuring(c, a, FiniteTarget{b}, r);
        if (forced.ok()) return {forced.table};
        return {};
    }
    return enumerate_measurings(c, a, b, Strategy::Propagate);
}

// Calls check(C, φ) for every coalgebra of size ≤ k and every φ ∈ μ_C(A,B); stops at the first failure.
inline UniversalVerification for_each_small_measuring(
    const Algebra& a, const Algebra& b, std::size_t k,
    const std::function<std::optional<std::string>(const Coalgebra&, const std::vector<std::size_t>&)>& check) {
    UniversalVerification v;
    const Reachability r = reachability(a);
    for (std::size_t n = 0; n <= k && v.ok; ++n)
        for_each_coalgebra(a.functor_ref(), n, [&](const Coalgebra& c) {
            ++v.coalgebras;
            for (const auto& phi : all_measurings(c, a, b, r)) {
                ++v.measurings;
                if (auto bad = check(c, phi)) {
                    v.ok = false;
                    v.counterexample = "coalgebra " + show_coalgebra(c) + " with measuring " +
                                       show_measuring(c, a, b, phi) + ": " + *bad;
                    return false;
                }
            }
            return true;
        });
    return v;
}

} // namespace detail

// Every φ ∈ μ_C(A,B) with |C| ≤ k factors as ev ∘ (u × id) through exactly one coalgebra hom u: C → U.
inline UniversalVerification verify_universal(const Measuring& ev, std::size_t k) {
    if (!is_measuring(ev.C, ev.A, ev.B, ev.table)) {
        UniversalVerification v;
        v.ok = false;
        v.counterexample = "ev is not a measuring";
        return v;
    }
    return detail::for_each_small_measuring(
        ev.A, ev.B, k, [&](const Coalgebra& c, const std::vector<std::size_t>& phi) -> std::optional<std::string> {
            std::size_t count = 0;
            for (const auto& u : coalgebra_homs(c, ev.C)) {
                bool factors = true;
                for (std::size_t x = 0; x < c.size() && factors; ++x)
                    for (std::size_t y = 0; y < ev.A.size() && factors; ++y)
                        factors = ev(u[x], y) == phi[x * ev.A.size() + y];
                count += factors;
            }
            if (count == 1) return std::nullopt;
            return std::to_string(count) + " factorizations";
        });
}

inline UniversalVerification verify_universal(const Subterminal& u, const Algebra& a, const Algebra& b, std::size_t k) {
    if (const auto* c = std::get_if<Coalgebra>(&u)) {
        const auto evs = detail::all_measurings(*c, a, b, reachability(a));
        if (evs.size() != 1) {
            UniversalVerification v;
            v.ok = false;
            v.counterexample = c->name() + " carries " + std::to_string(evs.size()) + " measurings, expected one";
            return v;
        }
        return verify_universal(Measuring{*c, a, b, evs[0]}, k);
    }
    // symbolic members: the only coalgebra hom is the index map, so factoring means landing inside U
    const Reachability r = require_preinitial(a);
    if (const auto* m = std::get_if<MaybeSubterminal>(&u)) {
        const auto rows = detail::maybe_rows(a, FiniteTarget{b}, r);
        return detail::for_each_small_measuring(
            a, b, k, [&](const Coalgebra& c, const std::vector<std::size_t>& phi) -> std::optional<std::string> {
                for (std::size_t x = 0; x < c.size(); ++x) {
                    const auto idx = maybe_index(c, x);
                    if (!m->contains(idx)) return "state " + c.carrier()[x].str() + " has index " + index_str(idx);
                    const auto& row = idx ? rows.rows[std::min(*idx, rows.rows.size() - 1)] : rows.inf_row;
                    for (std::size_t y = 0; y < a.size(); ++y)
                        if (row[y] != phi[x * a.size() + y]) return "evaluation differs at " + c.carrier()[x].str();
                }
                return std::nullopt;
            });
    }
    // terminal: every state has a behaviour and the evaluation is the forced measuring itself
    return detail::for_each_small_measuring(
        a, b, k, [&](const Coalgebra& c, const std::vector<std::size_t>& phi) -> std::optional<std::string> {
            if (forced_measuring(c, a, FiniteTarget{b}, r).table != phi) return "evaluation differs";
            return std::nullopt;
        });
}

// ---------------------------------------------------------------------------------------------
// Duals A° = Alg(A, N) with N the lazy initial algebra

namespace detail {

// Evaluates a closed term at a coalgebra state: the pairing of the terminal coalgebra with N.
class TermEvaluator {
public:
    TermEvaluator(const Coalgebra& c, TermStore& store) : c_(c), store_(store) {}
    TermId operator()(std::size_t x, TermId t) {
        if (auto it = memo_.find({x, t}); it != memo_.end()) return it->second;
        const PolyFunctor& f = c_.functor();
        const FElem& step = c_.step(x);
        const TermNode node = store_.node(t);
        std::vector<TermId> kids;
        for (auto [i, j] : f.zip(step.position, node.position)) kids.push_back((*this)(step.args[i], node.children[j]));
        const TermId v = store_.make(f.mul(step.position, node.position), kids);
        memo_.emplace(std::pair{x, t}, v);
        return v;
    }

private:
    const Coalgebra& c_;
    TermStore& store_;
    std::map<std::pair<std::size_t, TermId>, TermId> memo_;
};

inline std::vector<TermId> terms_below(TermStore& store, std::size_t height) {
    const PolyFunctor& f = store.functor();
    std::vector<TermId> all;
    for (std::size_t h = 0; h <= height; ++h) {
        std::vector<TermId> next;
        for (std::size_t p = 0; p < f.position_count(); ++p) {
            const std::size_t k = f.arity(p);
            check_size("terms of height " + std::to_string(h), power(static_cast<double>(all.size()), static_cast<double>(k)));
            const FunctionCodec codec(k, all.size());
            for (std::size_t code = 0; code < codec.count(); ++code) {
                std::vector<TermId> kids;
                for (std::size_t i = 0; i < k; ++i) kids.push_back(all[codec.digit(code, i)]);
                next.push_back(store.make(p, kids));
            }
        }
        for (TermId t : next)
            if (std::find(all.begin(), all.end(), t) == all.end()) all.push_back(t);
    }
    return all;
}

} // namespace detail

// Largest subcoalgebra of the depth-`depth` truncation that measures A into N.
inline Coalgebra dual_within(const Algebra& a, std::size_t depth) {
    const Reachability r = require_preinitial(a);
    const Coalgebra t = truncated_coalgebra(a.functor_ref(), depth);
    TermStore store(a.functor_ref());
    const LazyInitialTarget target{store};
    const auto forced = forced_measuring(t, a, target, r);
    std::vector<char> keep = detail::good_states(t, a, target, std::span<const TermId>(forced.table));
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t x = 0; x < t.size(); ++x) {
            if (!keep[x]) continue;
            for (std::size_t y : t.step(x).args)
                if (!keep[y]) {
                    keep[x] = 0;
                    changed = true;
                    break;
                }
        }
    }
    std::vector<std::size_t> members;
    for (std::size_t x = 0; x < t.size(); ++x)
        if (keep[x]) members.push_back(x);
    Coalgebra d = restrict_coalgebra(t, members);
    d.set_name("dual(" + a.name() + ")");
    return d;
}

// Maybe: exact symbolic member. Otherwise the truncation search at depth H+1.
inline Subterminal dual_coalgebra(const Algebra& a) {
    if (a.functor().spec() == "maybe") {
        TermStore store(a.functor_ref());
        return universal_measuring_into(a, LazyInitialTarget{store}).universal;
    }
    const Reachability r = require_preinitial(a);
    return dual_within(a, max_height(r) + 1);
}

// N° is terminal: the square holds for every term of height ≤ depth at every sampled behaviour.
inline Subterminal dual_of_initial(const FunctorRef& f, std::size_t depth) {
    const bool maybe = f->spec() == "maybe";
    const Coalgebra sample = maybe ? nat_inf_truncation(depth) : truncated_coalgebra(f, depth);
    TermStore store(f);
    const std::vector<TermId> terms = detail::terms_below(store, depth);
    const std::size_t below = static_cast<std::size_t>(
        std::count_if(terms.begin(), terms.end(), [&](TermId t) { return store.height(t) < depth; }));
    detail::TermEvaluator eval(sample, store);
    for (std::size_t x = 0; x < sample.size(); ++x) {
        const FElem& step = sample.step(x);
        for (std::size_t p = 0; p < f->position_count(); ++p) {
            const FunctionCodec codec(f->arity(p), below);
            for (std::size_t code = 0; code < codec.count(); ++code) {
                std::vector<TermId> kids;
                for (std::size_t i = 0; i < f->arity(p); ++i) kids.push_back(terms[codec.digit(code, i)]);
                const TermId lhs = eval(x, store.make(p, kids));
                std::vector<TermId> args;
                for (auto [i, j] : f->zip(step.position, p)) args.push_back(eval(step.args[i], kids[j]));
                if (lhs != store.make(f->mul(step.position, p), args))
                    throw std::logic_error("terminal pairing fails at state " + sample.carrier()[x].str());
            }
        }
    }
    if (maybe) return MaybeSubterminal::terminal();
    return TerminalSymbol{f};
}

struct PairingReport {
    std::size_t measurings = 0;  // |Alg(A, [C, N])| = |μ_C(A, N)|
    std::size_t homs = 0;        // |coAlg(C, A°)|
    bool ok() const noexcept { return measurings == homs; }
};

inline PairingReport dual_pairing_check(const Coalgebra& c, const Algebra& a) {
    const Reachability r = require_preinitial(a);
    TermStore store(a.functor_ref());
    PairingReport out;
    out.measurings = forced_measuring(c, a, LazyInitialTarget{store}, r).ok() ? 1 : 0;
    const Subterminal dual = dual_coalgebra(a);
    if (const auto* m = std::get_if<MaybeSubterminal>(&dual)) {
        bool inside = true;
        for (std::size_t x = 0; x < c.size() && inside; ++x) inside = m->contains(maybe_index(c, x));
        out.homs = inside ? 1 : 0;
    } else if (const auto* d = std::get_if<Coalgebra>(&dual)) {
        out.homs = coalgebra_homs(c, *d).size();
    } else {
        out.homs = 1;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Tower of n-partial measurings Alg_k(A, B) = μ_{(F^k 1)°}(A, B)

struct TowerStage {
    Algebra power;                                   // F^k 1
    Coalgebra dual;                                  // (F^k 1)°
    std::vector<std::vector<std::size_t>> measurings;
    std::vector<std::size_t> inclusion;              // previous dual → this dual
    std::vector<std::size_t> restriction;            // this stage → previous stage
};

struct Tower {
    std::vector<TowerStage> stages;
    std::optional<std::size_t> stable_stage;
    std::vector<std::vector<std::size_t>> limit;     // A → B tables of the compatible families

    bool stabilized() const noexcept { return stable_stage.has_value(); }
};

inline Coalgebra stage_dual(const Algebra& power) {
    const Subterminal d = dual_coalgebra(power);
    if (const auto* m = std::get_if<MaybeSubterminal>(&d)) return m->realize();
    if (const auto* c = std::get_if<Coalgebra>(&d)) return *c;
    throw std::logic_error("a finite algebra has a terminal dual");
}

// Stable at k when the restriction into stage k-1 is bijective and every state new at stage k
// repeats the row φ(c, -) of an older state, so that all later stages are copies.
inline Tower tower(const Algebra& a, const Algebra& b, std::size_t n_max) {
    require_same_functor(a.functor(), b.functor());
    Tower t;
    for (std::size_t k = 0; k <= n_max; ++k) {
        Algebra power = power_terminal_algebra(a.functor_ref(), k);
        if (!is_preinitial(power))
            throw std::invalid_argument("F^" + std::to_string(k) + "1 is not preinitial; the tower needs it to be");
        Coalgebra dual = stage_dual(power);
        auto ms = enumerate_measurings(dual, a, b, Strategy::Propagate);
        TowerStage stage{std::move(power), std::move(dual), std::move(ms), {}, {}};
        if (k > 0) {
            const TowerStage& prev = t.stages.back();
            const auto inc = coalgebra_homs(prev.dual, stage.dual, 2);
            if (inc.size() != 1) throw std::logic_error("stage duals are not nested at k=" + std::to_string(k));
            stage.inclusion = inc[0];
            std::vector<char> old(stage.dual.size(), 0);
            for (std::size_t x : stage.inclusion) old[x] = 1;
            bool rows_repeat = true;
            for (const auto& phi : stage.measurings) {
                std::vector<std::size_t> restricted;
                for (std::size_t x = 0; x < prev.dual.size(); ++x)
                    for (std::size_t y = 0; y < a.size(); ++y) restricted.push_back(phi[stage.inclusion[x] * a.size() + y]);
                const auto it = std::find(prev.measurings.begin(), prev.measurings.end(), restricted);
                if (it == prev.measurings.end()) throw std::logic_error("restriction left the previous stage");
                stage.restriction.push_back(static_cast<std::size_t>(it - prev.measurings.begin()));
                auto row = [&](std::size_t x) {
                    return std::vector<std::size_t>(phi.begin() + static_cast<std::ptrdiff_t>(x * a.size()),
                                                    phi.begin() + static_cast<std::ptrdiff_t>((x + 1) * a.size()));
                };
                for (std::size_t x = 0; x < stage.dual.size(); ++x) {
                    if (old[x]) continue;
                    bool seen = false;
                    for (std::size_t o = 0; o < stage.dual.size() && !seen; ++o) seen = old[o] && row(o) == row(x);
                    rows_repeat = rows_repeat && seen;
                }
            }
            std::vector<std::size_t> sorted = stage.restriction;
            std::sort(sorted.begin(), sorted.end());
            const bool bijective = sorted.size() == prev.measurings.size() &&
                                   std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
            if (!t.stable_stage && bijective && rows_repeat) t.stable_stage = k;
        }
        t.stages.push_back(std::move(stage));
    }
    // a stable stage fixes every later row, so the deepest row of each family is its total map
    if (t.stable_stage) {
        const TowerStage& last = t.stages.back();
        std::size_t deepest = 0;
        for (std::size_t x = 0; x < last.dual.size(); ++x)
            if (!last.inclusion.empty() &&
                std::find(last.inclusion.begin(), last.inclusion.end(), x) == last.inclusion.end())
                deepest = x;
        for (const auto& phi : last.measurings)
            t.limit.emplace_back(phi.begin() + static_cast<std::ptrdiff_t>(deepest * a.size()),
                                 phi.begin() + static_cast<std::ptrdiff_t>((deepest + 1) * a.size()));
    }
    return t;
}

// ---------------------------------------------------------------------------------------------
// Measuring tensor C ▷ A as a presentation by generators and relations

enum class TensorClause { Rewrite = 1, Collapse = 2, Congruence = 3 };

struct TensorGenerator {
    bool leaf = true;
    std::size_t state = 0;       // leaves
    std::size_t element = 0;     // leaves
    std::size_t position = 0;    // nodes
    std::vector<std::size_t> children;  // nodes: child generators at creation
    std::size_t level = 0;
};

struct TensorMerge {
    std::size_t left = 0;
    std::size_t right = 0;
    TensorClause clause = TensorClause::Congruence;
};

class TensorPresentation {
public:
    TensorPresentation(const Coalgebra& c, const Algebra& a) : c_(c), a_(a) {}

    const Coalgebra& coalgebra() const noexcept { return c_; }
    const Algebra& domain() const noexcept { return a_; }
    const std::vector<TensorGenerator>& generators() const noexcept { return gens_; }
    const std::vector<TensorMerge>& merges() const noexcept { return merges_; }
    bool finite() const noexcept { return finite_; }
    std::size_t levels() const noexcept { return levels_; }
    std::string status() const {
        return finite_ ? "finite" : "truncated(" + std::to_string(levels_) + ")";
    }

    // representative generator of each class, in generator order
    std::vector<std::size_t> class_reps() const {
        std::vector<std::size_t> reps;
        for (std::size_t g = 0; g < gens_.size(); ++g)
            if (find(g) == g) reps.push_back(g);
        return reps;
    }
    std::size_t find(std::size_t g) const { return ds_.find(g); }
    std::size_t leaf(std::size_t c, std::size_t a) const { return c * a_.size() + a; }

    Label generator_label(std::size_t g) const {
        const TensorGenerator& t = gens_[g];
        if (t.leaf) return Label::tagged("leaf", Label::pair(c_.carrier()[t.state], a_.carrier()[t.element]));
        std::vector<Label> kids;
        for (std::size_t k : t.children) kids.push_back(generator_label(find(k)));
        return Label::pair(a_.functor().positions()[t.position], Label::tuple(std::move(kids)));
    }

    // The algebra on classes; only total when the presentation is finite.
    Algebra algebra() const {
        if (!finite_) throw std::logic_error("truncated tensor presentation has no total algebra structure");
        const auto reps = class_reps();
        std::vector<Label> labels;
        for (std::size_t g : reps) labels.push_back(generator_label(g));
        const Carrier carrier(labels);
        std::map<std::size_t, std::size_t> index;  // rep generator → carrier index
        for (std::size_t i = 0; i < reps.size(); ++i) index[reps[i]] = carrier.index_of(labels[i]);
        std::vector<std::size_t> back(carrier.size());
        for (const auto& [g, i] : index) back[i] = g;
        const FLayout l(a_.functor(), carrier.size());
        std::vector<std::size_t> st(l.size());
        for (std::size_t i = 0; i < l.size(); ++i) {
            const FElem u = l.decode(i);
            std::vector<std::size_t> kids;
            for (std::size_t x : u.args) kids.push_back(back[x]);
            const auto it = nodes_.find({u.position, kids});
            if (it == nodes_.end()) throw std::logic_error("finite tensor presentation misses a node");
            st[i] = index.at(find(it->second));
        }
        return Algebra(a_.functor_ref(), carrier, std::move(st), c_.name() + "|>" + a_.name());
    }

    // carrier index in algebra() of every generator's class
    std::vector<std::size_t> class_indices() const {
        const auto reps = class_reps();
        std::vector<Label> labels;
        for (std::size_t r : reps) labels.push_back(generator_label(r));
        const Carrier carrier(labels);
        std::map<std::size_t, std::size_t> index;
        for (std::size_t i = 0; i < reps.size(); ++i) index[reps[i]] = carrier.index_of(labels[i]);
        std::vector<std::size_t> out;
        for (std::size_t g = 0; g < gens_.size(); ++g) out.push_back(index.at(find(g)));
        return out;
    }

    // Replaying every clause on the final classes merges nothing new.
    bool closed() const {
        for (std::size_t x = 0; x < c_.size(); ++x)
            for (std::size_t i = 0; i < a_.layout().size(); ++i) {
                const auto node = rewrite_target(x, a_.layout().decode(i));
                if (!node || find(*node) != find(leaf(x, a_.structure()[i]))) return false;
            }
        std::map<std::pair<std::size_t, std::vector<std::size_t>>, std::size_t> seen;
        for (std::size_t g = 0; g < gens_.size(); ++g) {
            if (gens_[g].leaf) continue;
            std::vector<std::size_t> kids;
            for (std::size_t k : gens_[g].children) kids.push_back(find(k));
            auto [it, fresh] = seen.emplace(std::pair{gens_[g].position, kids}, g);
            if (!fresh && find(it->second) != find(g)) return false;
        }
        return true;
    }

private:
    friend TensorPresentation measuring_tensor(const Coalgebra&, const Algebra&, std::size_t);

    using Key = std::pair<std::size_t, std::vector<std::size_t>>;

    // the node (χ(c)·u.position)([c_i, u_j]) of clause (i)
    std::optional<std::size_t> rewrite_target(std::size_t x, const FElem& u) const {
        const PolyFunctor& f = a_.functor();
        const FElem& step = c_.step(x);
        std::vector<std::size_t> kids;
        for (auto [i, j] : f.zip(step.position, u.position)) kids.push_back(find(leaf(step.args[i], u.args[j])));
        const auto it = nodes_.find({f.mul(step.position, u.position), kids});
        if (it == nodes_.end()) return std::nullopt;
        return it->second;
    }

    void unite(std::size_t g, std::size_t h, TensorClause clause) {
        if (ds_.unite(g, h)) merges_.push_back({g, h, clause});
    }

    // congruence closure: nodes with equal canonical keys are merged
    void close() {
        for (bool changed = true; changed;) {
            changed = false;
            std::map<Key, std::size_t> canon;
            for (std::size_t g = 0; g < gens_.size(); ++g) {
                if (gens_[g].leaf) continue;
                std::vector<std::size_t> kids;
                for (std::size_t k : gens_[g].children) kids.push_back(find(k));
                auto [it, fresh] = canon.emplace(Key{gens_[g].position, kids}, g);
                if (!fresh && find(it->second) != find(g)) {
                    unite(it->second, g, TensorClause::Congruence);
                    changed = true;
                }
            }
            nodes_.clear();
            for (const auto& [k, g] : canon) nodes_.emplace(k, g);
        }
    }

    std::size_t add_node(std::size_t p, std::vector<std::size_t> kids, std::size_t level) {
        gens_.push_back(TensorGenerator{false, 0, 0, p, kids, level});
        const std::size_t g = ds_.add();
        nodes_.emplace(Key{p, std::move(kids)}, g);
        return g;
    }

    Coalgebra c_;
    Algebra a_;
    std::vector<TensorGenerator> gens_;
    mutable DisjointSets ds_;
    std::map<Key, std::size_t> nodes_;  // canonical key → generator
    std::vector<TensorMerge> merges_;
    bool finite_ = false;
    std::size_t levels_ = 0;
};

// Level 0: leaves C × A. Level ℓ: nodes over the classes with at least one argument new at level ℓ-1.
// Relations: (i) [c, α(u)] ~ (χ(c)·u)([c_i, u_j]), (ii) the nullary case of (i), (iii) F-congruence.
inline TensorPresentation measuring_tensor(const Coalgebra& c, const Algebra& a, std::size_t budget) {
    require_same_functor(c.functor(), a.functor());
    if (budget == 0) throw std::invalid_argument("tensor budget must be at least one level");
    const PolyFunctor& f = a.functor();
    TensorPresentation p(c, a);
    for (std::size_t x = 0; x < c.size(); ++x)
        for (std::size_t y = 0; y < a.size(); ++y) {
            p.gens_.push_back(TensorGenerator{true, x, y, 0, {}, 0});
            p.ds_.add();
        }
    auto min_level = [&](std::size_t rep) {
        std::size_t m = SIZE_MAX;
        for (std::size_t g = 0; g < p.gens_.size(); ++g)
            if (p.find(g) == rep) m = std::min(m, p.gens_[g].level);
        return m;
    };
    for (std::size_t level = 1; level <= budget; ++level) {
        const auto reps = p.class_reps();
        std::vector<char> fresh;
        for (std::size_t r : reps) fresh.push_back(min_level(r) == level - 1);
        const std::size_t before = p.gens_.size();
        for (std::size_t pos = 0; pos < f.position_count(); ++pos) {
            const std::size_t k = f.arity(pos);
            if (k == 0 && level > 1) continue;
            check_size("tensor level " + std::to_string(level), power(static_cast<double>(reps.size()), static_cast<double>(k)));
            const FunctionCodec codec(k, reps.size());
            for (std::size_t code = 0; code < codec.count(); ++code) {
                std::vector<std::size_t> kids;
                bool touches = k == 0;
                for (std::size_t i = 0; i < k; ++i) {
                    const std::size_t r = codec.digit(code, i);
                    kids.push_back(reps[r]);
                    touches = touches || fresh[r];
                }
                if (!touches || p.nodes_.count({pos, kids})) continue;
                p.add_node(pos, std::move(kids), level);
            }
        }
        if (level == 1)
            for (std::size_t x = 0; x < c.size(); ++x)
                for (std::size_t i = 0; i < a.layout().size(); ++i) {
                    const FElem u = a.layout().decode(i);
                    const auto node = p.rewrite_target(x, u);
                    if (!node) throw std::logic_error("level one misses a rewrite target");
                    const bool nullary = f.arity(f.mul(c.step(x).position, u.position)) == 0;
                    p.unite(p.leaf(x, a.structure()[i]), *node,
                            nullary ? TensorClause::Collapse : TensorClause::Rewrite);
                }
        p.close();
        p.levels_ = level;
        bool adds_class = false;
        for (std::size_t g = before; g < p.gens_.size() && !adds_class; ++g) adds_class = min_level(p.find(g)) == level;
        if (!adds_class) {
            p.finite_ = true;
            break;
        }
    }
    return p;
}

struct TensorMapResult {
    std::vector<std::size_t> values;   // per generator
    std::optional<std::pair<std::size_t, std::size_t>> conflict;  // two generators of one class
    bool ok() const noexcept { return !conflict; }
};

// [c, a] ↦ φ(c, a), extended along the nodes; well defined iff no class gets two values.
inline TensorMapResult tensor_universal_map(const Measuring& phi, const TensorPresentation& p) {
    if (!(phi.C == p.coalgebra()) || !(phi.A == p.domain()))
        throw std::invalid_argument("measuring and presentation disagree on C or A");
    TensorMapResult out;
    for (const TensorGenerator& g : p.generators()) {
        if (g.leaf) {
            out.values.push_back(phi(g.state, g.element));
            continue;
        }
        std::vector<std::size_t> args;
        for (std::size_t k : g.children) args.push_back(out.values[k]);
        out.values.push_back(phi.B.act(g.position, args));
    }
    std::map<std::size_t, std::size_t> first;
    for (std::size_t g = 0; g < out.values.size(); ++g) {
        auto [it, fresh] = first.emplace(p.find(g), g);
        if (!fresh && out.values[it->second] != out.values[g]) {
            out.conflict = std::pair{it->second, g};
            break;
        }
    }
    return out;
}

// The map on the carrier of p.algebra().
inline std::vector<std::size_t> tensor_hom(const TensorMapResult& r, const TensorPresentation& p) {
    const auto idx = p.class_indices();
    std::vector<std::size_t> h(p.class_reps().size());
    for (std::size_t g = 0; g < r.values.size(); ++g) h[idx[g]] = r.values[g];
    return h;
}

// ---------------------------------------------------------------------------------------------
// C-initial algebras

struct CInitialReport {
    std::vector<std::size_t> counts;           // |μ_C(A, X)| per test algebra
    std::optional<std::size_t> first_violation;
    bool ok() const noexcept { return !first_violation; }
};

inline std::size_t count_measurings(const Coalgebra& c, const Algebra& a, const Algebra& x, const Reachability& r) {
    if (r.all()) return forced_measuring(c, a, FiniteTarget{x}, r).ok() ? 1 : 0;
    return enumerate_measurings(c, a, x, Strategy::Propagate).size();
}

inline CInitialReport c_initial_check(const Algebra& a, const Coalgebra& c, const std::vector<Algebra>& tests) {
    const Reachability r = reachability(a);
    CInitialReport out;
    for (std::size_t i = 0; i < tests.size(); ++i) {
        out.counts.push_back(count_measurings(c, a, tests[i], r));
        if (out.counts.back() != 1 && !out.first_violation) out.first_violation = i;
    }
    return out;
}

// Streams the test family instead of materializing it; stops at the first violation.
inline CInitialReport c_initial_check_all(const Algebra& a, const Coalgebra& c, std::size_t max_size) {
    const Reachability r = reachability(a);
    CInitialReport out;
    std::size_t i = 0;
    for (std::size_t n = 0; n <= max_size && out.ok(); ++n)
        for_each_algebra(a.functor_ref(), n, [&](const Algebra& x) {
            out.counts.push_back(count_measurings(c, a, x, r));
            if (out.counts.back() != 1) out.first_violation = i;
            ++i;
            return out.ok();
        });
    return out;
}

enum class SearchStatus { Found, None, Ambiguous };

struct TerminalSearch {
    SearchStatus status = SearchStatus::None;
    std::vector<std::size_t> c_initial;              // candidate indices
    std::vector<std::size_t> terminal;               // candidates receiving a unique hom from every C-initial one
    std::vector<std::vector<std::size_t>> witnesses; // for terminal[0]: the hom from each c_initial candidate
    std::string message;
};

inline TerminalSearch terminal_c_initial_search(const Coalgebra& c, const std::vector<Algebra>& candidates,
                                                const std::vector<Algebra>& tests) {
    TerminalSearch out;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (c_initial_check(candidates[i], c, tests).ok()) out.c_initial.push_back(i);
    if (out.c_initial.empty()) {
        out.message = "no C-initial candidate";
        return out;
    }
    for (std::size_t t : out.c_initial) {
        bool receives = true;
        for (std::size_t s : out.c_initial)
            if (algebra_homs(candidates[s], candidates[t], 2).size() != 1) {
                receives = false;
                break;
            }
        if (receives) out.terminal.push_back(t);
    }
    if (out.terminal.empty()) {
        out.message = "none found among candidates";
        return out;
    }
    for (std::size_t s : out.c_initial) out.witnesses.push_back(algebra_homs(candidates[s], candidates[out.terminal[0]], 1)[0]);
    if (out.terminal.size() > 1) {
        out.status = SearchStatus::Ambiguous;
        out.message = std::to_string(out.terminal.size()) + " candidates qualify";
    } else {
        out.status = SearchStatus::Found;
        out.message = candidates[out.terminal[0]].name();
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// The canonical measuring C × A → N and its curried map A → C*

struct DualMapReport {
    bool exists = false;
    bool unique = false;
    bool bounded = false;                          // uniqueness only established for values of height ≤ bound
    std::vector<std::vector<std::string>> measurings;  // rendered tables, at most two
    std::vector<std::string> curried;              // a ↦ (c ↦ φ(c, a))
    bool curried_injective = false;
    std::string blocking;
};

inline DualMapReport map_to_dual_check(const Algebra& a, const Coalgebra& c, std::size_t height_bound = 4) {
    require_same_functor(a.functor(), c.functor());
    TermStore store(a.functor_ref());
    DualMapReport out;
    auto render_table = [&](std::span<const TermId> table) {
        std::vector<std::string> cells;
        for (TermId t : table) cells.push_back(store.render(t));
        return cells;
    };
    const Reachability r = reachability(a);
    std::vector<TermId> table;
    if (r.all()) {
        const LazyInitialTarget target{store};
        auto forced = forced_measuring(c, a, target, r);
        if (!forced.ok()) {
            out.blocking = describe(a, c, forced.check.violations[0]);
            return out;
        }
        out.exists = out.unique = true;
        table = forced.table;
        out.measurings.push_back(render_table(table));
    } else {
        // unreachable elements leave freedom: search values among the terms of bounded height
        out.bounded = true;
        const std::vector<TermId> terms = detail::terms_below(store, height_bound);
        std::map<TermId, std::size_t> slot;
        for (std::size_t i = 0; i < terms.size(); ++i) slot[terms[i]] = i;
        const PolyFunctor& f = a.functor();
        detail::Csp csp(std::vector<std::size_t>(c.size() * a.size(), terms.size()));
        for (std::size_t x = 0; x < c.size(); ++x)
            for (std::size_t i = 0; i < a.layout().size(); ++i) {
                const FElem u = a.layout().decode(i);
                const FElem& step = c.step(x);
                std::vector<std::size_t> raw{x * a.size() + a.structure()[i]};
                for (auto [p, q] : f.zip(step.position, u.position)) raw.push_back(step.args[p] * a.size() + u.args[q]);
                std::vector<std::size_t> pos;
                auto vars = detail::distinct_vars(raw, pos);
                const std::size_t target_pos = f.mul(step.position, u.position);
                csp.add(vars, [&store, &terms, &slot, pos, target_pos](std::span<const std::size_t> v) {
                    std::vector<TermId> args;
                    for (std::size_t k = 1; k < pos.size(); ++k) args.push_back(terms[v[pos[k]]]);
                    const TermId t = store.make(target_pos, args);
                    const auto it = slot.find(t);
                    return it != slot.end() && it->second == v[pos[0]];
                });
            }
        const auto sols = csp.all(2);
        if (sols.empty()) {
            out.blocking = "no measuring with values of height <= " + std::to_string(height_bound);
            return out;
        }
        out.exists = true;
        out.unique = sols.size() == 1;
        for (const auto& s : sols) {
            std::vector<TermId> t;
            for (std::size_t v : s) t.push_back(terms[v]);
            out.measurings.push_back(render_table(t));
            if (table.empty()) table = t;
        }
    }
    std::set<std::vector<TermId>> distinct;
    for (std::size_t y = 0; y < a.size(); ++y) {
        std::vector<TermId> col;
        std::string s = a.carrier()[y].str() + " -> {";
        for (std::size_t x = 0; x < c.size(); ++x) {
            col.push_back(table[x * a.size() + y]);
            s += (x ? ", " : "") + c.carrier()[x].str() + ": " + store.render(col.back());
        }
        out.curried.push_back(s + "}");
        distinct.insert(col);
    }
    out.curried_injective = distinct.size() == a.size();
    return out;
}

} // namespace pm
