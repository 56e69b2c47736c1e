#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polymeasure/fixpoints.hpp"

namespace pm {

// φ: C × A → B stored row-major, entry c*|A| + a.
struct Measuring {
    Coalgebra C;
    Algebra A;
    Algebra B;
    std::vector<std::size_t> table;

    std::size_t operator()(std::size_t c, std::size_t a) const { return table[c * A.size() + a]; }
    Map as_map() const { return Map(mk_product(C.carrier(), A.carrier()).carrier, B.carrier(), table); }
};

struct MeasuringViolation {
    std::size_t state = 0;
    FElem input;       // element of F(A)
    std::string lhs;   // φ(c, α(u))
    std::string rhs;   // β(Fφ(∇(χ(c), u)))
};

struct MeasuringCheck {
    std::vector<MeasuringViolation> violations;
    bool ok() const noexcept { return violations.empty(); }
};

// ---------------------------------------------------------------------------------------------
// Codomain targets: anything with act(position, args) and printable values.

struct FiniteTarget {
    using value_type = std::size_t;
    const Algebra& algebra;
    value_type act(std::size_t p, std::span<const value_type> args) const { return algebra.act(p, args); }
    std::string show(value_type v) const { return algebra.carrier()[v].str(); }
};

// The initial algebra, materialized on demand as hash-consed terms.
struct LazyInitialTarget {
    using value_type = TermId;
    TermStore& store;
    value_type act(std::size_t p, std::span<const value_type> args) const { return store.make(p, args); }
    std::string show(value_type v) const { return store.render(v); }
};

namespace detail {

// Arguments of β in the measuring square for state c and input u: i ↦ φ(h(π₁Λ i), u(π₂Λ i)).
template <class Lookup>
auto measuring_args(const PolyFunctor& f, const FElem& step, const FElem& u, Lookup&& phi) {
    using V = decltype(phi(std::size_t{}, std::size_t{}));
    std::vector<V> args;
    const ZipTable& z = f.zip(step.position, u.position);
    args.reserve(z.size());
    for (auto [i, j] : z) args.push_back(phi(step.args[i], u.args[j]));
    return args;
}

} // namespace detail

// Checks the measuring square on all of C × F(A) for an arbitrary target.
template <class Target>
MeasuringCheck check_measuring_into(const Coalgebra& c, const Algebra& a, const Target& b,
                                    std::span<const typename Target::value_type> table,
                                    std::size_t max_witnesses = 8) {
    require_same_functor(c.functor(), a.functor());
    const PolyFunctor& f = a.functor();
    MeasuringCheck r;
    auto phi = [&](std::size_t x, std::size_t y) { return table[x * a.size() + y]; };
    for (std::size_t x = 0; x < c.size(); ++x) {
        const FElem& step = c.step(x);
        for (std::size_t i = 0; i < a.layout().size(); ++i) {
            const FElem u = a.layout().decode(i);
            const auto lhs = phi(x, a.structure()[i]);
            const auto args = detail::measuring_args(f, step, u, phi);
            const auto rhs = b.act(f.mul(step.position, u.position), args);
            if (!(lhs == rhs)) {
                r.violations.push_back({x, u, b.show(lhs), b.show(rhs)});
                if (r.violations.size() >= max_witnesses) return r;
            }
        }
    }
    return r;
}

inline MeasuringCheck check_measuring(const Coalgebra& c, const Algebra& a, const Algebra& b,
                                      std::span<const std::size_t> table, std::size_t max_witnesses = 8) {
    require_same_functor(a.functor(), b.functor());
    if (table.size() != c.size() * a.size()) throw std::invalid_argument("measuring table has wrong size");
    for (std::size_t v : table)
        if (v >= b.size()) throw std::invalid_argument("measuring table leaves the codomain");
    return check_measuring_into(c, a, FiniteTarget{b}, table, max_witnesses);
}

inline bool is_measuring(const Coalgebra& c, const Algebra& a, const Algebra& b, std::span<const std::size_t> table) {
    return check_measuring(c, a, b, table, 1).ok();
}

inline std::string describe(const Algebra& a, const Coalgebra& c, const MeasuringViolation& v) {
    return "state " + c.carrier()[v.state].str() + ", input " + felem_label(a.functor(), a.carrier(), v.input).str() +
           ": " + v.lhs + " != " + v.rhs;
}

// ---------------------------------------------------------------------------------------------
// Convolution algebra [C, B] with structure χ* ∘ β_* ∘ ∇̃

inline Algebra convolution_algebra(const Coalgebra& c, const Algebra& b) {
    require_same_functor(c.functor(), b.functor());
    const PolyFunctor& f = b.functor();
    const FunctionCodec codec(c.size(), b.size());
    const FLayout l(f, codec.count());
    std::vector<std::size_t> st(l.size());
    std::vector<std::size_t> values(c.size());
    for (std::size_t i = 0; i < l.size(); ++i) {
        const FElem u = l.decode(i);
        for (std::size_t x = 0; x < c.size(); ++x) {
            const FElem& step = c.step(x);
            const auto args = detail::measuring_args(f, step, u, [&](std::size_t state, std::size_t g) {
                return codec.digit(g, state);
            });
            values[x] = b.act(f.mul(step.position, u.position), args);
        }
        st[i] = codec.encode(values);
    }
    return Algebra(b.functor_ref(), exponential(c.carrier(), b.carrier()), std::move(st),
                   "[" + c.name() + "," + b.name() + "]");
}

// ---------------------------------------------------------------------------------------------
// The three equivalent representations

struct Curried {
    Map partial_hom;  // C → [A, B]
    Map conv_hom;     // A → [C, B]
};

inline Curried curry_representations(const Coalgebra& c, const Algebra& a, const Algebra& b,
                                     std::span<const std::size_t> table) {
    const FunctionCodec ab(a.size(), b.size()), cb(c.size(), b.size());
    std::vector<std::size_t> p(c.size()), q(a.size());
    std::vector<std::size_t> row(a.size()), col(c.size());
    for (std::size_t x = 0; x < c.size(); ++x) {
        for (std::size_t y = 0; y < a.size(); ++y) row[y] = table[x * a.size() + y];
        p[x] = ab.encode(row);
    }
    for (std::size_t y = 0; y < a.size(); ++y) {
        for (std::size_t x = 0; x < c.size(); ++x) col[x] = table[x * a.size() + y];
        q[y] = cb.encode(col);
    }
    return Curried{Map(c.carrier(), exponential(a.carrier(), b.carrier()), std::move(p)),
                   Map(a.carrier(), exponential(c.carrier(), b.carrier()), std::move(q))};
}

inline std::vector<std::size_t> uncurry_partial(const Map& partial_hom, std::size_t a_size, std::size_t b_size) {
    const FunctionCodec ab(a_size, b_size);
    std::vector<std::size_t> t;
    for (std::size_t code : partial_hom.table()) {
        const auto row = ab.decode(code);
        t.insert(t.end(), row.begin(), row.end());
    }
    return t;
}

inline std::vector<std::size_t> uncurry_conv(const Map& conv_hom, std::size_t c_size, std::size_t b_size) {
    const FunctionCodec cb(c_size, b_size);
    const std::size_t a_size = conv_hom.dom().size();
    std::vector<std::size_t> t(c_size * a_size);
    for (std::size_t y = 0; y < a_size; ++y)
        for (std::size_t x = 0; x < c_size; ++x) t[x * a_size + y] = cb.digit(conv_hom(y), x);
    return t;
}

// ---------------------------------------------------------------------------------------------
// Enumeration of μ_C(A, B)

enum class Strategy { Brute, Convolution, Propagate };

inline std::string strategy_name(Strategy s) {
    switch (s) {
    case Strategy::Brute: return "brute";
    case Strategy::Convolution: return "convolution";
    case Strategy::Propagate: return "propagate";
    }
    return "?";
}

inline Strategy parse_strategy(const std::string& s) {
    if (s == "brute") return Strategy::Brute;
    if (s == "convolution") return Strategy::Convolution;
    if (s == "propagate") return Strategy::Propagate;
    throw std::invalid_argument("unknown strategy '" + s + "' (brute, convolution, propagate)");
}

namespace detail {

inline double brute_space(const Coalgebra& c, const Algebra& a, const Algebra& b) {
    return power(static_cast<double>(b.size()), static_cast<double>(c.size() * a.size()));
}

inline double convolution_space(const Coalgebra& c, const Algebra& a, const Algebra& b) {
    const double exp = power(static_cast<double>(b.size()), static_cast<double>(c.size()));
    double fx = 0;
    for (std::size_t p = 0; p < a.functor().position_count(); ++p)
        fx += power(exp, static_cast<double>(a.functor().arity(p)));
    return std::max(exp, fx);
}

inline double propagate_space(const Algebra& a, const Algebra& b) {
    return power(static_cast<double>(b.size()), static_cast<double>(a.size()));
}

inline bool fits(Strategy s, const Coalgebra& c, const Algebra& a, const Algebra& b) {
    switch (s) {
    case Strategy::Brute: return brute_space(c, a, b) <= static_cast<double>(guards().brute);
    case Strategy::Convolution: return convolution_space(c, a, b) <= static_cast<double>(guards().size);
    case Strategy::Propagate: return propagate_space(a, b) <= static_cast<double>(guards().size);
    }
    return false;
}

inline std::vector<std::vector<std::size_t>> measurings_brute(const Coalgebra& c, const Algebra& a,
                                                             const Algebra& b) {
    std::vector<std::vector<std::size_t>> out;
    const std::size_t cells = c.size() * a.size();
    std::vector<std::size_t> t(cells, 0);
    if (cells > 0 && b.size() == 0) return out;
    while (true) {
        if (is_measuring(c, a, b, t)) out.push_back(t);
        std::size_t i = cells;
        while (i > 0 && ++t[i - 1] == b.size()) t[--i] = 0;
        if (i == 0) break;
    }
    return out;
}

inline std::vector<std::vector<std::size_t>> measurings_convolution(const Coalgebra& c, const Algebra& a,
                                                                   const Algebra& b) {
    const Algebra conv = convolution_algebra(c, b);
    std::vector<std::vector<std::size_t>> out;
    for (const auto& h : algebra_homs(a, conv))
        out.push_back(uncurry_conv(Map(a.carrier(), conv.carrier(), h), c.size(), b.size()));
    std::sort(out.begin(), out.end());
    return out;
}

// One variable per state ranging over [A, B]; the square at each state is a constraint on the
// state's row and the rows of its successors. Arc consistency computes the admissible sets.
inline std::vector<std::vector<std::size_t>> measurings_propagate(const Coalgebra& c, const Algebra& a,
                                                                 const Algebra& b) {
    const PolyFunctor& f = a.functor();
    const FunctionCodec ab(a.size(), b.size());
    std::vector<FElem> inputs;
    std::vector<std::size_t> outputs;
    for (std::size_t i = 0; i < a.layout().size(); ++i) {
        inputs.push_back(a.layout().decode(i));
        outputs.push_back(a.structure()[i]);
    }
    Csp csp(std::vector<std::size_t>(c.size(), ab.count()));
    for (std::size_t x = 0; x < c.size(); ++x) {
        const FElem& step = c.step(x);
        std::vector<std::size_t> raw{x};
        raw.insert(raw.end(), step.args.begin(), step.args.end());
        std::vector<std::size_t> slot;
        const std::vector<std::size_t> vars = distinct_vars(raw, slot);
        csp.add(vars, [&, slot, step](std::span<const std::size_t> v) {
            auto phi = [&](std::size_t k, std::size_t y) { return ab.digit(v[slot[k]], y); };
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                const FElem& u = inputs[i];
                const ZipTable& z = f.zip(step.position, u.position);
                std::vector<std::size_t> args;
                args.reserve(z.size());
                for (auto [p, q] : z) args.push_back(phi(p + 1, u.args[q]));
                if (phi(0, outputs[i]) != b.act(f.mul(step.position, u.position), args)) return false;
            }
            return true;
        });
    }
    std::vector<std::vector<std::size_t>> out;
    csp.solve([&](std::span<const std::size_t> rows) {
        std::vector<std::size_t> t;
        for (std::size_t code : rows) {
            const auto row = ab.decode(code);
            t.insert(t.end(), row.begin(), row.end());
        }
        out.push_back(std::move(t));
        return true;
    });
    return out;
}

} // namespace detail

// Tables of all measurings in lexicographic order.
inline std::vector<std::vector<std::size_t>> enumerate_measurings(const Coalgebra& c, const Algebra& a,
                                                                  const Algebra& b, Strategy s) {
    require_same_functor(c.functor(), a.functor());
    require_same_functor(a.functor(), b.functor());
    if (!detail::fits(s, c, a, b)) {
        std::string alternatives;
        for (Strategy t : {Strategy::Brute, Strategy::Convolution, Strategy::Propagate})
            if (t != s && detail::fits(t, c, a, b)) alternatives += (alternatives.empty() ? "" : ", ") + strategy_name(t);
        const double requested = s == Strategy::Brute         ? detail::brute_space(c, a, b)
                                 : s == Strategy::Convolution ? detail::convolution_space(c, a, b)
                                                              : detail::propagate_space(a, b);
        throw GuardError("search space of strategy " + strategy_name(s) +
                             (alternatives.empty() ? " (no strategy fits)" : " (within guards: " + alternatives + ")"),
                         requested, s == Strategy::Brute ? guards().brute : guards().size);
    }
    switch (s) {
    case Strategy::Brute: return detail::measurings_brute(c, a, b);
    case Strategy::Convolution: return detail::measurings_convolution(c, a, b);
    case Strategy::Propagate: return detail::measurings_propagate(c, a, b);
    }
    return {};
}

// ---------------------------------------------------------------------------------------------
// Measurings out of preinitial algebras are forced: φ(c, a) is the value of a's witness term at c.

template <class Target>
struct ForcedMeasuring {
    std::vector<typename Target::value_type> table;
    MeasuringCheck check;
    bool ok() const noexcept { return check.ok(); }
};

template <class Target>
ForcedMeasuring<Target> forced_measuring(const Coalgebra& c, const Algebra& a, const Target& b,
                                         const Reachability& r) {
    require_same_functor(c.functor(), a.functor());
    if (!r.all()) throw std::invalid_argument("forced measuring needs a preinitial domain algebra");
    const PolyFunctor& f = a.functor();
    using V = typename Target::value_type;
    std::vector<std::optional<V>> cells(c.size() * a.size());
    auto phi = [&](std::size_t x, std::size_t y) { return *cells[x * a.size() + y]; };
    for (std::size_t y : r.order) {
        const FElem& u = *r.via[y];
        for (std::size_t x = 0; x < c.size(); ++x) {
            const FElem& step = c.step(x);
            const auto args = detail::measuring_args(f, step, u, phi);
            cells[x * a.size() + y] = b.act(f.mul(step.position, u.position), args);
        }
    }
    ForcedMeasuring<Target> out;
    for (auto& v : cells) out.table.push_back(*v);
    out.check = check_measuring_into(c, a, b, std::span<const V>(out.table));
    return out;
}

template <class Target>
ForcedMeasuring<Target> forced_measuring(const Coalgebra& c, const Algebra& a, const Target& b) {
    return forced_measuring(c, a, b, reachability(a));
}

// ---------------------------------------------------------------------------------------------
// Coalgebra tensor and enriched composition

// D ⊗ C on D × C with structure ∇ ∘ (δ × χ)
inline Coalgebra tensor_coalgebras(const Coalgebra& d, const Coalgebra& c) {
    require_same_functor(d.functor(), c.functor());
    const Product p = mk_product(d.carrier(), c.carrier());
    std::vector<FElem> st(p.carrier.size());
    for (std::size_t x = 0; x < d.size(); ++x)
        for (std::size_t y = 0; y < c.size(); ++y)
            st[p.index(x, y)] = nabla_elem(d.functor(), d.step(x), c.step(y), c.size());
    return Coalgebra(d.functor_ref(), p.carrier, std::move(st), d.name() + "(x)" + c.name());
}

inline Measuring identity_measuring(const Algebra& a) {
    std::vector<std::size_t> t(a.size());
    for (std::size_t y = 0; y < a.size(); ++y) t[y] = y;
    return Measuring{unit_coalgebra(a.functor_ref()), a, a, std::move(t)};
}

// ((d, c), a) ↦ ψ(d, φ(c, a)) in μ_{D⊗C}(A₁, A₃)
inline Measuring compose_measurings(const Measuring& psi, const Measuring& phi) {
    if (!(psi.A == phi.B)) throw std::invalid_argument("compose_measurings: middle algebras differ");
    Coalgebra dc = tensor_coalgebras(psi.C, phi.C);
    std::vector<std::size_t> t;
    t.reserve(dc.size() * phi.A.size());
    for (std::size_t d = 0; d < psi.C.size(); ++d)
        for (std::size_t c = 0; c < phi.C.size(); ++c)
            for (std::size_t a = 0; a < phi.A.size(); ++a) t.push_back(psi(d, phi(c, a)));
    return Measuring{std::move(dc), phi.A, psi.B, std::move(t)};
}

// φ: C × C₁ → C₂ is a measuring of coalgebras iff it is a coalgebra hom out of C ⊗ C₁.
inline std::optional<std::size_t> coalgebra_measuring_violation(const Coalgebra& c, const Coalgebra& c1,
                                                                 const Coalgebra& c2,
                                                                 std::span<const std::size_t> table) {
    return coalgebra_hom_violation(tensor_coalgebras(c, c1), c2, table);
}

inline bool coalgebra_measuring_check(const Coalgebra& c, const Coalgebra& c1, const Coalgebra& c2,
                                      std::span<const std::size_t> table) {
    return !coalgebra_measuring_violation(c, c1, c2, table);
}

// ---------------------------------------------------------------------------------------------
// Mixed measurings: C an F-coalgebra, A and B algebras for an F-module G

// m_{X,Y}: F X × G Y → G(X × Y), result arguments indexed x*|Y| + y
struct ModuleMap {
    FunctorRef acting;  // F
    FunctorRef target;  // G
    std::string name;
    std::function<FElem(const FElem&, const FElem&, std::size_t)> apply;
};

// G acting on itself through ∇.
inline ModuleMap self_module(const FunctorRef& g) {
    return ModuleMap{g, g, "nabla(" + g->spec() + ")",
                     [g](const FElem& x, const FElem& y, std::size_t ny) { return nabla_elem(*g, x, y, ny); }};
}

// For G∘F: F X × G F Y → G(F X × F Y) → G F(X × Y), strength of G followed by G∇_F.
inline ModuleMap derive_module_map(const FunctorRef& f, const FunctorRef& gf) {
    const CompositionInfo* info = gf->composition();
    if (!info) throw std::invalid_argument("no module map: " + gf->spec() + " is not a composite G∘F");
    require_same_functor(*info->inner, *f);
    return ModuleMap{f, gf, "strength;G(nabla(" + f->spec() + "))",
                     [f, gf](const FElem& x, const FElem& w, std::size_t ny) {
                         NestedElem n = split_composite(*gf, w);
                         for (FElem& inner : n.inner) inner = nabla_elem(*f, x, inner, ny);
                         return join_composite(*gf, n);
                     }};
}

// Id X × G Y → G(X × Y) by the strength of G.
inline ModuleMap strength_module(const FunctorRef& g) {
    return ModuleMap{id_f(), g, "strength(" + g->spec() + ")",
                     [](const FElem& x, const FElem& w, std::size_t ny) {
                         FElem r{w.position, {}};
                         for (std::size_t y : w.args) r.args.push_back(x.args[0] * ny + y);
                         return r;
                     }};
}

struct ModuleLawReport {
    std::vector<LawCheck> laws;
    bool ok() const {
        return std::all_of(laws.begin(), laws.end(), [](const LawCheck& l) { return l.passed; });
    }
};

// Unit: m(η, w) = w on G(1 × Y) ≅ G Y. Associativity: m(∇(x, y), w) = m(x, m(y, w)).
inline ModuleLawReport check_module_laws(const ModuleMap& m, std::size_t max_size) {
    const PolyFunctor& f = *m.acting;
    const PolyFunctor& g = *m.target;
    ModuleLawReport rep;
    LawCheck unit{"module unit", true, {}};
    LawCheck assoc{"module associativity", true, {}};
    const FElem e = eta_elem(f);
    for (std::size_t ny = 0; ny <= max_size; ++ny) {
        const FLayout gy(g, ny);
        for (std::size_t i = 0; i < gy.size() && unit.passed; ++i) {
            const FElem w = gy.decode(i);
            if (!(m.apply(e, w, ny) == w)) {
                unit.passed = false;
                unit.witness = felem_label(g, Carrier::range(ny), w).str();
            }
        }
    }
    for (std::size_t nx = 0; nx <= max_size && assoc.passed; ++nx)
        for (std::size_t ny = 0; ny <= max_size && assoc.passed; ++ny)
            for (std::size_t nz = 0; nz <= max_size && assoc.passed; ++nz) {
                const FLayout fx(f, nx), fy(f, ny), gz(g, nz);
                check_size("module associativity instances",
                           static_cast<double>(fx.size()) * static_cast<double>(fy.size()) *
                               static_cast<double>(gz.size()));
                for (std::size_t i = 0; i < fx.size() && assoc.passed; ++i)
                    for (std::size_t j = 0; j < fy.size() && assoc.passed; ++j)
                        for (std::size_t k = 0; k < gz.size() && assoc.passed; ++k) {
                            const FElem x = fx.decode(i), y = fy.decode(j), w = gz.decode(k);
                            const FElem left = m.apply(nabla_elem(f, x, y, ny), w, nz);
                            const FElem right = m.apply(x, m.apply(y, w, nz), ny * nz);
                            if (!(left == right)) {
                                assoc.passed = false;
                                assoc.witness = "sizes " + std::to_string(nx) + "," + std::to_string(ny) + "," +
                                                std::to_string(nz) + " at " +
                                                felem_label(f, Carrier::range(nx), x).str() + ", " +
                                                felem_label(f, Carrier::range(ny), y).str() + ", " +
                                                felem_label(g, Carrier::range(nz), w).str();
                            }
                        }
            }
    rep.laws = {unit, assoc};
    return rep;
}

// φ(c, α(w)) = β(G φ(m(χ(c), w)))
inline MeasuringCheck mixed_measuring_check(const ModuleMap& m, const Coalgebra& c, const Algebra& a, const Algebra& b,
                                            std::span<const std::size_t> table, std::size_t max_witnesses = 8) {
    require_same_functor(c.functor(), *m.acting);
    require_same_functor(a.functor(), *m.target);
    require_same_functor(b.functor(), *m.target);
    if (table.size() != c.size() * a.size()) throw std::invalid_argument("measuring table has wrong size");
    MeasuringCheck r;
    for (std::size_t x = 0; x < c.size(); ++x)
        for (std::size_t i = 0; i < a.layout().size(); ++i) {
            const FElem w = a.layout().decode(i);
            const FElem acted = m.apply(c.step(x), w, a.size());
            FElem image{acted.position, {}};
            for (std::size_t pair : acted.args) image.args.push_back(table[pair]);  // pair = c'*|A| + a'
            const std::size_t lhs = table[x * a.size() + a.structure()[i]];
            const std::size_t rhs = b.act(image);
            if (lhs != rhs) {
                r.violations.push_back({x, w, b.carrier()[lhs].str(), b.carrier()[rhs].str()});
                if (r.violations.size() >= max_witnesses) return r;
            }
        }
    return r;
}

inline std::vector<std::vector<std::size_t>> enumerate_mixed_measurings(const ModuleMap& m, const Coalgebra& c,
                                                                        const Algebra& a, const Algebra& b) {
    check_guard("mixed measuring tables",
                power(static_cast<double>(b.size()), static_cast<double>(c.size() * a.size())), guards().brute);
    std::vector<std::vector<std::size_t>> out;
    const std::size_t cells = c.size() * a.size();
    std::vector<std::size_t> t(cells, 0);
    if (cells > 0 && b.size() == 0) return out;
    while (true) {
        if (mixed_measuring_check(m, c, a, b, t, 1).ok()) out.push_back(t);
        std::size_t i = cells;
        while (i > 0 && ++t[i - 1] == b.size()) t[--i] = 0;
        if (i == 0) break;
    }
    return out;
}

} // namespace pm
