#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core_set.hpp"

namespace pm {

struct CommMonoid {
    std::string name;
    Carrier elements;
    std::vector<std::size_t> op;  // row-major |X|x|X|
    std::size_t unit = 0;

    std::size_t size() const noexcept { return elements.size(); }
    std::size_t mul(std::size_t a, std::size_t b) const { return op[a * size() + b]; }
};

// Z_k under addition.
inline CommMonoid cyclic_monoid(std::size_t k) {
    if (k == 0) throw std::invalid_argument("cyclic monoid needs at least one element");
    CommMonoid m{"Z" + std::to_string(k), Carrier::range(k), std::vector<std::size_t>(k * k), 0};
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) m.op[a * k + b] = (a + b) % k;
    return m;
}

inline CommMonoid trivial_monoid() { return CommMonoid{"1", Carrier::range(1), {0}, 0}; }

// {0,1} under conjunction.
inline CommMonoid and_monoid() { return CommMonoid{"and", Carrier::range(2), {0, 0, 0, 1}, 1}; }

// {0..k-1} under max, unit 0.
inline CommMonoid max_monoid(std::size_t k) {
    if (k == 0) throw std::invalid_argument("max monoid needs at least one element");
    CommMonoid m{"max" + std::to_string(k), Carrier::range(k), std::vector<std::size_t>(k * k), 0};
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) m.op[a * k + b] = std::max(a, b);
    return m;
}

inline CommMonoid monoid_by_name(const std::string& name) {
    if (name == "1") return trivial_monoid();
    if (name == "and") return and_monoid();
    if (name.size() > 1 && name[0] == 'Z') return cyclic_monoid(std::stoul(name.substr(1)));
    if (name.size() > 3 && name.rfind("max", 0) == 0) return max_monoid(std::stoul(name.substr(3)));
    throw std::invalid_argument("unknown monoid '" + name + "'");
}

class PolyFunctor;
using FunctorRef = std::shared_ptr<const PolyFunctor>;

using ZipTable = std::vector<std::pair<std::size_t, std::size_t>>;

// Bookkeeping that lets a composite G∘F split its elements back into nested form.
struct CompositionInfo {
    FunctorRef outer;
    FunctorRef inner;
    // composite position -> (outer position, inner position per outer fiber element)
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> positions;
    // composite position -> per composite fiber element (outer fiber index, inner fiber index)
    std::vector<ZipTable> fibers;
};

// Polynomial endofunctor X ↦ Σ_p X^{fiber(p)} whose positions form a commutative monoid
// and whose fibers carry zip maps fiber(c·d) → fiber(c) × fiber(d).
class PolyFunctor {
public:
    PolyFunctor(std::string spec, Carrier positions, std::vector<std::size_t> mul, std::size_t unit,
                std::vector<Carrier> fibers, std::vector<ZipTable> zips,
                std::shared_ptr<const CompositionInfo> composition = nullptr)
        : spec_(std::move(spec)), positions_(std::move(positions)), mul_(std::move(mul)), unit_(unit),
          fibers_(std::move(fibers)), zips_(std::move(zips)), composition_(std::move(composition)) {
        const std::size_t n = positions_.size();
        if (n == 0) throw std::invalid_argument("functor needs at least one position");
        if (mul_.size() != n * n) throw std::invalid_argument("position product table has wrong size");
        for (std::size_t v : mul_)
            if (v >= n) throw std::invalid_argument("position product outside the positions");
        if (unit_ >= n) throw std::invalid_argument("unit is not a position");
        if (fibers_.size() != n) throw std::invalid_argument("one fiber per position required");
        if (zips_.size() != n * n) throw std::invalid_argument("one zip per pair of positions required");
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t d = 0; d < n; ++d) {
                const ZipTable& z = zips_[c * n + d];
                if (z.size() != fibers_[mul_[c * n + d]].size())
                    throw std::invalid_argument("zip for (" + positions_[c].str() + "," + positions_[d].str() +
                                                ") is not total on the product fiber");
                for (auto [i, j] : z)
                    if (i >= fibers_[c].size() || j >= fibers_[d].size())
                        throw std::invalid_argument("zip image outside the factor fibers");
            }
    }

    const std::string& spec() const noexcept { return spec_; }
    const Carrier& positions() const noexcept { return positions_; }
    std::size_t position_count() const noexcept { return positions_.size(); }
    std::size_t mul(std::size_t c, std::size_t d) const { return mul_[c * positions_.size() + d]; }
    std::size_t unit() const noexcept { return unit_; }
    const Carrier& fiber(std::size_t p) const { return fibers_[p]; }
    std::size_t arity(std::size_t p) const { return fibers_[p].size(); }
    const ZipTable& zip(std::size_t c, std::size_t d) const { return zips_[c * positions_.size() + d]; }
    const CompositionInfo* composition() const noexcept { return composition_.get(); }

    std::size_t max_arity() const {
        std::size_t m = 0;
        for (const Carrier& f : fibers_) m = std::max(m, f.size());
        return m;
    }
    std::optional<std::size_t> first_nullary() const {
        for (std::size_t p = 0; p < fibers_.size(); ++p)
            if (fibers_[p].empty()) return p;
        return std::nullopt;
    }

    friend bool operator==(const PolyFunctor& a, const PolyFunctor& b) {
        if (&a == &b) return true;
        return a.spec_ == b.spec_ && a.positions_ == b.positions_ && a.mul_ == b.mul_ && a.unit_ == b.unit_ &&
               a.fibers_ == b.fibers_ && a.zips_ == b.zips_;
    }

private:
    std::string spec_;
    Carrier positions_;
    std::vector<std::size_t> mul_;
    std::size_t unit_;
    std::vector<Carrier> fibers_;
    std::vector<ZipTable> zips_;
    std::shared_ptr<const CompositionInfo> composition_;
};

inline void require_same_functor(const PolyFunctor& a, const PolyFunctor& b) {
    if (!(a == b)) throw std::invalid_argument("functor mismatch: " + a.spec() + " vs " + b.spec());
}

// An element of F(X): a position with an assignment fiber(position) → X by index.
struct FElem {
    std::size_t position = 0;
    std::vector<std::size_t> args;
    friend bool operator==(const FElem&, const FElem&) = default;
};

// Index codec for F(X) matching the canonical order of pair(position, tuple) labels.
class FLayout {
public:
    FLayout() = default;
    FLayout(const PolyFunctor& f, std::size_t n) : n_(n) {
        offsets_.reserve(f.position_count() + 1);
        arities_.reserve(f.position_count());
        double total = 0;
        for (std::size_t p = 0; p < f.position_count(); ++p) {
            offsets_.push_back(static_cast<std::size_t>(total));
            arities_.push_back(f.arity(p));
            total += power(static_cast<double>(n), static_cast<double>(f.arity(p)));
            check_size("F(X) for " + f.spec() + " on " + std::to_string(n) + " elements", total);
        }
        offsets_.push_back(static_cast<std::size_t>(total));
    }

    std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
    std::size_t carrier_size() const noexcept { return n_; }
    std::size_t position_begin(std::size_t p) const { return offsets_[p]; }
    std::size_t position_end(std::size_t p) const { return offsets_[p + 1]; }

    std::size_t encode(std::size_t p, std::span<const std::size_t> args) const {
        std::size_t r = 0;
        for (std::size_t a : args) r = r * n_ + a;
        return offsets_[p] + r;
    }
    std::size_t encode(const FElem& e) const { return encode(e.position, e.args); }

    std::size_t position_of(std::size_t idx) const {
        auto it = std::upper_bound(offsets_.begin(), offsets_.end(), idx);
        std::size_t p = static_cast<std::size_t>(it - offsets_.begin()) - 1;
        while (offsets_[p + 1] == offsets_[p]) ++p;  // skip positions with no elements (n = 0, arity > 0)
        return p;
    }

    FElem decode(std::size_t idx) const {
        FElem e;
        e.position = position_of(idx);
        std::size_t r = idx - offsets_[e.position];
        e.args.resize(arities_[e.position]);
        for (std::size_t i = e.args.size(); i-- > 0;) {
            e.args[i] = r % n_;
            r /= n_;
        }
        return e;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> arities_;
};

inline Label felem_label(const PolyFunctor& f, const Carrier& x, const FElem& e) {
    return Label::pair(f.positions()[e.position], function_label(x, e.args));
}

inline FElem felem_from_label(const PolyFunctor& f, const Carrier& x, const Label& l) {
    if (l.kind() != Label::Kind::Pair || l.second().kind() != Label::Kind::Tuple)
        throw std::invalid_argument("not an F-element label: " + l.str());
    FElem e;
    e.position = f.positions().index_of(l.first());
    const auto& items = l.second().children();
    if (items.size() != f.arity(e.position))
        throw std::invalid_argument("assignment of wrong arity in " + l.str());
    for (const Label& item : items) e.args.push_back(x.index_of(item));
    return e;
}

inline Carrier apply_to_set(const PolyFunctor& f, const Carrier& x) {
    FLayout layout(f, x.size());
    std::vector<Label> elems;
    elems.reserve(layout.size());
    for (std::size_t i = 0; i < layout.size(); ++i) elems.push_back(felem_label(f, x, layout.decode(i)));
    return Carrier(std::move(elems));
}

inline FElem apply_to_elem(const FElem& e, std::span<const std::size_t> table) {
    FElem r{e.position, {}};
    r.args.reserve(e.args.size());
    for (std::size_t a : e.args) r.args.push_back(table[a]);
    return r;
}

inline Map apply_to_map(const PolyFunctor& f, const Map& m) {
    FLayout from(f, m.dom().size()), to(f, m.cod().size());
    std::vector<std::size_t> t(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) t[i] = to.encode(apply_to_elem(from.decode(i), m.table()));
    return Map(apply_to_set(f, m.dom()), apply_to_set(f, m.cod()), std::move(t));
}

// ∇ on single elements; the result ranges over X×Y indexed as x*|Y| + y.
inline FElem nabla_elem(const PolyFunctor& f, const FElem& c, const FElem& d, std::size_t ny) {
    FElem r;
    r.position = f.mul(c.position, d.position);
    const ZipTable& z = f.zip(c.position, d.position);
    r.args.reserve(z.size());
    for (auto [i, j] : z) r.args.push_back(c.args[i] * ny + d.args[j]);
    return r;
}

inline Map nabla(const PolyFunctor& f, const Carrier& x, const Carrier& y) {
    FLayout fx(f, x.size()), fy(f, y.size()), fxy(f, x.size() * y.size());
    check_size("F(X) x F(Y)", static_cast<double>(fx.size()) * static_cast<double>(fy.size()));
    const Product xy = mk_product(x, y);
    const Product dom = mk_product(apply_to_set(f, x), apply_to_set(f, y));
    std::vector<std::size_t> t(dom.carrier.size());
    for (std::size_t i = 0; i < fx.size(); ++i) {
        const FElem c = fx.decode(i);
        for (std::size_t j = 0; j < fy.size(); ++j)
            t[dom.index(i, j)] = fxy.encode(nabla_elem(f, c, fy.decode(j), y.size()));
    }
    return Map(dom.carrier, apply_to_set(f, xy.carrier), std::move(t));
}

inline FElem eta_elem(const PolyFunctor& f) {
    return FElem{f.unit(), std::vector<std::size_t>(f.arity(f.unit()), 0)};
}

inline Map eta(const PolyFunctor& f) {
    const Carrier pt = one();
    FLayout l(f, 1);
    return Map(pt, apply_to_set(f, pt), {l.encode(eta_elem(f))});
}

// ∇̃ : F([X,Y]) → [FX, FY]
inline Map nabla_tilde(const PolyFunctor& f, const Carrier& x, const Carrier& y) {
    const FunctionCodec xy(x.size(), y.size());
    const FLayout fxy_layout(f, xy.count()), fx(f, x.size()), fy(f, y.size());
    const FunctionCodec out(fx.size(), fy.size());
    std::vector<std::size_t> t(fxy_layout.size());
    std::vector<std::size_t> image(fx.size());
    for (std::size_t i = 0; i < fxy_layout.size(); ++i) {
        const FElem d = fxy_layout.decode(i);
        for (std::size_t j = 0; j < fx.size(); ++j) {
            const FElem b = fx.decode(j);
            FElem r{f.mul(d.position, b.position), {}};
            for (auto [u, v] : f.zip(d.position, b.position)) r.args.push_back(xy.digit(d.args[u], b.args[v]));
            image[j] = fy.encode(r);
        }
        t[i] = out.encode(image);
    }
    return Map(apply_to_set(f, exponential(x, y)), exponential(apply_to_set(f, x), apply_to_set(f, y)),
               std::move(t));
}

struct LawCheck {
    std::string law;
    bool passed = true;
    std::string witness;
};

struct ValidationReport {
    std::vector<LawCheck> laws;
    bool ok() const {
        return std::all_of(laws.begin(), laws.end(), [](const LawCheck& l) { return l.passed; });
    }
};

inline ValidationReport validate_functor(const PolyFunctor& f) {
    const std::size_t n = f.position_count();
    const auto& P = f.positions();
    auto name = [&](std::size_t p) { return P[p].str(); };
    ValidationReport rep;
    auto fail = [](LawCheck& l, std::string w) {
        if (l.passed) {
            l.passed = false;
            l.witness = std::move(w);
        }
    };

    LawCheck assoc{"monoid associativity", true, {}}, comm{"monoid commutativity", true, {}},
        unit{"monoid unit", true, {}};
    for (std::size_t a = 0; a < n; ++a) {
        if (f.mul(f.unit(), a) != a || f.mul(a, f.unit()) != a) fail(unit, name(a));
        for (std::size_t b = 0; b < n; ++b) {
            if (f.mul(a, b) != f.mul(b, a)) fail(comm, "(" + name(a) + "," + name(b) + ")");
            for (std::size_t c = 0; c < n; ++c)
                if (f.mul(f.mul(a, b), c) != f.mul(a, f.mul(b, c)))
                    fail(assoc, "(" + name(a) + "," + name(b) + "," + name(c) + ")");
        }
    }

    LawCheck coassoc{"zip coassociativity", true, {}}, counit{"zip counitality", true, {}},
        sym{"zip symmetry", true, {}};
    for (std::size_t c = 0; c < n; ++c) {
        const ZipTable& lu = f.zip(f.unit(), c);
        const ZipTable& ru = f.zip(c, f.unit());
        if (f.mul(f.unit(), c) == c) {
            for (std::size_t i = 0; i < lu.size(); ++i)
                if (lu[i].second != i) fail(counit, "left unit at " + name(c) + " fiber index " + std::to_string(i));
            for (std::size_t i = 0; i < ru.size(); ++i)
                if (ru[i].first != i) fail(counit, "right unit at " + name(c) + " fiber index " + std::to_string(i));
        }
        for (std::size_t d = 0; d < n; ++d) {
            if (f.mul(c, d) == f.mul(d, c)) {
                const ZipTable& zcd = f.zip(c, d);
                const ZipTable& zdc = f.zip(d, c);
                for (std::size_t i = 0; i < zcd.size(); ++i)
                    if (zcd[i].first != zdc[i].second || zcd[i].second != zdc[i].first)
                        fail(sym, "(" + name(c) + "," + name(d) + ") fiber index " + std::to_string(i));
            }
            for (std::size_t e = 0; e < n; ++e) {
                const std::size_t cd = f.mul(c, d), de = f.mul(d, e);
                if (f.mul(cd, e) != f.mul(c, de)) continue;
                const ZipTable& outer_l = f.zip(cd, e);
                const ZipTable& outer_r = f.zip(c, de);
                for (std::size_t i = 0; i < outer_l.size(); ++i) {
                    const auto [j, k3] = outer_l[i];
                    const auto [k1, k2] = f.zip(c, d)[j];
                    const auto [k1r, jr] = outer_r[i];
                    const auto [k2r, k3r] = f.zip(d, e)[jr];
                    if (k1 != k1r || k2 != k2r || k3 != k3r)
                        fail(coassoc, "(" + name(c) + "," + name(d) + "," + name(e) + ") fiber index " +
                                          std::to_string(i));
                }
            }
        }
    }
    rep.laws = {assoc, comm, unit, coassoc, counit, sym};
    return rep;
}

namespace detail {

inline ZipTable diagonal_zip(std::size_t k) {
    ZipTable z(k);
    for (std::size_t i = 0; i < k; ++i) z[i] = {i, i};
    return z;
}

// Positions: one absorbing nullary position plus X × shapes. Used by the list and tree functors.
inline FunctorRef pointed_functor(const std::string& spec, const CommMonoid& m, const Label& zero,
                                  const std::string& node_tag, const std::vector<Label>& shape_labels,
                                  const std::vector<std::size_t>& shape_arity, const std::vector<Label>& fiber_labels,
                                  bool min_shape) {
    std::vector<Label> pos_labels{zero};
    for (const Label& x : m.elements)
        for (const Label& s : shape_labels)
            pos_labels.push_back(shape_labels.size() == 1 ? Label::tagged(node_tag, x)
                                                          : Label::tagged(node_tag, Label::pair(x, s)));
    Carrier positions(pos_labels);
    const std::size_t ns = shape_labels.size();
    const std::size_t n = positions.size();
    // raw index: 0 = zero, 1 + x*ns + s
    std::vector<std::size_t> raw_to_pos(n);
    for (std::size_t r = 0; r < n; ++r) raw_to_pos[r] = positions.index_of(pos_labels[r]);
    std::vector<std::size_t> pos_to_raw(n);
    for (std::size_t r = 0; r < n; ++r) pos_to_raw[raw_to_pos[r]] = r;

    std::vector<Carrier> fibers(n);
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t r = pos_to_raw[p];
        if (r == 0) continue;
        const std::size_t k = shape_arity[(r - 1) % ns];
        fibers[p] = Carrier(std::vector<Label>(fiber_labels.begin(), fiber_labels.begin() + static_cast<long>(k)));
    }
    std::vector<std::size_t> mul(n * n);
    std::vector<ZipTable> zips(n * n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t ra = pos_to_raw[a], rb = pos_to_raw[b];
            std::size_t prod = 0;
            if (ra != 0 && rb != 0) {
                const std::size_t x = m.mul((ra - 1) / ns, (rb - 1) / ns);
                const std::size_t sa = (ra - 1) % ns, sb = (rb - 1) % ns;
                const std::size_t s = min_shape ? std::min(sa, sb) : sa;
                prod = raw_to_pos[1 + x * ns + s];
            } else {
                prod = raw_to_pos[0];
            }
            mul[a * n + b] = prod;
            zips[a * n + b] = diagonal_zip(fibers[prod].size());
        }
    const std::size_t unit = raw_to_pos[1 + m.unit * ns + (ns - 1)];
    return std::make_shared<const PolyFunctor>(spec, positions, std::move(mul), unit, std::move(fibers),
                                               std::move(zips));
}

} // namespace detail

inline FunctorRef unit_f() {
    return std::make_shared<const PolyFunctor>("unit", Carrier({Label::symbol("pt")}), std::vector<std::size_t>{0}, 0,
                                               std::vector<Carrier>{Carrier()}, std::vector<ZipTable>{ZipTable{}});
}

inline FunctorRef id_f() {
    return std::make_shared<const PolyFunctor>("id", Carrier({Label::symbol("pt")}), std::vector<std::size_t>{0}, 0,
                                               std::vector<Carrier>{one()}, std::vector<ZipTable>{{{0, 0}}});
}

inline FunctorRef const_monoid_f(const CommMonoid& m) {
    const std::size_t n = m.size();
    return std::make_shared<const PolyFunctor>("const(" + m.name + ")", m.elements, m.op, m.unit,
                                               std::vector<Carrier>(n), std::vector<ZipTable>(n * n));
}

// 1 + X. Position "succ" is the unit, "zero" absorbs.
inline FunctorRef maybe_f() {
    Carrier positions({Label::symbol("succ"), Label::symbol("zero")});
    const std::size_t s = positions.index_of(Label::symbol("succ"));
    const std::size_t z = positions.index_of(Label::symbol("zero"));
    std::vector<std::size_t> mul(4, z);
    mul[s * 2 + s] = s;
    std::vector<Carrier> fibers(2);
    fibers[s] = one();
    std::vector<ZipTable> zips(4);
    zips[s * 2 + s] = {{0, 0}};
    return std::make_shared<const PolyFunctor>("maybe", positions, std::move(mul), s, std::move(fibers),
                                               std::move(zips));
}

// 1 + X × A
inline FunctorRef list_f(const CommMonoid& m) {
    return detail::pointed_functor("list(" + m.name + ")", m, Label::symbol("nil"), "cons", {Label::unit()}, {1},
                                   {Label::unit()}, false);
}

// 1 + X × A × A
inline FunctorRef bintree_f(const CommMonoid& m) {
    return detail::pointed_functor("bintree(" + m.name + ")", m, Label::symbol("leaf"), "node", {Label::unit()}, {2},
                                   {Label::symbol("L"), Label::symbol("R")}, false);
}

// 1 + X × A^{≤K}: node arities 0..K, product truncates to the smaller arity.
inline FunctorRef bounded_tree_f(const CommMonoid& m, std::size_t k) {
    std::vector<Label> shapes, fiber;
    std::vector<std::size_t> arity;
    for (std::size_t i = 0; i <= k; ++i) {
        shapes.push_back(Label::nat(i));
        arity.push_back(i);
    }
    for (std::size_t i = 0; i < k; ++i) fiber.push_back(Label::nat(i));
    return detail::pointed_functor("bounded_tree(" + m.name + "," + std::to_string(k) + ")", m,
                                   Label::symbol("leaf"), "node", shapes, arity, fiber, true);
}

// 2 × X^Σ with positions under conjunction.
inline FunctorRef automaton_f(const Carrier& sigma) {
    std::string spec = "automaton(";
    for (std::size_t i = 0; i < sigma.size(); ++i) spec += (i ? "," : "") + sigma[i].str();
    spec += ")";
    const std::size_t k = sigma.size();
    return std::make_shared<const PolyFunctor>(spec, Carrier::range(2), std::vector<std::size_t>{0, 0, 0, 1}, 1,
                                               std::vector<Carrier>{sigma, sigma},
                                               std::vector<ZipTable>(4, detail::diagonal_zip(k)));
}

// G ∘ F with unit (e_G, const e_F) and the product taken through the zip of G.
inline FunctorRef compose(const FunctorRef& outer, const FunctorRef& inner) {
    const PolyFunctor& G = *outer;
    const PolyFunctor& F = *inner;
    auto info = std::make_shared<CompositionInfo>();
    info->outer = outer;
    info->inner = inner;
    std::vector<Label> pos_labels;
    std::vector<Carrier> fibers;
    for (std::size_t g = 0; g < G.position_count(); ++g) {
        const FunctionCodec hs(G.arity(g), F.position_count());
        for (std::size_t code = 0; code < hs.count(); ++code) {
            std::vector<std::size_t> h = hs.decode(code);
            pos_labels.push_back(Label::pair(G.positions()[g], function_label(F.positions(), h)));
            std::vector<Label> fib;
            ZipTable idx;
            for (std::size_t i = 0; i < h.size(); ++i)
                for (std::size_t j = 0; j < F.arity(h[i]); ++j) {
                    fib.push_back(Label::pair(G.fiber(g)[i], F.fiber(h[i])[j]));
                    idx.emplace_back(i, j);
                }
            check_size("composite fiber", static_cast<double>(fib.size()));
            fibers.emplace_back(fib);
            info->positions.emplace_back(g, std::move(h));
            info->fibers.push_back(std::move(idx));
        }
    }
    Carrier positions(pos_labels);  // enumeration order is already canonical
    const std::size_t n = positions.size();
    check_size("composite position table", static_cast<double>(n) * static_cast<double>(n));
    auto find_pos = [&](std::size_t g, const std::vector<std::size_t>& h) {
        return positions.index_of(Label::pair(G.positions()[g], function_label(F.positions(), h)));
    };
    auto fiber_index = [&](std::size_t p, std::size_t i, std::size_t j) {
        const ZipTable& idx = info->fibers[p];
        for (std::size_t k = 0; k < idx.size(); ++k)
            if (idx[k].first == i && idx[k].second == j) return k;
        throw std::logic_error("composite fiber lookup failed");
    };
    std::vector<std::size_t> mul(n * n);
    std::vector<ZipTable> zips(n * n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            const auto& [ga, ha] = info->positions[a];
            const auto& [gb, hb] = info->positions[b];
            const std::size_t g = G.mul(ga, gb);
            const ZipTable& zg = G.zip(ga, gb);
            std::vector<std::size_t> h(zg.size());
            for (std::size_t i = 0; i < zg.size(); ++i) h[i] = F.mul(ha[zg[i].first], hb[zg[i].second]);
            const std::size_t p = find_pos(g, h);
            mul[a * n + b] = p;
            ZipTable z;
            for (auto [i, j] : info->fibers[p]) {
                const auto [i1, i2] = zg[i];
                const auto [j1, j2] = F.zip(ha[i1], hb[i2])[j];
                z.emplace_back(fiber_index(a, i1, j1), fiber_index(b, i2, j2));
            }
            zips[a * n + b] = std::move(z);
        }
    const std::size_t unit = find_pos(G.unit(), std::vector<std::size_t>(G.arity(G.unit()), F.unit()));
    return std::make_shared<const PolyFunctor>("compose(" + G.spec() + "," + F.spec() + ")", positions,
                                               std::move(mul), unit, std::move(fibers), std::move(zips),
                                               std::move(info));
}

// Nested view of a composite element: outer position plus one inner element per outer fiber slot.
struct NestedElem {
    std::size_t outer_position = 0;
    std::vector<FElem> inner;
};

inline NestedElem split_composite(const PolyFunctor& gf, const FElem& e) {
    const CompositionInfo* info = gf.composition();
    if (!info) throw std::invalid_argument(gf.spec() + " is not a composite functor");
    const auto& [g, h] = info->positions[e.position];
    NestedElem r{g, {}};
    for (std::size_t i = 0; i < h.size(); ++i) r.inner.push_back(FElem{h[i], {}});
    const ZipTable& idx = info->fibers[e.position];
    for (std::size_t k = 0; k < idx.size(); ++k) r.inner[idx[k].first].args.push_back(e.args[k]);
    return r;
}

inline FElem join_composite(const PolyFunctor& gf, const NestedElem& n) {
    const CompositionInfo* info = gf.composition();
    if (!info) throw std::invalid_argument(gf.spec() + " is not a composite functor");
    const PolyFunctor& G = *info->outer;
    const PolyFunctor& F = *info->inner;
    std::vector<std::size_t> h;
    for (const FElem& x : n.inner) h.push_back(x.position);
    FElem r;
    r.position = gf.positions().index_of(Label::pair(G.positions()[n.outer_position], function_label(F.positions(), h)));
    for (const FElem& x : n.inner)
        for (std::size_t a : x.args) r.args.push_back(a);
    return r;
}

} // namespace pm
