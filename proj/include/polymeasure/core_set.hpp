#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "label.hpp"

namespace pm {

// Raised whenever an enumeration would exceed a configured bound. Never silently truncates.
class GuardError : public std::runtime_error {
public:
    GuardError(const std::string& bound, double requested, std::size_t limit)
        : std::runtime_error(bound + " too large: " + format(requested) + " exceeds the bound " +
                             std::to_string(limit)),
          bound_(bound), limit_(limit) {}
    const std::string& bound() const noexcept { return bound_; }
    std::size_t limit() const noexcept { return limit_; }

private:
    static std::string format(double v) {
        if (v < 1e15) return std::to_string(static_cast<unsigned long long>(v));
        return std::to_string(v);
    }
    std::string bound_;
    std::size_t limit_;
};

struct Guards {
    std::size_t size = 1'000'000;         // any materialized carrier or table
    std::size_t brute = 1'000'000;        // |B|^(|C||A|) for brute-force measuring enumeration
    std::size_t subcoalgebras = 20;       // carrier bound for subcoalgebra listing
    std::size_t tensor_levels = 6;        // default measuring tensor budget
};

namespace detail {
inline std::size_t env_or(const char* name, std::size_t fallback) {
    if (const char* v = std::getenv(name)) {
        char* end = nullptr;
        const unsigned long long parsed = std::strtoull(v, &end, 10);
        if (end != v && *end == '\0') return static_cast<std::size_t>(parsed);
    }
    return fallback;
}
} // namespace detail

// Process-wide guard settings, seeded from POLYMEASURE_* environment variables.
inline Guards& guards() {
    static Guards g = [] {
        Guards d;
        d.size = detail::env_or("POLYMEASURE_SIZE_GUARD", d.size);
        d.brute = detail::env_or("POLYMEASURE_BRUTE_GUARD", d.brute);
        d.subcoalgebras = detail::env_or("POLYMEASURE_SUBCOALGEBRA_GUARD", d.subcoalgebras);
        d.tensor_levels = detail::env_or("POLYMEASURE_TENSOR_BUDGET", d.tensor_levels);
        return d;
    }();
    return g;
}

inline void check_guard(const std::string& bound, double requested, std::size_t limit) {
    if (requested > static_cast<double>(limit)) throw GuardError(bound, requested, limit);
}

inline void check_size(const std::string& what, double requested) { check_guard(what, requested, guards().size); }

// base^exp as a double, for guard arithmetic that must not overflow.
inline double power(double base, double exp) { return std::pow(base, exp); }

inline std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) r *= base;
    return r;
}

// Finite set of distinct labels in canonical order.
class Carrier {
public:
    Carrier() : elems_(std::make_shared<const std::vector<Label>>()) {}

    explicit Carrier(std::vector<Label> elems) {
        std::sort(elems.begin(), elems.end());
        if (auto it = std::adjacent_find(elems.begin(), elems.end()); it != elems.end())
            throw std::invalid_argument("duplicate carrier element " + it->str());
        elems_ = std::make_shared<const std::vector<Label>>(std::move(elems));
    }

    // {0, 1, ..., n-1} as natural-number labels.
    static Carrier range(std::size_t n) {
        std::vector<Label> v;
        v.reserve(n);
        for (std::size_t i = 0; i < n; ++i) v.push_back(Label::nat(i));
        return Carrier(std::move(v));
    }

    std::size_t size() const noexcept { return elems_->size(); }
    bool empty() const noexcept { return elems_->empty(); }
    const Label& operator[](std::size_t i) const { return (*elems_)[i]; }
    std::span<const Label> elements() const noexcept { return *elems_; }
    auto begin() const noexcept { return elems_->begin(); }
    auto end() const noexcept { return elems_->end(); }

    std::optional<std::size_t> find(const Label& l) const {
        auto it = std::lower_bound(elems_->begin(), elems_->end(), l);
        if (it == elems_->end() || *it != l) return std::nullopt;
        return static_cast<std::size_t>(it - elems_->begin());
    }
    std::size_t index_of(const Label& l) const {
        if (auto i = find(l)) return *i;
        throw std::out_of_range("label " + l.str() + " is not an element of the carrier");
    }
    bool contains(const Label& l) const { return find(l).has_value(); }

    friend bool operator==(const Carrier& a, const Carrier& b) {
        return a.elems_ == b.elems_ || *a.elems_ == *b.elems_;
    }

    std::string str() const {
        std::string out = "{";
        for (std::size_t i = 0; i < size(); ++i) {
            if (i) out += ", ";
            out += (*elems_)[i].str();
        }
        return out + "}";
    }

private:
    std::shared_ptr<const std::vector<Label>> elems_;
};

// Total function between carriers, stored as an index table.
class Map {
public:
    Map() = default;
    Map(Carrier dom, Carrier cod, std::vector<std::size_t> table)
        : dom_(std::move(dom)), cod_(std::move(cod)), table_(std::move(table)) {
        if (table_.size() != dom_.size()) throw std::invalid_argument("map table is not total on its domain");
        for (std::size_t v : table_)
            if (v >= cod_.size()) throw std::invalid_argument("map image outside its codomain");
    }

    static Map from_labels(Carrier dom, Carrier cod, const std::vector<std::pair<Label, Label>>& entries) {
        std::vector<std::size_t> t(dom.size(), SIZE_MAX);
        for (const auto& [x, y] : entries) {
            const std::size_t i = dom.index_of(x);
            if (t[i] != SIZE_MAX) throw std::invalid_argument("map assigns " + x.str() + " twice");
            t[i] = cod.index_of(y);
        }
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] == SIZE_MAX) throw std::invalid_argument("map has no image for " + dom[i].str());
        return Map(std::move(dom), std::move(cod), std::move(t));
    }

    static Map identity(const Carrier& s) {
        std::vector<std::size_t> t(s.size());
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = i;
        return Map(s, s, std::move(t));
    }

    const Carrier& dom() const noexcept { return dom_; }
    const Carrier& cod() const noexcept { return cod_; }
    std::span<const std::size_t> table() const noexcept { return table_; }
    std::size_t operator()(std::size_t i) const { return table_[i]; }
    const Label& at(const Label& x) const { return cod_[table_[dom_.index_of(x)]]; }

    friend bool operator==(const Map& a, const Map& b) {
        return a.table_ == b.table_ && a.dom_ == b.dom_ && a.cod_ == b.cod_;
    }

    std::string str() const {
        std::string out = "{";
        for (std::size_t i = 0; i < table_.size(); ++i) {
            if (i) out += ", ";
            out += dom_[i].str() + " -> " + cod_[table_[i]].str();
        }
        return out + "}";
    }

private:
    Carrier dom_;
    Carrier cod_;
    std::vector<std::size_t> table_;
};

// g ∘ f
inline Map compose(const Map& g, const Map& f) {
    if (!(f.cod() == g.dom())) throw std::invalid_argument("compose: codomain/domain mismatch");
    std::vector<std::size_t> t(f.dom().size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = g(f(i));
    return Map(f.dom(), g.cod(), std::move(t));
}

struct Product {
    Carrier carrier;
    Map proj1;
    Map proj2;
    // index of (s, t) inside the product carrier
    std::size_t size_right = 0;
    std::size_t index(std::size_t s, std::size_t t) const { return s * size_right + t; }
};

inline Product mk_product(const Carrier& s, const Carrier& t) {
    check_size("product carrier", static_cast<double>(s.size()) * static_cast<double>(t.size()));
    std::vector<Label> elems;
    std::vector<std::size_t> p1, p2;
    elems.reserve(s.size() * t.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < t.size(); ++j) {
            elems.push_back(Label::pair(s[i], t[j]));
            p1.push_back(i);
            p2.push_back(j);
        }
    Carrier c(std::move(elems));
    return Product{c, Map(c, s, std::move(p1)), Map(c, t, std::move(p2)), t.size()};
}

struct Coproduct {
    Carrier carrier;
    Map inl;
    Map inr;
};

inline Coproduct mk_coproduct(const Carrier& s, const Carrier& t) {
    check_size("coproduct carrier", static_cast<double>(s.size()) + static_cast<double>(t.size()));
    std::vector<Label> elems;
    for (const Label& x : s) elems.push_back(Label::tagged("inl", x));
    for (const Label& y : t) elems.push_back(Label::tagged("inr", y));
    Carrier c(std::move(elems));
    std::vector<std::size_t> l(s.size()), r(t.size());
    for (std::size_t i = 0; i < s.size(); ++i) l[i] = i;
    for (std::size_t j = 0; j < t.size(); ++j) r[j] = s.size() + j;
    return Coproduct{c, Map(s, c, std::move(l)), Map(t, c, std::move(r))};
}

// Mixed-radix codec for functions dom -> cod with |dom| digits, first digit most significant.
// Its order coincides with the canonical order of tuple labels.
class FunctionCodec {
public:
    FunctionCodec(std::size_t dom_size, std::size_t cod_size) : dom_(dom_size), cod_(cod_size) {
        check_size("function space [S,T]", power(static_cast<double>(cod_size), static_cast<double>(dom_size)));
        count_ = ipow(cod_size, dom_size);
    }
    std::size_t count() const noexcept { return count_; }
    std::size_t dom_size() const noexcept { return dom_; }
    std::size_t cod_size() const noexcept { return cod_; }

    std::size_t encode(std::span<const std::size_t> values) const {
        std::size_t r = 0;
        for (std::size_t v : values) r = r * cod_ + v;
        return r;
    }
    std::vector<std::size_t> decode(std::size_t code) const {
        std::vector<std::size_t> v(dom_);
        for (std::size_t i = dom_; i-- > 0;) {
            v[i] = code % cod_;
            code /= cod_;
        }
        return v;
    }
    // value at argument position i
    std::size_t digit(std::size_t code, std::size_t i) const {
        for (std::size_t k = dom_ - 1; k > i; --k) code /= cod_;
        return code % cod_;
    }

private:
    std::size_t dom_;
    std::size_t cod_;
    std::size_t count_ = 0;
};

// The one-point set.
inline Carrier one() { return Carrier({Label::unit()}); }

// Label of a function as the tuple of its images in domain order.
inline Label function_label(const Carrier& cod, std::span<const std::size_t> images) {
    std::vector<Label> items;
    items.reserve(images.size());
    for (std::size_t v : images) items.push_back(cod[v]);
    return Label::tuple(std::move(items));
}

// The carrier [S,T] of all functions, labelled by image tuples.
inline Carrier exponential(const Carrier& s, const Carrier& t) {
    FunctionCodec codec(s.size(), t.size());
    std::vector<Label> elems;
    elems.reserve(codec.count());
    for (std::size_t code = 0; code < codec.count(); ++code) elems.push_back(function_label(t, codec.decode(code)));
    return Carrier(std::move(elems));
}

inline std::vector<Map> enumerate_functions(const Carrier& s, const Carrier& t) {
    check_guard("hom-set [S,T]", power(static_cast<double>(t.size()), static_cast<double>(s.size())), guards().size);
    FunctionCodec codec(s.size(), t.size());
    std::vector<Map> out;
    out.reserve(codec.count());
    for (std::size_t code = 0; code < codec.count(); ++code) out.emplace_back(s, t, codec.decode(code));
    return out;
}

struct MapClass {
    bool injective;
    bool surjective;
};

inline MapClass classify_map(const Map& f) {
    std::vector<std::size_t> hits(f.cod().size(), 0);
    for (std::size_t v : f.table()) ++hits[v];
    bool inj = true, surj = true;
    for (std::size_t h : hits) {
        if (h > 1) inj = false;
        if (h == 0) surj = false;
    }
    return {inj, surj};
}

// Union-find with the smaller index as representative, so results are schedule independent.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n = 0) : parent_(n) {
        for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
    }
    std::size_t add() {
        parent_.push_back(parent_.size());
        return parent_.size() - 1;
    }
    std::size_t size() const noexcept { return parent_.size(); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
        return true;
    }

private:
    std::vector<std::size_t> parent_;
};

} // namespace pm
