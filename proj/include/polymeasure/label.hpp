#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pm {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : std::runtime_error(what), line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Structured atom naming every element the library handles. Immutable; copies share nodes.
class Label {
public:
    enum class Kind : std::uint8_t { Unit, Nat, Symbol, Pair, Tagged, Tuple };

    Label() : Label(unit()) {}

    static Label unit() {
        static const Label u{std::make_shared<const Node>(Node{Kind::Unit, 0, {}, {}})};
        return u;
    }
    static Label nat(std::uint64_t n) { return Label{std::make_shared<const Node>(Node{Kind::Nat, n, {}, {}})}; }
    static Label symbol(std::string s) {
        return Label{std::make_shared<const Node>(Node{Kind::Symbol, 0, std::move(s), {}})};
    }
    static Label pair(Label a, Label b) {
        return Label{std::make_shared<const Node>(Node{Kind::Pair, 0, {}, {std::move(a), std::move(b)}})};
    }
    static Label tagged(std::string tag, Label inner) {
        return Label{std::make_shared<const Node>(Node{Kind::Tagged, 0, std::move(tag), {std::move(inner)}})};
    }
    static Label tuple(std::vector<Label> items) {
        return Label{std::make_shared<const Node>(Node{Kind::Tuple, 0, {}, std::move(items)})};
    }

    Kind kind() const noexcept { return node_->kind; }
    std::uint64_t number() const noexcept { return node_->number; }
    const std::string& text() const noexcept { return node_->text; }
    const std::vector<Label>& children() const noexcept { return node_->children; }
    const Label& first() const { return node_->children.at(0); }
    const Label& second() const { return node_->children.at(1); }
    const Label& inner() const { return node_->children.at(0); }

    friend std::strong_ordering operator<=>(const Label& a, const Label& b) {
        if (a.node_ == b.node_) return std::strong_ordering::equal;
        const Node& x = *a.node_;
        const Node& y = *b.node_;
        if (x.kind != y.kind) return x.kind <=> y.kind;
        switch (x.kind) {
        case Kind::Unit: return std::strong_ordering::equal;
        case Kind::Nat: return x.number <=> y.number;
        case Kind::Symbol: return x.text.compare(y.text) <=> 0;
        case Kind::Tagged:
            if (auto c = x.text.compare(y.text) <=> 0; c != 0) return c;
            [[fallthrough]];
        case Kind::Pair:
        case Kind::Tuple: {
            const std::size_t n = std::min(x.children.size(), y.children.size());
            for (std::size_t i = 0; i < n; ++i)
                if (auto c = x.children[i] <=> y.children[i]; c != 0) return c;
            return x.children.size() <=> y.children.size();
        }
        }
        return std::strong_ordering::equal;
    }
    friend bool operator==(const Label& a, const Label& b) { return (a <=> b) == 0; }

    std::string str() const {
        std::string out;
        write(out);
        return out;
    }

    static Label parse(std::string_view text);

private:
    struct Node {
        Kind kind;
        std::uint64_t number;
        std::string text;
        std::vector<Label> children;
    };
    explicit Label(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    static bool plain_symbol(const std::string& s) {
        if (s.empty()) return false;
        const auto c0 = static_cast<unsigned char>(s[0]);
        if (!(std::isalpha(c0) || c0 == '_' || c0 >= 0x80)) return false;
        for (unsigned char c : s)
            if (!(std::isalnum(c) || c == '_' || c == '\'' || c >= 0x80)) return false;
        return true;
    }

    void write(std::string& out) const {
        const Node& n = *node_;
        switch (n.kind) {
        case Kind::Unit: out += "()"; break;
        case Kind::Nat: out += std::to_string(n.number); break;
        case Kind::Symbol:
            if (plain_symbol(n.text)) {
                out += n.text;
            } else {
                out += '"';
                for (char c : n.text) {
                    if (c == '"' || c == '\\') out += '\\';
                    out += c;
                }
                out += '"';
            }
            break;
        case Kind::Pair:
            out += '(';
            n.children[0].write(out);
            out += ',';
            n.children[1].write(out);
            out += ')';
            break;
        case Kind::Tagged:
            out += n.text;
            out += ':';
            n.children[0].write(out);
            break;
        case Kind::Tuple:
            out += '[';
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (i) out += ',';
                n.children[i].write(out);
            }
            out += ']';
            break;
        }
    }

    std::shared_ptr<const Node> node_;
};

namespace detail {

class LabelParser {
public:
    explicit LabelParser(std::string_view s) : s_(s) {}

    Label parse_all() {
        Label l = parse_one();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters in label");
        return l;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg + " at column " + std::to_string(pos_ + 1) + " in '" + std::string(s_) + "'", 1, pos_ + 1);
    }
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }
    static bool ident_char(char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == '_' || c == '\'' || u >= 0x80;
    }

    Label parse_one() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of label");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            if (eat(')')) return Label::unit();
            Label a = parse_one();
            expect(',');
            Label b = parse_one();
            expect(')');
            return Label::pair(std::move(a), std::move(b));
        }
        if (c == '[') {
            ++pos_;
            std::vector<Label> items;
            if (eat(']')) return Label::tuple({});
            do {
                items.push_back(parse_one());
            } while (eat(','));
            expect(']');
            return Label::tuple(std::move(items));
        }
        if (c == '"') {
            ++pos_;
            std::string text;
            while (pos_ < s_.size() && s_[pos_] != '"') {
                if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
                text += s_[pos_++];
            }
            if (pos_ >= s_.size()) fail("unterminated quoted symbol");
            ++pos_;
            return maybe_tagged(std::move(text));
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::uint64_t v = 0;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                v = v * 10 + static_cast<std::uint64_t>(s_[pos_++] - '0');
            return Label::nat(v);
        }
        if (ident_char(c)) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
            return maybe_tagged(std::string(s_.substr(start, pos_ - start)));
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    Label maybe_tagged(std::string text) {
        if (pos_ < s_.size() && s_[pos_] == ':') {
            ++pos_;
            return Label::tagged(std::move(text), parse_one());
        }
        return Label::symbol(std::move(text));
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Label Label::parse(std::string_view text) { return detail::LabelParser(text).parse_all(); }

} // namespace pm
