#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace pm::detail {

// Finite-domain constraint solver: generalized arc consistency plus backtracking.
// Solutions are reported in lexicographic order of the variable vector.
class Csp {
public:
    using Pred = std::function<bool(std::span<const std::size_t>)>;

    explicit Csp(const std::vector<std::size_t>& domain_sizes) : domains_(domain_sizes.size()) {
        for (std::size_t v = 0; v < domain_sizes.size(); ++v) domains_[v].assign(domain_sizes[v], 1);
        watch_.resize(domain_sizes.size());
    }

    std::size_t variables() const noexcept { return domains_.size(); }

    void forbid(std::size_t var, std::size_t value) { domains_[var][value] = 0; }
    void fix(std::size_t var, std::size_t value) {
        for (std::size_t x = 0; x < domains_[var].size(); ++x) domains_[var][x] = (x == value);
    }

    // vars must be distinct
    void add(std::vector<std::size_t> vars, Pred pred) {
        const std::size_t id = constraints_.size();
        for (std::size_t v : vars) watch_[v].push_back(id);
        constraints_.push_back({std::move(vars), std::move(pred)});
    }

    // Calls on_solution for every solution in lexicographic order until it returns false.
    // Returns the number of solutions reported.
    std::size_t solve(const std::function<bool(std::span<const std::size_t>)>& on_solution) {
        std::size_t found = 0;
        bool stop = false;
        Domains d = domains_;
        if (propagate(d, all_constraints())) search(d, on_solution, found, stop);
        return found;
    }

    std::size_t count(std::size_t limit = SIZE_MAX) {
        std::size_t n = 0;
        solve([&](std::span<const std::size_t>) { return ++n < limit; });
        return n;
    }

    std::vector<std::vector<std::size_t>> all(std::size_t limit = SIZE_MAX) {
        std::vector<std::vector<std::size_t>> out;
        solve([&](std::span<const std::size_t> s) {
            out.emplace_back(s.begin(), s.end());
            return out.size() < limit;
        });
        return out;
    }

    // product bound above which a constraint is only checked once its variables are fixed
    static constexpr std::size_t revise_limit = 200'000;

private:
    using Domains = std::vector<std::vector<char>>;
    struct Constraint {
        std::vector<std::size_t> vars;
        Pred pred;
    };

    std::vector<std::size_t> all_constraints() const {
        std::vector<std::size_t> ids(constraints_.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        return ids;
    }

    static std::size_t domain_count(const std::vector<char>& dom) {
        std::size_t n = 0;
        for (char c : dom) n += static_cast<std::size_t>(c);
        return n;
    }

    // Removes unsupported values of one constraint. Returns false on a wipe-out.
    bool revise(Domains& d, const Constraint& c, std::vector<std::size_t>& changed) const {
        const std::size_t k = c.vars.size();
        std::vector<std::vector<std::size_t>> values(k);
        double product = 1;
        for (std::size_t i = 0; i < k; ++i) {
            const auto& dom = d[c.vars[i]];
            for (std::size_t x = 0; x < dom.size(); ++x)
                if (dom[x]) values[i].push_back(x);
            if (values[i].empty()) return false;
            product *= static_cast<double>(values[i].size());
        }
        if (product > static_cast<double>(revise_limit)) return true;
        std::vector<std::vector<char>> supported(k);
        for (std::size_t i = 0; i < k; ++i) supported[i].assign(d[c.vars[i]].size(), 0);
        std::vector<std::size_t> idx(k, 0), tuple(k);
        bool any = false;
        while (true) {
            for (std::size_t i = 0; i < k; ++i) tuple[i] = values[i][idx[i]];
            if (c.pred(tuple)) {
                any = true;
                for (std::size_t i = 0; i < k; ++i) supported[i][tuple[i]] = 1;
            }
            std::size_t i = k;
            while (i > 0) {
                --i;
                if (++idx[i] < values[i].size()) break;
                idx[i] = 0;
                if (i == 0) {
                    i = SIZE_MAX;
                    break;
                }
            }
            if (k == 0 || i == SIZE_MAX) break;
        }
        if (!any) return false;
        for (std::size_t i = 0; i < k; ++i) {
            auto& dom = d[c.vars[i]];
            bool shrunk = false;
            for (std::size_t x = 0; x < dom.size(); ++x)
                if (dom[x] && !supported[i][x]) {
                    dom[x] = 0;
                    shrunk = true;
                }
            if (shrunk) changed.push_back(c.vars[i]);
        }
        return true;
    }

    bool propagate(Domains& d, std::vector<std::size_t> queue_init) const {
        std::deque<std::size_t> queue(queue_init.begin(), queue_init.end());
        std::vector<char> queued(constraints_.size(), 0);
        for (std::size_t q : queue) queued[q] = 1;
        std::vector<std::size_t> changed;
        while (!queue.empty()) {
            const std::size_t ci = queue.front();
            queue.pop_front();
            queued[ci] = 0;
            changed.clear();
            if (!revise(d, constraints_[ci], changed)) return false;
            for (std::size_t v : changed)
                for (std::size_t w : watch_[v])
                    if (!queued[w] && w != ci) {
                        queued[w] = 1;
                        queue.push_back(w);
                    }
        }
        return true;
    }

    bool full_check(const std::vector<std::size_t>& assignment) const {
        std::vector<std::size_t> tuple;
        for (const Constraint& c : constraints_) {
            tuple.clear();
            for (std::size_t v : c.vars) tuple.push_back(assignment[v]);
            if (!c.pred(tuple)) return false;
        }
        return true;
    }

    void search(Domains& d, const std::function<bool(std::span<const std::size_t>)>& on_solution, std::size_t& found,
                bool& stop) const {
        // lowest-index unfixed variable keeps the report order lexicographic
        std::size_t var = SIZE_MAX;
        for (std::size_t v = 0; v < d.size(); ++v)
            if (domain_count(d[v]) > 1) {
                var = v;
                break;
            }
        if (var == SIZE_MAX) {
            std::vector<std::size_t> assignment(d.size());
            for (std::size_t v = 0; v < d.size(); ++v)
                for (std::size_t x = 0; x < d[v].size(); ++x)
                    if (d[v][x]) assignment[v] = x;
            if (full_check(assignment)) {
                ++found;
                if (!on_solution(assignment)) stop = true;
            }
            return;
        }
        for (std::size_t x = 0; x < d[var].size() && !stop; ++x) {
            if (!d[var][x]) continue;
            Domains next = d;
            for (std::size_t y = 0; y < next[var].size(); ++y) next[var][y] = (y == x);
            if (propagate(next, watch_[var])) search(next, on_solution, found, stop);
        }
    }

    Domains domains_;
    std::vector<Constraint> constraints_;
    std::vector<std::vector<std::size_t>> watch_;
};

} // namespace pm::detail
