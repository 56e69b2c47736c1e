#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "polymeasure/io/workspace.hpp"
#include "polymeasure/universal.hpp"

using json = nlohmann::ordered_json;
using namespace pm;
using io::Workspace;

namespace {

struct Options {
    std::string functor, A, B, C, D, measuring, psi, phi;
    std::string term, set, pairs, map, table, state;
    std::string strategy = "propagate";
    std::string direction = "forward";
    std::string module = "derived";
    std::string acting, name;
    std::vector<std::string> candidates;
    std::size_t depth = 4, budget = 0, n_max = 4, max_size = 2, verify = 3, limit = 16;
};

struct Report {
    std::string command;
    bool ok = true;
    std::string summary;
    json data = json::object();
    std::string raw;  // export emits workspace text instead of a report body
};

// Resolution helpers

FunctorRef opt_functor(const Workspace& ws, const Options& o) {
    return o.functor.empty() ? nullptr : ws.functor(o.functor);
}

std::string required(const std::string& v, const char* flag) {
    if (v.empty()) throw std::invalid_argument(std::string("missing --") + flag);
    return v;
}

Algebra get_algebra(const Workspace& ws, const std::string& ref, const char* flag, const FunctorRef& hint) {
    return ws.algebra(required(ref, flag), hint);
}

Coalgebra get_coalgebra(const Workspace& ws, const std::string& ref, const char* flag, const FunctorRef& hint) {
    return ws.coalgebra(required(ref, flag), hint);
}

std::vector<Label> label_list(const std::string& text, const char* flag) {
    const Label l = Label::parse(required(text, flag));
    if (l.kind() != Label::Kind::Tuple) throw std::invalid_argument(std::string("--") + flag + " must be a list [..]");
    return l.children();
}

json labels_json(const Carrier& c) {
    json out = json::array();
    for (const Label& l : c) out.push_back(l.str());
    return out;
}

json algebra_json(const Algebra& a, std::size_t limit) {
    json out{{"functor", a.functor().spec()}, {"size", a.size()}, {"carrier", labels_json(a.carrier())}};
    if (a.layout().size() <= limit) {
        json st = json::object();
        for (std::size_t i = 0; i < a.layout().size(); ++i)
            st[felem_label(a.functor(), a.carrier(), a.layout().decode(i)).str()] = a.carrier()[a.structure()[i]].str();
        out["structure"] = std::move(st);
    }
    return out;
}

json coalgebra_json(const Coalgebra& c) {
    json st = json::object();
    for (std::size_t x = 0; x < c.size(); ++x)
        st[c.carrier()[x].str()] = felem_label(c.functor(), c.carrier(), c.step(x)).str();
    return json{{"functor", c.functor().spec()}, {"size", c.size()}, {"structure", std::move(st)}};
}

json table_json(const Coalgebra& c, const Algebra& a, const Algebra& b, std::span<const std::size_t> t) {
    json out = json::object();
    for (std::size_t x = 0; x < c.size(); ++x)
        for (std::size_t y = 0; y < a.size(); ++y)
            out[Label::pair(c.carrier()[x], a.carrier()[y]).str()] = b.carrier()[t[x * a.size() + y]].str();
    return out;
}

json violations_json(const Algebra& a, const Coalgebra& c, const MeasuringCheck& chk) {
    json out = json::array();
    for (const auto& v : chk.violations) out.push_back(describe(a, c, v));
    return out;
}

std::vector<std::size_t> read_table(const Coalgebra& c, const Algebra& a, const Algebra& b, const std::string& text) {
    std::vector<std::size_t> t(c.size() * a.size(), SIZE_MAX);
    for (const Label& e : label_list(text, "table")) {
        if (e.kind() != Label::Kind::Pair || e.first().kind() != Label::Kind::Pair)
            throw std::invalid_argument("--table entries are ((c,a),b)");
        t[c.carrier().index_of(e.first().first()) * a.size() + a.carrier().index_of(e.first().second())] =
            b.carrier().index_of(e.second());
    }
    for (std::size_t v : t)
        if (v == SIZE_MAX) throw std::invalid_argument("--table is not total on C × A");
    return t;
}

std::vector<std::size_t> read_map(const Carrier& dom, const Carrier& cod, const std::string& text) {
    std::vector<std::pair<Label, Label>> entries;
    for (const Label& e : label_list(text, "map")) {
        if (e.kind() != Label::Kind::Pair) throw std::invalid_argument("--map entries are (x,y)");
        entries.emplace_back(e.first(), e.second());
    }
    const Map m = Map::from_labels(dom, cod, entries);
    return {m.table().begin(), m.table().end()};
}

std::vector<Algebra> small_algebras(const FunctorRef& f, std::size_t max_size) {
    std::vector<Algebra> out;
    for (std::size_t n = 0; n <= max_size; ++n)
        for_each_algebra(f, n, [&](const Algebra& x) {
            out.push_back(x);
            return true;
        });
    return out;
}

bool is_unit_coalgebra(const Coalgebra& c) { return c == unit_coalgebra(c.functor_ref()); }

// Commands

Report cmd_validate_functor(const Workspace& ws, const Options& o) {
    const FunctorRef f = ws.functor(required(o.functor, "functor"));
    const ValidationReport v = validate_functor(*f);
    Report r{"validate-functor", v.ok(), {}, {}, {}};
    json laws = json::array();
    for (const LawCheck& l : v.laws) laws.push_back({{"law", l.law}, {"passed", l.passed}, {"witness", l.witness}});
    r.data = {{"functor", f->spec()}, {"positions", f->position_count()}, {"laws", std::move(laws)}};
    r.summary = f->spec() + (v.ok() ? ": all laws hold" : ": a law fails");
    return r;
}

Report cmd_apply(const Workspace& ws, const Options& o) {
    const FunctorRef f = ws.functor(required(o.functor, "functor"));
    const Carrier x(label_list(o.set, "set"));
    const Carrier fx = apply_to_set(*f, x);
    Report r{"apply", true, f->spec() + " applied to " + std::to_string(x.size()) + " elements has " +
                                std::to_string(fx.size()) + " elements", {}, {}};
    json elems = json::array();
    for (std::size_t i = 0; i < fx.size() && i < o.limit; ++i) elems.push_back(fx[i].str());
    r.data = {{"functor", f->spec()}, {"size", fx.size()}, {"elements", std::move(elems)}, {"shown", std::min(o.limit, fx.size())}};
    return r;
}

Report cmd_cata(const Workspace& ws, const Options& o) {
    const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
    TermStore store(a.functor_ref());
    const TermId t = store.from_label(Label::parse(required(o.term, "term")));
    const std::size_t v = cata(store, t, a);
    return Report{"cata", true, store.render(t) + " evaluates to " + a.carrier()[v].str(),
                  json{{"term", store.render(t)}, {"height", store.height(t)}, {"value", a.carrier()[v].str()}}, {}};
}

Report cmd_unfold(const Workspace& ws, const Options& o) {
    const Coalgebra c = get_coalgebra(ws, o.C, "C", opt_functor(ws, o));
    const std::size_t s = c.carrier().index_of(Label::parse(required(o.state, "state")));
    const Behavior b = unfold(c, s, o.depth);
    const std::string text = render(c.functor(), b);
    json data{{"state", c.carrier()[s].str()}, {"depth", o.depth}, {"behavior", text}, {"total", is_total(b)}};
    if (c.functor().spec() == "maybe") data["index"] = index_str(maybe_index(c, s));
    return Report{"unfold", true, text, std::move(data), {}};
}

Report cmd_adamek(const Workspace& ws, const Options& o) {
    const FunctorRef f = ws.functor(required(o.functor, "functor"));
    if (o.direction != "forward" && o.direction != "backward")
        throw std::invalid_argument("--direction is forward or backward");
    const Direction dir = o.direction == "forward" ? Direction::Forward : Direction::Backward;
    const AdamekResult run = adamek(f, dir, o.budget ? o.budget : 8);
    Report r{"adamek", true, {}, {}, {}};
    r.data = {{"functor", f->spec()}, {"direction", o.direction}, {"stage_sizes", run.stage_sizes()},
              {"status", run.stabilized() ? "stable" : "truncated"}, {"stop_reason", run.stop_reason}};
    if (run.stabilized()) {
        r.data["stable_stage"] = *run.stable_stage;
        const LambekReport lk = lambek_check(run, 2);
        r.data["lambek"] = {{"injective", lk.injective}, {"surjective", lk.surjective}, {"unique", lk.unique},
                            {"checked_up_to", lk.checked_up_to}, {"witness", lk.witness}};
        r.ok = lk.ok();
        r.summary = "stable at stage " + std::to_string(*run.stable_stage) + (lk.ok() ? ", Lambek holds" : ", Lambek fails");
    } else {
        r.summary = run.stop_reason;
    }
    return r;
}

Report cmd_preinitial(const Workspace& ws, const Options& o) {
    const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
    const Reachability reach = reachability(a);
    TermStore store(a.functor_ref());
    json witnesses = json::object();
    for (std::size_t x : reach.order) witnesses[a.carrier()[x].str()] = store.render(witness_term(reach, x, store));
    Report r{"preinitial", reach.all(), {}, {{"preinitial", reach.all()}, {"witnesses", std::move(witnesses)}}, {}};
    if (auto u = reach.first_unreached()) {
        r.data["unreached"] = a.carrier()[*u].str();
        r.summary = "not preinitial: " + a.carrier()[*u].str() + " is not the value of any term";
    } else {
        r.summary = "preinitial";
    }
    return r;
}

Report cmd_subterminal(const Workspace& ws, const Options& o) {
    const Coalgebra c = get_coalgebra(ws, o.C, "C", opt_functor(ws, o));
    const Partition p = bisim_partition(c);
    json merged = json::array();
    for (const auto& cls : p.classes)
        if (cls.size() > 1) {
            json m = json::array();
            for (std::size_t x : cls) m.push_back(c.carrier()[x].str());
            merged.push_back(std::move(m));
        }
    Report r{"subterminal", p.discrete(), {}, {{"subterminal", p.discrete()}, {"bisimilar_classes", std::move(merged)}}, {}};
    if (c.functor().spec() == "maybe" && p.discrete())
        r.data["classification"] = classify_maybe_subterminal(c).name();
    r.summary = p.discrete() ? "subterminal" : "not subterminal: distinct bisimilar states";
    return r;
}

Report cmd_subcoalgebras(const Workspace& ws, const Options& o) {
    const Coalgebra c = get_coalgebra(ws, o.C, "C", opt_functor(ws, o));
    const auto subs = subcoalgebras(c);
    const bool maybe = c.functor().spec() == "maybe" && is_subterminal(c);
    json list = json::array();
    for (const Subcoalgebra& s : subs) {
        json m = json::array();
        for (std::size_t x : s.members) m.push_back(c.carrier()[x].str());
        json entry{{"members", std::move(m)}};
        if (maybe) entry["family"] = classify_maybe_subterminal(s.coalgebra).family();
        list.push_back(std::move(entry));
    }
    return Report{"subcoalgebras", true, std::to_string(subs.size()) + " subcoalgebras",
                  json{{"count", subs.size()}, {"subcoalgebras", std::move(list)}}, {}};
}

Report cmd_quotient(const Workspace& ws, const Options& o) {
    const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const Label& e : label_list(o.pairs, "pairs")) {
        if (e.kind() != Label::Kind::Pair) throw std::invalid_argument("--pairs entries are (x,y)");
        pairs.emplace_back(a.carrier().index_of(e.first()), a.carrier().index_of(e.second()));
    }
    const Quotient q = quotient_algebra(a, pairs);
    json proj = json::object();
    for (std::size_t x = 0; x < a.size(); ++x) proj[a.carrier()[x].str()] = q.algebra.carrier()[q.projection(x)].str();
    return Report{"quotient", true, std::to_string(a.size()) + " elements collapse to " + std::to_string(q.algebra.size()),
                  json{{"quotient", algebra_json(q.algebra, o.limit * 8)}, {"projection", std::move(proj)}}, {}};
}

Report cmd_check_hom(const Workspace& ws, const Options& o) {
    const FunctorRef hint = opt_functor(ws, o);
    Report r{"check-hom", true, {}, {}, {}};
    if (!o.A.empty()) {
        const Algebra a = get_algebra(ws, o.A, "A", hint);
        const Algebra b = get_algebra(ws, o.B, "B", a.functor_ref());
        const auto h = read_map(a.carrier(), b.carrier(), o.map);
        const auto bad = algebra_hom_violation(a, b, h);
        r.ok = !bad;
        r.data = {{"kind", "algebra"}, {"hom", r.ok}};
        if (bad) r.data["violation"] = felem_label(a.functor(), a.carrier(), *bad).str();
    } else {
        const Coalgebra c = get_coalgebra(ws, o.C, "C", hint);
        const Coalgebra d = get_coalgebra(ws, o.D, "D", c.functor_ref());
        const auto h = read_map(c.carrier(), d.carrier(), o.map);
        const auto bad = coalgebra_hom_violation(c, d, h);
        r.ok = !bad;
        r.data = {{"kind", "coalgebra"}, {"hom", r.ok}};
        if (bad) r.data["violation"] = c.carrier()[*bad].str();
    }
    r.summary = r.ok ? "homomorphism" : "not a homomorphism at " + r.data["violation"].get<std::string>();
    return r;
}

Measuring measuring_from(const Workspace& ws, const Options& o, const std::string& name) {
    if (!name.empty()) return ws.measuring(name).measuring;
    const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
    const Algebra b = get_algebra(ws, o.B, "B", a.functor_ref());
    const Coalgebra c = get_coalgebra(ws, o.C, "C", a.functor_ref());
    return Measuring{c, a, b, read_table(c, a, b, o.table)};
}

Report cmd_check_measuring(const Workspace& ws, const Options& o) {
    const Measuring m = measuring_from(ws, o, o.measuring);
    const MeasuringCheck chk = check_measuring(m.C, m.A, m.B, m.table);
    Report r{"check-measuring", chk.ok(), chk.ok() ? "measuring" : "not a measuring", {}, {}};
    r.data = {{"measuring", chk.ok()}, {"violations", violations_json(m.A, m.C, chk)}};
    if (!chk.ok()) r.summary += ": " + describe(m.A, m.C, chk.violations.front());
    return r;
}

Report cmd_enumerate(const Workspace& ws, const Options& o) {
    const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
    const Algebra b = get_algebra(ws, o.B, "B", a.functor_ref());
    const Coalgebra c = get_coalgebra(ws, o.C, "C", a.functor_ref());
    const Strategy s = parse_strategy(o.strategy);
    const auto ms = enumerate_measurings(c, a, b, s);
    Report r{"enumerate-measurings", true, std::to_string(ms.size()) + " measurings", {}, {}};
    json tables = json::array();
    for (std::size_t i = 0; i < ms.size() && i < o.limit; ++i) tables.push_back(table_json(c, a, b, ms[i]));
    r.data = {{"strategy", strategy_name(s)}, {"count", ms.size()}, {"measurings", std::move(tables)}};
    if (is_unit_coalgebra(c)) {
        const std::size_t homs = algebra_homs(a, b).size();
        r.data["total_homs"] = homs;
        r.ok = homs == ms.size();
        r.summary += ", " + std::to_string(homs) + " total homs";
    }
    return r;
}

Report cmd_convolution(const Workspace& ws, const Options& o) {
    const Algebra b = get_algebra(ws, o.B, "B", opt_functor(ws, o));
    const Coalgebra c = get_coalgebra(ws, o.C, "C", b.functor_ref());
    const Algebra conv = convolution_algebra(c, b);
    return Report{"convolution", true, "[C,B] has " + std::to_string(conv.size()) + " elements",
                  json{{"convolution", algebra_json(conv, o.limit * 8)}}, {}};
}

Report cmd_tensor(const Workspace& ws, const Options& o) {
    const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
    const Coalgebra c = get_coalgebra(ws, o.C, "C", a.functor_ref());
    const TensorPresentation p = measuring_tensor(c, a, o.budget ? o.budget : guards().tensor_levels);
    Report r{"tensor", true, {}, {}, {}};
    std::size_t clauses[4] = {0, 0, 0, 0};
    for (const TensorMerge& m : p.merges()) ++clauses[static_cast<int>(m.clause)];
    json reps = json::array();
    for (std::size_t g : p.class_reps()) {
        if (reps.size() >= o.limit) break;
        reps.push_back(p.generator_label(g).str());
    }
    r.data = {{"status", p.status()},
              {"levels", p.levels()},
              {"generators", p.generators().size()},
              {"classes", p.class_reps().size()},
              {"merges", {{"rewrite", clauses[1]}, {"collapse", clauses[2]}, {"congruence", clauses[3]}}},
              {"representatives", std::move(reps)}};
    if (p.finite()) {
        r.data["algebra"] = algebra_json(p.algebra(), o.limit * 8);
        r.ok = p.closed();
    }
    r.summary = p.status() + " with " + std::to_string(p.class_reps().size()) + " classes";
    return r;
}

Report cmd_universal(const Workspace& ws, const Options& o) {
    const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
    const Algebra b = get_algebra(ws, o.B, "B", a.functor_ref());
    const UniversalResult u = universal_measuring(a, b);
    Report r{"universal", true, subterminal_name(u.universal), {}, {}};
    r.data = {{"universal", subterminal_name(u.universal)}};
    if (const auto* m = std::get_if<MaybeSubterminal>(&u.universal)) r.data["family"] = m->family();
    if (const auto* c = std::get_if<Coalgebra>(&u.universal)) r.data["coalgebra"] = coalgebra_json(*c);
    if (o.verify) {
        const UniversalVerification v = verify_universal(u.universal, a, b, o.verify);
        r.ok = v.ok;
        r.data["verification"] = {{"k", o.verify}, {"ok", v.ok}, {"coalgebras", v.coalgebras},
                                  {"measurings", v.measurings}, {"counterexample", v.counterexample}};
        r.summary += v.ok ? ", verified up to size " + std::to_string(o.verify) : ", verification failed";
    }
    return r;
}

Report cmd_dual(const Workspace& ws, const Options& o) {
    const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
    const Subterminal d = dual_coalgebra(a);
    Report r{"dual", true, subterminal_name(d), json{{"dual", subterminal_name(d)}}, {}};
    if (const auto* c = std::get_if<Coalgebra>(&d)) {
        r.data["coalgebra"] = coalgebra_json(*c);
        r.summary = "coalgebra with " + std::to_string(c->size()) + " states";
    }
    if (!o.C.empty()) {
        const Coalgebra c = get_coalgebra(ws, o.C, "C", a.functor_ref());
        const PairingReport p = dual_pairing_check(c, a);
        r.ok = p.ok();
        r.data["pairing"] = {{"measurings", p.measurings}, {"homs", p.homs}, {"ok", p.ok()}};
        r.summary += p.ok() ? ", pairing agrees" : ", pairing disagrees";
    }
    return r;
}

Report cmd_tower(const Workspace& ws, const Options& o) {
    const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
    const Algebra b = get_algebra(ws, o.B, "B", a.functor_ref());
    const Tower t = tower(a, b, o.n_max);
    json stages = json::array();
    for (std::size_t k = 0; k < t.stages.size(); ++k)
        stages.push_back({{"stage", k}, {"power_size", t.stages[k].power.size()}, {"dual_size", t.stages[k].dual.size()},
                          {"measurings", t.stages[k].measurings.size()}});
    Report r{"tower", true, {}, json{{"stages", std::move(stages)}}, {}};
    if (t.stabilized()) {
        json limit = json::array();
        for (const auto& row : t.limit) {
            json m = json::object();
            for (std::size_t x = 0; x < a.size(); ++x) m[a.carrier()[x].str()] = b.carrier()[row[x]].str();
            limit.push_back(std::move(m));
        }
        const std::size_t homs = algebra_homs(a, b).size();
        r.data["stable_stage"] = *t.stable_stage;
        r.data["limit"] = std::move(limit);
        r.data["total_homs"] = homs;
        r.ok = homs == t.limit.size();
        r.summary = "stable at stage " + std::to_string(*t.stable_stage) + ", limit has " + std::to_string(t.limit.size()) +
                    " elements";
    } else {
        r.data["status"] = "not stabilized";
        r.summary = "not stabilized within " + std::to_string(o.n_max) + " stages";
    }
    return r;
}

Report cmd_c_initial(const Workspace& ws, const Options& o) {
    const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
    const Coalgebra c = get_coalgebra(ws, o.C, "C", a.functor_ref());
    const auto tests = small_algebras(a.functor_ref(), o.max_size);
    const CInitialReport rep = c_initial_check(a, c, tests);
    Report r{"c-initial", rep.ok(), {}, json{{"tests", tests.size()}, {"counts", rep.counts}}, {}};
    if (rep.first_violation) {
        const Algebra& x = tests[*rep.first_violation];
        r.data["violation"] = {{"algebra", algebra_json(x, o.limit * 8)}, {"measurings", rep.counts[*rep.first_violation]}};
        r.summary = "not C-initial: " + std::to_string(rep.counts[*rep.first_violation]) +
                    " measurings into a test algebra of size " + std::to_string(x.size());
    } else {
        r.summary = "C-initial against " + std::to_string(tests.size()) + " algebras of size <= " + std::to_string(o.max_size);
    }
    return r;
}

Report cmd_terminal_c_initial(const Workspace& ws, const Options& o) {
    const FunctorRef hint = opt_functor(ws, o);
    if (o.candidates.empty()) throw std::invalid_argument("missing --candidates");
    std::vector<Algebra> cands;
    for (const std::string& s : o.candidates) {
        Algebra x = ws.algebra(s, hint ? hint : (cands.empty() ? nullptr : cands.front().functor_ref()));
        x.set_name(s);
        cands.push_back(std::move(x));
    }
    const Coalgebra c = get_coalgebra(ws, o.C, "C", cands.front().functor_ref());
    const TerminalSearch t = terminal_c_initial_search(c, cands, small_algebras(c.functor_ref(), o.max_size));
    const char* status = t.status == SearchStatus::Found ? "found" : t.status == SearchStatus::None ? "none" : "ambiguous";
    json ci = json::array(), term = json::array();
    for (std::size_t i : t.c_initial) ci.push_back(o.candidates[i]);
    for (std::size_t i : t.terminal) term.push_back(o.candidates[i]);
    return Report{"terminal-c-initial", t.status == SearchStatus::Found, t.message,
                  json{{"status", status}, {"c_initial", std::move(ci)}, {"terminal", std::move(term)}, {"message", t.message}},
                  {}};
}

Report cmd_mixed_check(const Workspace& ws, const Options& o) {
    const FunctorRef g = ws.functor(required(o.functor, "functor"));
    ModuleMap m = [&] {
        if (o.module == "derived") return derive_module_map(ws.functor(required(o.acting, "acting")), g);
        if (o.module == "self") return self_module(g);
        if (o.module == "strength") return strength_module(g);
        throw std::invalid_argument("--module is derived, self or strength");
    }();
    const Algebra a = get_algebra(ws, o.A, "A", g);
    const Algebra b = get_algebra(ws, o.B, "B", g);
    const Coalgebra c = get_coalgebra(ws, o.C, "C", m.acting);
    const ModuleLawReport laws = check_module_laws(m, 1);
    Report r{"mixed-check", laws.ok(), {}, {}, {}};
    json lj = json::array();
    for (const LawCheck& l : laws.laws) lj.push_back({{"law", l.law}, {"passed", l.passed}, {"witness", l.witness}});
    const auto ms = enumerate_mixed_measurings(m, c, a, b);
    r.data = {{"module", m.name}, {"laws", std::move(lj)}, {"count", ms.size()}};
    r.summary = std::to_string(ms.size()) + " mixed measurings";
    if (is_unit_coalgebra(c)) {
        const std::size_t homs = algebra_homs(a, b).size();
        r.data["total_homs"] = homs;
        r.ok = r.ok && homs == ms.size();
        r.summary += ", " + std::to_string(homs) + " total homs";
    }
    if (!o.table.empty()) {
        const MeasuringCheck chk = mixed_measuring_check(m, c, a, b, read_table(c, a, b, o.table));
        r.data["table_ok"] = chk.ok();
        r.ok = r.ok && chk.ok();
    }
    if (!laws.ok()) r.summary += ", module laws fail";
    return r;
}

Report cmd_compose(const Workspace& ws, const Options& o) {
    const Measuring psi = ws.measuring(required(o.psi, "psi")).measuring;
    const Measuring phi = ws.measuring(required(o.phi, "phi")).measuring;
    const Measuring comp = compose_measurings(psi, phi);
    const MeasuringCheck chk = check_measuring(comp.C, comp.A, comp.B, comp.table);
    Report r{"compose", chk.ok(), chk.ok() ? "composite is a measuring" : "composite is not a measuring", {}, {}};
    r.data = {{"coalgebra", coalgebra_json(comp.C)}, {"table", table_json(comp.C, comp.A, comp.B, comp.table)},
              {"violations", violations_json(comp.A, comp.C, chk)}};
    return r;
}

std::string functor_ref_for(const PolyFunctor& f, const std::string& name, std::string& prelude) {
    try {
        if (*io::builtin_functor(io::parse_call(f.spec())) == f) return f.spec();
    } catch (const std::exception&) {
    }
    prelude += io::write_functor(name + "_F", f) + "\n";
    return name + "_F";
}

Report cmd_export(const Workspace& ws, const Options& o) {
    Report r{"export", true, {}, {}, {}};
    const std::string name = o.name.empty() ? "x" : o.name;
    std::string prelude;
    if (!o.measuring.empty()) {
        const auto& nm = ws.measuring(o.measuring);
        r.raw = io::write_measuring(name, nm.c, nm.a, nm.b, nm.measuring);
    } else if (!o.A.empty()) {
        const Algebra a = get_algebra(ws, o.A, "A", opt_functor(ws, o));
        r.raw = io::write_algebra(name, functor_ref_for(a.functor(), name, prelude), a);
    } else if (!o.C.empty()) {
        const Coalgebra c = get_coalgebra(ws, o.C, "C", opt_functor(ws, o));
        r.raw = io::write_coalgebra(name, functor_ref_for(c.functor(), name, prelude), c);
    } else {
        r.raw = io::write_functor(name, *ws.functor(required(o.functor, "functor")));
    }
    r.raw = prelude + r.raw;
    return r;
}

using Handler = Report (*)(const Workspace&, const Options&);

struct CommandSpec {
    const char* name;
    const char* help;
    Handler run;
    std::vector<std::string> flags;
};

const std::vector<CommandSpec>& command_table() {
    static const std::vector<CommandSpec> t = {
        {"validate-functor", "check the lax monoidal laws of a functor", cmd_validate_functor, {"functor"}},
        {"apply", "apply a functor to a finite set", cmd_apply, {"functor", "set", "limit"}},
        {"cata", "evaluate a closed term in an algebra", cmd_cata, {"functor", "A", "term"}},
        {"unfold", "unfold a coalgebra state to a depth", cmd_unfold, {"functor", "C", "state", "depth"}},
        {"adamek", "run an initial (forward) or terminal (backward) chain", cmd_adamek, {"functor", "direction", "budget"}},
        {"preinitial", "check that every element is the value of a term", cmd_preinitial, {"functor", "A"}},
        {"subterminal", "check that no two states are bisimilar", cmd_subterminal, {"functor", "C"}},
        {"subcoalgebras", "list the subcoalgebras", cmd_subcoalgebras, {"functor", "C"}},
        {"quotient", "quotient an algebra by the congruence generated by pairs", cmd_quotient, {"functor", "A", "pairs", "limit"}},
        {"check-hom", "check an algebra (--A --B) or coalgebra (--C --D) homomorphism", cmd_check_hom,
         {"functor", "A", "B", "C", "D", "map"}},
        {"check-measuring", "check a measuring table", cmd_check_measuring, {"functor", "measuring", "A", "B", "C", "table"}},
        {"enumerate-measurings", "enumerate all measurings C x A -> B", cmd_enumerate,
         {"functor", "A", "B", "C", "strategy", "limit"}},
        {"convolution", "build the convolution algebra [C,B]", cmd_convolution, {"functor", "B", "C", "limit"}},
        {"tensor", "present the measuring tensor C |> A", cmd_tensor, {"functor", "A", "C", "budget", "limit"}},
        {"universal", "compute and verify the universal measuring coalgebra", cmd_universal, {"functor", "A", "B", "verify"}},
        {"dual", "compute the dual coalgebra of an algebra", cmd_dual, {"functor", "A", "C"}},
        {"tower", "build the tower of partial measurings", cmd_tower, {"functor", "A", "B", "n-max"}},
        {"c-initial", "check C-initiality against all small algebras", cmd_c_initial, {"functor", "A", "C", "max-size", "limit"}},
        {"terminal-c-initial", "search candidates for a terminal C-initial algebra", cmd_terminal_c_initial,
         {"functor", "C", "candidates", "max-size"}},
        {"mixed-check", "enumerate and check measurings for a module functor", cmd_mixed_check,
         {"functor", "acting", "module", "A", "B", "C", "table"}},
        {"compose", "compose two measurings", cmd_compose, {"psi", "phi"}},
        {"export", "serialize an object as a workspace section", cmd_export, {"functor", "A", "C", "measuring", "name"}},
    };
    return t;
}

void add_flag(CLI::App& sub, Options& o, const std::string& flag) {
    static const std::map<std::string, std::pair<std::string Options::*, const char*>> strings = {
        {"functor", {&Options::functor, "functor name or builtin, e.g. maybe, list(Z2)"}},
        {"A", {&Options::A, "domain algebra"}},
        {"B", {&Options::B, "codomain algebra"}},
        {"C", {&Options::C, "coalgebra"}},
        {"D", {&Options::D, "second coalgebra"}},
        {"measuring", {&Options::measuring, "measuring name"}},
        {"psi", {&Options::psi, "outer measuring D x B -> E"}},
        {"phi", {&Options::phi, "inner measuring C x A -> B"}},
        {"term", {&Options::term, "term as (position,[subterms])"}},
        {"set", {&Options::set, "finite set as [x,...]"}},
        {"pairs", {&Options::pairs, "pairs [(x,y),...]"}},
        {"map", {&Options::map, "map [(x,y),...]"}},
        {"table", {&Options::table, "table [((c,a),b),...]"}},
        {"state", {&Options::state, "coalgebra state"}},
        {"strategy", {&Options::strategy, "brute, convolution or propagate"}},
        {"direction", {&Options::direction, "forward or backward"}},
        {"module", {&Options::module, "derived, self or strength"}},
        {"acting", {&Options::acting, "acting functor F for a derived module map"}},
        {"name", {&Options::name, "section name"}},
    };
    static const std::map<std::string, std::pair<std::size_t Options::*, const char*>> numbers = {
        {"depth", {&Options::depth, "unfolding depth"}},
        {"budget", {&Options::budget, "step or level budget"}},
        {"n-max", {&Options::n_max, "last tower stage"}},
        {"max-size", {&Options::max_size, "largest test algebra"}},
        {"verify", {&Options::verify, "verify against coalgebras up to this size (0 skips)"}},
        {"limit", {&Options::limit, "entries shown in reports"}},
    };
    if (flag == "candidates") {
        sub.add_option("--candidates", o.candidates, "candidate algebras")->expected(1, 1 << 20);
    } else if (auto s = strings.find(flag); s != strings.end()) {
        sub.add_option("--" + flag, o.*(s->second.first), s->second.second);
    } else {
        const auto& n = numbers.at(flag);
        sub.add_option("--" + flag, o.*(n.first), n.second);
    }
}

// Registers every command on app; the chosen one is recorded in `which`.
void register_commands(CLI::App& app, Options& o, const CommandSpec*& which) {
    for (const CommandSpec& spec : command_table()) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.help);
        for (const std::string& f : spec.flags) add_flag(*sub, o, f);
        sub->callback([&which, &spec] { which = &spec; });
    }
}

// Splits on blanks outside brackets and quotes.
std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    bool quoted = false;
    bool have = false;
    for (char ch : line) {
        if (ch == '"') quoted = !quoted;
        if (!quoted) {
            if (ch == '(' || ch == '[') ++depth;
            if (ch == ')' || ch == ']') --depth;
        }
        if ((ch == ' ' || ch == '\t') && depth <= 0 && !quoted) {
            if (have) out.push_back(cur);
            cur.clear();
            have = false;
            continue;
        }
        cur += ch;
        have = true;
    }
    if (have) out.push_back(cur);
    return out;
}

json report_json(const Report& r) {
    json out{{"command", r.command}, {"ok", r.ok}, {"summary", r.summary}};
    for (auto& [k, v] : r.data.items()) out[k] = v;
    return out;
}

std::string render_reports(const std::vector<Report>& reports, const std::string& format) {
    std::string out;
    bool all = true;
    for (const Report& r : reports) all = all && r.ok;
    if (reports.size() == 1 && !reports[0].raw.empty()) return reports[0].raw;
    if (format == "text") {
        for (const Report& r : reports) {
            if (!r.raw.empty()) {
                out += r.raw;
                continue;
            }
            out += (r.ok ? "PASS " : "FAIL ") + r.command + ": " + r.summary + "\n";
        }
        return out;
    }
    json doc{{"status", all ? "pass" : "fail"}, {"reports", json::array()}};
    for (const Report& r : reports) {
        if (!r.raw.empty())
            doc["reports"].push_back({{"command", r.command}, {"ok", true}, {"workspace", r.raw}});
        else
            doc["reports"].push_back(report_json(r));
    }
    return doc.dump(2) + "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-model workbench for measurings between algebras of polynomial functors"};
    app.require_subcommand(1);
    std::string workspace_path, out_path, format = "json";
    std::size_t size_guard = 0, brute_guard = 0, sub_guard = 0, tensor_levels = 0;
    app.add_option("-w,--workspace", workspace_path, "workspace file (.pm)");
    app.add_option("-o,--out", out_path, "write the report here instead of standard output");
    app.add_option("--format", format, "json or text")->check(CLI::IsMember({"json", "text"}));
    app.add_option("--size-guard", size_guard, "bound on any materialized carrier or table");
    app.add_option("--brute-guard", brute_guard, "bound on brute-force measuring tables");
    app.add_option("--subcoalgebra-guard", sub_guard, "largest carrier for subcoalgebra listing");
    app.add_option("--tensor-levels", tensor_levels, "default measuring tensor budget");

    Options opts;
    const CommandSpec* which = nullptr;
    register_commands(app, opts, which);
    std::string run_path;
    CLI::App* run = app.add_subcommand("run", "execute the [commands] section of a workspace");
    run->add_option("file", run_path, "workspace file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (size_guard) guards().size = size_guard;
    if (brute_guard) guards().brute = brute_guard;
    if (sub_guard) guards().subcoalgebras = sub_guard;
    if (tensor_levels) guards().tensor_levels = tensor_levels;

    std::vector<Report> reports;
    try {
        Workspace ws;
        if (run->parsed()) workspace_path = run_path;
        if (!workspace_path.empty()) ws = Workspace::load(workspace_path);
        if (run->parsed()) {
            for (const io::Located& line : ws.commands()) {
                CLI::App sub_app{"command"};
                sub_app.require_subcommand(1);
                Options o;
                const CommandSpec* chosen = nullptr;
                register_commands(sub_app, o, chosen);
                std::vector<std::string> tokens = tokenize(line.text);
                std::reverse(tokens.begin(), tokens.end());
                try {
                    sub_app.parse(tokens);
                } catch (const CLI::ParseError& e) {
                    throw ParseError("line " + std::to_string(line.line) + ": " + e.what(), line.line, line.column);
                }
                reports.push_back(chosen->run(ws, o));
            }
        } else {
            reports.push_back(which->run(ws, opts));
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const GuardError& e) {
        std::cerr << "guard error (" << e.bound() << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    const std::string text = render_reports(reports, format);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << out_path << "\n";
            return 2;
        }
        out << text;
    }
    for (const Report& r : reports)
        if (!r.ok) return 1;
    return 0;
}
