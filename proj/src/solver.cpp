#include "orderly/solver.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>

namespace orderly {

const char* to_string(SatResult r) {
    switch (r) {
        case SatResult::Sat: return "sat";
        case SatResult::Unsat: return "unsat";
        case SatResult::Unknown: return "unknown";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// ValueSet

ValueSet ValueSet::full(unsigned width) {
    ValueSet s(width);
    s.ranges_.emplace_back(0, width_mask(width));
    return s;
}

ValueSet ValueSet::none(unsigned width) { return ValueSet(width); }

ValueSet ValueSet::wrapped(unsigned width, std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t m = width_mask(width);
    lo &= m;
    hi &= m;
    ValueSet s(width);
    if (lo <= hi) {
        s.ranges_.emplace_back(lo, hi);
    } else {
        s.ranges_.emplace_back(0, hi);
        s.ranges_.emplace_back(lo, m);
    }
    s.normalise();
    return s;
}

void ValueSet::normalise() {
    std::sort(ranges_.begin(), ranges_.end());
    std::vector<Range> merged;
    for (const auto& r : ranges_) {
        if (!merged.empty() && (merged.back().second == width_mask(width_) || r.first <= merged.back().second + 1)) {
            merged.back().second = std::max(merged.back().second, r.second);
        } else {
            merged.push_back(r);
        }
    }
    ranges_ = std::move(merged);
}

bool ValueSet::contains(std::uint64_t v) const {
    return std::any_of(ranges_.begin(), ranges_.end(),
                       [v](const Range& r) { return v >= r.first && v <= r.second; });
}

std::uint64_t ValueSet::count() const {
    std::uint64_t total = 0;
    for (const auto& [lo, hi] : ranges_) {
        const std::uint64_t n = hi - lo;  // members minus one
        if (n == ~std::uint64_t{0} || total > ~std::uint64_t{0} - n - 1) return ~std::uint64_t{0};
        total += n + 1;
    }
    return total;
}

ValueSet ValueSet::complement() const {
    ValueSet out(width_);
    std::uint64_t next = 0;
    bool exhausted = false;
    for (const auto& [lo, hi] : ranges_) {
        if (lo > next) out.ranges_.emplace_back(next, lo - 1);
        if (hi == width_mask(width_)) {
            exhausted = true;
            break;
        }
        next = hi + 1;
    }
    if (!exhausted) out.ranges_.emplace_back(next, width_mask(width_));
    return out;
}

ValueSet ValueSet::intersect(const ValueSet& other) const {
    ValueSet out(width_);
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < ranges_.size() && j < other.ranges_.size()) {
        const auto lo = std::max(ranges_[i].first, other.ranges_[j].first);
        const auto hi = std::min(ranges_[i].second, other.ranges_[j].second);
        if (lo <= hi) out.ranges_.emplace_back(lo, hi);
        if (ranges_[i].second < other.ranges_[j].second) ++i;
        else ++j;
    }
    return out;
}

ValueSet ValueSet::shifted(std::uint64_t c) const {
    const std::uint64_t m = width_mask(width_);
    c &= m;
    if (c == 0 || ranges_.empty()) return *this;
    ValueSet out(width_);
    for (const auto& [lo, hi] : ranges_) {
        if (lo == 0 && hi == m) return *this;
        const std::uint64_t a = (lo + c) & m;
        const std::uint64_t b = (hi + c) & m;
        if (a <= b) {
            out.ranges_.emplace_back(a, b);
        } else {
            out.ranges_.emplace_back(a, m);
            out.ranges_.emplace_back(0, b);
        }
    }
    out.normalise();
    return out;
}

ValueSet ValueSet::negated() const {
    const std::uint64_t m = width_mask(width_);
    ValueSet out(width_);
    for (const auto& [lo, hi] : ranges_) {
        if (lo == 0) {
            out.ranges_.emplace_back(0, 0);
            if (hi > 0) out.ranges_.emplace_back((0 - hi) & m, m);
        } else {
            out.ranges_.emplace_back((0 - hi) & m, (0 - lo) & m);
        }
    }
    out.normalise();
    return out;
}

// ---------------------------------------------------------------------------
// Atom recognition

namespace {

// t = (negated ? -sym : sym) + offset  (mod 2^width)
struct AffineTerm {
    std::uint64_t serial;
    unsigned width;
    bool negated;
    std::uint64_t offset;
};

std::optional<AffineTerm> as_affine(const Expr& e) {
    const std::uint64_t m = width_mask(e.width());
    switch (e.op()) {
        case ExprOp::Sym: return AffineTerm{e.serial(), e.width(), false, 0};
        case ExprOp::Add: {
            const Expr* term = &e.operand(0);
            const Expr* k = &e.operand(1);
            if (term->is_const()) std::swap(term, k);
            if (!k->is_const()) return std::nullopt;
            auto t = as_affine(*term);
            if (t) t->offset = (t->offset + k->value()) & m;
            return t;
        }
        case ExprOp::Sub: {
            if (e.operand(1).is_const()) {
                auto t = as_affine(e.operand(0));
                if (t) t->offset = (t->offset - e.operand(1).value()) & m;
                return t;
            }
            if (e.operand(0).is_const()) {  // c - (±s + o) = ∓s + (c - o)
                auto t = as_affine(e.operand(1));
                if (t) {
                    t->negated = !t->negated;
                    t->offset = (e.operand(0).value() - t->offset) & m;
                }
                return t;
            }
            return std::nullopt;
        }
        case ExprOp::Not: {  // ~t = -t - 1
            auto t = as_affine(e.operand(0));
            if (t) {
                t->negated = !t->negated;
                t->offset = (0 - t->offset - 1) & m;
            }
            return t;
        }
        default: return std::nullopt;
    }
}

struct Atom {
    std::uint64_t serial;
    unsigned width;
    ValueSet values;  // admissible values of the symbol
};

// Values of the symbol that put the affine term inside `term_values`.
ValueSet pull_back(const AffineTerm& t, const ValueSet& term_values) {
    ValueSet s = term_values.shifted(0 - t.offset);
    return t.negated ? s.negated() : s;
}

std::optional<Atom> as_atom(const Expr& e) {
    if (e.width() != 1) return std::nullopt;
    if (e.op() == ExprOp::Not) {
        auto inner = as_atom(e.operand(0));
        if (inner) inner->values = inner->values.complement();
        return inner;
    }
    if (e.op() == ExprOp::Sym) return Atom{e.serial(), 1, ValueSet::wrapped(1, 1, 1)};
    if (e.op() != ExprOp::Eq && e.op() != ExprOp::Ult && e.op() != ExprOp::Slt) return std::nullopt;

    const Expr& lhs = e.operand(0);
    const Expr& rhs = e.operand(1);
    const bool term_left = rhs.is_const();
    if (!term_left && !lhs.is_const()) return std::nullopt;
    auto term = as_affine(term_left ? lhs : rhs);
    if (!term) return std::nullopt;
    const unsigned w = term->width;
    const std::uint64_t m = width_mask(w);
    const std::uint64_t k = (term_left ? rhs : lhs).value();
    const std::uint64_t min_signed = std::uint64_t{1} << (w - 1);
    const std::uint64_t max_signed = min_signed - 1;

    ValueSet t = ValueSet::none(w);
    switch (e.op()) {
        case ExprOp::Eq: t = ValueSet::wrapped(w, k, k); break;
        case ExprOp::Ult:
            if (term_left) {  // t < k
                if (k != 0) t = ValueSet::wrapped(w, 0, k - 1);
            } else {  // k < t
                if (k != m) t = ValueSet::wrapped(w, k + 1, m);
            }
            break;
        case ExprOp::Slt:
            if (term_left) {  // t <s k
                if (k != min_signed) t = ValueSet::wrapped(w, min_signed, k - 1);
            } else {  // k <s t
                if (k != max_signed) t = ValueSet::wrapped(w, k + 1, max_signed);
            }
            break;
        default: break;
    }
    return Atom{term->serial, w, pull_back(*term, t)};
}

// Splits top-level conjunctions. Returns false if a constraint is constant false.
bool flatten(const Expr& e, std::vector<Expr>& out) {
    const Expr s = simplify(e);
    if (s.is_const()) return s.value() != 0;
    if (s.width() == 1 && s.op() == ExprOp::And) {
        return flatten(s.operand(0), out) && flatten(s.operand(1), out);
    }
    if (s.width() == 1 && s.op() == ExprOp::Not && s.operand(0).op() == ExprOp::Or) {
        return flatten(bit_not(s.operand(0).operand(0)), out) && flatten(bit_not(s.operand(0).operand(1)), out);
    }
    out.push_back(s);
    return true;
}

class UnionFind {
public:
    std::uint64_t find(std::uint64_t x) {
        auto it = parent_.try_emplace(x, x).first;
        if (it->second == x) return x;
        const std::uint64_t root = find(it->second);
        parent_[x] = root;
        return root;
    }
    void unite(std::uint64_t a, std::uint64_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::map<std::uint64_t, std::uint64_t> parent_;
};

struct Component {
    std::map<std::uint64_t, ValueSet> domains;
    std::vector<Expr> residual;
};

constexpr std::uint64_t kExhaustiveLimit = std::uint64_t{1} << 16;
constexpr std::size_t kCandidatesPerSymbol = 24;
constexpr std::size_t kCandidateCombinations = 4096;

bool satisfies(const std::vector<Expr>& constraints, const Assignment& model) {
    return std::all_of(constraints.begin(), constraints.end(),
                       [&](const Expr& c) { return evaluate(c, model) != 0; });
}

// Iterates the cartesian product of per-symbol value lists.
template <typename Visit>
bool for_each_combination(const std::vector<std::pair<std::uint64_t, std::vector<std::uint64_t>>>& choices,
                          std::size_t limit, Visit&& visit) {
    std::vector<std::size_t> idx(choices.size(), 0);
    Assignment model;
    for (std::size_t n = 0; n < limit; ++n) {
        for (std::size_t i = 0; i < choices.size(); ++i) model[choices[i].first] = choices[i].second[idx[i]];
        if (visit(model)) return true;
        std::size_t i = 0;
        while (i < idx.size() && ++idx[i] == choices[i].second.size()) idx[i++] = 0;
        if (i == idx.size()) break;
    }
    return false;
}

void collect_constants(const Expr& e, std::vector<std::uint64_t>& out) {
    if (e.is_const()) {
        out.push_back(e.value());
        return;
    }
    for (std::size_t i = 0; i < e.arity(); ++i) collect_constants(e.operand(i), out);
}

SatResult solve_component(const Component& c, Assignment& model) {
    for (const auto& [serial, dom] : c.domains) {
        if (dom.empty()) return SatResult::Unsat;
    }
    if (c.residual.empty()) {
        for (const auto& [serial, dom] : c.domains) model[serial] = dom.ranges().front().first;
        return SatResult::Sat;
    }

    std::uint64_t space = 1;
    for (const auto& [serial, dom] : c.domains) {
        const std::uint64_t n = dom.count();
        space = (n != 0 && space > kExhaustiveLimit / n) ? kExhaustiveLimit + 1 : space * n;
    }

    std::vector<std::pair<std::uint64_t, std::vector<std::uint64_t>>> choices;
    if (space <= kExhaustiveLimit) {
        for (const auto& [serial, dom] : c.domains) {
            std::vector<std::uint64_t> values;
            for (const auto& [lo, hi] : dom.ranges()) {
                for (std::uint64_t v = lo;; ++v) {
                    values.push_back(v);
                    if (v == hi) break;
                }
            }
            choices.emplace_back(serial, std::move(values));
        }
        Assignment found;
        if (for_each_combination(choices, space, [&](const Assignment& m) {
                if (!satisfies(c.residual, m)) return false;
                found = m;
                return true;
            })) {
            model.insert(found.begin(), found.end());
            return SatResult::Sat;
        }
        return SatResult::Unsat;
    }

    std::vector<std::uint64_t> constants;
    for (const auto& r : c.residual) collect_constants(r, constants);
    for (const auto& [serial, dom] : c.domains) {
        const std::uint64_t m = width_mask(dom.width());
        std::vector<std::uint64_t> values;
        auto offer = [&](std::uint64_t v) {
            v &= m;
            if (values.size() < kCandidatesPerSymbol && dom.contains(v) &&
                std::find(values.begin(), values.end(), v) == values.end()) {
                values.push_back(v);
            }
        };
        for (const auto& [lo, hi] : dom.ranges()) {
            offer(lo);
            offer(hi);
        }
        for (std::uint64_t k : constants) {
            offer(k);
            offer(k + 1);
            offer(k - 1);
            offer(0 - k);
        }
        offer(0);
        offer(1);
        choices.emplace_back(serial, std::move(values));
    }
    Assignment found;
    if (for_each_combination(choices, kCandidateCombinations, [&](const Assignment& m) {
            if (!satisfies(c.residual, m)) return false;
            found = m;
            return true;
        })) {
        model.insert(found.begin(), found.end());
        return SatResult::Sat;
    }
    return SatResult::Unknown;
}

}  // namespace

SatAnswer check_sat(std::span<const Expr> constraints) {
    std::vector<Expr> flat;
    for (const auto& c : constraints) {
        if (!flatten(c, flat)) return {SatResult::Unsat, {}};
    }

    UnionFind uf;
    std::map<std::uint64_t, unsigned> widths;
    std::vector<std::set<SymbolInfo>> syms;
    syms.reserve(flat.size());
    for (const auto& c : flat) {
        if (symbols_of(c).empty() && evaluate(c, {}) == 0) return {SatResult::Unsat, {}};
    }
    std::erase_if(flat, [](const Expr& c) { return symbols_of(c).empty(); });
    for (const auto& c : flat) {
        syms.push_back(symbols_of(c));
        const auto& s = syms.back();
        for (const auto& info : s) {
            widths[info.serial] = info.width;
            uf.unite(s.begin()->serial, info.serial);
        }
    }

    std::map<std::uint64_t, Component> components;
    for (const auto& [serial, width] : widths) {
        components[uf.find(serial)].domains.emplace(serial, ValueSet::full(width));
    }
    for (std::size_t i = 0; i < flat.size(); ++i) {
        auto& comp = components[uf.find(syms[i].begin()->serial)];
        if (auto atom = as_atom(flat[i])) {
            auto& dom = comp.domains.at(atom->serial);
            dom = dom.intersect(atom->values);
        } else {
            comp.residual.push_back(flat[i]);
        }
    }

    SatAnswer answer{SatResult::Sat, {}};
    for (const auto& [root, comp] : components) {
        const SatResult r = solve_component(comp, answer.model);
        if (r == SatResult::Unsat) return {SatResult::Unsat, {}};
        if (r == SatResult::Unknown) answer.result = SatResult::Unknown;
    }
    if (answer.result != SatResult::Sat) answer.model.clear();
    return answer;
}

SatResult is_satisfiable(const PathCondition& pc) { return check_sat(pc).result; }

SatResult query(const PathCondition& pc, const Expr& cond) {
    PathCondition extended = pc;
    extended.push_back(cond);
    return check_sat(extended).result;
}

bool may_hold(const PathCondition& pc, const Expr& cond) { return query(pc, cond) != SatResult::Unsat; }

UniqueValue unique_value(const PathCondition& pc, const Expr& e) {
    const Expr s = simplify(e);
    if (s.is_const()) return {UniqueValue::Kind::Unique, s.value()};
    const SatAnswer base = check_sat(pc);
    if (base.result != SatResult::Sat) return {UniqueValue::Kind::Unknown, 0};
    const std::uint64_t v = evaluate(s, base.model);
    switch (query(pc, ne(s, constant(s.width(), v)))) {
        case SatResult::Unsat: return {UniqueValue::Kind::Unique, v};
        case SatResult::Sat: return {UniqueValue::Kind::NotUnique, 0};
        case SatResult::Unknown: break;
    }
    return {UniqueValue::Kind::Unknown, 0};
}

}  // namespace orderly
