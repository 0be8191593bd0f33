#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <compare>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pdes {

// error taxonomy; the cli maps these onto exit codes
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct parse_error : error {
    int line = 0, col = 0;
    parse_error(const std::string& m, int l = 0, int c = 0)
        : error(l ? "line " + std::to_string(l) + ":" + std::to_string(c) + ": " + m : m), line(l), col(c) {}
};
struct schema_error : error { using error::error; };
// semantic refusal: the request is well formed but not applicable (cyclic graph, non-import system, ...)
struct refusal : error { using error::error; };
struct resource_error : error {
    unsigned long long cap = 0, needed = 0;
    resource_error(const std::string& what, unsigned long long c, unsigned long long n)
        : error(what + " (cap " + std::to_string(c) + ", required " + std::to_string(n) + ")"), cap(c), needed(n) {}
};

// Interned constant. Pointer equality is value equality; the table only grows.
class Value {
public:
    struct rep {
        std::string text;
        bool null = false;
        bool num = false;
        long long n = 0;
    };

    Value() = default;   // unset; only used as an "unbound" marker in bindings
    static Value of(std::string_view s) { return Value(intern(s)); }
    static Value of(long long v) { return of(std::to_string(v)); }
    static Value null() {
        static const rep* r = intern("null");
        return Value(r);
    }

    bool set() const { return r_ != nullptr; }
    bool is_null() const { return r_->null; }
    bool is_int() const { return r_->num; }
    long long as_int() const { return r_->n; }
    const std::string& text() const { return r_->text; }
    const rep* raw() const { return r_; }

    friend bool operator==(Value a, Value b) { return a.r_ == b.r_; }
    // canonical order: null, then integers numerically, then other tokens lexicographically
    friend std::strong_ordering operator<=>(Value a, Value b) {
        if (a.r_ == b.r_) return std::strong_ordering::equal;
        int ra = a.rank(), rb = b.rank();
        if (ra != rb) return ra <=> rb;
        if (ra == 1 && a.r_->n != b.r_->n) return a.r_->n <=> b.r_->n;
        return a.r_->text.compare(b.r_->text) <=> 0;
    }

    // order used by <,<=,>,>= builtins: numeric when both are integers, else lexicographic
    static int cmp_order(Value a, Value b) {
        if (a.is_int() && b.is_int()) return a.as_int() < b.as_int() ? -1 : a.as_int() > b.as_int() ? 1 : 0;
        int c = a.text().compare(b.text());
        return c < 0 ? -1 : c > 0 ? 1 : 0;
    }

private:
    explicit Value(const rep* r) : r_(r) {}
    int rank() const { return r_->null ? 0 : r_->num ? 1 : 2; }

    static const rep* intern(std::string_view s) {
        static std::mutex mu;
        static std::unordered_map<std::string, std::unique_ptr<rep>> table;
        std::lock_guard<std::mutex> lk(mu);
        auto it = table.find(std::string(s));
        if (it != table.end()) return it->second.get();
        auto r = std::make_unique<rep>();
        r->text = std::string(s);
        r->null = (s == "null");
        long long v = 0;
        if (!s.empty()) {
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            r->num = ec == std::errc() && p == s.data() + s.size();
            r->n = r->num ? v : 0;
        }
        const rep* out = r.get();
        table.emplace(std::string(s), std::move(r));
        return out;
    }

    const rep* r_ = nullptr;
};

struct ValueHash {
    size_t operator()(Value v) const { return std::hash<const void*>()(v.raw()); }
};

using Tuple = std::vector<Value>;

struct Atom {
    std::string pred;
    Tuple args;

    friend bool operator==(const Atom&, const Atom&) = default;
    friend std::strong_ordering operator<=>(const Atom& a, const Atom& b) {
        if (auto c = a.pred.compare(b.pred) <=> 0; c != 0) return c;
        return std::lexicographical_compare_three_way(a.args.begin(), a.args.end(), b.args.begin(), b.args.end());
    }
};

using Instance = std::set<Atom>;

struct PredInfo {
    int arity = 0;
    std::string owner;   // peer id, empty if none
};
using Schema = std::map<std::string, PredInfo>;

inline bool is_ident(std::string_view s) {
    if (s.empty() || !(std::isalpha((unsigned char)s[0]) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum((unsigned char)c) || c == '_'; });
}

// constants print bare when they re-read as the same constant inside instance lines
inline std::string show(Value v) {
    if (v.is_null() || v.is_int() || is_ident(v.text())) return v.text();
    std::string out = "'";
    for (char c : v.text()) {
        if (c == '\'' || c == '\\') out += '\\';
        out += c;
    }
    return out + "'";
}

inline std::string show(const Tuple& t) {
    std::string s = "(";
    for (size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + show(t[i]);
    return s + ")";
}

inline std::string show(const Atom& a) { return a.pred + show(a.args); }

inline std::string show(const Instance& d) {
    std::string s = "{";
    bool first = true;
    for (auto& a : d) {
        s += (first ? "" : ", ") + show(a);
        first = false;
    }
    return s + "}";
}

inline std::set<Value> active_domain(const Instance& d) {
    std::set<Value> out;
    for (auto& a : d) out.insert(a.args.begin(), a.args.end());
    return out;
}

inline Instance restrict(const Instance& d, const std::set<std::string>& preds) {
    Instance out;
    for (auto& a : d)
        if (preds.count(a.pred)) out.insert(a);
    return out;
}

// checked variant: every requested predicate must belong to the schema
inline Instance restrict(const Instance& d, const std::set<std::string>& preds, const Schema& schema) {
    for (auto& p : preds)
        if (!schema.count(p)) throw schema_error("unknown predicate in restriction: " + p);
    return restrict(d, preds);
}

inline Instance symmetric_difference(const Instance& a, const Instance& b) {
    Instance out;
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

inline Instance set_union(const Instance& a, const Instance& b) {
    Instance out = a;
    out.insert(b.begin(), b.end());
    return out;
}

inline Instance set_intersection(const Instance& a, const Instance& b) {
    Instance out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

inline Instance set_minus(const Instance& a, const Instance& b) {
    Instance out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

inline bool subset_of(const Instance& a, const Instance& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline void check_atom(const Atom& a, const Schema& s) {
    auto it = s.find(a.pred);
    if (it == s.end()) throw schema_error("unknown predicate " + a.pred);
    if ((int)a.args.size() != it->second.arity)
        throw schema_error("arity mismatch for " + a.pred + ": expected " + std::to_string(it->second.arity));
}

// per-predicate lookup over an instance
class Index {
public:
    explicit Index(const Instance& d) : d_(&d) {
        for (auto& a : d) by_pred_[a.pred].push_back(&a);
    }
    const std::vector<const Atom*>& scan(const std::string& p) const {
        static const std::vector<const Atom*> none;
        auto it = by_pred_.find(p);
        return it == by_pred_.end() ? none : it->second;
    }
    bool has(const Atom& a) const { return d_->count(a) > 0; }
    const Instance& instance() const { return *d_; }

private:
    const Instance* d_;
    std::unordered_map<std::string, std::vector<const Atom*>> by_pred_;
};

}  // namespace pdes
