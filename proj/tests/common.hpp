#pragma once

#include <string>
#include <vector>

#include <pdes/pdes.hpp>

namespace t {

using namespace pdes;

inline Instance I(std::string_view s) { return parse_instance(s); }
inline Constraint C(std::string_view s) { return parse_constraint(s); }
inline ConjunctiveQuery Q(std::string_view s) { return parse_query(s); }
inline Value V(const char* s) { return Value::of(s); }

inline std::vector<Constraint> Cs(std::initializer_list<const char*> xs) {
    std::vector<Constraint> out;
    for (auto x : xs) out.push_back(C(x));
    return out;
}

inline std::string fixture(const std::string& name) { return std::string(PDES_SOURCE_DIR) + "/fixtures/" + name; }
inline System load(const std::string& name) { return load_system(fixture(name)); }

// answer tuples from text rows, e.g. {"a,f", "c,g"}; "null" is the null constant
inline std::set<Tuple> rows(std::initializer_list<const char*> xs) {
    std::set<Tuple> out;
    for (auto x : xs) {
        Tuple tu;
        std::string s = x, cur;
        for (size_t i = 0; i <= s.size(); ++i) {
            if (i == s.size() || s[i] == ',') {
                tu.push_back(Value::of(cur));
                cur.clear();
            } else {
                cur += s[i];
            }
        }
        out.insert(tu);
    }
    return out;
}

inline std::vector<Instance> sorted(std::vector<Instance> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace t
