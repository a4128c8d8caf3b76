#pragma once

// JSON serialization of MDPs:
//   {"num_states", "num_actions", "horizon", "rho",
//    "transitions": [h][s][a][s'] (H-1 layers), "rewards": [h][s][a] or null}
// Doubles are written with shortest round-trip formatting, so any value
// (in particular integers and dyadic rationals) reads back bit-exactly.

#include "tabular_ail/mdp.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tabular_ail {

using json = nlohmann::json;

inline json table_to_json(const StateActionTable& t) {
    json out = json::array();
    for (std::size_t h = 0; h < t.horizon(); ++h) {
        json layer = json::array();
        for (std::size_t s = 0; s < t.num_states(); ++s) {
            auto r = t.row(h, s);
            layer.push_back(std::vector<double>(r.begin(), r.end()));
        }
        out.push_back(std::move(layer));
    }
    return out;
}

inline StateActionTable table_from_json(const json& j, std::size_t horizon, std::size_t states,
                                        std::size_t actions, std::string_view what) {
    if (!j.is_array() || j.size() != horizon) {
        throw ConfigError(std::string(what) + ": expected " + std::to_string(horizon) + " layers");
    }
    StateActionTable t(horizon, states, actions);
    for (std::size_t h = 0; h < horizon; ++h) {
        if (!j[h].is_array() || j[h].size() != states) {
            throw ConfigError(std::string(what) + ": bad state dimension");
        }
        for (std::size_t s = 0; s < states; ++s) {
            const json& row = j[h][s];
            if (!row.is_array() || row.size() != actions) {
                throw ConfigError(std::string(what) + ": bad action dimension");
            }
            for (std::size_t a = 0; a < actions; ++a) t(h, s, a) = row[a].get<double>();
        }
    }
    return t;
}

inline json mdp_to_json(const TabularMdp& mdp) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    json transitions = json::array();
    for (std::size_t h = 0; h + 1 < H; ++h) {
        json layer = json::array();
        for (std::size_t s = 0; s < S; ++s) {
            json per_action = json::array();
            for (std::size_t a = 0; a < A; ++a) {
                auto row = mdp.transition(h, s, a);
                per_action.push_back(std::vector<double>(row.begin(), row.end()));
            }
            layer.push_back(std::move(per_action));
        }
        transitions.push_back(std::move(layer));
    }
    json out;
    out["num_states"] = S;
    out["num_actions"] = A;
    out["horizon"] = H;
    out["rho"] = mdp.initial_distribution();
    out["transitions"] = std::move(transitions);
    out["rewards"] = mdp.has_rewards() ? table_to_json(mdp.rewards()) : json(nullptr);
    return out;
}

inline TabularMdp mdp_from_json(const json& j) {
    try {
        const auto S = j.at("num_states").get<std::size_t>();
        const auto A = j.at("num_actions").get<std::size_t>();
        const auto H = j.at("horizon").get<std::size_t>();
        if (S == 0 || A == 0 || H == 0) throw ConfigError("MDP JSON: dimensions must be positive");
        MdpBuilder b(S, A, H);
        b.initial_dist = j.at("rho").get<std::vector<double>>();
        const json& tr = j.at("transitions");
        if (!tr.is_array() || tr.size() != H - 1) {
            throw ConfigError("MDP JSON: transitions must have horizon-1 layers");
        }
        for (std::size_t h = 0; h + 1 < H; ++h) {
            if (tr[h].size() != S) throw ConfigError("MDP JSON: bad transition state dimension");
            for (std::size_t s = 0; s < S; ++s) {
                if (tr[h][s].size() != A) throw ConfigError("MDP JSON: bad transition action dimension");
                for (std::size_t a = 0; a < A; ++a) {
                    const json& row = tr[h][s][a];
                    if (row.size() != S) throw ConfigError("MDP JSON: bad transition row length");
                    auto dst = b.transition(h, s, a);
                    for (std::size_t s2 = 0; s2 < S; ++s2) dst[s2] = row[s2].get<double>();
                }
            }
        }
        if (j.contains("rewards") && !j.at("rewards").is_null()) {
            b.rewards = table_from_json(j.at("rewards"), H, S, A, "MDP JSON rewards");
        }
        return b.build();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("MDP JSON: ") + e.what());
    }
}

inline std::string dump_json(const json& j) { return j.dump(1) + "\n"; }

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

inline void save_mdp(const TabularMdp& mdp, const std::string& path) {
    write_text_file(path, dump_json(mdp_to_json(mdp)));
}

inline TabularMdp load_mdp(const std::string& path) { return mdp_from_json(read_json_file(path)); }

} // namespace tabular_ail
