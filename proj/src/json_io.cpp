#include "sgar/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace sgar {

void to_json(json& j, const Point2& p) { j = json{{"x", p.x}, {"y", p.y}}; }
void from_json(const json& j, Point2& p) {
  j.at("x").get_to(p.x);
  j.at("y").get_to(p.y);
}

void to_json(json& j, const Box& b) {
  j = json{{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}};
}
void from_json(const json& j, Box& b) {
  j.at("cx").get_to(b.cx);
  j.at("cy").get_to(b.cy);
  j.at("w").get_to(b.w);
  j.at("h").get_to(b.h);
}

void to_json(json& j, const GroundTruthPerson& p) {
  j = json{{"box", p.box}, {"action", p.action}};
}
void from_json(const json& j, GroundTruthPerson& p) {
  j.at("box").get_to(p.box);
  j.at("action").get_to(p.action);
}

void to_json(json& j, const GroundTruthGroup& g) {
  j = json{{"activity", g.activity},
           {"size", g.size},
           {"member_indices", g.member_indices},
           {"member_points", g.member_points}};
}
void from_json(const json& j, GroundTruthGroup& g) {
  j.at("activity").get_to(g.activity);
  j.at("size").get_to(g.size);
  j.at("member_indices").get_to(g.member_indices);
  j.at("member_points").get_to(g.member_points);
}

void to_json(json& j, const GroupPrediction& p) {
  j = json{{"activity_probs", p.activity_probs},
           {"size_norm", p.size_norm},
           {"member_points", p.member_points}};
}
void from_json(const json& j, GroupPrediction& p) {
  j.at("activity_probs").get_to(p.activity_probs);
  j.at("size_norm").get_to(p.size_norm);
  j.at("member_points").get_to(p.member_points);
}

void to_json(json& j, const IndividualPrediction& p) {
  j = json{{"score", p.score}, {"box", p.box}, {"action_probs", p.action_probs}};
}
void from_json(const json& j, IndividualPrediction& p) {
  j.at("score").get_to(p.score);
  j.at("box").get_to(p.box);
  j.at("action_probs").get_to(p.action_probs);
}

void to_json(json& j, const Scene& s) {
  j = json{{"persons", s.persons}, {"groups", s.groups}, {"tokens", s.tokens}};
}
void from_json(const json& j, Scene& s) {
  j.at("persons").get_to(s.persons);
  j.at("groups").get_to(s.groups);
  j.at("tokens").get_to(s.tokens);
}

void to_json(json& j, const HyperParams& hp) {
  j = json{{"N_v", hp.N_v},         {"N_a", hp.N_a},
           {"N_q", hp.N_q},         {"M", hp.M},
           {"D_tok", hp.D_tok},     {"D_emb", hp.D_emb},
           {"eta_v", hp.eta_v},     {"eta_s", hp.eta_s},
           {"eta_u", hp.eta_u},     {"eta_c", hp.eta_c},
           {"eta_b", hp.eta_b},     {"eta_o", hp.eta_o},
           {"eta_a", hp.eta_a},     {"lambda_v", hp.lambda_v},
           {"lambda_s", hp.lambda_s}, {"lambda_u", hp.lambda_u},
           {"lambda_c", hp.lambda_c}, {"lambda_b", hp.lambda_b},
           {"lambda_o", hp.lambda_o}, {"lambda_a", hp.lambda_a}};
}
void from_json(const json& j, HyperParams& hp) {
  hp.N_v = j.value("N_v", hp.N_v);
  hp.N_a = j.value("N_a", hp.N_a);
  hp.N_q = j.value("N_q", hp.N_q);
  hp.M = j.value("M", hp.M);
  hp.D_tok = j.value("D_tok", hp.D_tok);
  hp.D_emb = j.value("D_emb", hp.D_emb);
  hp.eta_v = j.value("eta_v", hp.eta_v);
  hp.eta_s = j.value("eta_s", hp.eta_s);
  hp.eta_u = j.value("eta_u", hp.eta_u);
  hp.eta_c = j.value("eta_c", hp.eta_c);
  hp.eta_b = j.value("eta_b", hp.eta_b);
  hp.eta_o = j.value("eta_o", hp.eta_o);
  hp.eta_a = j.value("eta_a", hp.eta_a);
  hp.lambda_v = j.value("lambda_v", hp.lambda_v);
  hp.lambda_s = j.value("lambda_s", hp.lambda_s);
  hp.lambda_u = j.value("lambda_u", hp.lambda_u);
  hp.lambda_c = j.value("lambda_c", hp.lambda_c);
  hp.lambda_b = j.value("lambda_b", hp.lambda_b);
  hp.lambda_o = j.value("lambda_o", hp.lambda_o);
  hp.lambda_a = j.value("lambda_a", hp.lambda_a);
}

void write_dataset(const std::string& path, std::span<const Scene> scenes) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_dataset: cannot open '" + path + "' for writing");
  }
  for (const auto& scene : scenes) {
    out << json(scene).dump() << '\n';
  }
  if (!out) {
    throw std::runtime_error("write_dataset: write failed for '" + path + "'");
  }
}

std::vector<Scene> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_dataset: cannot open '" + path + "'");
  }
  std::vector<Scene> scenes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      scenes.push_back(json::parse(line).get<Scene>());
    } catch (const std::exception& e) {
      throw std::runtime_error("read_dataset: '" + path + "' line " +
                               std::to_string(lineno) + ": " + e.what());
    }
  }
  return scenes;
}

}  // namespace sgar
