#pragma once

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

#include "sgar/types.hpp"

// JSON field names follow the struct members one-to-one so datasets and
// reports stay greppable. Doubles are emitted with shortest round-trip
// formatting, so dataset round-trips are bit-exact.

namespace nlohmann {
template <>
struct adl_serializer<Eigen::VectorXd> {
  static void to_json(json& j, const Eigen::VectorXd& v) {
    j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  }
  static void from_json(const json& j, Eigen::VectorXd& v) {
    v.resize(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& e : j) v(i++) = e.get<double>();
  }
};
}  // namespace nlohmann

namespace sgar {

using nlohmann::json;

void to_json(json& j, const Point2& p);
void from_json(const json& j, Point2& p);

void to_json(json& j, const Box& b);
void from_json(const json& j, Box& b);

void to_json(json& j, const GroundTruthPerson& p);
void from_json(const json& j, GroundTruthPerson& p);

void to_json(json& j, const GroundTruthGroup& g);
void from_json(const json& j, GroundTruthGroup& g);

void to_json(json& j, const GroupPrediction& p);
void from_json(const json& j, GroupPrediction& p);

void to_json(json& j, const IndividualPrediction& p);
void from_json(const json& j, IndividualPrediction& p);

void to_json(json& j, const Scene& s);
void from_json(const json& j, Scene& s);

// HyperParams parse fills missing keys from defaults, so config files may
// specify any subset.
void to_json(json& j, const HyperParams& hp);
void from_json(const json& j, HyperParams& hp);

// Newline-delimited JSON, one scene per line. Failures carry the path (and
// line number on read) in the exception message.
void write_dataset(const std::string& path, std::span<const Scene> scenes);
std::vector<Scene> read_dataset(const std::string& path);

}  // namespace sgar
