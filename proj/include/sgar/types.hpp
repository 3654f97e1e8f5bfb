#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace sgar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// 2-D point in normalized image coordinates.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2& a, const Point2& b) {
    return a.x == b.x && a.y == b.y;
  }
};

// Axis-aligned box as center plus extent, all in [0, 1] image coordinates.
// w and h must be positive; corners may extend past the unit square.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

// Annotated person: box plus a one-hot action label of length N_a.
struct GroundTruthPerson {
  Box box;
  Vector action;
};

// Annotated social group. member_points holds the size-S point sequence
// (one point per member, sorted by the configured ordering);
// member_indices refers into the scene's persons list.
struct GroundTruthGroup {
  Vector activity;                  // one-hot, length N_v
  int size = 0;                     // S, number of members, 1 <= S <= M
  std::vector<int> member_indices;  // distinct indices into Scene::persons
  std::vector<Point2> member_points;
};

// Raw group-query output: per-class activity probabilities, normalized
// size s_hat in (0, 1), and exactly M member points.
struct GroupPrediction {
  Vector activity_probs;            // length N_v, entries in (0, 1)
  double size_norm = 0.0;           // s_hat = S / M after decoding
  std::vector<Point2> member_points;  // exactly M points
};

// Raw individual-query output: person-ness score, box, action probabilities.
struct IndividualPrediction {
  double score = 0.0;               // c_hat in (0, 1)
  Box box;
  Vector action_probs;              // length N_a
};

// One annotated scene: persons, groups over those persons, and the feature
// tokens the decoder attends over. tokens.size() >= persons.size(); each
// token has dimension D_tok.
struct Scene {
  std::vector<GroundTruthPerson> persons;
  std::vector<GroundTruthGroup> groups;
  std::vector<Vector> tokens;
};

// Model and objective configuration. eta_* weight the matching costs,
// lambda_* weight the corresponding loss terms.
struct HyperParams {
  int N_v = 8;    // number of group activity classes
  int N_a = 9;    // number of individual action classes
  int N_q = 300;  // number of queries
  int M = 12;     // maximum group size
  int D_tok = 16; // token feature dimension
  int D_emb = 32; // query embedding dimension

  double eta_v = 2.0;
  double eta_s = 1.0;
  double eta_u = 5.0;
  double eta_c = 1.0;
  double eta_b = 5.0;
  double eta_o = 2.0;
  double eta_a = 2.0;

  double lambda_v = 2.0;
  double lambda_s = 1.0;
  double lambda_u = 5.0;
  double lambda_c = 1.0;
  double lambda_b = 5.0;
  double lambda_o = 2.0;
  double lambda_a = 2.0;
};

// Member point orderings. AscX sorts by x ascending with ties broken by y
// ascending; AscY is the transpose convention.
enum class PointOrder { AscX, AscY };

// Returns the points sorted under `order`. Throws std::invalid_argument on
// an empty sequence.
std::vector<Point2> sort_member_points(std::vector<Point2> points, PointOrder order);

// Permutation that sorts `points` under `order` (stable with the tie rule
// above; a strict weak ordering, so the result is unique).
std::vector<int> sort_permutation(const std::vector<Point2>& points, PointOrder order);

// Structural checks for a scene against the configured dimensions: index
// ranges, duplicate membership, size bounds, point-ordering violations,
// label shapes, box validity. Returns one message per violation; empty
// means the scene is well formed.
std::vector<std::string> validate_scene(const Scene& scene, const HyperParams& hp,
                                        PointOrder order = PointOrder::AscX);

}  // namespace sgar
